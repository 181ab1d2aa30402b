//! Static and RF magnetic fields for the three-wire atom-chip geometry and
//! an idealized Ioffe-Pritchard trap.
//!
//! Chip coordinates: the chip surface is the plane y = 0, the atoms sit at
//! y < 0, and the chip wires run along z.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::constants::{MU_0, PLANCK};
use crate::error::{Error, Result};
use crate::local_frame::Atom;

pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<C64>;

/// Points closer than this to a thin-wire axis are rejected.
pub const AXIS_EXCLUSION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireRole {
    Static,
    RfA,
    RfB,
    Spectroscopy,
}

/// Infinite straight wire, either thin (`width == 0`) or a flat strip of
/// uniform surface current lying in the plane with normal `plane_normal`.
#[derive(Clone, Debug, PartialEq)]
pub struct WireSpec {
    /// Any point on the wire's center line (m).
    pub position: Vec3,
    pub axis: Vec3,
    pub width: f64,
    pub plane_normal: Vec3,
    /// Current amplitude (A).
    pub current: f64,
    pub role: WireRole,
    /// Phase of the AC current (rad); the phasor is `current·e^{i·rf_phase}`.
    pub rf_phase: f64,
}

impl WireSpec {
    /// Thin wire along `axis` through `position`, chip-plane normal ŷ.
    pub fn thin(position: Vec3, axis: Vec3, current: f64, role: WireRole) -> Result<Self> {
        Self::new(position, axis, 0.0, Vec3::y(), current, role, 0.0)
    }

    pub fn new(
        position: Vec3,
        axis: Vec3,
        width: f64,
        plane_normal: Vec3,
        current: f64,
        role: WireRole,
        rf_phase: f64,
    ) -> Result<Self> {
        let norm = axis.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidConfig("wire axis must be a non-zero vector".into()));
        }
        if !(width >= 0.0 && width.is_finite()) {
            return Err(Error::InvalidConfig(format!("wire width {width} must be ≥ 0")));
        }
        if !current.is_finite() || !rf_phase.is_finite() || !position.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidConfig("wire parameters must be finite".into()));
        }
        let axis = axis / norm;
        // Strip normal orthogonal to the axis.
        let n = plane_normal - axis * plane_normal.dot(&axis);
        if width > 0.0 && n.norm() < 1e-12 {
            return Err(Error::InvalidConfig("strip normal parallel to wire axis".into()));
        }
        let plane_normal = if n.norm() > 0.0 { n.normalize() } else { n };
        Ok(WireSpec {
            position,
            axis,
            width,
            plane_normal,
            current,
            role,
            rf_phase,
        })
    }

    pub fn with_current(&self, current: f64) -> Self {
        WireSpec {
            current,
            ..self.clone()
        }
    }

    /// Component of `point − position` perpendicular to the axis.
    fn transverse(&self, point: &Vec3) -> Vec3 {
        let r = point - self.position;
        r - self.axis * r.dot(&self.axis)
    }
}

/// Biot-Savart field of an infinite thin wire: |B| = μ0 I / (2π d),
/// azimuthal by the right-hand rule about the axis.
pub fn thin_wire_field(point: &Vec3, wire: &WireSpec) -> Result<Vec3> {
    let r = wire.transverse(point);
    let d2 = r.norm_squared();
    if d2.sqrt() <= AXIS_EXCLUSION {
        return Err(Error::Singularity { distance: d2.sqrt() });
    }
    if wire.current == 0.0 {
        return Ok(Vec3::zeros());
    }
    Ok(wire.axis.cross(&r) * (MU_0 * wire.current / (2.0 * PI * d2)))
}

/// Field of a flat strip of width `w` carrying a uniform surface current.
///
/// With `u = n × a` the in-plane width direction and `(p, q)` the transverse
/// coordinates along `(u, n)`:
/// `B = μ0 I / (2π w) [ ½ ln(((p+w/2)² + q²)/((p−w/2)² + q²)) n − θ u ]`,
/// where θ is the angle the strip subtends at the point.
pub fn ribbon_field(point: &Vec3, wire: &WireSpec) -> Result<Vec3> {
    let w = wire.width;
    if w <= 0.0 {
        return Err(Error::InvalidArgument("ribbon_field needs width > 0".into()));
    }
    let n = wire.plane_normal;
    let u = n.cross(&wire.axis);
    let r = wire.transverse(point);
    let (p, q) = (r.dot(&u), r.dot(&n));
    let half = 0.5 * w;
    if q.abs() < AXIS_EXCLUSION && p.abs() <= half + AXIS_EXCLUSION {
        return Err(Error::InsideConductor);
    }
    if wire.current == 0.0 {
        return Ok(Vec3::zeros());
    }
    let log_term = 0.5 * (((p + half).powi(2) + q * q) / ((p - half).powi(2) + q * q)).ln();
    let theta = (q * w).atan2(p * p + q * q - half * half);
    let k = MU_0 * wire.current / (2.0 * PI * w);
    Ok((n * log_term - u * theta) * k)
}

/// Field of `wire` at unit current phase, dispatching on width.
pub fn wire_field(point: &Vec3, wire: &WireSpec) -> Result<Vec3> {
    if wire.width > 0.0 {
        ribbon_field(point, wire)
    } else {
        thin_wire_field(point, wire)
    }
}

/// Homogeneous bias field (T).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasField {
    pub vector: Vec3,
}

/// Ioffe-Pritchard trap: axial offset field plus a transverse quadrupole.
///
/// With `u` the quadrupole axis and `u' = ioffe_axis × u`, the field at
/// transverse displacement ρ is `B_min·ê + G[(ρ·u')u + (ρ·u)u']`, so
/// |B| = √(B_min² + G²ρ²). On the line through the center along `u` the
/// quadrupole part points along `u'`.
#[derive(Clone, Debug, PartialEq)]
pub struct IoffeTrapModel {
    pub b_min: f64,
    pub gradient: f64,
    pub omega_perp: f64,
    pub omega_axial: f64,
    pub center: Vec3,
    pub ioffe_axis: Vec3,
    pub quadrupole_axis: Vec3,
}

impl IoffeTrapModel {
    /// Builds the trap from its Larmor frequency at the minimum (Hz) and
    /// its transverse/axial angular trap frequencies (rad/s) for the
    /// stretched state m_F = F of `atom`.
    ///
    /// B_min = h ν_L / |μ|, and ω⊥² = |μ| m_F G² / (m B_min).
    pub fn from_trap_frequencies(
        larmor_hz: f64,
        omega_perp: f64,
        omega_axial: f64,
        atom: &Atom,
        center: Vec3,
        ioffe_axis: Vec3,
        quadrupole_axis: Vec3,
    ) -> Result<Self> {
        if !(larmor_hz > 0.0) || !(omega_perp >= 0.0) || !(omega_axial >= 0.0) {
            return Err(Error::InvalidConfig(
                "trap needs ν_L > 0 and non-negative trap frequencies".into(),
            ));
        }
        let mu = atom.mu().abs();
        let m_f = atom.spin.value();
        if m_f <= 0.0 {
            return Err(Error::InvalidConfig("trap needs F > 0".into()));
        }
        let b_min = PLANCK * larmor_hz / mu;
        let gradient = omega_perp * (atom.mass * b_min / (mu * m_f)).sqrt();
        Self::new(b_min, gradient, omega_perp, omega_axial, center, ioffe_axis, quadrupole_axis)
    }

    pub fn new(
        b_min: f64,
        gradient: f64,
        omega_perp: f64,
        omega_axial: f64,
        center: Vec3,
        ioffe_axis: Vec3,
        quadrupole_axis: Vec3,
    ) -> Result<Self> {
        if !(b_min > 0.0 && b_min.is_finite()) || !(gradient >= 0.0 && gradient.is_finite()) {
            return Err(Error::InvalidConfig("trap needs B_min > 0 and G ≥ 0".into()));
        }
        if ioffe_axis.norm() == 0.0 {
            return Err(Error::InvalidConfig("Ioffe axis must be non-zero".into()));
        }
        let e = ioffe_axis.normalize();
        let u = quadrupole_axis - e * quadrupole_axis.dot(&e);
        if u.norm() < 1e-12 {
            return Err(Error::InvalidConfig(
                "quadrupole axis must not be parallel to the Ioffe axis".into(),
            ));
        }
        Ok(IoffeTrapModel {
            b_min,
            gradient,
            omega_perp,
            omega_axial,
            center,
            ioffe_axis: e,
            quadrupole_axis: u.normalize(),
        })
    }

    pub fn field(&self, point: &Vec3) -> Vec3 {
        let e = self.ioffe_axis;
        let u = self.quadrupole_axis;
        let u2 = e.cross(&u);
        let r = point - self.center;
        let rho = r - e * r.dot(&e);
        e * self.b_min + (u * rho.dot(&u2) + u2 * rho.dot(&u)) * self.gradient
    }
}

/// Source of the static trapping field.
#[derive(Clone, Debug, PartialEq)]
pub enum StaticModel {
    Ioffe(IoffeTrapModel),
    Wires { wires: Vec<WireSpec>, bias: BiasField },
}

/// Static field at `point`.
pub fn static_field(point: &Vec3, model: &StaticModel) -> Result<Vec3> {
    match model {
        StaticModel::Ioffe(trap) => Ok(trap.field(point)),
        StaticModel::Wires { wires, bias } => {
            if wires.is_empty() && bias.vector == Vec3::zeros() {
                return Err(Error::InvalidConfig("static model has no sources".into()));
            }
            wires
                .iter()
                .try_fold(bias.vector, |acc, w| Ok(acc + wire_field(point, w)?))
        }
    }
}

/// The two dressing wires, their relative phase δ and the drive frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct RfSource {
    pub wire_a: WireSpec,
    pub wire_b: WireSpec,
    /// Relative phase δ of wire B (rad).
    pub phase: f64,
    /// Drive frequency ν_RF (Hz).
    pub frequency: f64,
    /// Dimensionless amplitude multipliers of the two wire fields.
    pub scale_a: f64,
    pub scale_b: f64,
}

impl RfSource {
    /// Source with unit amplitude multipliers.
    pub fn new(wire_a: WireSpec, wire_b: WireSpec, phase: f64, frequency: f64) -> Self {
        RfSource { wire_a, wire_b, phase, frequency, scale_a: 1.0, scale_b: 1.0 }
    }

    /// Copy with both amplitude multipliers replaced.
    pub fn with_scales(&self, scale_a: f64, scale_b: f64) -> Self {
        RfSource { scale_a, scale_b, ..self.clone() }
    }

    /// Copy with both wire currents replaced.
    pub fn with_currents(&self, current_a: f64, current_b: f64) -> Self {
        RfSource {
            wire_a: self.wire_a.with_current(current_a),
            wire_b: self.wire_b.with_current(current_b),
            ..self.clone()
        }
    }
}

fn real_to_complex(v: Vec3) -> CVec3 {
    v.map(|x| C64::new(x, 0.0))
}

/// RF phasor `s_A B_A(r) + e^{iδ} s_B B_B(r)`; the physical field is
/// Re[B e^{iωt}].
pub fn rf_phasor(point: &Vec3, rf: &RfSource) -> Result<CVec3> {
    let a = wire_field(point, &rf.wire_a)? * rf.scale_a;
    let b = wire_field(point, &rf.wire_b)? * rf.scale_b;
    Ok(real_to_complex(a) + real_to_complex(b) * C64::from_polar(1.0, rf.phase))
}

/// Spectroscopy ("tickling") field: a wire or an explicit phasor.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectroscopySource {
    Wire(WireSpec),
    Vector(CVec3),
}

pub fn spectroscopy_phasor(point: &Vec3, source: &SpectroscopySource) -> Result<CVec3> {
    match source {
        SpectroscopySource::Wire(w) => {
            Ok(real_to_complex(wire_field(point, w)?) * C64::from_polar(1.0, w.rf_phase))
        }
        SpectroscopySource::Vector(v) => Ok(*v),
    }
}

/// Fields at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub position: Vec3,
    pub b_static: Vec3,
    pub b_rf: CVec3,
    pub b_spec: CVec3,
}

/// Complete field configuration: static trap, dressing wires, probe.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldModel {
    pub static_model: StaticModel,
    pub rf: RfSource,
    pub spectroscopy: SpectroscopySource,
}

impl FieldModel {
    pub fn sample(&self, point: &Vec3) -> Result<FieldSample> {
        let b_static = static_field(point, &self.static_model)?;
        let b_rf = rf_phasor(point, &self.rf)?;
        let b_spec = spectroscopy_phasor(point, &self.spectroscopy)?;
        if !(b_static.iter().all(|x| x.is_finite())
            && b_rf.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NumericFailure {
                message: "non-finite field".into(),
                residual: f64::NAN,
            });
        }
        Ok(FieldSample {
            position: *point,
            b_static,
            b_rf,
            b_spec,
        })
    }

    pub fn with_rf_currents(&self, current_a: f64, current_b: f64) -> Self {
        FieldModel {
            rf: self.rf.with_currents(current_a, current_b),
            ..self.clone()
        }
    }

    pub fn with_rf_scales(&self, scale_a: f64, scale_b: f64) -> Self {
        FieldModel {
            rf: self.rf.with_scales(scale_a, scale_b),
            ..self.clone()
        }
    }

    pub fn with_rf_phase(&self, phase: f64) -> Self {
        let mut m = self.clone();
        m.rf.phase = phase;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RB87_MASS;

    fn z_wire(x: f64, y: f64, current: f64) -> WireSpec {
        WireSpec::thin(Vec3::new(x, y, 0.0), Vec3::z(), current, WireRole::RfA).unwrap()
    }

    #[test]
    fn thin_wire_magnitude() {
        let w = z_wire(0.0, 0.0, 0.060);
        let b = thin_wire_field(&Vec3::new(159e-6, 0.0, 0.0), &w).unwrap();
        // μ0 I / (2π d) = 2e-7 · 0.06 / 159e-6
        let expect = 2e-7 * 0.060 / 159e-6;
        assert!((b.norm() - expect).abs() < 1e-12 * expect);
        assert!((b.norm() - 7.547e-5).abs() < 1e-8);
        // ẑ × x̂ = ŷ
        assert!(b.y > 0.0 && b.x.abs() < 1e-20);
    }

    #[test]
    fn thin_wire_zero_current_and_mirror() {
        let w0 = z_wire(0.0, 0.0, 0.0);
        assert_eq!(thin_wire_field(&Vec3::new(1e-4, 2e-4, 0.0), &w0).unwrap(), Vec3::zeros());
        let w = z_wire(0.0, 0.0, 1.0);
        let a = thin_wire_field(&Vec3::new(1e-4, -2e-4, 0.0), &w).unwrap();
        let b = thin_wire_field(&Vec3::new(-1e-4, -2e-4, 0.0), &w).unwrap();
        // Mirror x → −x flips the y component and keeps x.
        assert!((a.x - b.x).abs() < 1e-18 && (a.y + b.y).abs() < 1e-18);
    }

    #[test]
    fn thin_wire_singularity() {
        let w = z_wire(0.0, 0.0, 1.0);
        assert!(matches!(
            thin_wire_field(&Vec3::new(0.0, 0.0, 5.0), &w),
            Err(Error::Singularity { .. })
        ));
    }

    fn strip(width: f64) -> WireSpec {
        WireSpec::new(Vec3::zeros(), Vec3::z(), width, Vec3::y(), 1.0, WireRole::Static, 0.0).unwrap()
    }

    #[test]
    fn ribbon_thin_limit() {
        let w = 1e-6;
        let s = strip(w);
        let t = strip(0.0);
        for p in [Vec3::new(0.0, -10.0 * w, 0.0), Vec3::new(7.0 * w, -7.0 * w, 3.0)] {
            let a = ribbon_field(&p, &s).unwrap();
            let b = thin_wire_field(&p, &t).unwrap();
            assert!((a - b).norm() <= 1e-2 * b.norm());
        }
        // Far away the deviation drops as (w/d)².
        let p = Vec3::new(0.0, -1e4 * w, 0.0);
        let a = ribbon_field(&p, &s).unwrap();
        let b = thin_wire_field(&p, &t).unwrap();
        assert!((a - b).norm() <= 1e-6 * b.norm());
    }

    #[test]
    fn ribbon_symmetry_plane_is_parallel_to_surface() {
        let s = strip(100e-6);
        let b = ribbon_field(&Vec3::new(0.0, -110e-6, 0.0), &s).unwrap();
        assert!(b.y.abs() < 1e-15 * b.norm());
        assert!(b.x.abs() > 0.0);
    }

    #[test]
    fn ribbon_matches_quadrature() {
        // Simpson integration of thin-wire contributions across the strip.
        let (w, d, i) = (100e-6, 110e-6, 1.0);
        let s = strip(w);
        for p in [Vec3::new(0.0, -d, 0.0), Vec3::new(40e-6, -d, 0.0), Vec3::new(80e-6, 20e-6, 0.0)] {
            let n = 20000;
            let h = w / n as f64;
            let mut acc = Vec3::zeros();
            for k in 0..=n {
                let x = -0.5 * w + k as f64 * h;
                let c = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                let wire = z_wire(x, 0.0, i / w);
                acc += thin_wire_field(&p, &wire).unwrap() * (c * h / 3.0);
            }
            let b = ribbon_field(&p, &s).unwrap();
            assert!((b - acc).norm() < 1e-9 * acc.norm(), "{b:?} vs {acc:?}");
        }
    }

    #[test]
    fn ribbon_thin_consistency_constant() {
        // Relative deviation ≤ C (w/d)² for d ≥ 3w.
        let w = 10e-6;
        let s = strip(w);
        let t = strip(0.0);
        let mut c_fit: f64 = 0.0;
        for k in 3..40 {
            let d = k as f64 * w;
            for p in [Vec3::new(0.0, -d, 0.0), Vec3::new(d * 0.6, -d * 0.8, 0.0)] {
                let a = ribbon_field(&p, &s).unwrap();
                let b = thin_wire_field(&p, &t).unwrap();
                c_fit = c_fit.max((a - b).norm() / b.norm() / (w / d).powi(2));
            }
        }
        eprintln!("thin/ribbon constant C = {c_fit:.4}");
        assert!(c_fit < 0.1);
    }

    #[test]
    fn ribbon_inside_conductor() {
        let s = strip(100e-6);
        assert!(matches!(ribbon_field(&Vec3::new(10e-6, 0.0, 0.0), &s), Err(Error::InsideConductor)));
    }

    fn rb_atom() -> Atom {
        Atom::rb87_f2()
    }

    #[test]
    fn ioffe_from_trap_frequencies() {
        let trap = IoffeTrapModel::from_trap_frequencies(
            650e3,
            2.0 * PI * 3e3,
            2.0 * PI * 20.0,
            &rb_atom(),
            Vec3::zeros(),
            Vec3::z(),
            Vec3::x(),
        )
        .unwrap();
        assert!((trap.b_min - 9.29e-5).abs() < 0.01e-5, "{}", trap.b_min);
        assert!((trap.gradient - 22.7).abs() < 0.1, "{}", trap.gradient);
        let m = StaticModel::Ioffe(trap.clone());
        assert!((static_field(&Vec3::zeros(), &m).unwrap().norm() - trap.b_min).abs() < 1e-20);
        // Harmonic expansion reproduces ω⊥.
        let rho = 1e-9;
        let db = static_field(&Vec3::new(rho, 0.0, 0.0), &m).unwrap().norm() - trap.b_min;
        let approx = trap.gradient.powi(2) * rho * rho / (2.0 * trap.b_min);
        assert!((db - approx).abs() < 1e-5 * approx);
        let k = rb_atom().mu().abs() * 2.0 * 2.0 * db / (rho * rho);
        let omega = (k / RB87_MASS).sqrt();
        assert!((omega / (2.0 * PI) - 3e3).abs() < 1.0);
    }

    #[test]
    fn ioffe_even_with_minimum_at_center() {
        let trap = IoffeTrapModel::new(1e-4, 20.0, 0.0, 0.0, Vec3::new(0.0, -1e-4, 0.0), Vec3::z(), Vec3::x()).unwrap();
        for k in 1..20 {
            let r = Vec3::new(0.3, -0.7, 0.0) * (k as f64 * 1e-7);
            let bp = trap.field(&(trap.center + r)).norm();
            let bm = trap.field(&(trap.center - r)).norm();
            assert!((bp - bm).abs() < 1e-18);
            assert!(bp > trap.b_min);
        }
        // On the quadrupole axis the transverse part points along ioffe × u = ŷ.
        let b = trap.field(&(trap.center + Vec3::new(1e-6, 0.0, 0.0)));
        assert!(b.x.abs() < 1e-20 && b.y > 0.0);
    }

    #[test]
    fn empty_wire_model_rejected() {
        let m = StaticModel::Wires { wires: vec![], bias: BiasField { vector: Vec3::zeros() } };
        assert!(matches!(static_field(&Vec3::zeros(), &m), Err(Error::InvalidConfig(_))));
    }

    fn chip_rf(phase: f64, current: f64) -> RfSource {
        RfSource::new(
            z_wire(-115e-6, 0.0, current),
            WireSpec { role: WireRole::RfB, ..z_wire(115e-6, 0.0, current) },
            phase,
            600e3,
        )
    }

    #[test]
    fn rf_phasor_antiphase_is_vertical_on_symmetry_plane() {
        let p = Vec3::new(0.0, -110e-6, 0.0);
        let rf = chip_rf(PI, 0.060);
        let b = rf_phasor(&p, &rf).unwrap();
        let a = thin_wire_field(&p, &rf.wire_a).unwrap();
        let bb = thin_wire_field(&p, &rf.wire_b).unwrap();
        let direct = a - bb;
        for k in 0..3 {
            assert!((b[k].re - direct[k]).abs() < 1e-18);
            assert!(b[k].im.abs() < 1e-18);
        }
        assert!(b.x.norm() < 1e-15 * b.norm());
        // In-phase drive gives the orthogonal (horizontal) polarization.
        let b0 = rf_phasor(&p, &chip_rf(0.0, 0.060)).unwrap();
        assert!(b0.y.norm() < 1e-15 * b0.norm());
        let dot: C64 = b0.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
        assert!(dot.norm() < 1e-15 * b0.norm() * b.norm());
    }

    #[test]
    fn spectroscopy_wire_magnitude_and_linearity() {
        let p = Vec3::new(0.0, -110e-6, 0.0);
        let w = WireSpec::thin(Vec3::new(0.0, 1.2e-3, 0.0), Vec3::z(), 1e-4, WireRole::Spectroscopy).unwrap();
        let b = spectroscopy_phasor(&p, &SpectroscopySource::Wire(w.clone())).unwrap();
        let expect = 2e-7 * 1e-4 / 1.31e-3;
        assert!((b.norm() - expect).abs() < 1e-12 * expect);
        assert!((b.norm() - 1.53e-8).abs() < 0.01e-8);
        let b2 = spectroscopy_phasor(&p, &SpectroscopySource::Wire(w.with_current(2e-4))).unwrap();
        assert_eq!(b2, b * C64::new(2.0, 0.0));
        let b0 = spectroscopy_phasor(&p, &SpectroscopySource::Wire(w.with_current(0.0))).unwrap();
        assert_eq!(b0, CVec3::zeros());
    }

    #[test]
    fn superposition_is_linear() {
        let p = Vec3::new(13e-6, -97e-6, 4e-6);
        let a = z_wire(-115e-6, 0.0, 0.03);
        let b = z_wire(-115e-6, 0.0, 0.05);
        let c = z_wire(-115e-6, 0.0, 0.08);
        let sum = thin_wire_field(&p, &a).unwrap() + thin_wire_field(&p, &b).unwrap();
        let direct = thin_wire_field(&p, &c).unwrap();
        assert!((sum - direct).norm() <= 1e-12 * direct.norm());
    }
}
