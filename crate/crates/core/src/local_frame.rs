//! Local frame of the static field and the RWA parameters derived from it.

use num_complex::Complex64 as C64;

use crate::constants::{MU_B, PLANCK, RB87_G_F2, RB87_MASS};
use crate::error::{Error, Result};
use crate::magnetostatics::{CVec3, Vec3};
use crate::spin_algebra::Spin;

/// Static fields weaker than this (T) have no usable quantization axis.
pub const MIN_STATIC_FIELD: f64 = 1e-12;

/// Spin, Landé factor and mass of the trapped species.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub spin: Spin,
    pub g_f: f64,
    /// Mass (kg).
    pub mass: f64,
}

impl Atom {
    pub fn new(f: f64, g_f: f64, mass: f64) -> Result<Self> {
        if !(g_f.is_finite() && g_f != 0.0) {
            return Err(Error::InvalidConfig("g_F must be finite and non-zero".into()));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidConfig("mass must be positive".into()));
        }
        Ok(Atom { spin: Spin::new(f)?, g_f, mass })
    }

    /// ⁸⁷Rb in its F = 2 hyperfine manifold.
    pub fn rb87_f2() -> Self {
        Atom::new(2.0, RB87_G_F2, RB87_MASS).expect("valid constants")
    }

    /// Signed magnetic moment μ = g_F μ_B (J/T).
    pub fn mu(&self) -> f64 {
        self.g_f * MU_B
    }

    /// μ/h (Hz/T), signed.
    pub fn mu_over_h(&self) -> f64 {
        self.mu() / PLANCK
    }

    /// sgn(g_F) as ±1.
    pub fn sign(&self) -> i32 {
        if self.g_f > 0.0 { 1 } else { -1 }
    }
}

/// Orthonormal triad (e1, e2, b̂) at a point together with the RF phasor
/// components along it.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFrame {
    pub b_hat: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    /// Magnitude of the static field (T).
    pub b_static: f64,
    pub b_par: C64,
    pub b_perp1: C64,
    pub b_perp2: C64,
}

fn cdot(v: &CVec3, e: &Vec3) -> C64 {
    v.x * e.x + v.y * e.y + v.z * e.z
}

impl LocalFrame {
    /// Components `(par, perp1, perp2)` of any phasor in this frame.
    pub fn project(&self, phasor: &CVec3) -> [C64; 3] {
        [cdot(phasor, &self.b_hat), cdot(phasor, &self.e1), cdot(phasor, &self.e2)]
    }

    /// Same frame with (e1, e2) rotated by `angle` about b̂.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let e1 = self.e1 * c + self.e2 * s;
        let e2 = self.b_hat.cross(&e1);
        LocalFrame {
            e1,
            e2,
            b_perp1: self.b_perp1 * c + self.b_perp2 * s,
            b_perp2: -self.b_perp1 * s + self.b_perp2 * c,
            ..self.clone()
        }
    }

    /// Circular component that co-rotates with the Larmor precession.
    ///
    /// The physical field is Re[B e^{iωt}]; for sgn(g_F) = +1 the resonant
    /// part drives F₊ with amplitude ∝ conj(B₁ + iB₂).
    pub fn co_rotating(&self, sign: i32) -> C64 {
        self.b_perp1 + C64::i() * (sign as f64) * self.b_perp2
    }

    /// The counter-rotating circular component.
    pub fn counter_rotating(&self, sign: i32) -> C64 {
        self.co_rotating(-sign)
    }
}

/// Splits `phasor` into parts parallel and perpendicular to `b_static`.
///
/// e1 is the global x̂ projected orthogonal to b̂ (ŷ when x̂ is nearly
/// colinear), and e2 = b̂ × e1.
pub fn decompose(b_static: &Vec3, phasor: &CVec3) -> Result<LocalFrame> {
    let magnitude = b_static.norm();
    if !(magnitude > MIN_STATIC_FIELD) {
        return Err(Error::DegenerateFrame { magnitude });
    }
    let b_hat = b_static / magnitude;
    let mut e1 = Vec3::x() - b_hat * b_hat.x;
    if e1.norm() < 1e-8 {
        e1 = Vec3::y() - b_hat * b_hat.y;
    }
    let e1 = e1.normalize();
    let e2 = b_hat.cross(&e1);
    Ok(LocalFrame {
        b_hat,
        e1,
        e2,
        b_static: magnitude,
        b_par: cdot(phasor, &b_hat),
        b_perp1: cdot(phasor, &e1),
        b_perp2: cdot(phasor, &e2),
    })
}

/// Detuning, Rabi frequency and Larmor frequency, all in Hz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RwaParams {
    pub detuning: f64,
    pub rabi: f64,
    pub larmor: f64,
}

/// RWA parameters at a point for drive frequency `nu_rf` (Hz).
pub fn rwa_params(frame: &LocalFrame, nu_rf: f64, atom: &Atom) -> RwaParams {
    let mu_h = atom.mu_over_h().abs();
    let larmor = mu_h * frame.b_static;
    RwaParams {
        detuning: larmor - nu_rf,
        rabi: 0.5 * mu_h * frame.co_rotating(atom.sign()).norm(),
        larmor,
    }
}
