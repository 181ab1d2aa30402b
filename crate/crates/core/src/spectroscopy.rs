//! First-order spectroscopy of dressed levels: transition weights, the
//! harmonic resonance chain, Bloch-Siegert shifts and resonance maps.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dressed_hamiltonian::{build_full, BareBasis};
use crate::dressing_solver::{
    intra_manifold_spacing, label_by_continuation, potential_minimum, rwa_levels, DressedLevel, DressingSetup, Label,
    LabelOptions, LineGrid,
};
use crate::error::{Error, Result};
use crate::local_frame::{decompose, Atom, LocalFrame};
use crate::magnetostatics::{spectroscopy_phasor, CVec3, Vec3};
use crate::spin_algebra::{hermitian_eigenvalues, spin_set, CMatrix, HalfInt};

/// Default relative weight below which lines are dropped.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-4;

/// Which member of the pair nν ± Ω a line belongs to; `Intra` lines keep m̃
/// and sit at exact multiples of ν.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
    Intra,
}

impl Branch {
    pub fn symbol(self) -> &'static str {
        match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
            Branch::Intra => "0",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "+" => Some(Branch::Plus),
            "-" => Some(Branch::Minus),
            "0" => Some(Branch::Intra),
            _ => None,
        }
    }
}

/// A predicted resonance of the tickling field.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionLine {
    /// |E_to − E_from| (Hz).
    pub frequency: f64,
    /// |⟨to|(μ/h) B_spec·F|from⟩|² (Hz²).
    pub weight: f64,
    pub from: Label,
    pub to: Label,
    pub order: u32,
    pub branch: Branch,
}

impl TransitionLine {
    /// Lines that change m̃ and so move atoms towards untrapped states.
    pub fn is_loss(&self) -> bool {
        self.from.m_tilde != self.to.m_tilde
    }

    pub fn delta_m(&self) -> i32 {
        (self.to.m_tilde - self.from.m_tilde).twice() / 2
    }
}

/// Default initial level: m̃ = F in the central complete manifold.
pub fn trapped_label(atom: &Atom) -> Label {
    let f = atom.spin.half_int();
    let kappa = if f.is_integer() { HalfInt::ZERO } else { HalfInt::from_twice(1) };
    Label::new(f, kappa)
}

/// Spin-space part (μ/h)(B∥F_z + B₁F_x + B₂F_y) of a phasor decomposed in
/// `frame`, optionally conjugated.
fn probe_operator(frame: &LocalFrame, b_spec: &CVec3, atom: &Atom, conjugate: bool) -> CMatrix {
    let s = spin_set(atom.spin);
    let [par, p1, p2] = frame.project(b_spec);
    let f = |z: C64| if conjugate { z.conj() } else { z };
    (&s.fz * f(par) + &s.fx * f(p1) + &s.fy * f(p2)) * C64::new(atom.mu_over_h(), 0.0)
}

/// Applies a spin operator to every ΔN block of a bare-basis vector.
fn apply_blockwise(op: &CMatrix, v: &DVector<C64>) -> DVector<C64> {
    let d = op.nrows();
    let mut out = DVector::zeros(v.len());
    for b in 0..v.len() / d {
        let block = op * v.rows(b * d, d);
        out.rows_mut(b * d, d).copy_from(&block);
    }
    out
}

/// Order and branch of a line from its labels, such that
/// `frequency = order·ν ± W` with W the intra-manifold spacing.
fn classify(from: &Label, to: &Label, delta_e: f64, nu: f64, sign_mu: i32) -> (u32, Branch) {
    let dk = (to.kappa - from.kappa).twice() / 2;
    let dm = (to.m_tilde - from.m_tilde).twice() / 2;
    let sigma = if delta_e >= 0.0 { 1 } else { -1 };
    let n = sigma * dk;
    if dm == 0 {
        return (dk.unsigned_abs(), Branch::Intra);
    }
    let b = sigma * dm.signum() * sign_mu;
    if n >= 0 && dm.abs() == 1 {
        return (n as u32, if b > 0 { Branch::Plus } else { Branch::Minus });
    }
    // Outside the chain's regular pattern: nearest multiple of ν.
    let f = delta_e.abs();
    let order = (f / nu).round();
    (order as u32, if f >= order * nu { Branch::Plus } else { Branch::Minus })
}

/// Every transition from the level `from` to the other labeled levels,
/// without pruning and including |Δm̃| ≥ 2.
///
/// Upward transitions (E_to > E_from) are driven by the e^{−iωt} part of
/// Re[B e^{iωt}] and so use B*; downward ones use B.
pub fn transition_weights(
    levels: &[DressedLevel],
    frame: &LocalFrame,
    b_spec: &CVec3,
    atom: &Atom,
    nu_rf: f64,
    from: Label,
) -> Result<Vec<TransitionLine>> {
    if levels.iter().any(|l| l.label.is_none()) {
        return Err(Error::InvalidArgument("transition weights need labeled levels".into()));
    }
    let initial = levels
        .iter()
        .find(|l| l.label == Some(from))
        .ok_or_else(|| Error::InvalidArgument(format!("no level with label {from}")))?;
    let up = apply_blockwise(&probe_operator(frame, b_spec, atom, true), &initial.vector);
    let down = apply_blockwise(&probe_operator(frame, b_spec, atom, false), &initial.vector);
    let mut lines: Vec<TransitionLine> = levels
        .iter()
        .filter(|l| l.label != Some(from))
        .map(|l| {
            let delta_e = l.energy - initial.energy;
            let v = if delta_e > 0.0 { &up } else { &down };
            let element = l.vector.dotc(v);
            let to = l.label.expect("checked above");
            let (order, branch) = classify(&from, &to, delta_e, nu_rf, atom.sign());
            TransitionLine {
                frequency: (l.energy - initial.energy).abs(),
                weight: element.norm_sqr(),
                from,
                to,
                order,
                branch,
            }
        })
        .collect();
    lines.sort_by(|a, b| a.frequency.total_cmp(&b.frequency).then(a.to.cmp(&b.to)));
    Ok(lines)
}

/// Allowed lines (|Δm̃| ≤ 1) from `from` whose weight is at least
/// `weight_floor` times the strongest allowed line.
pub fn transition_elements(
    levels: &[DressedLevel],
    frame: &LocalFrame,
    b_spec: &CVec3,
    atom: &Atom,
    nu_rf: f64,
    from: Label,
    weight_floor: f64,
) -> Result<Vec<TransitionLine>> {
    if !(weight_floor >= 0.0) {
        return Err(Error::InvalidArgument(format!("weight floor {weight_floor} must be ≥ 0")));
    }
    let all = transition_weights(levels, frame, b_spec, atom, nu_rf, from)?;
    let allowed = all.into_iter().filter(|l| l.delta_m().abs() <= 1);
    let allowed: Vec<TransitionLine> = allowed.collect();
    let max = allowed.iter().map(|l| l.weight).fold(0.0, f64::max);
    Ok(allowed.into_iter().filter(|l| l.weight > 0.0 && l.weight >= weight_floor * max).collect())
}

/// {n·ν ± Ω : n = 0..n_max}, negatives dropped, ascending, duplicates merged.
pub fn resonance_chain(rabi: f64, nu_rf: f64, n_max: u32) -> Vec<f64> {
    let mut out: Vec<f64> = (0..=n_max)
        .flat_map(|n| [n as f64 * nu_rf - rabi, n as f64 * nu_rf + rabi])
        .filter(|&f| f >= 0.0)
        .collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    out
}

/// Order of the heaviest loss line; ties go to the smaller order.
pub fn strongest_order(lines: &[TransitionLine]) -> Result<u32> {
    let pool: Vec<&TransitionLine> = if lines.iter().any(|l| l.is_loss()) {
        lines.iter().filter(|l| l.is_loss()).collect()
    } else {
        lines.iter().collect()
    };
    pool.iter()
        .fold(None::<&TransitionLine>, |best, l| match best {
            Some(b) if b.weight > l.weight || (b.weight == l.weight && b.order <= l.order) => Some(b),
            _ => Some(l),
        })
        .map(|l| l.order)
        .ok_or_else(|| Error::InvalidArgument("no lines".into()))
}

/// Distinct (order, branch) pairs among loss lines in `[lo, hi]`.
pub fn branch_set(lines: &[TransitionLine], lo: f64, hi: f64) -> Vec<(u32, Branch)> {
    let mut b: Vec<(u32, Branch)> = lines
        .iter()
        .filter(|l| l.is_loss() && l.frequency >= lo && l.frequency <= hi)
        .map(|l| (l.order, l.branch))
        .collect();
    b.sort();
    b.dedup();
    b
}

/// Full-minus-RWA frequency of one line present in both sets.
#[derive(Clone, Debug, PartialEq)]
pub struct LineShift {
    pub from: Label,
    pub to: Label,
    pub order: u32,
    pub branch: Branch,
    pub full: f64,
    pub rwa: f64,
    pub shift: f64,
}

/// Pairs lines with equal labels; RWA lines without a partner are returned
/// separately.
pub fn bloch_siegert_shift(full: &[TransitionLine], rwa: &[TransitionLine]) -> (Vec<LineShift>, Vec<TransitionLine>) {
    let mut matched = Vec::new();
    let mut unmatched = Vec::new();
    for r in rwa {
        match full.iter().find(|f| f.from == r.from && f.to == r.to) {
            Some(f) => matched.push(LineShift {
                from: r.from,
                to: r.to,
                order: f.order,
                branch: f.branch,
                full: f.frequency,
                rwa: r.frequency,
                shift: f.frequency - r.frequency,
            }),
            None => unmatched.push(r.clone()),
        }
    }
    (matched, unmatched)
}

/// Gap between the two quasi-energies of a spin-1/2 with Larmor frequency
/// `larmor` under a linear transverse drive of Rabi frequency `rabi`.
fn spin_half_gap(nu_rf: f64, rabi: f64, larmor: f64, dn_max: i32) -> Result<f64> {
    let atom = Atom::new(0.5, 1.0, 1.0)?;
    let k = atom.mu_over_h();
    let frame = decompose(
        &Vec3::new(0.0, 0.0, larmor / k),
        &CVec3::new(C64::new(2.0 * rabi / k, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
    )?;
    let basis = BareBasis::for_atom(&atom, dn_max)?;
    let h = build_full(&frame, nu_rf, &atom, &basis)?;
    let vals = hermitian_eigenvalues(&h.matrix)?;
    // κ = 1/2 manifold: the pair nearest ν/2.
    let mut near: Vec<f64> = vals.iter().copied().filter(|e| (e - 0.5 * nu_rf).abs() < 0.5 * nu_rf).collect();
    near.sort_by(|a, b| a.total_cmp(b));
    match near.as_slice() {
        [a, b] => Ok(b - a),
        _ => Err(Error::NumericFailure { message: "spin-1/2 pair not isolated".into(), residual: near.len() as f64 }),
    }
}

/// Shift ν_RF − ν_L,res of the two-level resonance, where ν_L,res is the
/// Larmor frequency minimizing the dressed gap (Hz).
pub fn two_level_resonance_shift(nu_rf: f64, rabi: f64) -> Result<f64> {
    if !(rabi > 0.0 && rabi < nu_rf) {
        return Err(Error::InvalidArgument("need 0 < Ω < ν_RF".into()));
    }
    let dn = 16;
    let gap = |l: f64| spin_half_gap(nu_rf, rabi, l, dn);
    // Golden-section search around the bare resonance.
    let (mut a, mut b) = (nu_rf - rabi, nu_rf + 0.5 * rabi);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (gap(c)?, gap(d)?);
    for _ in 0..200 {
        if (b - a) < 1e-12 * nu_rf {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = gap(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = gap(d)?;
        }
    }
    Ok(nu_rf - 0.5 * (a + b))
}

/// Spectroscopy at one RF current.
#[derive(Clone, Debug)]
pub struct ScanResult {
    /// Potential minimum of the full model, where lines are evaluated.
    pub position: Vec3,
    pub rwa_position: Vec3,
    pub lines: Vec<TransitionLine>,
    pub rwa_lines: Vec<TransitionLine>,
    pub shifts: Vec<LineShift>,
    /// Intra-manifold spacing W at the full minimum (Hz).
    pub spacing: f64,
    pub rwa_spacing: f64,
}

#[derive(Clone, Debug)]
pub struct ScanPoint {
    /// Nominal current of both RF wires (A).
    pub current: f64,
    pub outcome: std::result::Result<ScanResult, Error>,
}

/// Lines per RF current.
#[derive(Clone, Debug)]
pub struct ResonanceMap {
    pub points: Vec<ScanPoint>,
    pub weight_floor: f64,
    pub window: (f64, f64),
}

impl ResonanceMap {
    pub fn current_axis(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.current).collect()
    }
}

/// Parameters of a current sweep.
#[derive(Clone, Debug)]
pub struct ScanSpec {
    /// Strictly increasing RF currents (A).
    pub currents: Vec<f64>,
    /// Frequency window (Hz).
    pub window: (f64, f64),
    pub weight_floor: f64,
    /// Line on which the potential minimum is searched.
    pub search: LineGrid,
    pub from: Label,
}

/// Where atoms sit and which levels they see in one model.
struct Probe {
    position: Vec3,
    frame: LocalFrame,
    levels: Vec<DressedLevel>,
}

fn probe_full(setup: &DressingSetup, search: &LineGrid, from: Label) -> Result<Probe> {
    let (position, _) = potential_minimum(setup, search, from)?;
    let h = setup.hamiltonian_at(&position)?;
    let levels = label_by_continuation(&h, setup.labels)?;
    Ok(Probe { position, frame: h.frame, levels })
}

/// Minimum of the analytic RWA potential along the search line.
fn rwa_minimum(setup: &DressingSetup, search: &LineGrid, from: Label) -> Result<Vec3> {
    let sign = setup.atom.sign();
    let energy = |s: f64| -> Result<f64> {
        let p = setup.rwa_at(&search.point(s))?;
        Ok(crate::dressed_hamiltonian::rwa_potential(p.detuning, p.rabi, from.m_tilde.value(), sign))
    };
    let coords = &search.coords;
    let values = coords.iter().map(|&s| energy(s)).collect::<Result<Vec<f64>>>()?;
    let i = (0..values.len()).fold(0, |b, k| if values[k] < values[b] { k } else { b });
    if i == 0 || i + 1 == values.len() {
        return Ok(search.point(coords[i]));
    }
    // Golden-section refinement inside the bracketing interval.
    let (mut a, mut b) = (coords[i - 1], coords[i + 1]);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (energy(c)?, energy(d)?);
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = energy(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = energy(d)?;
        }
        if (b - a).abs() <= 1e-6 * (coords[i + 1] - coords[i - 1]).abs() {
            break;
        }
    }
    Ok(search.point(0.5 * (a + b)))
}

fn probe_rwa(setup: &DressingSetup, search: &LineGrid, from: Label) -> Result<Probe> {
    let position = rwa_minimum(setup, search, from)?;
    let h = setup.hamiltonian_at(&position)?;
    let levels = rwa_levels(&h)?;
    Ok(Probe { position, frame: h.frame, levels })
}

fn lines_at(setup: &DressingSetup, probe: &Probe, from: Label, floor: f64) -> Result<(Vec<TransitionLine>, f64)> {
    let b_spec = spectroscopy_phasor(&probe.position, &setup.model.spectroscopy)?;
    let lines = transition_elements(&probe.levels, &probe.frame, &b_spec, &setup.atom, setup.nu_rf(), from, floor)?;
    let spacing = intra_manifold_spacing(&probe.levels, from.kappa)
        .map(|w| w * setup.atom.sign() as f64)
        .unwrap_or(f64::NAN);
    Ok((lines, spacing))
}

/// Which dressed states predict the lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LineModel {
    Full,
    Rwa,
}

/// Lines of one model at that model's own potential minimum, restricted to
/// `window`.
#[derive(Clone, Debug)]
pub struct ModelLines {
    pub position: Vec3,
    pub lines: Vec<TransitionLine>,
    pub spacing: f64,
}

pub fn lines_at_minimum(
    setup: &DressingSetup,
    search: &LineGrid,
    from: Label,
    weight_floor: f64,
    window: (f64, f64),
    model: LineModel,
) -> Result<ModelLines> {
    let probe = match model {
        LineModel::Full => probe_full(setup, search, from)?,
        LineModel::Rwa => probe_rwa(setup, search, from)?,
    };
    let (mut lines, spacing) = lines_at(setup, &probe, from, weight_floor)?;
    lines.retain(|l| l.frequency >= window.0 && l.frequency <= window.1);
    Ok(ModelLines { position: probe.position, lines, spacing })
}

/// Full and RWA spectroscopy for one configured model.
pub fn spectroscopy_at_minimum(setup: &DressingSetup, spec: &ScanSpec) -> Result<ScanResult> {
    let full = lines_at_minimum(setup, &spec.search, spec.from, spec.weight_floor, spec.window, LineModel::Full)?;
    let rwa = lines_at_minimum(setup, &spec.search, spec.from, spec.weight_floor, spec.window, LineModel::Rwa)?;
    let (shifts, _) = bloch_siegert_shift(&full.lines, &rwa.lines);
    Ok(ScanResult {
        position: full.position,
        rwa_position: rwa.position,
        lines: full.lines,
        rwa_lines: rwa.lines,
        shifts,
        spacing: full.spacing,
        rwa_spacing: rwa.spacing,
    })
}

/// Sweeps the RF current, locating the potential minimum anew at each
/// current. Failures are recorded per current; the sweep continues.
pub fn scan_resonances(setup: &DressingSetup, spec: &ScanSpec) -> Result<ResonanceMap> {
    if spec.currents.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig("scan currents must increase strictly".into()));
    }
    if !(spec.window.0 >= 0.0 && spec.window.1 > spec.window.0) {
        return Err(Error::InvalidConfig("frequency window must satisfy 0 ≤ lo < hi".into()));
    }
    let points = spec
        .currents
        .par_iter()
        .map(|&current| {
            let mut s = setup.clone();
            s.model = setup.model.with_rf_currents(current, current);
            ScanPoint { current, outcome: spectroscopy_at_minimum(&s, spec) }
        })
        .collect();
    Ok(ResonanceMap { points, weight_floor: spec.weight_floor, window: spec.window })
}

/// Labels and transitions for a setup at a fixed point (no minimum search).
pub fn lines_at_point(
    setup: &DressingSetup,
    point: &Vec3,
    from: Label,
    weight_floor: f64,
    options: LabelOptions,
) -> Result<Vec<TransitionLine>> {
    let h = setup.hamiltonian_at(point)?;
    let levels = label_by_continuation(&h, options)?;
    let b_spec = spectroscopy_phasor(point, &setup.model.spectroscopy)?;
    transition_elements(&levels, &h.frame, &b_spec, &setup.atom, setup.nu_rf(), from, weight_floor)
}
