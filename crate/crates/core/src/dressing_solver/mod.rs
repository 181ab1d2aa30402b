//! Diagonalization and labeling of dressed states, spatial adiabatic
//! potentials and double-well metrics.

mod floquet;
mod tracking;

pub use floquet::{
    circular_mismatch, floquet_oracle, floquet_oracle_with, monodromy, unitary_eigenvalues, wrap,
    OracleOptions,
};
pub use tracking::{
    double_well_metrics, potential_curve, potential_minimum, rwa_curve, track_levels, AdiabaticPotential,
    DoubleWellMetrics, LineGrid, TrackedLevels,
};

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::dressed_hamiltonian::{build_full, BareBasis, DressedHamiltonian, DEFAULT_DN_MAX};
use crate::error::{Error, Result};
use crate::local_frame::{decompose, rwa_params, Atom, LocalFrame, RwaParams};
use crate::magnetostatics::{FieldModel, Vec3};
use crate::spin_algebra::{hermitian_eig, spin_set, CMatrix, HalfInt, Spin};

/// Dressed quantum numbers (m̃, κ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub m_tilde: HalfInt,
    pub kappa: HalfInt,
}

impl Label {
    pub fn new(m_tilde: HalfInt, kappa: HalfInt) -> Self {
        Label { m_tilde, kappa }
    }

    pub fn from_f64(m_tilde: f64, kappa: f64) -> Result<Self> {
        let m = HalfInt::from_f64(m_tilde).ok_or_else(|| Error::InvalidArgument(format!("bad m̃ {m_tilde}")))?;
        let k = HalfInt::from_f64(kappa).ok_or_else(|| Error::InvalidArgument(format!("bad κ {kappa}")))?;
        Ok(Label::new(m, k))
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.m_tilde, self.kappa)
    }
}

/// One eigenpair of a dressed Hamiltonian.
#[derive(Clone, Debug)]
pub struct DressedLevel {
    /// Hz.
    pub energy: f64,
    pub vector: DVector<C64>,
    pub label: Option<Label>,
    /// Smallest matched overlap along the labeling path.
    pub confidence: f64,
}

/// All eigenpairs of `h`, ascending in energy, without labels.
pub fn dress(h: &DressedHamiltonian) -> Result<Vec<DressedLevel>> {
    let e = hermitian_eig(&h.matrix)?;
    Ok(e.values
        .iter()
        .enumerate()
        .map(|(k, &energy)| DressedLevel {
            energy,
            vector: e.vectors.column(k).into_owned(),
            label: None,
            confidence: 0.0,
        })
        .collect())
}

/// Step control for [`label_by_continuation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelOptions {
    /// Initial number of ramp steps.
    pub n_steps: usize,
    /// Finest ramp resolution (steps per unit ramp) before giving up.
    pub max_steps: usize,
    /// Overlap below which a step is subdivided.
    pub step_confidence: f64,
    /// Overlap below which a label is rejected.
    pub min_confidence: f64,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions {
            n_steps: 8,
            max_steps: 256,
            step_confidence: 0.9,
            min_confidence: 0.7,
        }
    }
}

/// Field model plus everything needed to dress it at arbitrary points.
#[derive(Clone, Debug)]
pub struct DressingSetup {
    pub model: FieldModel,
    pub atom: Atom,
    pub dn_max: i32,
    pub labels: LabelOptions,
}

impl DressingSetup {
    pub fn new(model: FieldModel, atom: Atom) -> Self {
        DressingSetup {
            model,
            atom,
            dn_max: DEFAULT_DN_MAX,
            labels: LabelOptions::default(),
        }
    }

    pub fn nu_rf(&self) -> f64 {
        self.model.rf.frequency
    }

    pub fn basis(&self) -> Result<BareBasis> {
        BareBasis::for_atom(&self.atom, self.dn_max)
    }

    pub fn frame_at(&self, point: &Vec3) -> Result<LocalFrame> {
        let s = self.model.sample(point)?;
        decompose(&s.b_static, &s.b_rf)
    }

    pub fn hamiltonian_at(&self, point: &Vec3) -> Result<DressedHamiltonian> {
        build_full(&self.frame_at(point)?, self.nu_rf(), &self.atom, &self.basis()?)
    }

    pub fn rwa_at(&self, point: &Vec3) -> Result<RwaParams> {
        Ok(rwa_params(&self.frame_at(point)?, self.nu_rf(), &self.atom))
    }

    /// Labeled levels of the complete manifolds at `point`.
    pub fn labeled_levels_at(&self, point: &Vec3) -> Result<Vec<DressedLevel>> {
        label_by_continuation(&self.hamiltonian_at(point)?, self.labels)
    }
}

/// Labels dressed levels by continuation from a limit where they are known
/// exactly, returning only levels of complete κ-manifolds, ascending.
///
/// The couplings are ramped from zero; each step matches eigenvectors to
/// the previous step by maximum overlap, subdividing steps whose overlaps
/// drop below `step_confidence`. When the bare limit is degenerate the ramp
/// instead starts from the RWA (single-manifold) eigenstates and switches
/// on only the inter-manifold couplings.
pub fn label_by_continuation(h: &DressedHamiltonian, options: LabelOptions) -> Result<Vec<DressedLevel>> {
    let all = label_all(h, options)?;
    Ok(all
        .into_iter()
        .filter(|l| l.label.map(|x| h.basis.is_full(x.kappa)).unwrap_or(false))
        .collect())
}

/// As [`label_by_continuation`] but keeping the truncated edge manifolds.
pub(crate) fn label_all(h: &DressedHamiltonian, options: LabelOptions) -> Result<Vec<DressedLevel>> {
    if options.n_steps < 2 {
        return Err(Error::InvalidArgument("labeling needs at least 2 ramp steps".into()));
    }
    let detuning = h.zeeman.abs() - h.nu_rf;
    let n = h.basis.dim();
    let off_diagonal_zero = (0..n).all(|i| (0..n).all(|j| i == j || h.matrix[(i, j)] == C64::new(0.0, 0.0)));
    if off_diagonal_zero {
        return Ok(bare_levels(h, detuning));
    }
    let mut failure = None;
    if detuning != 0.0 {
        match continuation(h, Seed::Bare, options).and_then(|l| enforce_structure(h, l, Seed::Bare, options)) {
            Ok(levels) => return Ok(levels),
            Err(e) => failure = Some(e),
        }
    }
    match continuation(h, Seed::Rwa, options).and_then(|l| enforce_structure(h, l, Seed::Rwa, options)) {
        Ok(levels) => Ok(levels),
        Err(e) => Err(match (failure, e) {
            (Some(Error::LabelingAmbiguity { pairs: a }), Error::LabelingAmbiguity { pairs: b }) => {
                Error::LabelingAmbiguity { pairs: if a.len() <= b.len() { a } else { b } }
            }
            (_, e) => e,
        }),
    }
}

/// Largest |κ| at which a label that contradicts the exact spectrum is an
/// error rather than a truncation artefact to be dropped.
fn core_kappa(basis: &BareBasis) -> f64 {
    (basis.max_full_kappa() * 0.5).floor()
}

/// Spin-1/2 problem with the same Zeeman splitting and coupling block,
/// or `None` when the block is not a combination of spin components (the
/// spectrum then has no κν + m̃W structure to check against).
fn spin_half_twin(h: &DressedHamiltonian) -> Result<Option<DressedHamiltonian>> {
    let c = h.coupling_block();
    let ops = spin_set(h.basis.spin);
    let comps: Vec<C64> = [&ops.fz, &ops.fx, &ops.fy]
        .iter()
        .map(|f| (*f * &c).trace() / (*f * *f).trace())
        .collect();
    let rebuilt = &ops.fz * comps[0] + &ops.fx * comps[1] + &ops.fy * comps[2];
    if (&rebuilt - &c).norm() > 1e-12 * c.norm().max(h.zeeman.abs()) {
        return Ok(None);
    }
    let half = Spin::new(0.5)?;
    let basis = BareBasis::new(half, h.basis.dn_max, h.basis.sign)?;
    let s = spin_set(half);
    let ch = &s.fz * comps[0] + &s.fx * comps[1] + &s.fy * comps[2];
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        let (mz, dn) = basis.state(i);
        m[(i, i)] = C64::new(h.zeeman * mz.value() + h.nu_rf * dn as f64, 0.0);
    }
    for b in 0..basis.n_blocks() - 1 {
        m.view_mut(((b + 1) * 2, b * 2), (2, 2)).copy_from(&ch);
        m.view_mut((b * 2, (b + 1) * 2), (2, 2)).copy_from(&ch.adjoint());
    }
    Ok(Some(DressedHamiltonian { basis, matrix: m, nu_rf: h.nu_rf, zeeman: h.zeeman, frame: h.frame.clone() }))
}

/// Checks continuation labels against the exact spectrum κν + m̃W, with W
/// from the spin-1/2 twin labeled along the same ramp. Levels that
/// contradict it are reassigned when exactly one eigenvalue fits, dropped
/// near the truncation edge, and reported as ambiguous in the core with
/// zero overlap, which marks a truncation too small for the drive.
fn enforce_structure(
    h: &DressedHamiltonian,
    mut levels: Vec<DressedLevel>,
    seed: Seed,
    options: LabelOptions,
) -> Result<Vec<DressedLevel>> {
    if h.basis.spin.dim() == 2 {
        return Ok(levels);
    }
    let Some(twin) = spin_half_twin(h)? else {
        return Ok(levels);
    };
    let twin_levels = continuation(&twin, seed, options)?;
    let half = HalfInt::from_f64(0.5).expect("half-integer");
    let w = match (
        find_label(&twin_levels, Label::new(half, half)),
        find_label(&twin_levels, Label::new(-half, half)),
    ) {
        (Some(a), Some(b)) => a.energy - b.energy,
        _ => return Err(Error::LabelingAmbiguity { pairs: Vec::new() }),
    };
    let nu = h.nu_rf;
    let tol = 1e-6 * nu;
    let expected = |l: &Label| l.kappa.value() * nu + l.m_tilde.value() * w;
    let fits = |lv: &DressedLevel| lv.label.map(|l| (lv.energy - expected(&l)).abs() <= tol).unwrap_or(false);
    let good: Vec<bool> = levels.iter().map(fits).collect();
    let core = core_kappa(&h.basis);
    let mut taken = good.clone();
    let mut reassigned: Vec<(usize, Label)> = Vec::new();
    let mut pairs = Vec::new();
    for (j, lv) in levels.iter().enumerate() {
        let label = lv.label.expect("continuation labels every level");
        if good[j] || label.kappa.value().abs() > core + 1e-9 {
            continue;
        }
        let e = expected(&label);
        let candidates: Vec<usize> =
            (0..levels.len()).filter(|&k| !taken[k] && (levels[k].energy - e).abs() <= tol).collect();
        match candidates.as_slice() {
            [k] => {
                taken[*k] = true;
                reassigned.push((*k, label));
            }
            _ => pairs.push((j, candidates.first().copied().unwrap_or(j), 0.0)),
        }
    }
    if !pairs.is_empty() {
        return Err(Error::LabelingAmbiguity { pairs });
    }
    for lv in levels.iter_mut().zip(&good).filter(|(_, g)| !**g).map(|(l, _)| l) {
        lv.label = None;
    }
    for (k, label) in reassigned {
        levels[k].label = Some(label);
    }
    levels.retain(|l| l.label.is_some());
    Ok(levels)
}

fn bare_label(basis: &BareBasis, i: usize, detuning: f64) -> Label {
    let (m, dn) = basis.state(i);
    let m_tilde = if detuning < 0.0 { -m } else { m };
    Label::new(m_tilde, basis.kappa(m, dn))
}

fn bare_levels(h: &DressedHamiltonian, detuning: f64) -> Vec<DressedLevel> {
    let n = h.basis.dim();
    let mut levels: Vec<DressedLevel> = (0..n)
        .map(|i| DressedLevel {
            energy: h.matrix[(i, i)].re,
            vector: DVector::from_fn(n, |r, _| C64::new(if r == i { 1.0 } else { 0.0 }, 0.0)),
            label: Some(bare_label(&h.basis, i, detuning)),
            confidence: 1.0,
        })
        .collect();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.label.cmp(&b.label)));
    levels
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Seed {
    Bare,
    Rwa,
}

/// Interior levels whose overlaps gate the ramp; edge manifolds suffer
/// truncation artefacts and are carried along unchecked.
fn is_checked(basis: &BareBasis, label: &Label) -> bool {
    label.kappa.value().abs() <= core_kappa(basis) + 1e-9
}

struct RampState {
    vectors: CMatrix,
    energies: Vec<f64>,
    labels: Vec<Label>,
    confidence: Vec<f64>,
}

fn seed_state(h: &DressedHamiltonian, seed: Seed) -> Result<(CMatrix, RampState)> {
    let basis = &h.basis;
    let n = basis.dim();
    let detuning = h.zeeman.abs() - h.nu_rf;
    match seed {
        Seed::Bare => {
            let start = CMatrix::from_fn(n, n, |i, j| if i == j { h.matrix[(i, i)] } else { C64::new(0.0, 0.0) });
            let state = RampState {
                vectors: CMatrix::identity(n, n),
                energies: (0..n).map(|i| h.matrix[(i, i)].re).collect(),
                labels: (0..n).map(|i| bare_label(basis, i, detuning)).collect(),
                confidence: vec![1.0; n],
            };
            Ok((start, state))
        }
        Seed::Rwa => {
            let start = CMatrix::from_fn(n, n, |i, j| {
                if basis.kappa_at(i) == basis.kappa_at(j) { h.matrix[(i, j)] } else { C64::new(0.0, 0.0) }
            });
            let mut vectors = CMatrix::zeros(n, n);
            let mut energies = vec![0.0; n];
            let mut labels = vec![Label::new(HalfInt::ZERO, HalfInt::ZERO); n];
            let mut kappas: Vec<HalfInt> = (0..n).map(|i| basis.kappa_at(i)).collect();
            kappas.sort();
            kappas.dedup();
            let mut col = 0;
            for kappa in kappas {
                let idx = basis.manifold(kappa);
                let sub = CMatrix::from_fn(idx.len(), idx.len(), |r, c| start[(idx[r], idx[c])]);
                let e = hermitian_eig(&sub)?;
                // m̃ sgn(μ) ascends with energy; for partial manifolds keep
                // the bare m values present.
                let mut ms: Vec<HalfInt> = idx.iter().map(|&i| basis.state(i).0).collect();
                ms.sort();
                if basis.sign < 0 {
                    ms.reverse();
                }
                for k in 0..idx.len() {
                    for (r, &i) in idx.iter().enumerate() {
                        vectors[(i, col)] = e.vectors[(r, k)];
                    }
                    energies[col] = e.values[k];
                    labels[col] = Label::new(ms[k], kappa);
                    col += 1;
                }
            }
            let state = RampState { vectors, energies, labels, confidence: vec![1.0; n] };
            Ok((start, state))
        }
    }
}

/// Greedy maximum-overlap permutation: `result[j]` is the new column
/// assigned to previous column `j`, with its overlap magnitude.
pub(crate) fn greedy_match(previous: &CMatrix, next: &CMatrix) -> Vec<(usize, f64)> {
    let n = previous.ncols();
    let overlap = previous.adjoint() * next;
    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(n * 4);
    for j in 0..n {
        for k in 0..n {
            let v = overlap[(j, k)].norm();
            if v > 1e-3 {
                entries.push((v, j, k));
            }
        }
    }
    entries.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut result = vec![(usize::MAX, 0.0); n];
    let mut taken = vec![false; n];
    for (v, j, k) in entries {
        if result[j].0 == usize::MAX && !taken[k] {
            result[j] = (k, v);
            taken[k] = true;
        }
    }
    let mut free = (0..n).filter(|&k| !taken[k]);
    for j in 0..n {
        if result[j].0 == usize::MAX {
            let k = free.next().expect("as many free columns as unmatched rows");
            result[j] = (k, overlap[(j, k)].norm());
        }
    }
    result
}

fn continuation(h: &DressedHamiltonian, seed: Seed, options: LabelOptions) -> Result<Vec<DressedLevel>> {
    let (start, mut state) = seed_state(h, seed)?;
    let delta = &h.matrix - &start;
    let basis = &h.basis;
    let min_step = 1.0 / options.max_steps.max(options.n_steps) as f64;
    let coarse = 1.0 / options.n_steps as f64;
    let mut lambda = 0.0;
    let mut step = coarse;
    while lambda < 1.0 {
        let target = if lambda + step >= 1.0 - 1e-12 { 1.0 } else { lambda + step };
        let m = if target == 1.0 { h.matrix.clone() } else { &start + &delta * C64::new(target, 0.0) };
        let e = hermitian_eig(&m)?;
        let matched = greedy_match(&state.vectors, &e.vectors);
        let worst = (0..matched.len())
            .filter(|&j| is_checked(basis, &state.labels[j]))
            .map(|j| matched[j].1)
            .fold(1.0, f64::min);
        let at_floor = step <= min_step * (1.0 + 1e-9);
        if worst < options.step_confidence && !at_floor {
            step = (step * 0.5).max(min_step);
            continue;
        }
        if worst < options.min_confidence {
            let pairs = ambiguous_pairs(basis, &state, &matched, &e.vectors, options.min_confidence);
            return Err(Error::LabelingAmbiguity { pairs });
        }
        let n = matched.len();
        let mut vectors = CMatrix::zeros(n, n);
        for (j, &(k, ov)) in matched.iter().enumerate() {
            vectors.set_column(j, &e.vectors.column(k));
            state.energies[j] = e.values[k];
            state.confidence[j] = state.confidence[j].min(ov);
        }
        state.vectors = vectors;
        lambda = target;
        // Grow the step back once the ramp runs smoothly.
        if worst > 0.97 {
            step = (step * 2.0).min(coarse);
        }
    }
    let n = basis.dim();
    let mut levels: Vec<DressedLevel> = (0..n)
        .map(|j| DressedLevel {
            energy: state.energies[j],
            vector: state.vectors.column(j).into_owned(),
            label: Some(state.labels[j]),
            confidence: state.confidence[j],
        })
        .collect();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.label.cmp(&b.label)));
    Ok(levels)
}

fn ambiguous_pairs(
    basis: &BareBasis,
    state: &RampState,
    matched: &[(usize, f64)],
    next: &CMatrix,
    min_confidence: f64,
) -> Vec<(usize, usize, f64)> {
    let overlap = state.vectors.adjoint() * next;
    let mut pairs = Vec::new();
    for (j, &(k, ov)) in matched.iter().enumerate() {
        if ov >= min_confidence || !is_checked(basis, &state.labels[j]) {
            continue;
        }
        // The competing previous level with the largest weight on column k.
        let rival = (0..matched.len())
            .filter(|&r| r != j)
            .max_by(|&a, &b| overlap[(a, k)].norm().total_cmp(&overlap[(b, k)].norm()))
            .unwrap_or(j);
        pairs.push((j, rival, ov));
    }
    pairs
}

/// Eigenstates of the RWA problem: each complete κ-manifold diagonalized
/// on its own, labeled by the energy ordering of m̃·sgn(μ), ascending.
pub fn rwa_levels(h: &DressedHamiltonian) -> Result<Vec<DressedLevel>> {
    let (_, state) = seed_state(h, Seed::Rwa)?;
    let mut levels: Vec<DressedLevel> = (0..h.basis.dim())
        .filter(|&j| h.basis.is_full(state.labels[j].kappa))
        .map(|j| DressedLevel {
            energy: state.energies[j],
            vector: state.vectors.column(j).into_owned(),
            label: Some(state.labels[j]),
            confidence: 1.0,
        })
        .collect();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.label.cmp(&b.label)));
    Ok(levels)
}

/// The level carrying `label`.
pub fn find_label(levels: &[DressedLevel], label: Label) -> Option<&DressedLevel> {
    levels.iter().find(|l| l.label == Some(label))
}

/// Energies of the κ = `kappa` manifold ordered by m̃ ascending.
pub fn manifold_energies(levels: &[DressedLevel], kappa: HalfInt) -> Vec<(HalfInt, f64)> {
    let mut out: Vec<(HalfInt, f64)> = levels
        .iter()
        .filter_map(|l| l.label.filter(|x| x.kappa == kappa).map(|x| (x.m_tilde, l.energy)))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Mean level spacing per unit m̃ inside the κ = `kappa` manifold.
pub fn intra_manifold_spacing(levels: &[DressedLevel], kappa: HalfInt) -> Option<f64> {
    let e = manifold_energies(levels, kappa);
    if e.len() < 2 {
        return None;
    }
    let (m0, e0) = e[0];
    let (m1, e1) = e[e.len() - 1];
    Some((e1 - e0) / (m1 - m0).value())
}

/// Dressed eigenvalues reduced mod ν_RF next to the oracle quasi-energies.
#[derive(Clone, Debug)]
pub struct OracleCheck {
    /// Largest circular distance between the two sets (Hz).
    pub mismatch: f64,
    pub dn_max: i32,
    pub dressed: Vec<f64>,
    pub oracle: Vec<f64>,
}

/// Compares the dressed spectrum at the given local fields with
/// [`floquet_oracle`], raising dN_max until the dressed values settle.
pub fn compare_with_oracle(
    b_static: &Vec3,
    b_rf: &crate::magnetostatics::CVec3,
    nu_rf: f64,
    atom: &Atom,
    options: crate::dressed_hamiltonian::BuildOptions,
) -> Result<OracleCheck> {
    let oracle = floquet_oracle(b_static, b_rf, nu_rf, atom)?;
    let frame = decompose(b_static, b_rf)?;
    // Window of width ν whose edge sits in the widest oracle gap.
    let n = oracle.len();
    let (mut best_gap, mut edge) = (nu_rf - oracle[n - 1] + oracle[0], 0.5 * (oracle[n - 1] + nu_rf + oracle[0]));
    for i in 0..n - 1 {
        let g = oracle[i + 1] - oracle[i];
        if g > best_gap {
            best_gap = g;
            edge = 0.5 * (oracle[i] + oracle[i + 1]);
        }
    }
    let lo = wrap(edge, nu_rf) - nu_rf;
    let window = |dn: i32| -> Result<Vec<f64>> {
        let basis = BareBasis::for_atom(atom, dn)?;
        let h = crate::dressed_hamiltonian::build_full_with(&frame, nu_rf, atom, &basis, options)?;
        let e = hermitian_eig(&h.matrix)?;
        // One representative per quasi-energy class: the states in the window
        // closest to ΔN = 0, which excludes truncation-edge artefacts.
        let mut inside: Vec<(f64, f64)> = (0..e.values.len())
            .filter(|&k| e.values[k] >= lo && e.values[k] < lo + nu_rf)
            .map(|k| {
                let v = e.vectors.column(k);
                let spread = (0..v.len()).map(|i| v[i].norm_sqr() * basis.state(i).1.abs() as f64).sum::<f64>();
                (spread, e.values[k])
            })
            .collect();
        inside.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut vals: Vec<f64> = inside.into_iter().take(atom.spin.dim()).map(|x| x.1).collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        Ok(vals)
    };
    let dn_limit = ((1024 / atom.spin.dim()) as i32 - 1) / 2;
    let mut dn = 8.min(dn_limit);
    let mut previous = window(dn)?;
    loop {
        let next_dn = (dn + 4).min(dn_limit);
        let current = window(next_dn)?;
        let settled = current.len() == atom.spin.dim()
            && current.len() == previous.len()
            && current.iter().zip(&previous).all(|(a, b)| (a - b).abs() <= 1e-10 * nu_rf);
        dn = next_dn;
        previous = current;
        if settled || dn == dn_limit {
            break;
        }
    }
    let mut dressed: Vec<f64> = previous.iter().map(|&e| wrap(e, nu_rf)).collect();
    dressed.sort_by(|a, b| a.total_cmp(b));
    Ok(OracleCheck {
        mismatch: circular_mismatch(&dressed, &oracle, nu_rf),
        dn_max: dn,
        dressed,
        oracle,
    })
}
