//! Adiabatic potentials along straight lines and double-well analysis.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{label_all, DressedLevel, DressingSetup, Label};
use crate::dressed_hamiltonian::rwa_potential;
use crate::error::{Error, Result};
use crate::magnetostatics::Vec3;
use crate::spin_algebra::hermitian_eig;

/// Minimum adjacent-point overlap of a tracked branch.
pub const TRACKING_OVERLAP: f64 = 0.9;
/// Number of times a grid interval may be halved while tracking.
const MAX_REFINE_DEPTH: u32 = 12;

/// Points `origin + s·direction` for the listed coordinates `s` (m).
#[derive(Clone, Debug, PartialEq)]
pub struct LineGrid {
    pub origin: Vec3,
    pub direction: Vec3,
    pub coords: Vec<f64>,
}

impl LineGrid {
    pub fn new(origin: Vec3, direction: Vec3, coords: Vec<f64>) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidConfig("line direction must be non-zero".into()));
        }
        if coords.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("line coordinates must increase strictly".into()));
        }
        Ok(LineGrid { origin, direction: direction / norm, coords })
    }

    /// `n` evenly spaced coordinates from `s_min` to `s_max` inclusive.
    pub fn uniform(origin: Vec3, direction: Vec3, s_min: f64, s_max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(s_max > s_min) {
            return Err(Error::InvalidConfig("line grid needs n ≥ 2 and s_max > s_min".into()));
        }
        let h = (s_max - s_min) / (n - 1) as f64;
        let coords = (0..n).map(|i| if i + 1 == n { s_max } else { s_min + h * i as f64 }).collect();
        Self::new(origin, direction, coords)
    }

    pub fn point(&self, s: f64) -> Vec3 {
        self.origin + self.direction * s
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Energy of one dressed branch along a line.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticPotential {
    pub label: Label,
    pub grid: LineGrid,
    /// Absolute dressed energies (Hz).
    pub values: Vec<f64>,
    /// Offset subtracted by [`AdiabaticPotential::relative`]: the curve minimum.
    pub reference_offset: f64,
}

impl AdiabaticPotential {
    fn from_values(label: Label, grid: LineGrid, values: Vec<f64>) -> Self {
        let reference_offset = values.iter().copied().fold(f64::INFINITY, f64::min);
        AdiabaticPotential { label, grid, values, reference_offset }
    }

    pub fn relative(&self) -> Vec<f64> {
        self.values.iter().map(|v| v - self.reference_offset).collect()
    }
}

/// Several branches tracked together along one line.
#[derive(Clone, Debug)]
pub struct TrackedLevels {
    pub labels: Vec<Label>,
    pub grid: LineGrid,
    /// `energies[b][i]`: branch `b` at grid point `i` (Hz).
    pub energies: Vec<Vec<f64>>,
}

struct Front {
    s: f64,
    vectors: DMatrix<C64>,
}

/// Moves the tracked vectors from `front.s` to `s`, halving the interval
/// while any branch's overlap is below the threshold.
fn advance(setup: &DressingSetup, grid: &LineGrid, front: &mut Front, s: f64, depth: u32) -> Result<Vec<f64>> {
    let point = grid.point(s);
    let h = setup.hamiltonian_at(&point)?;
    let e = hermitian_eig(&h.matrix)?;
    let overlap = front.vectors.adjoint() * &e.vectors;
    let nb = front.vectors.ncols();
    let mut picks = Vec::with_capacity(nb);
    let mut worst: f64 = 1.0;
    for b in 0..nb {
        let (k, v) = (0..overlap.ncols())
            .map(|k| (k, overlap[(b, k)].norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        worst = worst.min(v);
        picks.push(k);
    }
    let mut distinct = picks.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let clash = distinct.len() != picks.len();
    if worst < TRACKING_OVERLAP || clash {
        if depth >= MAX_REFINE_DEPTH {
            return Err(Error::Tracking { position: [point.x, point.y, point.z], overlap: worst });
        }
        let mid = 0.5 * (front.s + s);
        advance(setup, grid, front, mid, depth + 1)?;
        return advance(setup, grid, front, s, depth + 1);
    }
    let mut vectors = DMatrix::zeros(front.vectors.nrows(), nb);
    for (b, &k) in picks.iter().enumerate() {
        vectors.set_column(b, &e.vectors.column(k));
    }
    front.vectors = vectors;
    front.s = s;
    Ok(picks.iter().map(|&k| e.values[k]).collect())
}

fn initial_front(setup: &DressingSetup, grid: &LineGrid, labels: &[Label]) -> Result<(Front, Vec<f64>)> {
    let s0 = grid.coords[0];
    let h = setup.hamiltonian_at(&grid.point(s0))?;
    let levels = label_all(&h, setup.labels)?;
    let mut vectors = DMatrix::zeros(h.basis.dim(), labels.len());
    let mut energies = Vec::with_capacity(labels.len());
    for (b, label) in labels.iter().enumerate() {
        if !h.basis.is_full(label.kappa) {
            return Err(Error::InvalidArgument(format!("label {label} is not in a complete manifold")));
        }
        let level: &DressedLevel = levels
            .iter()
            .find(|l| l.label == Some(*label))
            .ok_or_else(|| Error::InvalidArgument(format!("no level with label {label}")))?;
        vectors.set_column(b, &level.vector);
        energies.push(level.energy);
    }
    Ok((Front { s: s0, vectors }, energies))
}

/// Tracks the branches `labels` along `grid` by eigenvector overlap; labels
/// are assigned by continuation at the first grid point.
pub fn track_levels(setup: &DressingSetup, grid: &LineGrid, labels: &[Label]) -> Result<TrackedLevels> {
    if grid.is_empty() || labels.is_empty() {
        return Err(Error::InvalidArgument("tracking needs grid points and labels".into()));
    }
    let (mut front, first) = initial_front(setup, grid, labels)?;
    let mut energies: Vec<Vec<f64>> = first.iter().map(|&e| vec![e]).collect();
    for &s in &grid.coords[1..] {
        let e = advance(setup, grid, &mut front, s, 0)?;
        for (b, v) in e.into_iter().enumerate() {
            energies[b].push(v);
        }
    }
    Ok(TrackedLevels { labels: labels.to_vec(), grid: grid.clone(), energies })
}

/// Full adiabatic potential of the branch `label` along `grid`.
pub fn potential_curve(setup: &DressingSetup, grid: &LineGrid, label: Label) -> Result<AdiabaticPotential> {
    let t = track_levels(setup, grid, &[label])?;
    let values = t.energies.into_iter().next().expect("one branch");
    Ok(AdiabaticPotential::from_values(label, grid.clone(), values))
}

/// RWA potential κν + m̃ sgn(μ) √(Δ² + Ω²) along `grid`.
pub fn rwa_curve(setup: &DressingSetup, grid: &LineGrid, label: Label) -> Result<AdiabaticPotential> {
    let nu = setup.nu_rf();
    let values = grid
        .coords
        .iter()
        .map(|&s| {
            let p = setup.rwa_at(&grid.point(s))?;
            Ok(label.kappa.value() * nu + rwa_potential(p.detuning, p.rabi, label.m_tilde.value(), setup.atom.sign()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AdiabaticPotential::from_values(label, grid.clone(), values))
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], f: [f64; 3]) -> (f64, f64) {
    let (a, b) = (x[0] - x[1], x[2] - x[1]);
    let (fa, fb) = (f[0] - f[1], f[2] - f[1]);
    let denom = a * b * (a - b);
    if denom == 0.0 {
        return (x[1], f[1]);
    }
    // f − f1 = p·t² + q·t in t = x − x1.
    let p = (fa * b - fb * a) / denom;
    let q = (fb * a * a - fa * b * b) / denom;
    if p == 0.0 {
        return (x[1], f[1]);
    }
    let t = -q / (2.0 * p);
    (x[1] + t, f[1] + q * t + p * t * t)
}

/// Locates the minimum of branch `label` along `grid`: discrete scan, then
/// repeated parabolic refinement on shrinking three-point stencils. Returns
/// the position and energy (Hz).
pub fn potential_minimum(setup: &DressingSetup, grid: &LineGrid, label: Label) -> Result<(Vec3, f64)> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument("minimum search needs at least three grid points".into()));
    }
    let t = track_levels(setup, grid, &[label])?;
    let v = &t.energies[0];
    let i = (0..v.len()).fold(0, |best, k| if v[k] < v[best] { k } else { best });
    if i == 0 || i + 1 == v.len() {
        return Ok((grid.point(grid.coords[i]), v[i]));
    }
    let (lo, hi) = (grid.coords[i - 1], grid.coords[i + 1]);
    let (mut s, _) = parabola_vertex([lo, grid.coords[i], hi], [v[i - 1], v[i], v[i + 1]]);
    // Re-seed the tracked vector at the grid minimum and refine locally.
    let sub = LineGrid::new(grid.origin, grid.direction, vec![grid.coords[i]])?;
    let (mut front, _) = initial_front(setup, &sub, &[label])?;
    let mut h = 0.25 * (hi - lo).abs() * 0.5;
    for _ in 0..3 {
        s = s.clamp(lo, hi);
        let mut f = [0.0; 3];
        let xs = [s - h, s, s + h];
        for (k, &x) in xs.iter().enumerate() {
            f[k] = advance(setup, grid, &mut front, x, 0)?[0];
        }
        let (s_new, _) = parabola_vertex(xs, f);
        s = if s_new >= xs[0] && s_new <= xs[2] {
            s_new
        } else {
            // Stencil missed the vertex: keep the best sample.
            xs[(0..3).fold(0, |b, k| if f[k] < f[b] { k } else { b })]
        };
        h *= 0.25;
    }
    let e_at = advance(setup, grid, &mut front, s, 0)?[0];
    Ok((grid.point(s), e_at))
}

/// Double-well characteristics of a potential curve.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleWellMetrics {
    pub minima_positions: [Vec3; 2],
    /// Line coordinates of the minima (m).
    pub minima_coords: [f64; 2],
    /// Distance between the minima (m).
    pub splitting: f64,
    /// Central maximum minus the lower minimum (Hz).
    pub barrier: f64,
    /// Second minimum minus first minimum (Hz).
    pub asymmetry: f64,
}

/// Finds exactly two interior local minima, refines them and the central
/// maximum by three-point parabolas, and reports the well geometry.
pub fn double_well_metrics(pot: &AdiabaticPotential) -> Result<DoubleWellMetrics> {
    let v = &pot.values;
    let x = &pot.grid.coords;
    let n = v.len();
    if n < 3 {
        return Err(Error::Topology { count: 0 });
    }
    let minima: Vec<usize> = (1..n - 1).filter(|&i| v[i] < v[i - 1] && v[i] <= v[i + 1]).collect();
    if minima.len() != 2 {
        return Err(Error::Topology { count: minima.len() });
    }
    let refine = |i: usize| parabola_vertex([x[i - 1], x[i], x[i + 1]], [v[i - 1], v[i], v[i + 1]]);
    let (s1, e1) = refine(minima[0]);
    let (s2, e2) = refine(minima[1]);
    let top = (minima[0]..=minima[1]).fold(minima[0], |b, k| if v[k] > v[b] { k } else { b });
    let (_, e_top) = if top > minima[0] && top < minima[1] { refine(top) } else { (x[top], v[top]) };
    let barrier = (e_top - e1.min(e2)).max(0.0);
    Ok(DoubleWellMetrics {
        minima_positions: [pot.grid.point(s1), pot.grid.point(s2)],
        minima_coords: [s1, s2],
        splitting: (s2 - s1).abs(),
        barrier,
        asymmetry: e2 - e1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_algebra::HalfInt;

    fn analytic(a: f64, b: f64, n: usize) -> AdiabaticPotential {
        let grid = LineGrid::uniform(Vec3::zeros(), Vec3::x(), -2.0 * b, 2.0 * b, n).unwrap();
        let values = grid.coords.iter().map(|&s| a * (s * s - b * b).powi(2)).collect();
        AdiabaticPotential::from_values(Label::new(HalfInt::from_int(2), HalfInt::ZERO), grid, values)
    }

    #[test]
    fn quartic_double_well_recovered() {
        let (a, b) = (3.0, 1.3);
        let m = double_well_metrics(&analytic(a, b, 2000)).unwrap();
        assert!((m.splitting / 2.0 - b).abs() < 1e-4 * b, "{m:?}");
        assert!((m.minima_coords[1] - b).abs() < 1e-4 * b);
        assert!((m.barrier - a * b.powi(4)).abs() < 1e-4 * a * b.powi(4), "{m:?}");
        assert!(m.asymmetry.abs() < 1e-3 * m.barrier);
    }

    #[test]
    fn single_well_is_topology_error() {
        let grid = LineGrid::uniform(Vec3::zeros(), Vec3::x(), -1.0, 1.0, 101).unwrap();
        let values = grid.coords.iter().map(|&s| s * s).collect();
        let pot = AdiabaticPotential::from_values(Label::new(HalfInt::ZERO, HalfInt::ZERO), grid, values);
        assert!(matches!(double_well_metrics(&pot), Err(Error::Topology { count: 1 })));
    }

    #[test]
    fn parabola_vertex_exact_for_quadratics() {
        let f = |x: f64| 2.0 * (x - 0.3).powi(2) - 1.0;
        let (s, e) = parabola_vertex([0.0, 0.5, 1.1], [f(0.0), f(0.5), f(1.1)]);
        assert!((s - 0.3).abs() < 1e-12 && (e + 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(LineGrid::new(Vec3::zeros(), Vec3::zeros(), vec![0.0]).is_err());
        assert!(LineGrid::new(Vec3::zeros(), Vec3::x(), vec![0.0, 0.0]).is_err());
        assert_eq!(LineGrid::uniform(Vec3::zeros(), Vec3::x(), 0.0, 1.0, 5).unwrap().coords[4], 1.0);
    }
}
