//! Quasi-energies from direct time evolution over one drive period.
//!
//! This path integrates the Schrödinger equation in the laboratory frame
//! with a fixed-step fourth-order Runge-Kutta scheme and never touches the
//! photon-number basis, so it checks the dressed diagonalization
//! independently.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::local_frame::Atom;
use crate::magnetostatics::{CVec3, Vec3};
use crate::spin_algebra::{hermitian_eig, spin_set, CMatrix};

/// Step control for [`floquet_oracle`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub initial_steps: usize,
    pub max_steps: usize,
    /// Allowed ‖U†U − 1‖ (max element).
    pub unitarity_tol: f64,
    /// Quasi-energy change between successive step doublings, relative to ν_RF.
    pub convergence_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            initial_steps: 256,
            max_steps: 1 << 20,
            unitarity_tol: 1e-9,
            convergence_tol: 1e-10,
        }
    }
}

/// Row-major square matrix small enough that hand-written loops beat
/// general-purpose kernels.
#[derive(Clone)]
struct Small {
    n: usize,
    a: Vec<C64>,
}

impl Small {
    fn identity(n: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = C64::new(1.0, 0.0);
        }
        Small { n, a }
    }

    fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        Small { n, a: (0..n * n).map(|k| m[(k / n, k % n)]).collect() }
    }

    fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| self.a[i * self.n + j])
    }

    /// out = −i·2π·H·(u + c·k)
    fn deriv(h: &Small, u: &Small, k: Option<(&Small, f64)>, out: &mut Small, tmp: &mut Small) {
        let n = h.n;
        match k {
            Some((k, c)) => {
                for (t, (x, y)) in tmp.a.iter_mut().zip(u.a.iter().zip(&k.a)) {
                    *t = x + y * c;
                }
            }
            None => tmp.a.copy_from_slice(&u.a),
        }
        let f = C64::new(0.0, -2.0 * PI);
        for i in 0..n {
            for j in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for l in 0..n {
                    s += h.a[i * n + l] * tmp.a[l * n + j];
                }
                out.a[i * n + j] = s * f;
            }
        }
    }
}

struct Drive {
    fx: Small,
    fy: Small,
    fz: Small,
    /// μ/h (Hz/T).
    mu_h: f64,
    b_static: Vec3,
    b_rf: CVec3,
    omega: f64,
}

impl Drive {
    /// H(t) in Hz: (μ/h)(B_S + Re[B e^{iωt}])·F.
    fn hamiltonian(&self, t: f64, out: &mut Small) {
        let e = C64::from_polar(1.0, self.omega * t);
        let b: [f64; 3] = std::array::from_fn(|k| self.mu_h * (self.b_static[k] + (self.b_rf[k] * e).re));
        for (idx, o) in out.a.iter_mut().enumerate() {
            *o = self.fx.a[idx] * b[0] + self.fy.a[idx] * b[1] + self.fz.a[idx] * b[2];
        }
    }
}

/// One-period propagator U(T) with `steps` RK4 steps.
pub fn monodromy(b_static: &Vec3, b_rf: &CVec3, nu_rf: f64, atom: &Atom, steps: usize) -> Result<CMatrix> {
    if !(nu_rf > 0.0 && nu_rf.is_finite()) || steps == 0 {
        return Err(Error::InvalidArgument("oracle needs ν_RF > 0 and at least one step".into()));
    }
    let s = spin_set(atom.spin);
    let drive = Drive {
        fx: Small::from_matrix(&s.fx),
        fy: Small::from_matrix(&s.fy),
        fz: Small::from_matrix(&s.fz),
        mu_h: atom.mu_over_h(),
        b_static: *b_static,
        b_rf: *b_rf,
        omega: 2.0 * PI * nu_rf,
    };
    let n = s.dim();
    let period = 1.0 / nu_rf;
    let dt = period / steps as f64;
    let mut u = Small::identity(n);
    let zero = Small { n, a: vec![C64::new(0.0, 0.0); n * n] };
    let (mut h0, mut hm, mut h1) = (zero.clone(), zero.clone(), zero.clone());
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero);
    drive.hamiltonian(0.0, &mut h0);
    for step in 0..steps {
        let t = step as f64 * dt;
        drive.hamiltonian(t + 0.5 * dt, &mut hm);
        drive.hamiltonian(t + dt, &mut h1);
        Small::deriv(&h0, &u, None, &mut k1, &mut tmp);
        Small::deriv(&hm, &u, Some((&k1, 0.5 * dt)), &mut k2, &mut tmp);
        Small::deriv(&hm, &u, Some((&k2, 0.5 * dt)), &mut k3, &mut tmp);
        Small::deriv(&h1, &u, Some((&k3, dt)), &mut k4, &mut tmp);
        for idx in 0..n * n {
            u.a[idx] += (k1.a[idx] + (k2.a[idx] + k3.a[idx]) * 2.0 + k4.a[idx]) * (dt / 6.0);
        }
        std::mem::swap(&mut h0, &mut h1);
    }
    Ok(u.to_matrix())
}

fn unitarity_defect(u: &CMatrix) -> f64 {
    let p = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Eigenvalues of a unitary matrix via the commuting Hermitian pair
/// A = (U + U†)/2, B = (U − U†)/2i.
pub fn unitary_eigenvalues(u: &CMatrix) -> Result<Vec<C64>> {
    let ua = u.adjoint();
    let a = (u + &ua) * C64::new(0.5, 0.0);
    let b = (u - &ua) * C64::new(0.0, -0.5);
    let ea = hermitian_eig(&a)?;
    let n = u.nrows();
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && ea.values[end] - ea.values[end - 1] < 1e-5 {
            end += 1;
        }
        let v = ea.vectors.columns(start, end - start).into_owned();
        let vectors = if end - start > 1 {
            let sub = v.adjoint() * &b * &v;
            let sub = (&sub + sub.adjoint()) * C64::new(0.5, 0.0);
            &v * hermitian_eig(&sub)?.vectors
        } else {
            v
        };
        for c in vectors.column_iter() {
            out.push((c.adjoint() * u * c)[(0, 0)]);
        }
        start = end;
    }
    Ok(out)
}

/// Reduces `x` into [0, ν).
pub fn wrap(x: f64, nu: f64) -> f64 {
    let r = x.rem_euclid(nu);
    if r >= nu { 0.0 } else { r }
}

fn quasi_energies(u: &CMatrix, nu_rf: f64) -> Result<Vec<f64>> {
    let mut q: Vec<f64> = unitary_eigenvalues(u)?
        .into_iter()
        .map(|l| wrap(-l.arg() * nu_rf / (2.0 * PI), nu_rf))
        .collect();
    q.sort_by(|a, b| a.total_cmp(b));
    Ok(q)
}

/// Largest circular distance between two sorted quasi-energy sets.
pub fn circular_mismatch(a: &[f64], b: &[f64], nu: f64) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    // Allow a cyclic relabeling when values straddle the wrap point.
    (0..n.max(1))
        .map(|shift| {
            (0..n)
                .map(|i| {
                    let d = wrap(a[i] - b[(i + shift) % n], nu);
                    d.min(nu - d)
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Floquet quasi-energies in [0, ν_RF), ascending, from direct propagation
/// of H(t) = (μ/h)(B_S + Re[B_rf e^{iωt}])·F over one period.
pub fn floquet_oracle(b_static: &Vec3, b_rf: &CVec3, nu_rf: f64, atom: &Atom) -> Result<Vec<f64>> {
    floquet_oracle_with(b_static, b_rf, nu_rf, atom, OracleOptions::default())
}

pub fn floquet_oracle_with(
    b_static: &Vec3,
    b_rf: &CVec3,
    nu_rf: f64,
    atom: &Atom,
    options: OracleOptions,
) -> Result<Vec<f64>> {
    // Start from a step count that keeps the per-step phase small.
    let mu_h = atom.mu_over_h().abs() * atom.spin.value().max(0.5);
    let scale = mu_h * (b_static.norm() + b_rf.iter().map(|z| z.norm()).sum::<f64>()) / nu_rf;
    let mut steps = options.initial_steps.max(1);
    while (steps as f64) < 20.0 * scale && steps < options.max_steps {
        steps *= 2;
    }
    let mut previous: Option<Vec<f64>> = None;
    let mut defect = f64::INFINITY;
    while steps <= options.max_steps {
        let u = monodromy(b_static, b_rf, nu_rf, atom, steps)?;
        defect = unitarity_defect(&u);
        let q = quasi_energies(&u, nu_rf)?;
        if defect <= options.unitarity_tol {
            if let Some(p) = &previous {
                if circular_mismatch(p, &q, nu_rf) <= options.convergence_tol * nu_rf {
                    return Ok(q);
                }
            }
            previous = Some(q);
        }
        steps *= 2;
    }
    Err(Error::IntegrationFailure { defect, steps: steps / 2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drive_gives_larmor_ladder() {
        let atom = Atom::rb87_f2();
        let nu = 600e3;
        let b = 650e3 / atom.mu_over_h();
        let q = floquet_oracle(&Vec3::new(0.0, 0.0, b), &CVec3::zeros(), nu, &atom).unwrap();
        let mut expect: Vec<f64> = (-2..=2).map(|m| wrap(650e3 * m as f64, nu)).collect();
        expect.sort_by(|a, b| a.total_cmp(b));
        assert!(circular_mismatch(&q, &expect, nu) < 1e-6 * nu, "{q:?} {expect:?}");
    }

    #[test]
    fn unitary_eigenvalues_of_known_matrix() {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from_polar(1.0, 0.3),
            C64::from_polar(1.0, -0.3),
            C64::from_polar(1.0, 0.3),
            C64::from_polar(1.0, 2.0),
        ]));
        let mut got: Vec<f64> = unitary_eigenvalues(&d).unwrap().iter().map(|z| z.arg()).collect();
        got.sort_by(|a, b| a.total_cmp(b));
        let want = [-0.3, 0.3, 0.3, 2.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_mismatch_handles_wrap() {
        assert!(circular_mismatch(&[0.0001, 0.5], &[0.5, 0.9999], 1.0) < 1e-3);
        assert!(circular_mismatch(&[0.1], &[0.2, 0.3], 1.0).is_infinite());
    }
}
