//! Dense complex-Hermitian eigensolver: Householder reduction to a real
//! symmetric tridiagonal matrix followed by implicit-shift QL iterations.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{max_abs, CMatrix};
use crate::error::{Error, Result};

/// Largest dimension accepted by the eigensolver.
pub const MAX_DIM: usize = 1024;

/// Relative tolerance on `‖H − H†‖ / ‖H‖` for input validation.
const HERMITIAN_TOL: f64 = 1e-10;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_ITER: usize = 60;

/// Eigenpairs of a Hermitian matrix.
///
/// `values` ascend; column `k` of `vectors` belongs to `values[k]`. Each
/// column is phase-fixed so that its largest-magnitude component (lowest
/// index on ties) is real and positive.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig(h: &CMatrix) -> Result<EigenDecomposition> {
    let n = validate(h)?;
    let mut work = Tridiagonal::reduce(h, true);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql(&mut work.diag, &mut work.off, Some(&mut z))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| work.diag[a].total_cmp(&work.diag[b]));
    let values: Vec<f64> = order.iter().map(|&k| work.diag[k]).collect();

    // X = D·Z, then the reflectors in reverse order.
    let mut x = vec![C64::new(0.0, 0.0); n * n];
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            x[col * n + i] = work.phases[i] * z[k * n + i];
        }
    }
    work.apply_reflectors(&mut x);

    for col in 0..n {
        fix_phase(&mut x[col * n..(col + 1) * n]);
    }
    Ok(EigenDecomposition {
        values,
        vectors: DMatrix::from_vec(n, n, x),
    })
}

/// Eigenvalues only, ascending. Cheaper than [`hermitian_eig`].
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    validate(h)?;
    let mut work = Tridiagonal::reduce(h, false);
    tql(&mut work.diag, &mut work.off, None)?;
    let mut values = work.diag;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn validate(h: &CMatrix) -> Result<usize> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, not square",
            n,
            h.ncols()
        )));
    }
    if n > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension {n} exceeds {MAX_DIM}"
        )));
    }
    let scale = max_abs(h);
    if !scale.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut defect: f64 = 0.0;
    for j in 0..n {
        for i in j..n {
            defect = defect.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix not Hermitian (defect {defect:e}, scale {scale:e})"
        )));
    }
    Ok(n)
}

/// Real symmetric tridiagonal form `D†Q†HQD` together with the data needed
/// to map its eigenvectors back.
struct Tridiagonal {
    n: usize,
    diag: Vec<f64>,
    /// `off[k]` couples `k` and `k+1`; `off[n-1] = 0`.
    off: Vec<f64>,
    phases: Vec<C64>,
    /// Householder vectors; `reflectors[k]` acts on indices `k+1..n`.
    reflectors: Vec<Option<Vec<C64>>>,
}

impl Tridiagonal {
    fn reduce(h: &CMatrix, keep_reflectors: bool) -> Self {
        let n = h.nrows();
        // Work on the Hermitian part so round-off asymmetry never leaks in.
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for i in 0..n {
                a[j * n + i] = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            }
        }
        let mut diag = vec![0.0; n];
        let mut sub = vec![C64::new(0.0, 0.0); n];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
        let mut p = vec![C64::new(0.0, 0.0); n];

        for k in 0..n.saturating_sub(1) {
            diag[k] = a[k * n + k].re;
            let m = n - k - 1;
            let x = &a[k * n + k + 1..k * n + n];
            let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
            if tail == 0.0 {
                sub[k] = x[0];
                if keep_reflectors {
                    reflectors.push(None);
                }
                continue;
            }
            let x0 = x[0];
            let sigma = (x0.norm_sqr() + tail).sqrt();
            let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
            let alpha = -phase * sigma;
            let mut v: Vec<C64> = x.to_vec();
            v[0] -= alpha;
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in v.iter_mut() {
                *z /= vnorm;
            }

            // p = A22·v ; c = v†p ; q = 2p − 2c·v ; A22 −= v q† + q v†.
            let off = k + 1;
            let pp = &mut p[..m];
            pp.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for j in 0..m {
                let vj = v[j];
                let col = &a[(off + j) * n + off..(off + j) * n + n];
                for (pi, aij) in pp.iter_mut().zip(col) {
                    *pi += aij * vj;
                }
            }
            let c: f64 = v.iter().zip(pp.iter()).map(|(vi, pi)| (vi.conj() * pi).re).sum();
            for (pi, vi) in pp.iter_mut().zip(&v) {
                *pi = (*pi - vi * c) * 2.0;
            }
            for j in 0..m {
                let qj = pp[j].conj();
                let vj = v[j].conj();
                let col = &mut a[(off + j) * n + off..(off + j) * n + n];
                for ((aij, vi), qi) in col.iter_mut().zip(&v).zip(pp.iter()) {
                    *aij -= vi * qj + qi * vj;
                }
            }
            sub[k] = alpha;
            if keep_reflectors {
                reflectors.push(Some(v));
            }
        }
        if n > 0 {
            diag[n - 1] = a[(n - 1) * n + n - 1].re;
        }

        let mut phases = vec![C64::new(1.0, 0.0); n];
        let mut off = vec![0.0; n];
        for k in 0..n.saturating_sub(1) {
            let r = sub[k].norm();
            off[k] = r;
            let t = if r > 0.0 { sub[k] / r } else { C64::new(1.0, 0.0) };
            phases[k + 1] = phases[k] * t;
        }
        Tridiagonal {
            n,
            diag,
            off,
            phases,
            reflectors,
        }
    }

    /// Left-multiplies the column-major `n×n` block `x` by `H_0 H_1 ⋯`.
    fn apply_reflectors(&self, x: &mut [C64]) {
        let n = self.n;
        for (k, refl) in self.reflectors.iter().enumerate().rev() {
            let Some(v) = refl else { continue };
            let off = k + 1;
            for col in 0..n {
                let seg = &mut x[col * n + off..col * n + n];
                let s: C64 = v.iter().zip(seg.iter()).map(|(vi, xi)| vi.conj() * xi).sum();
                let s2 = s * 2.0;
                for (xi, vi) in seg.iter_mut().zip(v) {
                    *xi -= vi * s2;
                }
            }
        }
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. Rotations are
/// accumulated into the column-major `z` when given.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITER {
                return Err(Error::NumericFailure {
                    message: format!("QL iteration did not converge for eigenvalue {l}"),
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..(i + 1) * n];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn fix_phase(col: &mut [C64]) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in col.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let rot = col[best].conj() / best_mag;
    for z in col.iter_mut() {
        *z *= rot;
    }
    col[best] = C64::new(col[best].re, 0.0);
}
