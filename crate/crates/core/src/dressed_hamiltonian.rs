//! Bare photon-number basis |m, ΔN⟩ and the dressed (Floquet) Hamiltonian
//! built over it, together with its single-manifold RWA restriction.
//!
//! All matrix entries are energies divided by h, in Hz.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::local_frame::{Atom, LocalFrame};
use crate::spin_algebra::{spin_set, CMatrix, HalfInt, Spin};

/// Photon-number cutoff used by default (25 manifolds).
pub const DEFAULT_DN_MAX: i32 = 12;

/// Product basis of 2F+1 Zeeman states and ΔN = −dN_max..dN_max.
///
/// Linear index `(ΔN + dN_max)·(2F+1) + k`, with `k` the spin index
/// (m = F − k), so each ΔN occupies a contiguous block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BareBasis {
    pub spin: Spin,
    pub dn_max: i32,
    /// sgn(g_F).
    pub sign: i32,
}

impl BareBasis {
    pub fn new(spin: Spin, dn_max: i32, sign: i32) -> Result<Self> {
        if dn_max < 1 {
            return Err(Error::InvalidArgument(format!("dN_max = {dn_max} must be ≥ 1")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidArgument("sign must be ±1".into()));
        }
        let basis = BareBasis { spin, dn_max, sign };
        if basis.dim() > 1024 {
            return Err(Error::InvalidArgument(format!("basis dimension {} exceeds 1024", basis.dim())));
        }
        Ok(basis)
    }

    pub fn for_atom(atom: &Atom, dn_max: i32) -> Result<Self> {
        Self::new(atom.spin, dn_max, atom.sign())
    }

    pub fn spin_dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn n_blocks(&self) -> usize {
        (2 * self.dn_max + 1) as usize
    }

    pub fn dim(&self) -> usize {
        self.spin_dim() * self.n_blocks()
    }

    pub fn index(&self, m: HalfInt, dn: i32) -> Option<usize> {
        if dn.abs() > self.dn_max {
            return None;
        }
        let k = self.spin.index_of(m)?;
        Some((dn + self.dn_max) as usize * self.spin_dim() + k)
    }

    /// `(m, ΔN)` at linear index `i`.
    pub fn state(&self, i: usize) -> (HalfInt, i32) {
        let d = self.spin_dim();
        (self.spin.m_at(i % d), (i / d) as i32 - self.dn_max)
    }

    pub fn kappa(&self, m: HalfInt, dn: i32) -> HalfInt {
        let m = if self.sign > 0 { m } else { -m };
        HalfInt::from_int(dn) + m
    }

    pub fn kappa_at(&self, i: usize) -> HalfInt {
        let (m, dn) = self.state(i);
        self.kappa(m, dn)
    }

    /// Linear indices of the κ-manifold, in spin order (m descending).
    pub fn manifold(&self, kappa: HalfInt) -> Vec<usize> {
        self.spin
            .m_values()
            .filter_map(|m| {
                let n2 = kappa.twice() - self.sign * m.twice();
                if n2 % 2 != 0 {
                    return None;
                }
                self.index(m, n2 / 2)
            })
            .collect()
    }

    /// Largest |κ| whose manifold is complete.
    pub fn max_full_kappa(&self) -> f64 {
        self.dn_max as f64 - self.spin.value()
    }

    pub fn is_full(&self, kappa: HalfInt) -> bool {
        kappa.value().abs() <= self.max_full_kappa() + 1e-9
    }

    /// The κ values of complete manifolds, ascending.
    pub fn full_kappas(&self) -> Vec<HalfInt> {
        let f2 = self.spin.half_int().twice();
        let top = 2 * self.dn_max - f2;
        (-top..=top)
            .filter(|t| (t - f2).rem_euclid(2) == 0)
            .map(HalfInt::from_twice)
            .collect()
    }
}

/// Knobs that alter the build; used only for checking that the oracles
/// detect deliberate errors.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BuildOptions {
    /// Flip the sign of the counter-rotating spin-flip term.
    pub flip_counter_rotating: bool,
}

/// Dressed Hamiltonian at one point (Hz).
#[derive(Clone, Debug)]
pub struct DressedHamiltonian {
    pub basis: BareBasis,
    pub matrix: CMatrix,
    pub nu_rf: f64,
    /// Signed Zeeman splitting (μ/h)|B_S| (Hz).
    pub zeeman: f64,
    pub frame: LocalFrame,
}

impl DressedHamiltonian {
    /// Static spin-space coupling block C of the ΔN → ΔN+1 transition.
    pub fn coupling_block(&self) -> CMatrix {
        let d = self.basis.spin_dim();
        self.matrix.view((d, 0), (d, d)).into_owned()
    }
}

/// Spin-space operator (μ/2h)(B∥ F_z + B₁ F_x + B₂ F_y) with the given
/// phasor components.
pub(crate) fn coupling_operator(
    atom: &Atom,
    spin: Spin,
    comps: [C64; 3],
    options: BuildOptions,
) -> CMatrix {
    let s = spin_set(spin);
    let half_mu = C64::new(0.5 * atom.mu_over_h(), 0.0);
    let [par, p1, p2] = comps;
    if !options.flip_counter_rotating {
        return (&s.fz * par + &s.fx * p1 + &s.fy * p2) * half_mu;
    }
    // B₁F_x + B₂F_y = ½(B₁ − iB₂)F₊ + ½(B₁ + iB₂)F₋; in the ΔN → ΔN+1
    // block the co-rotating operator is F₋ for g_F > 0.
    let i = C64::i();
    let a_plus = (p1 - i * p2) * 0.5;
    let a_minus = (p1 + i * p2) * 0.5;
    let (a_plus, a_minus) = if atom.sign() > 0 { (-a_plus, a_minus) } else { (a_plus, -a_minus) };
    (&s.fz * par + s.raising() * a_plus + s.lowering() * a_minus) * half_mu
}

/// Builds the full dressed Hamiltonian over `basis`.
///
/// Diagonal: (μ/h)|B_S| m + ν_RF ΔN. Block (ΔN+1, ΔN): C =
/// (μ/2h)(B∥ F_z + B₁ F_x + B₂ F_y); block (ΔN, ΔN+1): C†.
pub fn build_full(frame: &LocalFrame, nu_rf: f64, atom: &Atom, basis: &BareBasis) -> Result<DressedHamiltonian> {
    build_full_with(frame, nu_rf, atom, basis, BuildOptions::default())
}

#[doc(hidden)]
pub fn build_full_with(
    frame: &LocalFrame,
    nu_rf: f64,
    atom: &Atom,
    basis: &BareBasis,
    options: BuildOptions,
) -> Result<DressedHamiltonian> {
    if basis.spin != atom.spin || basis.sign != atom.sign() {
        return Err(Error::InvalidArgument("basis does not match atom".into()));
    }
    if !(nu_rf.is_finite() && nu_rf > 0.0) {
        return Err(Error::InvalidArgument(format!("ν_RF = {nu_rf} must be positive")));
    }
    let comps = [frame.b_par, frame.b_perp1, frame.b_perp2];
    if comps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || !frame.b_static.is_finite() {
        return Err(Error::InvalidArgument("non-finite local field".into()));
    }
    let d = basis.spin_dim();
    let n = basis.dim();
    let zeeman = atom.mu_over_h() * frame.b_static;
    let c = coupling_operator(atom, atom.spin, comps, options);
    let c_adj = c.adjoint();
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        let (m, dn) = basis.state(i);
        h[(i, i)] = C64::new(zeeman * m.value() + nu_rf * dn as f64, 0.0);
    }
    for b in 0..basis.n_blocks() - 1 {
        h.view_mut(((b + 1) * d, b * d), (d, d)).copy_from(&c);
        h.view_mut((b * d, (b + 1) * d), (d, d)).copy_from(&c_adj);
    }
    Ok(DressedHamiltonian {
        basis: basis.clone(),
        matrix: h,
        nu_rf,
        zeeman,
        frame: frame.clone(),
    })
}

/// Restriction of the full matrix to the κ0 manifold, in spin order.
pub fn build_rwa_restriction(full: &DressedHamiltonian, kappa0: HalfInt) -> Result<CMatrix> {
    if !full.basis.is_full(kappa0) {
        return Err(Error::InvalidArgument(format!(
            "κ = {kappa0} outside the complete manifolds (|κ| ≤ {})",
            full.basis.max_full_kappa()
        )));
    }
    let idx = full.basis.manifold(kappa0);
    if idx.len() != full.basis.spin_dim() {
        return Err(Error::InvalidArgument(format!("κ = {kappa0} has the wrong parity for this spin")));
    }
    Ok(CMatrix::from_fn(idx.len(), idx.len(), |r, c| full.matrix[(idx[r], idx[c])]))
}

/// RWA dressed potential m̃·sgn(μ)·√(Δ² + Ω²) (Hz).
pub fn rwa_potential(detuning: f64, rabi: f64, m_tilde: f64, sign_mu: i32) -> f64 {
    m_tilde * sign_mu as f64 * detuning.hypot(rabi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_frame::{decompose, rwa_params};
    use crate::magnetostatics::{CVec3, Vec3};
    use crate::spin_algebra::{hermitian_eigenvalues, max_abs};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn atom(f: f64, g: f64) -> Atom {
        Atom::new(f, g, 1.0e-25).unwrap()
    }

    /// Frame with ν_L = `larmor` (Hz) along ẑ and the given phasor expressed
    /// in Hz of (|μ|/2h)·B.
    fn frame_hz(a: &Atom, larmor: f64, rabi_like: [C64; 3]) -> LocalFrame {
        let k = 2.0 / a.mu_over_h().abs();
        let b = Vec3::new(0.0, 0.0, larmor / a.mu_over_h().abs());
        let p = CVec3::new(rabi_like[1] * k, rabi_like[2] * k, rabi_like[0] * k);
        decompose(&b, &p).unwrap()
    }

    #[test]
    fn basis_counting() {
        let a = Atom::rb87_f2();
        let b = BareBasis::for_atom(&a, 12).unwrap();
        assert_eq!(b.dim(), 125);
        let h = BareBasis::new(Spin::new(0.5).unwrap(), 1, 1).unwrap();
        assert_eq!(h.dim(), 6);
        assert_eq!(b.kappa(HalfInt::from_int(2), -2), HalfInt::ZERO);
        assert!(BareBasis::new(a.spin, 0, 1).is_err());
        for i in 0..b.dim() {
            let (m, dn) = b.state(i);
            assert_eq!(b.index(m, dn), Some(i));
        }
        for k in b.full_kappas() {
            assert_eq!(b.manifold(k).len(), 5);
        }
        assert_eq!(b.full_kappas().len(), 21);
        assert!(b.manifold(HalfInt::from_int(12)).len() < 5);
        let hb = BareBasis::new(Spin::new(0.5).unwrap(), 3, -1).unwrap();
        assert_eq!(hb.full_kappas().first().unwrap().twice(), -5);
        for k in hb.full_kappas() {
            assert_eq!(hb.manifold(k).len(), 2);
        }
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let a = Atom::rb87_f2();
        let f = frame_hz(&a, 650e3, [c(0.0, 0.0); 3]);
        let b = BareBasis::for_atom(&a, 3).unwrap();
        let h = build_full(&f, 600e3, &a, &b).unwrap();
        for i in 0..b.dim() {
            let (m, dn) = b.state(i);
            assert!((h.matrix[(i, i)].re - (650e3 * m.value() + 600e3 * dn as f64)).abs() < 1e-6);
            for j in 0..b.dim() {
                if i != j {
                    assert_eq!(h.matrix[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn rwa_potential_examples() {
        assert!((rwa_potential(50e3, 0.0, 2.0, 1) - 100e3).abs() < 1e-9);
        assert!((rwa_potential(50e3, 100e3, 2.0, 1) - 223.607e3).abs() < 1.0);
        assert!((rwa_potential(0.0, 80e3, 2.0, 1) - 160e3).abs() < 1e-9);
    }

    #[test]
    fn restriction_out_of_range() {
        let a = Atom::rb87_f2();
        let f = frame_hz(&a, 650e3, [c(1e4, 0.0), c(2e4, 0.0), c(0.0, 0.0)]);
        let b = BareBasis::for_atom(&a, 4).unwrap();
        let h = build_full(&f, 600e3, &a, &b).unwrap();
        assert!(build_rwa_restriction(&h, HalfInt::from_int(3)).is_err());
        assert!(build_rwa_restriction(&h, HalfInt::from_int(2)).is_ok());
    }

    fn arb_case() -> impl Strategy<Value = (f64, f64, f64, [C64; 3])> {
        (
            prop_oneof![Just(0.5), Just(1.0), Just(1.5), Just(2.0)],
            prop_oneof![Just(0.5), Just(-0.5), Just(1.0)],
            0.1..2.0f64,
            proptest::array::uniform6(-0.5..0.5f64),
        )
            .prop_map(|(f, g, l, v)| (f, g, l, [c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5])]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hermitian_and_block_tridiagonal((f, g, l, v) in arb_case()) {
            let a = atom(f, g);
            let nu = 1.0;
            let fr = frame_hz(&a, l, v);
            let b = BareBasis::for_atom(&a, 4).unwrap();
            let h = build_full(&fr, nu, &a, &b).unwrap();
            let defect = max_abs(&(&h.matrix - h.matrix.adjoint()));
            prop_assert!(defect <= 1e-12 * max_abs(&h.matrix));
            let d = b.spin_dim();
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    let (mi, ni) = b.state(i);
                    let (mj, nj) = b.state(j);
                    let z = h.matrix[(i, j)];
                    if (ni - nj).abs() > 1 {
                        prop_assert_eq!(z, c(0.0, 0.0));
                    }
                    if ni != nj && z != c(0.0, 0.0) {
                        let dk = (b.kappa(mi, ni) - b.kappa(mj, nj)).twice().abs() / 2;
                        let dm = (mi - mj).twice().abs() / 2;
                        // F_z terms: Δκ = ±1; spin flips: Δκ ∈ {0, 2}.
                        prop_assert!((dm == 0 && dk == 1) || (dm == 1 && (dk == 0 || dk == 2)));
                    }
                }
            }
            let _ = d;
        }

        #[test]
        fn rwa_restriction_is_exact((f, g, l, v) in arb_case(), k0 in -2i32..=2) {
            let a = atom(f, g);
            let nu = 1.0;
            let fr = frame_hz(&a, l, v);
            let b = BareBasis::for_atom(&a, 6).unwrap();
            let h = build_full(&fr, nu, &a, &b).unwrap();
            let kappa = if a.spin.half_int().is_integer() { HalfInt::from_int(k0) } else { HalfInt::from_twice(2 * k0 + 1) };
            let sub = build_rwa_restriction(&h, kappa).unwrap();
            let vals = hermitian_eigenvalues(&sub).unwrap();
            let p = rwa_params(&fr, nu, &a);
            let sgn = a.sign();
            let mut expect: Vec<f64> = a.spin.m_values()
                .map(|mt| kappa.value() * nu + rwa_potential(p.detuning, p.rabi, mt.value(), sgn))
                .collect();
            expect.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let scale = expect.iter().fold(0.0f64, |s, x| s.max(x.abs()));
            for (x, y) in vals.iter().zip(&expect) {
                prop_assert!((x - y).abs() <= 1e-10 * scale, "{} vs {}", x, y);
            }
        }

        #[test]
        fn ladder_shift((f, g, l, v) in arb_case()) {
            let a = atom(f, g);
            let nu = 1.0;
            let fr = frame_hz(&a, l, v);
            let b = BareBasis::for_atom(&a, 5).unwrap();
            let h = build_full(&fr, nu, &a, &b).unwrap();
            let kappa = if a.spin.half_int().is_integer() { HalfInt::ZERO } else { HalfInt::from_twice(1) };
            let s0 = hermitian_eigenvalues(&build_rwa_restriction(&h, kappa).unwrap()).unwrap();
            let s1 = hermitian_eigenvalues(&build_rwa_restriction(&h, kappa + HalfInt::from_int(1)).unwrap()).unwrap();
            for (x, y) in s0.iter().zip(&s1) {
                prop_assert!((y - x - nu).abs() < 1e-12);
            }
            // The full spectrum is shifted by ν when the basis block offsets shift.
            let mut shifted = h.matrix.clone();
            for i in 0..b.dim() {
                shifted[(i, i)] += c(nu, 0.0);
            }
            let e0 = hermitian_eigenvalues(&h.matrix).unwrap();
            let e1 = hermitian_eigenvalues(&shifted).unwrap();
            for (x, y) in e0.iter().zip(&e1) {
                prop_assert!((y - x - nu).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn parallel_only_commutes_with_fz() {
        let a = Atom::rb87_f2();
        let f = frame_hz(&a, 650e3, [c(3e4, 1e4), c(0.0, 0.0), c(0.0, 0.0)]);
        let b = BareBasis::for_atom(&a, 4).unwrap();
        let h = build_full(&f, 600e3, &a, &b).unwrap();
        let fz = CMatrix::from_fn(b.dim(), b.dim(), |i, j| {
            if i == j { c(b.state(i).0.value(), 0.0) } else { c(0.0, 0.0) }
        });
        let comm = &h.matrix * &fz - &fz * &h.matrix;
        assert!(max_abs(&comm) <= 1e-12 * max_abs(&h.matrix));
    }

    #[test]
    fn small_parallel_term_is_negligible() {
        let a = Atom::rb87_f2();
        let nu = 600e3;
        // |μ B∥|/h = 1e-3 ν ⇒ (|μ|/2h)|B∥| = 0.5e-3 ν.
        let with = frame_hz(&a, 650e3, [c(0.5e-3 * nu, 0.0), c(60e3, 0.0), c(0.0, 0.0)]);
        let without = frame_hz(&a, 650e3, [c(0.0, 0.0), c(60e3, 0.0), c(0.0, 0.0)]);
        let b = BareBasis::for_atom(&a, 10).unwrap();
        let e1 = hermitian_eigenvalues(&build_full(&with, nu, &a, &b).unwrap().matrix).unwrap();
        let e0 = hermitian_eigenvalues(&build_full(&without, nu, &a, &b).unwrap().matrix).unwrap();
        let worst = e1.iter().zip(&e0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-5 * nu, "{worst}");
    }
}
