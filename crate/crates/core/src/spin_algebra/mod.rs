//! Angular-momentum algebra for a single spin-F manifold and the dense
//! Hermitian eigensolver used by every other module.
//!
//! Basis order is fixed: index `k = 0..2F+1` holds `m = F − k`, so `F_z` is
//! diagonal with descending entries.

mod eigen;

pub use eigen::{hermitian_eig, hermitian_eigenvalues, EigenDecomposition};

use std::fmt;
use std::ops::{Add, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;

/// Largest spin accepted by [`spin_matrices`].
pub const MAX_SPIN: f64 = 10.0;

/// An integer or half-integer quantity stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    /// Parses an f64 that must be an exact multiple of 1/2.
    pub fn from_f64(x: f64) -> Option<Self> {
        let twice = 2.0 * x;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 || twice.abs() > 1e6 {
            return None;
        }
        Some(HalfInt(twice.round() as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Spin quantum number F (integer or half-integer, 0 ≤ F ≤ 10).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Spin(HalfInt);

impl Spin {
    pub fn new(f: f64) -> Result<Self> {
        let h = HalfInt::from_f64(f)
            .ok_or_else(|| Error::InvalidArgument(format!("spin {f} is not a multiple of 1/2")))?;
        if h.twice() < 0 || h.value() > MAX_SPIN {
            return Err(Error::InvalidArgument(format!(
                "spin {f} outside [0, {MAX_SPIN}]"
            )));
        }
        Ok(Spin(h))
    }

    pub fn half_int(self) -> HalfInt {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.value()
    }

    pub fn dim(self) -> usize {
        self.0.twice() as usize + 1
    }

    /// Magnetic quantum number stored at basis index `k`.
    pub fn m_at(self, k: usize) -> HalfInt {
        HalfInt::from_twice(self.0.twice() - 2 * k as i32)
    }

    /// Basis index of magnetic quantum number `m`, if `|m| ≤ F` and `F − m` is integral.
    pub fn index_of(self, m: HalfInt) -> Option<usize> {
        let d = self.0.twice() - m.twice();
        if d < 0 || d % 2 != 0 || d > 2 * self.0.twice() {
            return None;
        }
        Some((d / 2) as usize)
    }

    /// Magnetic quantum numbers in basis order (descending).
    pub fn m_values(self) -> impl Iterator<Item = HalfInt> {
        (0..self.dim()).map(move |k| self.m_at(k))
    }
}

/// The three Cartesian spin matrices, dimensionless (units of ħ).
#[derive(Clone, Debug)]
pub struct SpinSet {
    pub spin: Spin,
    pub fx: CMatrix,
    pub fy: CMatrix,
    pub fz: CMatrix,
}

impl SpinSet {
    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    /// Raising operator F₊ = Fx + iFy.
    pub fn raising(&self) -> CMatrix {
        &self.fx + &self.fy * C64::i()
    }

    /// Lowering operator F₋ = Fx − iFy.
    pub fn lowering(&self) -> CMatrix {
        &self.fx - &self.fy * C64::i()
    }

    /// `n·F` for a complex vector `n` given in the (x, y, z) axes of this set.
    pub fn dot(&self, n: [C64; 3]) -> CMatrix {
        &self.fx * n[0] + &self.fy * n[1] + &self.fz * n[2]
    }
}

/// Builds Fx, Fy, Fz for spin `f` from the ladder matrix elements
/// ⟨m±1|F±|m⟩ = √(F(F+1) − m(m±1)).
pub fn spin_matrices(f: f64) -> Result<SpinSet> {
    let spin = Spin::new(f)?;
    Ok(spin_set(spin))
}

pub fn spin_set(spin: Spin) -> SpinSet {
    let dim = spin.dim();
    let ff = spin.value();
    let mut raise = DMatrix::<f64>::zeros(dim, dim);
    for k in 1..dim {
        // F₊ takes index k (m) to k−1 (m+1).
        let m = spin.m_at(k).value();
        raise[(k - 1, k)] = (ff * (ff + 1.0) - m * (m + 1.0)).sqrt();
    }
    let lower = raise.transpose();
    let fx = (&raise + &lower).map(|x| C64::new(0.5 * x, 0.0));
    let fy = (&raise - &lower).map(|x| C64::new(0.0, -0.5 * x));
    let fz = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(spin.m_at(i).value(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    SpinSet { spin, fx, fy, fz }
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}
