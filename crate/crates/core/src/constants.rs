//! Physical constants (CODATA, SI units).

use std::f64::consts::PI;

/// Vacuum permeability, T·m/A.
pub const MU_0: f64 = 4.0 * PI * 1e-7;

/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.2740100783e-24;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.62607015e-34;

/// Mass of a ⁸⁷Rb atom, kg.
pub const RB87_MASS: f64 = 1.44316060e-25;

/// Landé factor of the ⁸⁷Rb F = 2 ground-state hyperfine level.
pub const RB87_G_F2: f64 = 0.5;

/// Bohr magneton in frequency units, Hz/T.
pub const MU_B_OVER_H: f64 = MU_B / PLANCK;

/// Unified atomic mass unit (kg).
pub const AMU: f64 = 1.66053906660e-27;
