//! Physical constants (CODATA 2018) and fixed ⁸⁵Rb D1 properties.

use std::f64::consts::PI;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054571817e-34;
/// Boltzmann constant (J/K).
pub const KB: f64 = 1.380649e-23;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.8541878128e-12;
/// Speed of light (m/s).
pub const C_LIGHT: f64 = 2.99792458e8;
/// Atomic mass unit (kg).
pub const AMU: f64 = 1.66053906660e-27;

/// ⁸⁵Rb atomic mass (kg), 84.9118 u.
pub const RB85_MASS: f64 = 84.9118 * AMU;
/// ⁸⁵Rb 5S₁/₂ hyperfine ground-state splitting, angular (rad/s).
pub const RB85_GROUND_SPLITTING: f64 = 2.0 * PI * 3.04e9;
