//! Lévy triplets, their Laplace and characteristic exponents, Esscher tilts and regime classification.

mod exponent;
mod regime;
mod triplet;

pub use exponent::ExponentDomain;
pub use regime::{classify_regime, find_rho, find_rho_with_tol, Regime, RegimeOptions, RegimeReport, DEFAULT_ZERO_TOL};
pub use triplet::{JumpLaw, JumpMeasure, LevyTriplet, Side, TemperedStable};
