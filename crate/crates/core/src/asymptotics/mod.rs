//! Decay of `E[F(A_t^α(ξ))]`: expectation curves, decay-law fits and the limiting constants.

mod coefficients;
mod curve;
mod first_passage;
mod fit;
mod fspec;

pub use coefficients::{
  coeff_c_rho, coeff_d2, coeff_d3, coeff_d4, coeff_regime5, Coefficient, CoefficientEstimate, BOUNDED_INCREMENT,
  TAG_COEFF_X, TAG_COEFF_Y,
};
pub use curve::{estimate_expectation_curve, CurvePoint, ExpectationCurve, TAG_CURVE};
pub use first_passage::{
  first_passage_asymptotics, predicted_first_passage_decay, FirstPassageReport, SurvivalPoint, MIN_SURVIVORS,
  TAG_FIRST_PASSAGE,
};
pub use fit::{fit_decay, fit_decay_points, DecayFit, Pin, MIN_FIT_POINTS};
pub use fspec::{check_conditions, is_non_lattice, ConditionReport, FSpec};
