use std::fmt;

use serde::{Deserialize, Serialize};

use super::triplet::LevyTriplet;
use crate::error::{Error, Result};

/// Default threshold below which a derivative of `Φ` is treated as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Decay regime of `E[F(A_t)]`, decided by the signs of `Φ'(0)` and `Φ'(β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
  Supercritical { beta: f64, mean: f64 },
  Critical { beta: f64, phi2_zero: f64 },
  WeaklySubcritical { beta: f64, rho: f64, phi_rho: f64, phi2_rho: f64 },
  IntermediatelySubcritical { beta: f64, phi_beta: f64, phi2_beta: f64 },
  StronglySubcritical { beta: f64, phi_beta: f64, phi1_beta: f64 },
}

impl Regime {
  pub fn name(&self) -> &'static str {
    match self {
      Regime::Supercritical { .. } => "supercritical",
      Regime::Critical { .. } => "critical",
      Regime::WeaklySubcritical { .. } => "weakly_subcritical",
      Regime::IntermediatelySubcritical { .. } => "intermediately_subcritical",
      Regime::StronglySubcritical { .. } => "strongly_subcritical",
    }
  }

  /// 1-based index in the order supercritical, critical, weakly, intermediately, strongly.
  pub fn index(&self) -> u8 {
    match self {
      Regime::Supercritical { .. } => 1,
      Regime::Critical { .. } => 2,
      Regime::WeaklySubcritical { .. } => 3,
      Regime::IntermediatelySubcritical { .. } => 4,
      Regime::StronglySubcritical { .. } => 5,
    }
  }

  pub fn beta(&self) -> f64 {
    match *self {
      Regime::Supercritical { beta, .. }
      | Regime::Critical { beta, .. }
      | Regime::WeaklySubcritical { beta, .. }
      | Regime::IntermediatelySubcritical { beta, .. }
      | Regime::StronglySubcritical { beta, .. } => beta,
    }
  }

  /// Predicted `(rate, exponent)` in `E[F(A_t)] ≍ e^{rate·t} t^{exponent}`.
  pub fn predicted_decay(&self) -> (f64, f64) {
    match *self {
      Regime::Supercritical { .. } => (0.0, 0.0),
      Regime::Critical { .. } => (0.0, -0.5),
      Regime::WeaklySubcritical { phi_rho, .. } => (phi_rho, -1.5),
      Regime::IntermediatelySubcritical { phi_beta, .. } => (phi_beta, -0.5),
      Regime::StronglySubcritical { phi_beta, .. } => (phi_beta, 0.0),
    }
  }

  /// Tilt that removes the exponential rate: `ϱ` in regime 3, `β` in regimes 4–5.
  pub fn default_tilt(&self) -> Option<f64> {
    match *self {
      Regime::Supercritical { .. } | Regime::Critical { .. } => None,
      Regime::WeaklySubcritical { rho, .. } => Some(rho),
      Regime::IntermediatelySubcritical { beta, .. } | Regime::StronglySubcritical { beta, .. } => Some(beta),
    }
  }

  pub fn is_boundary(&self) -> bool {
    matches!(self, Regime::Critical { .. } | Regime::IntermediatelySubcritical { .. })
  }
}

impl fmt::Display for Regime {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match *self {
      Regime::WeaklySubcritical { rho, .. } => write!(f, "weakly_subcritical(ϱ = {rho})"),
      _ => f.write_str(self.name()),
    }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeOptions {
  pub zero_tol: f64,
  /// Declares that a boundary case (`Φ'(0) = 0` or `Φ'(β) = 0`) is intended.
  pub exact_critical: bool,
}

impl Default for RegimeOptions {
  fn default() -> Self {
    Self { zero_tol: DEFAULT_ZERO_TOL, exact_critical: false }
  }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
  pub regime: Regime,
  pub mean: f64,
  pub phi1_beta: f64,
  pub warnings: Vec<String>,
}

fn root_tol(phi2: f64) -> f64 {
  1e-10 * phi2.abs().max(1.0)
}

/// Solves `Φ'(ϱ) = 0` on `(0, β)` by bisection refined with safeguarded Newton steps.
///
/// `Φ'(0)` and `Φ'(β)` must be bounded away from zero by [`DEFAULT_ZERO_TOL`].
pub fn find_rho(triplet: &LevyTriplet, beta: f64) -> Result<f64> {
  find_rho_with_tol(triplet, beta, DEFAULT_ZERO_TOL)
}

pub fn find_rho_with_tol(triplet: &LevyTriplet, beta: f64, zero_tol: f64) -> Result<f64> {
  let dom = triplet.domain();
  if !(dom.interior_contains(0.0) && dom.interior_contains(beta) && beta > 0.0) {
    return Err(Error::RegimeMismatch(format!("[0, {beta}] is not inside the interior of the domain {dom}")));
  }
  let (d0, _) = triplet.laplace_derivatives(0.0)?;
  let (db, _) = triplet.laplace_derivatives(beta)?;
  if !(d0 < -zero_tol && db > zero_tol) {
    let sign = |v: f64| if v > zero_tol { "> 0" } else if v < -zero_tol { "< 0" } else { "= 0" };
    return Err(Error::RegimeMismatch(format!(
      "need Φ'(0) < 0 < Φ'(β); found Φ'(0) = {d0:e} ({}), Φ'({beta}) = {db:e} ({})",
      sign(d0),
      sign(db)
    )));
  }
  let (mut lo, mut hi) = (0.0, beta);
  let mut x = 0.5 * (lo + hi);
  for _ in 0..200 {
    let (d1, d2) = triplet.laplace_derivatives(x)?;
    if d1.abs() <= root_tol(d2) {
      return Ok(x);
    }
    if d1 > 0.0 {
      hi = x;
    } else {
      lo = x;
    }
    let newton = x - d1 / d2;
    x = if d2 > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    if hi - lo < f64::EPSILON * beta {
      let (d1, d2) = triplet.laplace_derivatives(x)?;
      if d1.abs() <= root_tol(d2) {
        return Ok(x);
      }
      break;
    }
  }
  Err(Error::Root(format!("no convergence on [0, {beta}] (bracket [{lo}, {hi}])")))
}

/// Assigns one of the five decay regimes.
pub fn classify_regime(triplet: &LevyTriplet, beta: f64, opts: &RegimeOptions) -> Result<RegimeReport> {
  let dom = triplet.domain();
  if !(beta > 0.0 && dom.interior_contains(beta)) {
    return Err(Error::Domain { lambda: beta, domain: format!("interior of {dom} ∩ (0, ∞)") });
  }
  let tol = opts.zero_tol;
  let (mean, phi2_zero) = triplet.laplace_derivatives(0.0)?;
  let (phi1_beta, phi2_beta) = triplet.laplace_derivatives(beta)?;
  let phi_beta = triplet.laplace_exponent(beta);
  let regime = if mean > tol {
    Regime::Supercritical { beta, mean }
  } else if mean.abs() <= tol {
    Regime::Critical { beta, phi2_zero }
  } else if phi1_beta > tol {
    let rho = find_rho_with_tol(triplet, beta, tol)?;
    let (_, phi2_rho) = triplet.laplace_derivatives(rho)?;
    Regime::WeaklySubcritical { beta, rho, phi_rho: triplet.laplace_exponent(rho), phi2_rho }
  } else if phi1_beta.abs() <= tol {
    Regime::IntermediatelySubcritical { beta, phi_beta, phi2_beta }
  } else {
    Regime::StronglySubcritical { beta, phi_beta, phi1_beta }
  };
  let mut warnings = Vec::new();
  if regime.is_boundary() && !opts.exact_critical {
    warnings.push(format!(
      "boundary regime {} detected at tolerance {tol:e} without an exact-critical declaration",
      regime.name()
    ));
  }
  Ok(RegimeReport { regime, mean, phi1_beta, warnings })
}
