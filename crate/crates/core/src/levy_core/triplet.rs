use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
  Positive,
  Negative,
}

impl Side {
  pub fn flip(self) -> Self {
    match self {
      Side::Positive => Side::Negative,
      Side::Negative => Side::Positive,
    }
  }

  pub fn sign(self) -> f64 {
    match self {
      Side::Positive => 1.0,
      Side::Negative => -1.0,
    }
  }
}

/// Normalised jump-size law of a compound Poisson measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpLaw {
  PointMass { at: f64 },
  /// Up-jumps `Exp(eta_up)` with probability `p_up`, down-jumps `-Exp(eta_down)` otherwise.
  TwoSidedExponential { p_up: f64, eta_up: f64, eta_down: f64 },
  Gaussian { mean: f64, std: f64 },
}

/// One-sided tempered stable density `scale · e^{-tempering·|x|} |x|^{-1-stability}` on `side`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperedStable {
  pub side: Side,
  pub stability: f64,
  pub scale: f64,
  pub tempering: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum JumpMeasure {
  Zero,
  CompoundPoisson { rate: f64, law: JumpLaw },
  TemperedStable(TemperedStable),
}

/// Lévy triplet `(a, σ, ν)` with exponent `Φ(λ) = -aλ + σ²λ²/2 + ∫(e^{λx} - 1 - λx) ν(dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
  pub drift_a: f64,
  pub sigma: f64,
  pub jumps: JumpMeasure,
}

impl JumpMeasure {
  pub fn point_mass(rate: f64, at: f64) -> Self {
    JumpMeasure::CompoundPoisson { rate, law: JumpLaw::PointMass { at } }
  }

  pub fn two_sided_exponential(rate: f64, p_up: f64, eta_up: f64, eta_down: f64) -> Self {
    JumpMeasure::CompoundPoisson { rate, law: JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } }
  }

  pub fn gaussian(rate: f64, mean: f64, std: f64) -> Self {
    JumpMeasure::CompoundPoisson { rate, law: JumpLaw::Gaussian { mean, std } }
  }

  pub fn tempered_stable(side: Side, stability: f64, scale: f64, tempering: f64) -> Self {
    JumpMeasure::TemperedStable(TemperedStable { side, stability, scale, tempering })
  }

  pub fn is_zero(&self) -> bool {
    match self {
      JumpMeasure::Zero => true,
      JumpMeasure::CompoundPoisson { rate, .. } => *rate == 0.0,
      JumpMeasure::TemperedStable(_) => false,
    }
  }

  /// Finite total mass (compound Poisson) as opposed to infinite activity.
  pub fn is_finite_activity(&self) -> bool {
    !matches!(self, JumpMeasure::TemperedStable(_))
  }

  pub fn family_name(&self) -> &'static str {
    match self {
      JumpMeasure::Zero => "zero",
      JumpMeasure::CompoundPoisson { law: JumpLaw::PointMass { .. }, .. } => "compound_poisson/point_mass",
      JumpMeasure::CompoundPoisson { law: JumpLaw::TwoSidedExponential { .. }, .. } => {
        "compound_poisson/two_sided_exponential"
      }
      JumpMeasure::CompoundPoisson { law: JumpLaw::Gaussian { .. }, .. } => "compound_poisson/gaussian",
      JumpMeasure::TemperedStable(_) => "tempered_stable",
    }
  }

  pub(crate) fn violations(&self, prefix: &str, out: &mut Vec<(String, String)>) {
    let mut bad = |field: &str, reason: String| out.push((format!("{prefix}.{field}"), reason));
    match *self {
      JumpMeasure::Zero => {}
      JumpMeasure::CompoundPoisson { rate, law } => {
        if !(rate.is_finite() && rate >= 0.0) {
          bad("rate", format!("must be finite and non-negative, got {rate}"));
        }
        match law {
          JumpLaw::PointMass { at } => {
            if !(at.is_finite() && at != 0.0) {
              bad("at", format!("must be finite and non-zero, got {at}"));
            }
          }
          JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => {
            if !(0.0..=1.0).contains(&p_up) {
              bad("p_up", format!("must lie in [0, 1], got {p_up}"));
            }
            if !(eta_up.is_finite() && eta_up > 0.0) {
              bad("eta_up", format!("must be finite and positive, got {eta_up}"));
            }
            if !(eta_down.is_finite() && eta_down > 0.0) {
              bad("eta_down", format!("must be finite and positive, got {eta_down}"));
            }
          }
          JumpLaw::Gaussian { mean, std } => {
            if !mean.is_finite() {
              bad("mean", format!("must be finite, got {mean}"));
            }
            if !(std.is_finite() && std >= 0.0) {
              bad("std", format!("must be finite and non-negative, got {std}"));
            }
            if std == 0.0 && mean == 0.0 {
              bad("std", "a jump law concentrated at 0 is not a Lévy measure".into());
            }
          }
        }
      }
      JumpMeasure::TemperedStable(ts) => {
        if !(ts.stability > 0.0 && ts.stability < 2.0) {
          bad("stability", format!("must lie in (0, 2), got {}", ts.stability));
        }
        if !(ts.scale.is_finite() && ts.scale > 0.0) {
          bad("scale", format!("must be finite and positive, got {}", ts.scale));
        }
        if !(ts.tempering.is_finite() && ts.tempering > 0.0) {
          bad("tempering", format!("must be finite and positive, got {}", ts.tempering));
        }
      }
    }
  }
}

impl LevyTriplet {
  pub fn new(drift_a: f64, sigma: f64, jumps: JumpMeasure) -> Result<Self> {
    let t = Self { drift_a, sigma, jumps };
    t.validate()?;
    Ok(t)
  }

  /// Brownian motion with drift `-drift_a` and volatility `sigma`.
  pub fn brownian(drift_a: f64, sigma: f64) -> Result<Self> {
    Self::new(drift_a, sigma, JumpMeasure::Zero)
  }

  /// All parameter violations, as `(field, reason)` pairs.
  pub fn violations(&self) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if !self.drift_a.is_finite() {
      out.push(("drift_a".into(), format!("must be finite, got {}", self.drift_a)));
    }
    if !(self.sigma.is_finite() && self.sigma >= 0.0) {
      out.push(("sigma".into(), format!("must be finite and non-negative, got {}", self.sigma)));
    }
    self.jumps.violations("jumps", &mut out);
    out
  }

  pub fn validate(&self) -> Result<()> {
    match self.violations().into_iter().next() {
      None => Ok(()),
      Some((name, reason)) => Err(Error::InvalidParameter { name, reason }),
    }
  }

  /// Short stable hash of the canonical serialisation, used to tag outputs.
  pub fn hash(&self) -> String {
    let canonical = serde_json::to_string(self).expect("triplet serialises");
    let digest = Sha256::digest(canonical.as_bytes());
    hex(&digest[..8])
  }
}

impl fmt::Display for LevyTriplet {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "(a = {}, σ = {}, ν = {})", self.drift_a, self.sigma, self.jumps.family_name())
  }
}
