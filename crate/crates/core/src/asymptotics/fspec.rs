use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_core::{JumpLaw, JumpMeasure, LevyTriplet};

/// The decreasing test function `F` in `E[F(A_t^α)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FSpec {
  /// `F(z) = 1 - exp(-x0 (c α z)^{-1/α})`, the survival probability of a branching process.
  CbreTail { x0: f64, c: f64, alpha: f64 },
  /// `F(z) = k z^{-β/α}` for `z ≥ 1` and `k z^{-β0/α}` below 1.
  PowerTail {
    k: f64,
    beta: f64,
    alpha: f64,
    #[serde(default)]
    beta0: f64,
  },
}

impl FSpec {
  pub fn cbre_tail(x0: f64, c: f64, alpha: f64) -> Result<Self> {
    let f = FSpec::CbreTail { x0, c, alpha };
    f.validate()?;
    Ok(f)
  }

  pub fn power_tail(k: f64, beta: f64, alpha: f64) -> Result<Self> {
    let f = FSpec::PowerTail { k, beta, alpha, beta0: 0.0 };
    f.validate()?;
    Ok(f)
  }

  pub fn violations(&self) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut positive = |name: &str, v: f64| {
      if !(v.is_finite() && v > 0.0) {
        out.push((name.to_string(), format!("must be finite and positive, got {v}")));
      }
    };
    match *self {
      FSpec::CbreTail { x0, c, alpha } => {
        positive("x0", x0);
        positive("c", c);
        positive("alpha", alpha);
      }
      FSpec::PowerTail { k, beta, alpha, beta0 } => {
        positive("k", k);
        positive("beta", beta);
        positive("alpha", alpha);
        if !(beta0.is_finite() && beta0 >= 0.0 && beta0 <= beta) {
          out.push(("beta0".into(), format!("must lie in [0, beta], got {beta0}")));
        }
      }
    }
    out
  }

  pub fn validate(&self) -> Result<()> {
    match self.violations().into_iter().next() {
      None => Ok(()),
      Some((name, reason)) => Err(Error::InvalidParameter { name, reason }),
    }
  }

  #[inline]
  pub fn eval(&self, z: f64) -> f64 {
    match *self {
      FSpec::CbreTail { x0, c, alpha } => {
        if z <= 0.0 {
          return 1.0;
        }
        -(-x0 * (c * alpha * z).powf(-1.0 / alpha)).exp_m1()
      }
      FSpec::PowerTail { k, beta, alpha, beta0 } => {
        if z >= 1.0 {
          k * z.powf(-beta / alpha)
        } else if beta0 == 0.0 {
          k
        } else {
          k * z.powf(-beta0 / alpha)
        }
      }
    }
  }

  /// The `α` of the exponential functional this `F` is paired with.
  pub fn alpha(&self) -> f64 {
    match *self {
      FSpec::CbreTail { alpha, .. } | FSpec::PowerTail { alpha, .. } => alpha,
    }
  }

  /// `(K, β)` with `F(z) ~ K z^{-β/α}` as `z → ∞`.
  pub fn tail(&self) -> (f64, f64) {
    match *self {
      FSpec::CbreTail { x0, c, alpha } => (x0 * (c * alpha).powf(-1.0 / alpha), 1.0),
      FSpec::PowerTail { k, beta, .. } => (k, beta),
    }
  }

  /// `(C0, β0)` with `F(z) ≤ C0 z^{-β0/α}` on `(0, 1]`.
  pub fn small_z_bound(&self) -> (f64, f64) {
    match *self {
      FSpec::CbreTail { .. } => (1.0, 0.0),
      FSpec::PowerTail { k, beta0, .. } => (k, beta0),
    }
  }

  /// `F(0+)`, infinite when `F` blows up at the origin.
  pub fn sup(&self) -> f64 {
    match *self {
      FSpec::CbreTail { .. } => 1.0,
      FSpec::PowerTail { k, beta0, .. } => {
        if beta0 == 0.0 {
          k
        } else {
          f64::INFINITY
        }
      }
    }
  }

  /// Human-readable formula, including the continuation below `z = 1`.
  pub fn formula(&self) -> String {
    match *self {
      FSpec::CbreTail { x0, c, alpha } => format!("1 - exp(-{x0} ({c}·{alpha}·z)^(-1/{alpha}))"),
      FSpec::PowerTail { k, beta, alpha, beta0 } => {
        format!("{k}·z^(-{beta}/{alpha}) for z >= 1; {k}·z^(-{beta0}/{alpha}) for 0 < z < 1")
      }
    }
  }
}

/// Which of the standing conditions on `(F, ξ, β)` hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
  /// `F` strictly positive and nonincreasing on the check grid.
  pub positive_decreasing: bool,
  /// `F(z) ≤ C0 z^{-β0/α}` on `(0, 1]`.
  pub small_z_bound: bool,
  /// Lipschitz on `[δ, ∞)`, through bounded difference quotients.
  pub local_lipschitz: bool,
  /// `F(z) ≤ K z^{-β/α}` for `z ≥ 1`.
  pub tail_bound: bool,
  /// `F(z) ~ K z^{-β/α}` as `z → ∞`.
  pub tail_equivalence: bool,
  /// `σ > 0` or a jump measure charging non-lattice points.
  pub non_lattice: bool,
  pub tail_constant: f64,
  pub notes: Vec<String>,
}

impl ConditionReport {
  pub fn require(&self, lipschitz: bool, tail_bound: bool, tail_equivalence: bool, non_lattice: bool) -> Result<()> {
    let mut missing = Vec::new();
    if !(self.positive_decreasing && self.small_z_bound) {
      missing.push("F positive, nonincreasing and bounded near 0");
    }
    if lipschitz && !self.local_lipschitz {
      missing.push("local Lipschitz continuity of F");
    }
    if tail_bound && !self.tail_bound {
      missing.push("tail bound F(z) ≤ K z^(-β/α)");
    }
    if tail_equivalence && !self.tail_equivalence {
      missing.push("tail equivalence F(z) ~ K z^(-β/α)");
    }
    if non_lattice && !self.non_lattice {
      missing.push("non-lattice law (σ > 0 or non-lattice jumps)");
    }
    if missing.is_empty() {
      Ok(())
    } else {
      Err(Error::RegimeMismatch(format!("conditions not met: {}", missing.join("; "))))
    }
  }
}

/// `true` unless `σ = 0` and the jumps live on a lattice (or there are none).
pub fn is_non_lattice(triplet: &LevyTriplet) -> bool {
  if triplet.sigma > 0.0 {
    return true;
  }
  match triplet.jumps {
    JumpMeasure::Zero => false,
    JumpMeasure::CompoundPoisson { rate, law } => {
      rate > 0.0
        && match law {
          JumpLaw::PointMass { .. } => false,
          JumpLaw::Gaussian { std, .. } => std > 0.0,
          JumpLaw::TwoSidedExponential { .. } => true,
        }
    }
    JumpMeasure::TemperedStable(_) => true,
  }
}

/// Evaluates the standing conditions on a logarithmic grid.
pub fn check_conditions(fspec: &FSpec, triplet: &LevyTriplet, beta: f64) -> ConditionReport {
  let alpha = fspec.alpha();
  let (k, _) = fspec.tail();
  let (c0, beta0) = fspec.small_z_bound();
  let grid: Vec<f64> = (-120..=160).map(|i| 10f64.powf(i as f64 / 20.0)).collect();
  let vals: Vec<f64> = grid.iter().map(|&z| fspec.eval(z)).collect();
  let mut notes = Vec::new();

  let positive_decreasing = vals.iter().all(|&v| v > 0.0) && vals.windows(2).all(|w| w[1] <= w[0]);
  let small_z_bound = grid
    .iter()
    .zip(&vals)
    .filter(|(&z, _)| z <= 1.0)
    .all(|(&z, &v)| v <= c0 * z.powf(-beta0 / alpha) * (1.0 + 1e-12));
  let delta = 1e-2;
  let max_quotient = grid
    .windows(2)
    .zip(vals.windows(2))
    .filter(|(z, _)| z[0] >= delta)
    .map(|(z, v)| (v[0] - v[1]).abs() / (z[1] - z[0]))
    .fold(0.0f64, f64::max);
  let local_lipschitz = max_quotient.is_finite() && max_quotient < 1e12;
  let tail_bound = grid
    .iter()
    .zip(&vals)
    .filter(|(&z, _)| z >= 1.0)
    .all(|(&z, &v)| v <= k * z.powf(-beta / alpha) * (1.0 + 1e-12));
  let ratio = |z: f64| fspec.eval(z) / (k * z.powf(-beta / alpha));
  let (r6, r8) = (ratio(1e6), ratio(1e8));
  let tail_equivalence = (r8 - 1.0).abs() < 1e-3 && (r8 - 1.0).abs() <= (r6 - 1.0).abs() + 1e-12;
  if !tail_equivalence {
    notes.push(format!("F(z)/(K z^(-β/α)) = {r6:e} at 1e6 and {r8:e} at 1e8 with K = {k}, β = {beta}"));
  }
  let non_lattice = is_non_lattice(triplet);
  if !non_lattice {
    notes.push("σ = 0 and the jump measure is lattice or absent".into());
  }
  ConditionReport {
    positive_decreasing,
    small_z_bound,
    local_lipschitz,
    tail_bound,
    tail_equivalence,
    non_lattice,
    tail_constant: k,
    notes,
  }
}
