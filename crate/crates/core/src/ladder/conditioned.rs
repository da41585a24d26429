use serde::{Deserialize, Serialize};

use super::renewal::{renewal_function, RenewalTable};
use crate::asymptotics::FSpec;
use crate::error::{Error, Result};
use crate::levy_core::LevyTriplet;
use crate::mc::{map_reduce, path_rng, Collect, Estimate, Moments};
use crate::path_sim::{IncrementSampler, SimConfig, TAG_PATHS};

/// Effective sample sizes below this are flagged.
pub const MIN_ESS: f64 = 100.0;

/// Running minimum, endpoint and exponential functional of a path started at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
  pub min: f64,
  pub end: f64,
  /// Left-endpoint sum of `e^{-α ξ}` over `[0, T]`.
  pub a: f64,
}

/// Summaries of paths `0..n` of the family `(seed, tag)` over `steps` steps.
pub fn path_summaries(sampler: &IncrementSampler, steps: usize, alpha: f64, n: usize, seed: u64, tag: u64) -> Vec<PathSummary> {
  let h = sampler.step();
  map_reduce(
    n,
    || Collect(Vec::new()),
    |i, acc: &mut Collect<PathSummary>| {
      let mut rng = path_rng(seed, tag, i as u64);
      let (mut x, mut min, mut a) = (0.0f64, 0.0f64, 0.0f64);
      for _ in 0..steps {
        a += (-alpha * x).exp() * h;
        x += sampler.sample(&mut rng);
        min = min.min(x);
      }
      acc.0.push(PathSummary { min, end: x, a });
    },
  )
  .0
}

/// Functional of the path up to the horizon whose `Q_x`-expectation is wanted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathFunctional {
  One,
  /// `A_T^α` of the path started at `x`.
  ExpFunctional { alpha: f64 },
  /// `F(e^{scale·x} A_T^α)` of the path started at `x`. With `scale = α` the argument is
  /// `A_T^α(ξ - x)`, the functional of the path seen from its starting point.
  ScaledF { fspec: FSpec, alpha: f64, scale: f64 },
}

impl PathFunctional {
  /// `F(A_T^α(ξ - x))` under `P_x`.
  pub fn recentered(fspec: FSpec, alpha: f64) -> Self {
    PathFunctional::ScaledF { fspec, alpha, scale: alpha }
  }

  fn alpha(&self) -> f64 {
    match *self {
      PathFunctional::One => 1.0,
      PathFunctional::ExpFunctional { alpha } | PathFunctional::ScaledF { alpha, .. } => alpha,
    }
  }

  /// Value for a path started at `x` whose recentred functional is `a0 = A_T^α(ξ - x)`.
  fn eval(&self, x: f64, a0: f64) -> f64 {
    match *self {
      PathFunctional::One => 1.0,
      PathFunctional::ExpFunctional { alpha } => (-alpha * x).exp() * a0,
      PathFunctional::ScaledF { fspec, alpha, scale } => fspec.eval(((scale - alpha) * x).exp() * a0),
    }
  }
}

/// `h`-transform weighted estimate of `Q_x[functional]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEstimate {
  pub x: f64,
  pub horizon: f64,
  pub value: Estimate,
  /// `E_x[V̂(ξ_T) 1{τ_0 > T}] / V̂(x)`, which is 1 for an exact harmonic function.
  pub weight_mean: Estimate,
  /// `(Σw)² / Σw²` of the weights.
  pub ess: f64,
  pub flagged: bool,
}

/// Grid used for renewal tables built on behalf of a caller.
pub fn default_renewal_grid(top: f64) -> Vec<f64> {
  (0..=40).map(|i| top * i as f64 / 40.0).collect()
}

/// Estimates `Q_x[functional]` at horizon `T`, where `Q_x` is the law of `ξ` started at `x > 0`
/// conditioned to stay non-negative. Builds the dual renewal table itself.
pub fn conditioned_expectation(
  triplet: &LevyTriplet,
  x: f64,
  functional: &PathFunctional,
  horizon: f64,
  config: &SimConfig,
) -> Result<WeightedEstimate> {
  let table_cfg = SimConfig { n_paths: config.n_paths.clamp(10_000, 50_000), ..*config };
  let table = renewal_function(&triplet.dual(), &default_renewal_grid((4.0 * x).max(5.0)), &table_cfg)?;
  conditioned_expectation_with_table(triplet, x, functional, horizon, config, &table)
}

/// As [`conditioned_expectation`] with a precomputed renewal table of `dual(triplet)`.
pub fn conditioned_expectation_with_table(
  triplet: &LevyTriplet,
  x: f64,
  functional: &PathFunctional,
  horizon: f64,
  config: &SimConfig,
  dual_table: &RenewalTable,
) -> Result<WeightedEstimate> {
  config.validate()?;
  if !(x > 0.0 && x.is_finite()) {
    return Err(Error::param("x", format!("must be positive, got {x}")));
  }
  let steps = config.steps_to(horizon)?;
  let sampler = IncrementSampler::new(triplet, config.step, config.small_jump_cutoff)?;
  let norm = dual_table.eval(x);
  let paths = path_summaries(&sampler, steps, functional.alpha(), config.n_paths, config.seed, TAG_PATHS);
  let mut weights = Moments::default();
  let mut values = Moments::default();
  for p in &paths {
    let w = if p.min >= -x { dual_table.eval(x + p.end) / norm } else { 0.0 };
    weights.push(w);
    values.push(if w > 0.0 { w * functional.eval(x, p.a) } else { 0.0 });
  }
  let ess = weights.ess();
  Ok(WeightedEstimate {
    x,
    horizon,
    value: values.estimate(),
    weight_mean: weights.estimate(),
    ess,
    flagged: ess < MIN_ESS,
  })
}
