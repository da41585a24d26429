//! Independent paths of the law `Q_x` of a process conditioned to stay above `-x`.
//!
//! Weighting unconditioned paths by `h(x + ξ_T) 1{min ξ ≥ -x}` keeps a fraction of order
//! `x/√T` of them, so the effective sample size collapses on long horizons. Here each step is
//! drawn from the Doob kernel `P(Δ) h(y + Δ) / h(y)` by rejection, which gives i.i.d. paths.

use rand::Rng;

use super::renewal::RenewalTable;
use crate::path_sim::IncrementSampler;

/// `A^α` of one conditioned path, recorded at each checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedPath {
  pub a: Vec<f64>,
  pub end: f64,
  /// Proposals per accepted step.
  pub proposals: f64,
}

/// Samples a path from 0 under `Q_x` (killing level `-x`) and records the left-endpoint sum
/// `A^α` after each step count in `checkpoints` (increasing, the last one is the horizon).
///
/// A proposal `Δ` from level `y = x + ξ` is accepted with probability
/// `h(y + Δ) / (h(y) + h(reach))`; renewal functions are subadditive and increasing, so the bound
/// holds whenever `Δ ≤ reach`, and `reach` should sit several increment deviations out.
pub fn conditioned_path<R: Rng + ?Sized>(
  sampler: &IncrementSampler,
  h: &RenewalTable,
  x: f64,
  reach: f64,
  alpha: f64,
  checkpoints: &[usize],
  rng: &mut R,
) -> ConditionedPath {
  let dt = sampler.step();
  let h_reach = h.eval(reach);
  let (mut p, mut acc, mut hp) = (0.0f64, 0.0f64, h.eval(x));
  let mut out = Vec::with_capacity(checkpoints.len());
  let (mut proposals, mut steps) = (0u64, 0usize);
  for &stop in checkpoints {
    while steps < stop {
      acc += (-alpha * p).exp() * dt;
      let bound = hp + h_reach;
      loop {
        proposals += 1;
        let q = p + sampler.sample(rng);
        let hq = h.eval(x + q);
        if hq > 0.0 && rng.random::<f64>() * bound < hq {
          p = q;
          hp = hq;
          break;
        }
      }
      steps += 1;
    }
    out.push(acc);
  }
  ConditionedPath { a: out, end: p, proposals: proposals as f64 / steps.max(1) as f64 }
}
