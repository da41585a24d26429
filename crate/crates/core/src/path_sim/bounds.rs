use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::path::TAG_PATHS;
use super::sampler::IncrementSampler;
use crate::error::{Error, Result};
use crate::levy_core::LevyTriplet;
use crate::mc::{map_reduce, path_rng, Estimate, Moments};

const TAG_SUP_UNIT: u64 = 0x5355_5031;
const TAG_REVERSED: u64 = 0x5245_5631;

/// Monte Carlo estimates of the two sides of the negative-moment bounds for `A_t^α`
/// and of the time-reversal identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBounds {
  pub t: f64,
  /// `E[(A_t^α)^{-β/α}]`.
  pub neg_moment: Estimate,
  /// `t^{-β/α} E[e^{β S(t)}]`.
  pub sup_bound: Estimate,
  /// `4 t^{-β/α} e^{β(a+|a|)t} E[e^{β ξ(t)}]`.
  pub doob_bound: Estimate,
  /// The same bound with `e^{β(a-|a|)t}`, which fails for large `t` when `a > 0`.
  pub doob_bound_minus: Estimate,
  /// `E[exp(β min_{k ≤ ⌊t⌋-1} ξ(k))] · E[e^{β S(1)}]` from independent path sets.
  pub product_bound: Estimate,
  /// `E[e^{β ξ(t)} (A_t^α(-ξ))^{-β/α}]` on an independent path set.
  pub reversed: Estimate,
}

impl FunctionalBounds {
  pub fn sup_bound_holds(&self, k: f64) -> bool {
    self.neg_moment.at_most(self.sup_bound, k)
  }

  pub fn doob_bound_holds(&self, k: f64) -> bool {
    self.neg_moment.at_most(self.doob_bound, k)
  }

  pub fn product_bound_holds(&self, k: f64) -> bool {
    self.neg_moment.at_most(self.product_bound, k)
  }

  pub fn reversal_holds(&self, k: f64) -> bool {
    self.neg_moment.agrees_with(self.reversed, k)
  }
}

/// Estimates [`FunctionalBounds`] at time `t ≥ 2` (a multiple of the step).
///
/// The reversed side uses right-endpoint sums: reversing a left-endpoint sum of the skeleton
/// gives a right-endpoint sum, so the identity is exact in law for the discretised process.
pub fn functional_bounds(triplet: &LevyTriplet, alpha: f64, beta: f64, t: f64, config: &SimConfig) -> Result<FunctionalBounds> {
  config.validate()?;
  if !(alpha > 0.0) {
    return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
  }
  if !(beta > 0.0 && triplet.domain().interior_contains(beta)) {
    return Err(Error::Domain { lambda: beta, domain: triplet.domain().to_string() });
  }
  if t < 2.0 {
    return Err(Error::param("t", format!("must be at least 2, got {t}")));
  }
  let sampler = IncrementSampler::new(triplet, config.step, config.small_jump_cutoff)?;
  let h = config.step;
  let n = config.steps_to(t)?;
  let unit = config.steps_to(1.0)?;
  let last_k = t.floor() as usize - 1;
  let q = beta / alpha;

  // [A^{-q}, e^{βS(t)}, e^{βξ(t)}, e^{β min_k ξ(k)}]
  let main = map_reduce(
    config.n_paths,
    || vec![Moments::default(); 4],
    |i, acc| {
      let mut rng = path_rng(config.seed, TAG_PATHS, i as u64);
      let (mut x, mut a, mut sup, mut kmin) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
      for j in 0..n {
        a += (-alpha * x).exp() * h;
        x += sampler.sample(&mut rng);
        sup = sup.max(x);
        let k = j + 1;
        if k % unit == 0 && k / unit <= last_k {
          kmin = kmin.min(x);
        }
      }
      acc[0].push(a.powf(-q));
      acc[1].push((beta * sup).exp());
      acc[2].push((beta * x).exp());
      acc[3].push((beta * kmin).exp());
    },
  );
  let sup_unit = map_reduce(config.n_paths, Moments::default, |i, acc| {
    let mut rng = path_rng(config.seed, TAG_SUP_UNIT, i as u64);
    let (mut x, mut sup) = (0.0f64, 0.0f64);
    for _ in 0..unit {
      x += sampler.sample(&mut rng);
      sup = sup.max(x);
    }
    acc.push((beta * sup).exp());
  });
  let reversed = map_reduce(config.n_paths, Moments::default, |i, acc| {
    let mut rng = path_rng(config.seed, TAG_REVERSED, i as u64);
    let (mut x, mut a) = (0.0f64, 0.0f64);
    for _ in 0..n {
      x += sampler.sample(&mut rng);
      a += (alpha * x).exp() * h;
    }
    acc.push((beta * x).exp() * a.powf(-q));
  });

  let tq = t.powf(-q);
  let a = triplet.drift_a;
  let exp_moment = main[2].estimate();
  Ok(FunctionalBounds {
    t,
    neg_moment: main[0].estimate(),
    sup_bound: main[1].estimate().scale(tq),
    doob_bound: exp_moment.scale(4.0 * tq * (beta * (a + a.abs()) * t).exp()),
    doob_bound_minus: exp_moment.scale(4.0 * tq * (beta * (a - a.abs()) * t).exp()),
    product_bound: main[3].estimate().times(sup_unit.estimate()),
    reversed: reversed.estimate(),
  })
}
