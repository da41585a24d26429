use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{Error, Result};
use crate::levy_core::{JumpLaw, JumpMeasure, LevyTriplet, TemperedStable};
use crate::quadrature::{self, Tolerance};

/// Variance share replaced by the Gaussian small-jump approximation when no cutoff is given.
pub const SMALL_JUMP_VARIANCE_FRACTION: f64 = 1e-6;
/// Ceiling on the simulated large-jump intensity per unit time.
pub const MAX_LARGE_JUMP_RATE: f64 = 1e3;

/// How a tempered stable measure was split into simulated jumps and a Gaussian remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallJumpInfo {
  pub cutoff: f64,
  /// Variance per unit time carried by the replaced jumps.
  pub replaced_variance: f64,
  /// `replaced_variance` over the total variance of `ξ(1)`.
  pub replaced_fraction: f64,
  pub large_jump_rate: f64,
  /// Set when the intensity ceiling forced a cutoff above the variance rule.
  pub rate_capped: bool,
}

#[derive(Debug, Clone, Copy)]
enum SizeSampler {
  Point(f64),
  TwoSided { p_up: f64, up: Exp<f64>, down: Exp<f64> },
  Gaussian { mean: f64, std: f64 },
  /// Jumps above `eps` of a tempered stable side, in absolute value.
  TemperedTail { sign: f64, alpha: f64, eps: f64, lam: f64, tilt: Exp<f64> },
}

impl SizeSampler {
  fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
    match *self {
      SizeSampler::Point(h) => h,
      SizeSampler::TwoSided { p_up, up, down } => {
        if rng.random::<f64>() < p_up {
          up.sample(rng)
        } else {
          -down.sample(rng)
        }
      }
      SizeSampler::Gaussian { mean, std } => mean + std * rng.sample::<f64, _>(StandardNormal),
      SizeSampler::TemperedTail { sign, alpha, eps, lam, tilt } => {
        let x = if lam * eps < 1.0 {
          // Pareto proposal, exponential acceptance
          loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let x = eps * u.powf(-1.0 / alpha);
            if rng.random::<f64>() < (-lam * (x - eps)).exp() {
              break x;
            }
          }
        } else {
          // shifted exponential proposal, power-law acceptance
          loop {
            let x = eps + tilt.sample(rng);
            if rng.random::<f64>() < (x / eps).powf(-1.0 - alpha) {
              break x;
            }
          }
        };
        sign * x
      }
    }
  }
}

/// Exact sampler of the increment `ξ(t + h) - ξ(t)` (up to the small-jump approximation).
#[derive(Debug, Clone)]
pub struct IncrementSampler {
  step: f64,
  /// Deterministic part per step, including jump compensation.
  shift: f64,
  gauss_sd: f64,
  jump_count: Option<Poisson<f64>>,
  sizes: Option<SizeSampler>,
  small_jumps: Option<SmallJumpInfo>,
}

impl IncrementSampler {
  pub fn new(triplet: &LevyTriplet, step: f64, small_jump_cutoff: Option<f64>) -> Result<Self> {
    triplet.validate()?;
    if !(step > 0.0 && step.is_finite()) {
      return Err(Error::param("step", format!("must be finite and positive, got {step}")));
    }
    let mut shift = -triplet.drift_a * step;
    let mut var_rate = triplet.sigma * triplet.sigma;
    let mut jump_rate = 0.0;
    let mut sizes = None;
    let mut small_jumps = None;
    match triplet.jumps {
      JumpMeasure::Zero => {}
      JumpMeasure::CompoundPoisson { rate, law } => {
        if rate > 0.0 {
          let (sampler, mean) = match law {
            JumpLaw::PointMass { at } => (SizeSampler::Point(at), at),
            JumpLaw::Gaussian { mean, std } => (SizeSampler::Gaussian { mean, std }, mean),
            JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => (
              SizeSampler::TwoSided {
                p_up,
                up: Exp::new(eta_up).map_err(|e| Error::param("eta_up", e.to_string()))?,
                down: Exp::new(eta_down).map_err(|e| Error::param("eta_down", e.to_string()))?,
              },
              p_up / eta_up - (1.0 - p_up) / eta_down,
            ),
          };
          jump_rate = rate;
          shift -= rate * mean * step;
          sizes = Some(sampler);
        }
      }
      JumpMeasure::TemperedStable(ts) => {
        let total_var = var_rate + ts_moment_total(&ts, 2.0);
        let info = small_jump_split(&ts, total_var, small_jump_cutoff)?;
        var_rate += info.replaced_variance;
        jump_rate = info.large_jump_rate;
        shift -= ts.side.sign() * ts_tail_moment(&ts, info.cutoff, 1.0)? * step;
        sizes = Some(SizeSampler::TemperedTail {
          sign: ts.side.sign(),
          alpha: ts.stability,
          eps: info.cutoff,
          lam: ts.tempering,
          tilt: Exp::new(ts.tempering).map_err(|e| Error::param("tempering", e.to_string()))?,
        });
        small_jumps = Some(info);
      }
    }
    let jump_count = if jump_rate > 0.0 {
      Some(Poisson::new(jump_rate * step).map_err(|e| Error::param("jump rate", e.to_string()))?)
    } else {
      None
    };
    Ok(Self { step, shift, gauss_sd: (var_rate * step).sqrt(), jump_count, sizes, small_jumps })
  }

  pub fn step(&self) -> f64 {
    self.step
  }

  pub fn small_jumps(&self) -> Option<SmallJumpInfo> {
    self.small_jumps
  }

  #[inline]
  pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
    let mut x = self.shift;
    if self.gauss_sd > 0.0 {
      x += self.gauss_sd * rng.sample::<f64, _>(StandardNormal);
    }
    if let (Some(count), Some(sizes)) = (&self.jump_count, &self.sizes) {
      let k = count.sample(rng) as u64;
      for _ in 0..k {
        x += sizes.sample(rng);
      }
    }
    x
  }
}

/// `∫_0^∞ y^k ν(dy)` for `k > α` (`c Γ(k-α) λ^{α-k}`).
fn ts_moment_total(ts: &TemperedStable, k: f64) -> f64 {
  ts.scale * gamma(k - ts.stability) * ts.tempering.powf(ts.stability - k)
}

/// `∫_0^ε y^2 ν(dy)`.
fn ts_small_variance(ts: &TemperedStable, eps: f64) -> f64 {
  ts_moment_total(ts, 2.0) * gamma_lr(2.0 - ts.stability, ts.tempering * eps)
}

/// `∫_ε^∞ y^k ν(dy)` by quadrature in `s = ln(y/ε)`.
pub(crate) fn ts_tail_moment(ts: &TemperedStable, eps: f64, k: f64) -> Result<f64> {
  let (alpha, c, lam) = (ts.stability, ts.scale, ts.tempering);
  let f = |s: f64| {
    let y = eps * s.exp();
    let v = c * y.powf(k - alpha) * (-lam * y).exp();
    if v.is_finite() {
      v
    } else {
      0.0
    }
  };
  // beyond this the integrand is below e^{-700}
  let upper = ((700.0 / lam).max(eps * 2.0) / eps).ln().max(1.0);
  quadrature::integrate("tempered stable tail moment", f, 0.0, upper, Tolerance { abs: 1e-12, rel: 1e-12 })
}

fn small_jump_split(ts: &TemperedStable, total_var: f64, cutoff: Option<f64>) -> Result<SmallJumpInfo> {
  let info = |eps: f64, capped: bool| -> Result<SmallJumpInfo> {
    let replaced = ts_small_variance(ts, eps);
    Ok(SmallJumpInfo {
      cutoff: eps,
      replaced_variance: replaced,
      replaced_fraction: replaced / total_var,
      large_jump_rate: ts_tail_moment(ts, eps, 0.0)?,
      rate_capped: capped,
    })
  };
  if let Some(eps) = cutoff {
    return info(eps, false);
  }
  // variance rule: bisection on ln ε
  let target = SMALL_JUMP_VARIANCE_FRACTION * total_var;
  let (mut lo, mut hi) = (-60.0f64, (50.0 / ts.tempering).ln());
  for _ in 0..200 {
    let mid = 0.5 * (lo + hi);
    if ts_small_variance(ts, mid.exp()) > target {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  let eps = lo.exp();
  if ts_tail_moment(ts, eps, 0.0)? <= MAX_LARGE_JUMP_RATE {
    return info(eps, false);
  }
  // intensity ceiling: raise ε until the large-jump rate drops to the cap
  let (mut lo, mut hi) = (eps.ln(), (50.0 / ts.tempering).ln());
  for _ in 0..100 {
    let mid = 0.5 * (lo + hi);
    if ts_tail_moment(ts, mid.exp(), 0.0)? > MAX_LARGE_JUMP_RATE {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  info(hi.exp(), true)
}
