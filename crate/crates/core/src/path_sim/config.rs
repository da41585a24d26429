use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time discretisation, sample size and seeding for a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
  pub step: f64,
  /// Final time; a hard cap for adaptive `A_∞` evaluation.
  pub horizon: f64,
  pub n_paths: usize,
  pub seed: u64,
  /// Tempered stable jumps below this size are replaced by a Gaussian; chosen automatically when absent.
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub small_jump_cutoff: Option<f64>,
}

impl SimConfig {
  pub fn new(step: f64, horizon: f64, n_paths: usize, seed: u64) -> Self {
    Self { step, horizon, n_paths, seed, small_jump_cutoff: None }
  }

  pub fn violations(&self) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if !(self.step.is_finite() && self.step > 0.0) {
      out.push(("step".into(), format!("must be finite and positive, got {}", self.step)));
    }
    if !(self.horizon.is_finite() && self.horizon > 0.0) {
      out.push(("horizon".into(), format!("must be finite and positive, got {}", self.horizon)));
    } else if self.step > self.horizon {
      out.push(("step".into(), format!("step {} exceeds horizon {}", self.step, self.horizon)));
    }
    if self.n_paths == 0 {
      out.push(("n_paths".into(), "must be positive".into()));
    }
    if let Some(eps) = self.small_jump_cutoff {
      if !(eps.is_finite() && eps > 0.0) {
        out.push(("small_jump_cutoff".into(), format!("must be finite and positive, got {eps}")));
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

  /// Number of steps to reach `t`, which must be a multiple of the step.
  pub fn steps_to(&self, t: f64) -> Result<usize> {
    steps_to(self.step, t)
  }

  pub fn n_steps(&self) -> Result<usize> {
    self.steps_to(self.horizon)
  }
}

pub(crate) fn steps_to(step: f64, t: f64) -> Result<usize> {
  if !(t >= 0.0 && t.is_finite()) {
    return Err(Error::Grid(format!("time {t} must be finite and non-negative")));
  }
  let k = (t / step).round();
  if (k * step - t).abs() > 1e-9 * t.max(1.0) {
    return Err(Error::Grid(format!("time {t} is not a multiple of the step {step}")));
  }
  Ok(k as usize)
}
