use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_core::LevyTriplet;
use crate::mc::{map_reduce, path_rng, Moments};
use crate::path_sim::{IncrementSampler, SimConfig};

use super::spitzer::mean_ladder_height;

pub const TAG_RENEWAL: u64 = 0x5245_4e31;

/// Truncation controls for the renewal estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalOptions {
  /// Walks are stopped above `level_factor · max(grid)`; the neglected occupation is
  /// roughly a fraction `x / (2 · level)` of `V(x)` for a recurrent walk.
  pub level_factor: f64,
  pub max_steps: u64,
}

impl Default for RenewalOptions {
  fn default() -> Self {
    Self { level_factor: 100.0, max_steps: 20_000_000 }
  }
}

/// Estimated renewal function of the weak ascending ladder heights of the step-δ skeleton,
/// in skeleton units (expected number of ladder points with height ≤ x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalTable {
  pub grid: Vec<f64>,
  pub values: Vec<f64>,
  pub stderr: Vec<f64>,
  /// Least-squares slope of the upper half of the table.
  pub slope: f64,
  pub slope_stderr: f64,
  pub normalization: String,
  pub triplet_hash: String,
  pub step: f64,
  pub n_paths: usize,
  pub seed: u64,
  pub level_cap: f64,
  /// Paths stopped by the step cap before leaving `[0, level_cap]`.
  pub max_step_paths: u64,
}

impl RenewalTable {
  /// `V(x)`: linear interpolation, continued beyond the grid along the fitted slope; 0 for `x < 0`.
  pub fn eval(&self, x: f64) -> f64 {
    if x < 0.0 {
      return 0.0;
    }
    let n = self.grid.len();
    let last = self.grid[n - 1];
    if x >= last {
      return self.values[n - 1] + self.slope.max(0.0) * (x - last);
    }
    let k = self.grid.partition_point(|&g| g <= x);
    let (x0, x1) = (self.grid[k - 1], self.grid[k]);
    let (v0, v1) = (self.values[k - 1], self.values[k]);
    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
  }

  /// Table divided by its slope, so that the result grows like `x`.
  ///
  /// This is the combination `E[H(1)]·V` that the local-time normalisation leaves invariant.
  pub fn normalized(&self) -> Result<RenewalTable> {
    if !(self.slope > 0.0) || self.slope < 5.0 * self.slope_stderr {
      return Err(Error::RegimeMismatch(format!(
        "renewal function is not asymptotically linear (slope {} ± {}): the ladder process is killed",
        self.slope, self.slope_stderr
      )));
    }
    let s = self.slope;
    Ok(RenewalTable {
      values: self.values.iter().map(|v| v / s).collect(),
      stderr: self.stderr.iter().map(|v| v / s).collect(),
      slope: 1.0,
      slope_stderr: self.slope_stderr / s,
      normalization: "divided by the fitted slope: V(x) ~ x".into(),
      ..self.clone()
    })
  }

  /// Table multiplied by the mean ladder height of the walk, which also gives `V(x) ~ x`.
  pub fn normalized_with(&self, mean_height: f64, how: &str) -> RenewalTable {
    RenewalTable {
      values: self.values.iter().map(|v| v * mean_height).collect(),
      stderr: self.stderr.iter().map(|v| v * mean_height).collect(),
      slope: self.slope * mean_height,
      slope_stderr: self.slope_stderr * mean_height,
      normalization: how.into(),
      ..self.clone()
    }
  }

  /// The first index violating monotonicity by more than `k` combined standard errors.
  pub fn monotonicity_violation(&self, k: f64) -> Option<usize> {
    (1..self.grid.len()).find(|&i| self.values[i - 1] > self.values[i] + k * self.stderr[i - 1].hypot(self.stderr[i]))
  }
}

/// Estimates `V` on `grid` for the ascending ladder of `triplet` with skeleton step `config.step`.
pub fn renewal_function(triplet: &LevyTriplet, grid: &[f64], config: &SimConfig) -> Result<RenewalTable> {
  renewal_function_with(triplet, grid, config, &RenewalOptions::default())
}

/// As [`renewal_function`] with explicit truncation controls.
///
/// Uses the duality `V(x) = Σ_n P(S_1 ≥ 0, …, S_n ≥ 0, S_n ≤ x)`: the expected number of
/// visits of the walk to `[0, x]` before it first enters `(-∞, 0)`.
pub fn renewal_function_with(
  triplet: &LevyTriplet,
  grid: &[f64],
  config: &SimConfig,
  opts: &RenewalOptions,
) -> Result<RenewalTable> {
  config.validate()?;
  if grid.is_empty() || grid.iter().any(|&x| !(x >= 0.0 && x.is_finite())) || grid.windows(2).any(|w| w[1] <= w[0]) {
    return Err(Error::Grid("renewal grid must be non-empty, non-negative and strictly increasing".into()));
  }
  let mut full = grid.to_vec();
  if full[0] > 0.0 {
    full.insert(0, 0.0);
  }
  let sampler = IncrementSampler::new(triplet, config.step, config.small_jump_cutoff)?;
  let top = *full.last().expect("non-empty");
  let level = opts.level_factor * top.max(config.step);
  let m = full.len();

  let (moments, capped) = map_reduce(
    config.n_paths,
    || (vec![Moments::default(); m], Moments::default()),
    |i, (acc, capped)| {
      let mut rng = path_rng(config.seed, TAG_RENEWAL, i as u64);
      let mut hist = vec![0u64; m];
      hist[0] += 1; // S_0 = 0
      let mut s = 0.0f64;
      let mut steps = 0u64;
      let mut hit_cap = false;
      loop {
        s += sampler.sample(&mut rng);
        steps += 1;
        if s < 0.0 || s > level {
          break;
        }
        if s <= top {
          hist[full.partition_point(|&g| g < s)] += 1;
        }
        if steps >= opts.max_steps {
          hit_cap = true;
          break;
        }
      }
      let mut cum = 0u64;
      for (a, h) in acc.iter_mut().zip(&hist) {
        cum += h;
        a.push(cum as f64);
      }
      capped.push(if hit_cap { 1.0 } else { 0.0 });
    },
  );
  let values: Vec<f64> = moments.iter().map(|mm| mm.mean).collect();
  let stderr: Vec<f64> = moments.iter().map(|mm| mm.stderr()).collect();
  let (slope, slope_stderr) = tail_slope(&full, &values, &stderr);
  Ok(RenewalTable {
    grid: full,
    values,
    stderr,
    slope,
    slope_stderr,
    normalization: "skeleton units: expected ladder points of the step-δ walk".into(),
    triplet_hash: triplet.hash(),
    step: config.step,
    n_paths: config.n_paths,
    seed: config.seed,
    level_cap: level,
    max_step_paths: (capped.sum()).round() as u64,
  })
}

/// Renewal table of `triplet` normalised so that `V(x) ~ x`: through the exact mean ladder
/// height when the process has zero mean, otherwise through the fitted slope.
pub fn normalized_renewal(triplet: &LevyTriplet, grid: &[f64], config: &SimConfig) -> Result<RenewalTable> {
  let table = renewal_function(triplet, grid, config)?;
  match mean_ladder_height(triplet, config.step) {
    Ok(h) => Ok(table.normalized_with(h.value, "multiplied by the series value of the mean ladder height")),
    Err(_) => table.normalized(),
  }
}

/// Ordinary least-squares slope over grid points in the upper half of the range.
fn tail_slope(x: &[f64], y: &[f64], se: &[f64]) -> (f64, f64) {
  let top = *x.last().expect("non-empty");
  let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= 0.5 * top).collect();
  if idx.len() < 2 {
    let n = x.len();
    if n < 2 {
      return (0.0, f64::INFINITY);
    }
    let s = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    return (s, se[n - 1].hypot(se[n - 2]) / (x[n - 1] - x[n - 2]));
  }
  let k = idx.len() as f64;
  let mx = idx.iter().map(|&i| x[i]).sum::<f64>() / k;
  let my = idx.iter().map(|&i| y[i]).sum::<f64>() / k;
  let sxx: f64 = idx.iter().map(|&i| (x[i] - mx).powi(2)).sum();
  let sxy: f64 = idx.iter().map(|&i| (x[i] - mx) * (y[i] - my)).sum();
  let slope = sxy / sxx;
  // points share paths, so treat their errors as fully correlated: a conservative bound
  let span = x[idx[idx.len() - 1]] - x[idx[0]];
  let err = (se[idx[0]] + se[idx[idx.len() - 1]]) / span;
  (slope, err)
}
