use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::sampler::IncrementSampler;
use crate::error::{Error, Result};
use crate::levy_core::LevyTriplet;
use crate::mc::{map_reduce, path_rng, Collect};

/// Seed-derivation tag for the primary path family.
pub const TAG_PATHS: u64 = 0;

/// A simulated path on a time grid, with running extrema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
  pub times: Vec<f64>,
  pub values: Vec<f64>,
  pub sup: Vec<f64>,
  pub inf: Vec<f64>,
}

impl PathSample {
  /// Builds a path from grid times and values; computes running extrema.
  pub fn from_values(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
    if times.is_empty() || times.len() != values.len() {
      return Err(Error::Grid("times and values must be non-empty and of equal length".into()));
    }
    if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
      return Err(Error::Grid("times must start at 0 and increase strictly".into()));
    }
    let mut sup = Vec::with_capacity(values.len());
    let mut inf = Vec::with_capacity(values.len());
    let (mut s, mut i) = (values[0], values[0]);
    for &v in &values {
      s = s.max(v);
      i = i.min(v);
      sup.push(s);
      inf.push(i);
    }
    Ok(Self { times, values, sup, inf })
  }

  pub fn start(&self) -> f64 {
    self.values[0]
  }

  pub fn horizon(&self) -> f64 {
    *self.times.last().expect("non-empty")
  }

  pub fn len(&self) -> usize {
    self.values.len()
  }

  pub fn is_empty(&self) -> bool {
    self.values.is_empty()
  }
}

/// Simulates path number `index` of the family determined by `config.seed`.
pub fn simulate_path_indexed(triplet: &LevyTriplet, config: &SimConfig, start: f64, index: u64) -> Result<PathSample> {
  config.validate()?;
  let sampler = IncrementSampler::new(triplet, config.step, config.small_jump_cutoff)?;
  let n = config.n_steps()?;
  let mut rng = path_rng(config.seed, TAG_PATHS, index);
  let mut values = Vec::with_capacity(n + 1);
  let mut x = start;
  values.push(x);
  for _ in 0..n {
    x += sampler.sample(&mut rng);
    values.push(x);
  }
  let times = (0..=n).map(|i| i as f64 * config.step).collect();
  PathSample::from_values(times, values)
}

/// Simulates the first path of the family.
pub fn simulate_path(triplet: &LevyTriplet, config: &SimConfig, start: f64) -> Result<PathSample> {
  simulate_path_indexed(triplet, config, start, 0)
}

/// Simulates `config.n_paths` paths in parallel; path `i` equals `simulate_path_indexed(.., i)`.
pub fn simulate_paths(triplet: &LevyTriplet, config: &SimConfig, start: f64) -> Result<Vec<PathSample>> {
  config.validate()?;
  IncrementSampler::new(triplet, config.step, config.small_jump_cutoff)?;
  let out = map_reduce(
    config.n_paths,
    || Collect(Vec::new()),
    |i, acc: &mut Collect<PathSample>| {
      acc.0.push(simulate_path_indexed(triplet, config, start, i as u64).expect("validated above"));
    },
  );
  Ok(out.0)
}

/// First grid time at which the path is at or below `level`.
pub fn hitting_time(path: &PathSample, level: f64) -> Option<f64> {
  path.values.iter().position(|&v| v <= level).map(|i| path.times[i])
}

/// Why an adaptive `A_∞` evaluation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
  /// The remaining-tail bound fell below the relative tolerance.
  TailBound,
  /// The configured horizon was reached first.
  Horizon,
}

/// `A_t^α = ∫_0^t e^{-α ξ(s)} ds` on one path; `t = None` stands for `t = ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFunctionalSample {
  pub alpha: f64,
  pub t: Option<f64>,
  pub value: f64,
  pub truncation: Option<Truncation>,
}

/// Left-endpoint Riemann sum of `e^{-α ξ}` over the whole path.
pub fn exp_functional(path: &PathSample, alpha: f64) -> ExpFunctionalSample {
  let value = path
    .times
    .windows(2)
    .zip(&path.values)
    .map(|(w, &v)| (-alpha * v).exp() * (w[1] - w[0]))
    .sum();
  ExpFunctionalSample { alpha, t: Some(path.horizon()), value, truncation: None }
}

/// Block-wise evaluation of `A_∞^α` for a process drifting to `+∞`.
#[derive(Debug, Clone)]
pub struct InfiniteHorizon {
  sampler: IncrementSampler,
  alpha: f64,
  block_steps: usize,
  max_steps: usize,
  /// `L / (1 - e^{-α m L / 2})` with `L` the block length and `m` the mean increment.
  tail_factor: f64,
  rel_tol: f64,
}

impl InfiniteHorizon {
  pub fn new(triplet: &LevyTriplet, alpha: f64, config: &SimConfig, rel_tol: f64) -> Result<Self> {
    config.validate()?;
    if !(alpha > 0.0) {
      return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    if !(rel_tol > 0.0) {
      return Err(Error::param("rel_tol", format!("must be positive, got {rel_tol}")));
    }
    let mean = triplet.mean_increment();
    if !(mean > 0.0) {
      return Err(Error::InfiniteFunctional { mean });
    }
    let sampler = IncrementSampler::new(triplet, config.step, config.small_jump_cutoff)?;
    let block_steps = ((10.0 / mean) / config.step).ceil().max(1.0) as usize;
    let block_len = block_steps as f64 * config.step;
    let tail_factor = block_len / (1.0 - (-0.5 * alpha * mean * block_len).exp());
    let max_steps = (config.horizon / config.step).round().max(1.0) as usize;
    Ok(Self { sampler, alpha, block_steps, max_steps, tail_factor, rel_tol })
  }

  /// Evaluates one path, returning `(A_∞ estimate, ξ at the stopping time, stop reason)`.
  pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64, Truncation) {
    let h = self.sampler.step();
    let (mut x, mut acc, mut done) = (0.0f64, 0.0f64, 0usize);
    loop {
      let mut block_min = x;
      for _ in 0..self.block_steps {
        acc += (-self.alpha * x).exp() * h;
        x += self.sampler.sample(rng);
        block_min = block_min.min(x);
        done += 1;
        if done >= self.max_steps {
          return (acc, x, Truncation::Horizon);
        }
      }
      if (-self.alpha * block_min).exp() * self.tail_factor < self.rel_tol * acc {
        return (acc, x, Truncation::TailBound);
      }
    }
  }
}

/// `A_∞^α` along path `index`; errors unless `E[ξ(1)] > 0`.
pub fn exp_functional_inf(
  triplet: &LevyTriplet,
  alpha: f64,
  config: &SimConfig,
  rel_tol: f64,
  index: u64,
) -> Result<ExpFunctionalSample> {
  let ih = InfiniteHorizon::new(triplet, alpha, config, rel_tol)?;
  let (value, _, stop) = ih.sample(&mut path_rng(config.seed, TAG_PATHS, index));
  Ok(ExpFunctionalSample { alpha, t: None, value, truncation: Some(stop) })
}

/// `A_∞^α` for paths `0..config.n_paths`.
pub fn exp_functional_inf_samples(
  triplet: &LevyTriplet,
  alpha: f64,
  config: &SimConfig,
  rel_tol: f64,
) -> Result<Vec<ExpFunctionalSample>> {
  let ih = InfiniteHorizon::new(triplet, alpha, config, rel_tol)?;
  let out = map_reduce(
    config.n_paths,
    || Collect(Vec::new()),
    |i, acc: &mut Collect<ExpFunctionalSample>| {
      let (value, _, stop) = ih.sample(&mut path_rng(config.seed, TAG_PATHS, i as u64));
      acc.0.push(ExpFunctionalSample { alpha, t: None, value, truncation: Some(stop) });
    },
  );
  Ok(out.0)
}

const DUMP_MAGIC: &[u8; 8] = b"LEVYPTH1";

/// Writes a path as: magic `LEVYPTH1`, 16-byte ASCII triplet hash, seed (u64), step (f64),
/// point count (u64), then `(time, value)` pairs; all numbers little-endian.
pub fn write_path_dump<W: Write>(mut w: W, path: &PathSample, triplet_hash: &str, seed: u64, step: f64) -> io::Result<()> {
  let mut hash = [b'0'; 16];
  for (d, s) in hash.iter_mut().zip(triplet_hash.bytes()) {
    *d = s;
  }
  w.write_all(DUMP_MAGIC)?;
  w.write_all(&hash)?;
  w.write_all(&seed.to_le_bytes())?;
  w.write_all(&step.to_le_bytes())?;
  w.write_all(&(path.len() as u64).to_le_bytes())?;
  for (t, v) in path.times.iter().zip(&path.values) {
    w.write_all(&t.to_le_bytes())?;
    w.write_all(&v.to_le_bytes())?;
  }
  Ok(())
}

/// Header fields and path read back from [`write_path_dump`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDump {
  pub triplet_hash: String,
  pub seed: u64,
  pub step: f64,
  pub path: PathSample,
}

pub fn read_path_dump<R: Read>(mut r: R) -> io::Result<PathDump> {
  let mut magic = [0u8; 8];
  r.read_exact(&mut magic)?;
  if &magic != DUMP_MAGIC {
    return Err(io::Error::new(io::ErrorKind::InvalidData, "not a path dump"));
  }
  let mut hash = [0u8; 16];
  r.read_exact(&mut hash)?;
  let mut b8 = [0u8; 8];
  let mut next = |r: &mut R| -> io::Result<[u8; 8]> {
    r.read_exact(&mut b8)?;
    Ok(b8)
  };
  let seed = u64::from_le_bytes(next(&mut r)?);
  let step = f64::from_le_bytes(next(&mut r)?);
  let n = u64::from_le_bytes(next(&mut r)?) as usize;
  let (mut times, mut values) = (Vec::with_capacity(n), Vec::with_capacity(n));
  for _ in 0..n {
    times.push(f64::from_le_bytes(next(&mut r)?));
    values.push(f64::from_le_bytes(next(&mut r)?));
  }
  let path = PathSample::from_values(times, values).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
  Ok(PathDump { triplet_hash: String::from_utf8_lossy(&hash).into_owned(), seed, step, path })
}
