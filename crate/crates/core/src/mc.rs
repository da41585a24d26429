//! Seeding, deterministic parallel reduction and running moments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Paths per work unit. Chunk boundaries are fixed, so results do not depend on the thread count.
pub const CHUNK: usize = 1024;

fn splitmix64(mut z: u64) -> u64 {
  z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
  z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
  z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
  z ^ (z >> 31)
}

/// Generator for path `index` of the family `tag` under `seed`.
pub fn path_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
  let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag)));
  rng.set_stream(index);
  rng
}

pub trait Merge {
  fn merge(&mut self, other: Self);
}

/// Runs `per_path(i, acc)` for `i in 0..n` in fixed-size chunks and merges the chunk
/// accumulators in index order.
pub fn map_reduce<A, I, F>(n: usize, init: I, per_path: F) -> A
where
  A: Merge + Send,
  I: Fn() -> A + Sync + Send,
  F: Fn(usize, &mut A) + Sync + Send,
{
  let chunks = n.div_ceil(CHUNK);
  let parts: Vec<A> = (0..chunks)
    .into_par_iter()
    .map(|c| {
      let mut acc = init();
      for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
        per_path(i, &mut acc);
      }
      acc
    })
    .collect();
  let mut it = parts.into_iter();
  let mut acc = it.next().unwrap_or_else(&init);
  for p in it {
    acc.merge(p);
  }
  acc
}

/// Count, mean and centred sum of squares (Welford, Chan et al. merge).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
  pub n: u64,
  pub mean: f64,
  pub m2: f64,
}

impl Moments {
  pub fn push(&mut self, x: f64) {
    self.n += 1;
    let d = x - self.mean;
    self.mean += d / self.n as f64;
    self.m2 += d * (x - self.mean);
  }

  pub fn variance(&self) -> f64 {
    if self.n < 2 {
      return 0.0;
    }
    (self.m2 / (self.n - 1) as f64).max(0.0)
  }

  pub fn stderr(&self) -> f64 {
    if self.n == 0 {
      return f64::INFINITY;
    }
    (self.variance() / self.n as f64).sqrt()
  }

  pub fn sum(&self) -> f64 {
    self.mean * self.n as f64
  }

  pub fn sum_sq(&self) -> f64 {
    self.m2 + self.n as f64 * self.mean * self.mean
  }

  /// `(Σx)² / Σx²`, the effective sample size when the pushed values are weights.
  pub fn ess(&self) -> f64 {
    let s2 = self.sum_sq();
    if s2 <= 0.0 {
      return 0.0;
    }
    let s = self.sum();
    s * s / s2
  }

  pub fn estimate(&self) -> Estimate {
    Estimate { mean: self.mean, stderr: self.stderr() }
  }
}

impl Merge for Moments {
  fn merge(&mut self, o: Self) {
    if o.n == 0 {
      return;
    }
    if self.n == 0 {
      *self = o;
      return;
    }
    let n = self.n + o.n;
    let d = o.mean - self.mean;
    let (na, nb, nf) = (self.n as f64, o.n as f64, n as f64);
    self.mean += d * nb / nf;
    self.m2 += o.m2 + d * d * na * nb / nf;
    self.n = n;
  }
}

impl<T: Merge> Merge for Vec<T> {
  fn merge(&mut self, other: Self) {
    assert_eq!(self.len(), other.len(), "merging accumulators of different shapes");
    for (a, b) in self.iter_mut().zip(other) {
      a.merge(b);
    }
  }
}

impl<A: Merge, B: Merge> Merge for (A, B) {
  fn merge(&mut self, other: Self) {
    self.0.merge(other.0);
    self.1.merge(other.1);
  }
}

/// Ordered collection of per-path values.
#[derive(Debug, Clone, Default)]
pub struct Collect<T>(pub Vec<T>);

impl<T> Merge for Collect<T> {
  fn merge(&mut self, other: Self) {
    self.0.extend(other.0);
  }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
  pub mean: f64,
  pub stderr: f64,
}

impl Estimate {
  pub fn exact(mean: f64) -> Self {
    Self { mean, stderr: 0.0 }
  }

  pub fn scale(self, k: f64) -> Self {
    Self { mean: self.mean * k, stderr: self.stderr * k.abs() }
  }

  /// Product of independent estimates (delta method).
  pub fn times(self, o: Estimate) -> Self {
    Self {
      mean: self.mean * o.mean,
      stderr: ((self.stderr * o.mean).powi(2) + (o.stderr * self.mean).powi(2)).sqrt(),
    }
  }

  pub fn combined_stderr(self, o: Estimate) -> f64 {
    self.stderr.hypot(o.stderr)
  }

  /// `|self - o| ≤ k` combined standard errors.
  pub fn agrees_with(self, o: Estimate, k: f64) -> bool {
    (self.mean - o.mean).abs() <= k * self.combined_stderr(o)
  }

  /// `self ≤ o + k` combined standard errors.
  pub fn at_most(self, o: Estimate, k: f64) -> bool {
    self.mean - o.mean <= k * self.combined_stderr(o)
  }
}
