use serde::{Deserialize, Serialize};

use super::FSpec;
use crate::error::{Error, Result};
use crate::levy_core::LevyTriplet;
use crate::ladder::MIN_ESS;
use crate::mc::{map_reduce, path_rng, Estimate, Moments};
use crate::path_sim::{steps_to, IncrementSampler, SimConfig};

pub const TAG_CURVE: u64 = 0x4355_5256;

/// One time point of an [`ExpectationCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
  pub t: f64,
  pub estimate: f64,
  pub stderr: f64,
  /// `(Σ wF)² / Σ (wF)²` over paths.
  pub ess: f64,
  pub flagged: bool,
}

impl CurvePoint {
  pub fn as_estimate(&self) -> Estimate {
    Estimate { mean: self.estimate, stderr: self.stderr }
  }
}

/// Monte Carlo estimates of `t ↦ E[F(A_t^α(ξ))]` on a time grid, all from one set of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCurve {
  pub alpha: f64,
  pub fspec: FSpec,
  pub tilt: Option<f64>,
  pub triplet_hash: String,
  pub n_paths: usize,
  pub seed: u64,
  pub step: f64,
  pub points: Vec<CurvePoint>,
}

impl ExpectationCurve {
  pub fn times(&self) -> Vec<f64> {
    self.points.iter().map(|p| p.t).collect()
  }

  /// First index where the curve rises by more than `k` combined standard errors.
  pub fn monotonicity_violation(&self, k: f64) -> Option<usize> {
    (1..self.points.len()).find(|&i| {
      let (a, b) = (self.points[i - 1], self.points[i]);
      b.estimate - a.estimate > k * a.stderr.hypot(b.stderr)
    })
  }

  /// `g(t)·E[F(A_t)]` for each point, e.g. `t^{1/2}` to expose a plateau.
  pub fn scaled<G: Fn(f64) -> f64>(&self, g: G) -> Vec<Estimate> {
    self.points.iter().map(|p| p.as_estimate().scale(g(p.t))).collect()
  }

  pub fn any_flagged(&self) -> bool {
    self.points.iter().any(|p| p.flagged)
  }
}

pub(crate) fn validate_time_grid(t_grid: &[f64], step: f64) -> Result<Vec<usize>> {
  if t_grid.is_empty() || t_grid.iter().any(|&t| !(t >= 0.0 && t.is_finite())) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
    return Err(Error::Grid("time grid must be non-empty, non-negative and strictly increasing".into()));
  }
  t_grid.iter().map(|&t| steps_to(step, t)).collect()
}

/// Estimates `E[F(A_t^α(ξ))]` for every `t` in `t_grid`.
///
/// With `tilt = Some(θ)` paths are drawn from the Esscher transform at `θ` and weighted by
/// `e^{-θ ξ(t) + Φ(θ) t}`, which keeps the estimator unbiased and removes the exponential
/// decay in the subcritical regimes.
pub fn estimate_expectation_curve(
  triplet: &LevyTriplet,
  fspec: &FSpec,
  alpha: f64,
  t_grid: &[f64],
  config: &SimConfig,
  tilt: Option<f64>,
) -> Result<ExpectationCurve> {
  config.validate()?;
  fspec.validate()?;
  if !(alpha > 0.0 && alpha.is_finite()) {
    return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
  }
  let marks = validate_time_grid(t_grid, config.step)?;
  let (sampling, theta, phi_theta) = match tilt {
    None => (*triplet, 0.0, 0.0),
    Some(th) => (triplet.esscher(th)?, th, triplet.laplace_exponent(th)),
  };
  let sampler = IncrementSampler::new(&sampling, config.step, config.small_jump_cutoff)?;
  let h = config.step;
  let m = marks.len();
  let moments = map_reduce(
    config.n_paths,
    || vec![Moments::default(); m],
    |i, acc: &mut Vec<Moments>| {
      let mut rng = path_rng(config.seed, TAG_CURVE, i as u64);
      let (mut x, mut a, mut done) = (0.0f64, 0.0f64, 0usize);
      for (k, &target) in marks.iter().enumerate() {
        while done < target {
          a += (-alpha * x).exp() * h;
          x += sampler.sample(&mut rng);
          done += 1;
        }
        let w = if theta == 0.0 { 1.0 } else { (-theta * x + phi_theta * t_grid[k]).exp() };
        acc[k].push(w * fspec.eval(a));
      }
    },
  );
  let points = t_grid
    .iter()
    .zip(&moments)
    .map(|(&t, mm)| {
      let ess = mm.ess();
      CurvePoint { t, estimate: mm.mean, stderr: mm.stderr(), ess, flagged: ess < MIN_ESS }
    })
    .collect();
  Ok(ExpectationCurve {
    alpha,
    fspec: *fspec,
    tilt,
    triplet_hash: triplet.hash(),
    n_paths: config.n_paths,
    seed: config.seed,
    step: config.step,
    points,
  })
}
