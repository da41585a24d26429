use serde::{Deserialize, Serialize};

use super::curve::validate_time_grid;
use super::fit::{fit_decay_points, DecayFit, Pin};
use crate::error::{Error, Result};
use crate::levy_core::{find_rho, LevyTriplet, DEFAULT_ZERO_TOL};
use crate::mc::{map_reduce, path_rng, Moments};
use crate::path_sim::{IncrementSampler, SimConfig};

pub const TAG_FIRST_PASSAGE: u64 = 0x4650_5431;

/// Grid points with fewer surviving sample paths than this are cut from the fit.
pub const MIN_SURVIVORS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
  pub t: f64,
  pub p: f64,
  pub stderr: f64,
  /// Sample paths (unweighted) still above the level at `t`.
  pub survivors: u64,
}

/// `P(τ_{-x} > t)` on a grid with its fitted and predicted decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstPassageReport {
  pub x: f64,
  pub tilt: Option<f64>,
  pub points: Vec<SurvivalPoint>,
  /// First grid time dropped for lack of survivors.
  pub truncated_at: Option<f64>,
  pub fit: DecayFit,
  /// `(rate, exponent)` predicted from the sign structure of `Φ'`.
  pub predicted: Option<(f64, f64)>,
  pub warnings: Vec<String>,
}

/// Predicted decay of `P(τ_{-x} > t)`: constant when drifting up, `t^{-1/2}` at zero mean,
/// `t^{-3/2} e^{Φ(ϱ)t}` when `Φ'` has a root `ϱ > 0` inside the domain.
pub fn predicted_first_passage_decay(triplet: &LevyTriplet) -> Option<(f64, f64)> {
  let mean = triplet.mean_increment();
  if mean > DEFAULT_ZERO_TOL {
    return Some((0.0, 0.0));
  }
  if mean.abs() <= DEFAULT_ZERO_TOL {
    return Some((0.0, -0.5));
  }
  let dom = triplet.domain();
  let mut candidates: Vec<f64> = (-10..30).map(|i| 2f64.powi(i)).collect();
  if dom.upper.is_finite() {
    candidates.extend((1..50).map(|k| dom.upper * (1.0 - 0.5f64.powi(k))));
  }
  candidates.retain(|&b| b > 0.0 && dom.interior_contains(b));
  candidates.sort_by(f64::total_cmp);
  let b = candidates
    .into_iter()
    .find(|&b| triplet.laplace_derivatives(b).is_ok_and(|(d1, _)| d1 > DEFAULT_ZERO_TOL))?;
  let rho = find_rho(triplet, b).ok()?;
  Some((triplet.laplace_exponent(rho), -1.5))
}

/// Simulates `P(τ_{-x} > t)` over `t_grid` and fits the decay law.
///
/// With `tilt = Some(θ)` paths follow the Esscher transform at `θ` and survivors carry the weight
/// `e^{-θ ξ(t) + Φ(θ) t}`; `θ = ϱ` keeps the subcritical survivors from dying out.
pub fn first_passage_asymptotics(
  triplet: &LevyTriplet,
  x: f64,
  t_grid: &[f64],
  config: &SimConfig,
  tilt: Option<f64>,
  pin: Pin,
) -> Result<FirstPassageReport> {
  config.validate()?;
  if !(x > 0.0 && x.is_finite()) {
    return Err(Error::param("x", format!("must be positive, got {x}")));
  }
  let marks = validate_time_grid(t_grid, config.step)?;
  let (sampling, theta, phi_theta) = match tilt {
    None => (*triplet, 0.0, 0.0),
    Some(th) => (triplet.esscher(th)?, th, triplet.laplace_exponent(th)),
  };
  let sampler = IncrementSampler::new(&sampling, config.step, config.small_jump_cutoff)?;
  let m = marks.len();
  let (moments, counts) = map_reduce(
    config.n_paths,
    || (vec![Moments::default(); m], vec![Moments::default(); m]),
    |i, (acc, alive): &mut (Vec<Moments>, Vec<Moments>)| {
      let mut rng = path_rng(config.seed, TAG_FIRST_PASSAGE, i as u64);
      let (mut s, mut done, mut dead) = (0.0f64, 0usize, false);
      for (k, &target) in marks.iter().enumerate() {
        while !dead && done < target {
          s += sampler.sample(&mut rng);
          done += 1;
          dead = s <= -x;
        }
        if dead {
          acc[k].push(0.0);
          alive[k].push(0.0);
        } else {
          let w = if theta == 0.0 { 1.0 } else { (-theta * s + phi_theta * t_grid[k]).exp() };
          acc[k].push(w);
          alive[k].push(1.0);
        }
      }
    },
  );
  let mut warnings = Vec::new();
  let mut points = Vec::with_capacity(m);
  let mut truncated_at = None;
  for k in 0..m {
    let survivors = counts[k].sum().round() as u64;
    if (survivors as f64) < MIN_SURVIVORS {
      truncated_at = Some(t_grid[k]);
      warnings.push(format!("grid truncated at t = {}: only {survivors} surviving paths", t_grid[k]));
      break;
    }
    points.push(SurvivalPoint { t: t_grid[k], p: moments[k].mean, stderr: moments[k].stderr(), survivors });
  }
  let t: Vec<f64> = points.iter().map(|p| p.t).collect();
  let p: Vec<f64> = points.iter().map(|p| p.p).collect();
  let se: Vec<f64> = points.iter().map(|p| p.stderr).collect();
  let fit = fit_decay_points(&t, &p, &se, pin)?;
  warnings.extend(fit.warnings.iter().cloned());
  Ok(FirstPassageReport { x, tilt, points, truncated_at, fit, predicted: predicted_first_passage_decay(triplet), warnings })
}
