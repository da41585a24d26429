use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_conditions, is_non_lattice, FSpec};
use crate::error::{Error, Result};
use crate::ladder::{
  conditioned_path, normalized_renewal, path_summaries, ConditionedPath, PathSummary, RenewalTable, MIN_ESS,
};
use crate::levy_core::{classify_regime, JumpMeasure, LevyTriplet, Regime, RegimeOptions};
use crate::mc::{map_reduce, path_rng, Estimate, Moments};
use crate::path_sim::{steps_to, IncrementSampler, InfiniteHorizon, SimConfig};

pub const TAG_COEFF_X: u64 = 0x434f_4531;
pub const TAG_COEFF_Y: u64 = 0x434f_4532;

/// Relative increment of the last pre-limit value above which the sequence is not called bounded.
pub const BOUNDED_INCREMENT: f64 = 0.10;

/// Relative tolerance of the infinite-horizon functional used for the regime 5 constant.
const REGIME5_REL_TOL: f64 = 1e-6;

/// Disjoint batches of D3 paths; the standard error is the spread of the batch means.
const D3_GROUPS: usize = 16;
/// Minimum number of paths behind each D3 renewal table.
const D3_TABLE_PATHS: usize = 200_000;
/// Pairings of the x and y paths averaged within a batch.
const D3_PAIR_SHIFTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
  D2,
  D3,
  D4,
  CRho,
  Regime5,
}

/// A limiting constant with the pre-limit sequence it was read off from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimate {
  pub which: Coefficient,
  /// Value at the largest `x` (no fitted extrapolation).
  pub value: Estimate,
  pub x_grid: Vec<f64>,
  pub prelimit: Vec<Estimate>,
  pub horizon: Option<f64>,
  /// `(v_last - v_prev) / v_last`, the size of the last step of the sequence.
  pub last_increment: f64,
  /// Consecutive values never drop by more than two combined standard errors.
  pub increasing: bool,
  /// `last_increment` is at most [`BOUNDED_INCREMENT`].
  pub bounded: bool,
  pub min_ess: f64,
  pub flagged: bool,
  /// The constant in front of the decay law of `E[F(A_t)]` that this coefficient predicts.
  pub paired_constant: Estimate,
  pub notes: Vec<String>,
}

impl CoefficientEstimate {
  fn from_sequence(which: Coefficient, x_grid: &[f64], prelimit: Vec<Estimate>, min_ess: f64, horizon: Option<f64>) -> Self {
    let value = *prelimit.last().expect("non-empty grid");
    let last_increment = if prelimit.len() >= 2 {
      (value.mean - prelimit[prelimit.len() - 2].mean) / value.mean
    } else {
      f64::NAN
    };
    let increasing = prelimit.windows(2).all(|w| w[1].mean >= w[0].mean - 2.0 * w[0].combined_stderr(w[1]));
    CoefficientEstimate {
      which,
      value,
      x_grid: x_grid.to_vec(),
      prelimit,
      horizon,
      last_increment,
      increasing,
      bounded: last_increment.abs() <= BOUNDED_INCREMENT,
      min_ess,
      flagged: min_ess < MIN_ESS,
      paired_constant: value,
      notes: Vec::new(),
    }
  }
}

fn check_x_grid(x_grid: &[f64]) -> Result<()> {
  if x_grid.is_empty() || x_grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) || x_grid.windows(2).any(|w| w[1] <= w[0]) {
    return Err(Error::Grid("x grid must be non-empty, positive and strictly increasing".into()));
  }
  Ok(())
}

fn exact_regime(triplet: &LevyTriplet, beta: f64) -> Result<Regime> {
  let opts = RegimeOptions { exact_critical: true, ..Default::default() };
  Ok(classify_regime(triplet, beta, &opts)?.regime)
}

/// Renewal table normalised to `V(x) ~ x`, on a grid reaching well past the largest `x`.
fn weight_table(triplet: &LevyTriplet, x_max: f64, config: &SimConfig) -> Result<RenewalTable> {
  let top = (2.0 * x_max).max(10.0);
  let grid: Vec<f64> = (1..=80).map(|i| top * i as f64 / 80.0).collect();
  let cfg = SimConfig { n_paths: config.n_paths.clamp(20_000, 100_000), ..*config };
  normalized_renewal(triplet, &grid, &cfg)
}

/// Renewal table steering the conditioned paths of D3. The Doob kernel reads the local shape of
/// `h`, so the grid is dense near 0 and the table uses more paths than the weights of D2 and D4.
fn steering_table(triplet: &LevyTriplet, x_max: f64, config: &SimConfig) -> Result<RenewalTable> {
  let top = (2.0 * x_max).max(10.0);
  let grid: Vec<f64> = (1..=100).map(|i| top * (i as f64 / 100.0).powi(2)).collect();
  let cfg = SimConfig { n_paths: config.n_paths.max(D3_TABLE_PATHS), ..*config };
  normalized_renewal(triplet, &grid, &cfg)
}

/// `E_0[Ũ(x + ξ_T) 1{min ξ ≥ -x} g(A_T)]` for each `x`, from one set of paths.
fn h_transform_sequence<G: Fn(f64) -> f64>(
  paths: &[PathSummary],
  table: &RenewalTable,
  x_grid: &[f64],
  g: G,
) -> (Vec<Estimate>, f64) {
  let mut min_ess = f64::INFINITY;
  let seq = x_grid
    .iter()
    .map(|&x| {
      let mut m = Moments::default();
      for p in paths {
        m.push(if p.min >= -x { table.eval(x + p.end) * g(p.a) } else { 0.0 });
      }
      min_ess = min_ess.min(m.ess());
      m.estimate()
    })
    .collect();
  (seq, min_ess)
}

/// `c(ϱ)`, which is 1 whenever `ξ(t)` has no atom at 0.
pub fn coeff_c_rho(triplet: &LevyTriplet, rho: f64) -> Result<CoefficientEstimate> {
  triplet.validate()?;
  if !is_non_lattice(triplet) {
    return Err(Error::Unsupported("c(ϱ) for a lattice law".into()));
  }
  let atomless = triplet.sigma > 0.0 || matches!(triplet.jumps, JumpMeasure::TemperedStable(_));
  if !atomless {
    return Err(Error::Unsupported(
      "c(ϱ) when σ = 0 and the jumps have finite activity: P(ξ(t) = 0) > 0 and is not computed".into(),
    ));
  }
  let mut est = CoefficientEstimate::from_sequence(Coefficient::CRho, &[rho], vec![Estimate::exact(1.0)], f64::INFINITY, None);
  est.bounded = true;
  est.notes.push("marginals are atomless, so the defining integral vanishes".into());
  Ok(est)
}

/// `D₂` for a critical process, with paired constant `√(2/(πΦ''(0)))·D₂`, the limit of
/// `t^{1/2} E[F(A_t)]`.
pub fn coeff_d2(
  triplet: &LevyTriplet,
  fspec: &FSpec,
  alpha: f64,
  x_grid: &[f64],
  horizon: f64,
  config: &SimConfig,
) -> Result<CoefficientEstimate> {
  config.validate()?;
  check_x_grid(x_grid)?;
  let (_, beta) = fspec.tail();
  let phi2 = match exact_regime(triplet, beta)? {
    Regime::Critical { phi2_zero, .. } => phi2_zero,
    r => return Err(Error::RegimeMismatch(format!("D2 needs a critical process, found {}", r.name()))),
  };
  check_conditions(fspec, triplet, beta).require(true, true, false, true)?;
  let table = weight_table(&triplet.dual(), *x_grid.last().unwrap(), config)?;
  let sampler = IncrementSampler::new(triplet, config.step, config.small_jump_cutoff)?;
  let paths = path_summaries(&sampler, steps_to(config.step, horizon)?, alpha, config.n_paths, config.seed, TAG_COEFF_X);
  let (seq, ess) = h_transform_sequence(&paths, &table, x_grid, |a| fspec.eval(a));
  let mut est = CoefficientEstimate::from_sequence(Coefficient::D2, x_grid, seq, ess, Some(horizon));
  est.paired_constant = est.value.scale((2.0 / (std::f64::consts::PI * phi2)).sqrt());
  est.notes.push(format!("weights normalised {}", table.normalization));
  Ok(est)
}

/// `D₄` for an intermediately subcritical process, with paired constant
/// `K √(2/(πΦ''(β)))·D₄`, the limit of `t^{1/2} e^{-tΦ(β)} E[F(A_t)]`.
pub fn coeff_d4(
  triplet: &LevyTriplet,
  alpha: f64,
  beta: f64,
  k: f64,
  x_grid: &[f64],
  horizon: f64,
  config: &SimConfig,
) -> Result<CoefficientEstimate> {
  config.validate()?;
  check_x_grid(x_grid)?;
  let phi2 = match exact_regime(triplet, beta)? {
    Regime::IntermediatelySubcritical { phi2_beta, .. } => phi2_beta,
    r => return Err(Error::RegimeMismatch(format!("D4 needs an intermediately subcritical process, found {}", r.name()))),
  };
  if !is_non_lattice(triplet) {
    return Err(Error::RegimeMismatch("D4 needs a non-lattice law".into()));
  }
  let tilted = triplet.esscher(beta)?;
  let eta = tilted.dual();
  let table = weight_table(&tilted, *x_grid.last().unwrap(), config)?;
  let sampler = IncrementSampler::new(&eta, config.step, config.small_jump_cutoff)?;
  let paths = path_summaries(&sampler, steps_to(config.step, horizon)?, alpha, config.n_paths, config.seed, TAG_COEFF_X);
  let power = -beta / alpha;
  let (seq, ess) = h_transform_sequence(&paths, &table, x_grid, |a| a.powf(power));
  let mut est = CoefficientEstimate::from_sequence(Coefficient::D4, x_grid, seq, ess, Some(horizon));
  est.paired_constant = est.value.scale(k * (2.0 / (std::f64::consts::PI * phi2)).sqrt());
  est.notes.push(format!("weights normalised {}", table.normalization));
  Ok(est)
}

/// `D₃` for a weakly subcritical process, with paired constant `c(ϱ)/√(2πΦ''(ϱ))·D₃`, the
/// limit of `t^{3/2} e^{-tΦ(ϱ)} E[F(A_t)]`.
///
/// The `y` integral is a trapezoid rule over `y_grid` (which should start at 0); if the bound on
/// the part beyond the grid exceeds 5% of the integral at any `x`, a refinement error is returned.
///
/// Both families are sampled as independent conditioned paths (see [`conditioned_path`]), the
/// `y` path starting level drawn from the quadrature weights times `Ũ(y)`. The conditioned
/// functional approaches its limit like `T^{-1/2}`, so each pre-limit value is `2v(T) - v(T/4)`
/// from the same paths; the notes list `v` at `T/16`, `T/4` and `T`. Standard errors come from
/// batch means and do not include the noise of the renewal tables.
#[allow(clippy::too_many_arguments)]
pub fn coeff_d3(
  triplet: &LevyTriplet,
  fspec: &FSpec,
  alpha: f64,
  rho: f64,
  x_grid: &[f64],
  y_grid: &[f64],
  horizon: f64,
  config: &SimConfig,
) -> Result<CoefficientEstimate> {
  config.validate()?;
  check_x_grid(x_grid)?;
  if y_grid.len() < 2 || y_grid.iter().any(|&y| !(y >= 0.0 && y.is_finite())) || y_grid.windows(2).any(|w| w[1] <= w[0]) {
    return Err(Error::Grid("y grid needs at least two non-negative, strictly increasing points".into()));
  }
  let (_, beta) = fspec.tail();
  let (phi2, regime_rho) = match exact_regime(triplet, beta)? {
    Regime::WeaklySubcritical { phi2_rho, rho, .. } => (phi2_rho, rho),
    r => return Err(Error::RegimeMismatch(format!("D3 needs a weakly subcritical process, found {}", r.name()))),
  };
  if (rho - regime_rho).abs() > 1e-6 * regime_rho.max(1.0) {
    return Err(Error::param("rho", format!("{rho} does not solve Φ'(ϱ) = 0 (root is {regime_rho})")));
  }
  check_conditions(fspec, triplet, beta).require(true, true, false, true)?;
  let c_rho = coeff_c_rho(triplet, rho)?.value.mean;

  let tilted = triplet.esscher(rho)?;
  let dual = tilted.dual();
  let (x_max, y_max) = (*x_grid.last().unwrap(), *y_grid.last().unwrap());
  let table_x = steering_table(&dual, x_max, config)?;
  let table_y = steering_table(&tilted, x_max, config)?;
  let steps = steps_to(config.step, horizon)?;
  let sx = IncrementSampler::new(&tilted, config.step, config.small_jump_cutoff)?;
  let sy = IncrementSampler::new(&dual, config.step, config.small_jump_cutoff)?;

  // trapezoid weights over the y grid, with e^{-ϱy} folded in
  let mut tw = vec![0.0; y_grid.len()];
  for j in 0..y_grid.len() - 1 {
    let d = 0.5 * (y_grid[j + 1] - y_grid[j]);
    tw[j] += d;
    tw[j + 1] += d;
  }
  for (w, &y) in tw.iter_mut().zip(y_grid) {
    *w *= (-rho * y).exp();
  }
  // y is drawn from the quadrature weights times Ũ(y), so one mixed population covers the grid
  let mut cdf: Vec<f64> = tw.iter().zip(y_grid).map(|(w, &y)| w * table_y.eval(y)).collect();
  let y_mass: f64 = cdf.iter().sum();
  let mut run = 0.0;
  for c in cdf.iter_mut() {
    run += *c / y_mass;
    *c = run;
  }
  let n = config.n_paths.max(D3_GROUPS);
  let m = n / D3_GROUPS;
  let nx = x_grid.len();
  let checkpoints: Vec<usize> = {
    let mut c: Vec<usize> = [steps / 16, steps / 4, steps].iter().map(|&s| s.max(1)).collect();
    c.dedup();
    c
  };
  let (_, var) = tilted.laplace_derivatives(0.0)?;
  let reach = 6.0 * (var * config.step).sqrt() + tilted.mean_increment().abs() * config.step;
  let paths: Vec<(f64, ConditionedPath)> = (0..(nx + 1) * n)
    .into_par_iter()
    .map(|task| {
      let mut rng = path_rng(config.seed, TAG_COEFF_X, task as u64);
      let k = task / n;
      if k < nx {
        (x_grid[k], conditioned_path(&sx, &table_x, x_grid[k], reach, alpha, &checkpoints, &mut rng))
      } else {
        let u: f64 = rng.random();
        let y = y_grid[cdf.partition_point(|&c| c < u).min(y_grid.len() - 1)];
        (y, conditioned_path(&sy, &table_y, y, reach, alpha, &checkpoints, &mut rng))
      }
    })
    .collect();
  let ys = &paths[nx * n..];
  // the paths are unweighted, so every population has effective size n
  let proposals = paths.iter().map(|(_, p)| p.proposals).fold(0.0, f64::max);

  let scale = 2.0 / phi2;
  let shifts = m.min(D3_PAIR_SHIFTS);
  let last = checkpoints.len() - 1;
  let mut seq = Vec::with_capacity(nx);
  let mut notes = vec![format!("at most {proposals:.2} proposals per conditioned step")];
  for (k, &x) in x_grid.iter().enumerate() {
    let xs = &paths[k * n..(k + 1) * n];
    let lead = scale * (rho * x).exp() * table_x.eval(x) * y_mass;
    // batch means of v(T) at every checkpoint, and of 2 v(T) - v(T/4), which removes the
    // leading T^{-1/2} horizon bias of the conditioned functional
    let mut by_horizon = vec![Moments::default(); checkpoints.len()];
    let mut extrapolated = Moments::default();
    for g in 0..D3_GROUPS {
      let mut sums = vec![0.0; checkpoints.len()];
      for s in 0..shifts {
        for i in 0..m {
          let (p, (y, q)) = (&xs[g * m + i].1, &ys[g * m + (i + s * (m / shifts)) % m]);
          let e = (alpha * (x - y)).exp();
          for (c, sum) in sums.iter_mut().enumerate() {
            *sum += fspec.eval(p.a[c] + e * q.a[c]);
          }
        }
      }
      let v: Vec<f64> = sums.iter().map(|s| lead * s / (m * shifts) as f64).collect();
      for (acc, &vc) in by_horizon.iter_mut().zip(&v) {
        acc.push(vc);
      }
      extrapolated.push(if last > 0 { 2.0 * v[last] - v[last - 1] } else { v[last] });
    }
    let shown: Vec<String> = checkpoints
      .iter()
      .zip(&by_horizon)
      .map(|(s, e)| format!("T = {}: {:.4e} ± {:.1e}", *s as f64 * config.step, e.mean, e.stderr()))
      .collect();
    notes.push(format!("x = {x}: {}", shown.join(", ")));
    let integral = extrapolated.estimate();
    // Ũ(y) ≤ y + b with b the table offset; ∫_Y^∞ e^{-ϱy}(y + b) dy = e^{-ϱY}((Y + b)/ϱ + 1/ϱ²)
    let b = (table_y.eval(y_max) - y_max).max(0.0);
    let tail = fspec.sup() * scale * (rho * x).exp() * table_x.eval(x)
      * (-rho * y_max).exp()
      * ((y_max + b) / rho + 1.0 / (rho * rho));
    if !(tail <= 0.05 * integral.mean) {
      return Err(Error::Refinement(format!(
        "y grid ends at {y_max}: tail bound {tail:e} exceeds 5% of the integral {:e} at x = {x}",
        integral.mean
      )));
    }
    notes.push(format!("x = {x}: y-tail bound {tail:e}"));
    seq.push(integral);
  }
  let mut est = CoefficientEstimate::from_sequence(Coefficient::D3, x_grid, seq, n as f64, Some(horizon));
  est.paired_constant = est.value.scale(c_rho / (2.0 * std::f64::consts::PI * phi2).sqrt());
  est.notes = notes;
  Ok(est)
}

/// `K E^{(β)}[A_∞^α(-ξ)^{-β/α}]` for a strongly subcritical process, the limit of
/// `e^{-tΦ(β)} E[F(A_t)]`. `config.horizon` caps each path.
pub fn coeff_regime5(triplet: &LevyTriplet, alpha: f64, beta: f64, k: f64, config: &SimConfig) -> Result<CoefficientEstimate> {
  config.validate()?;
  let tilted = triplet.esscher(beta)?;
  let tilted_mean = tilted.mean_increment();
  if !(tilted_mean < 0.0) {
    return Err(Error::RegimeMismatch(format!(
      "the β-tilted process must drift to -∞, its mean is {tilted_mean:e}"
    )));
  }
  let eta = tilted.dual();
  let ih = InfiniteHorizon::new(&eta, alpha, config, REGIME5_REL_TOL)?;
  let power = -beta / alpha;
  let (m, capped) = map_reduce(
    config.n_paths,
    || (Moments::default(), Moments::default()),
    |i, (acc, capped): &mut (Moments, Moments)| {
      let (a, _, stop) = ih.sample(&mut path_rng(config.seed, TAG_COEFF_X, i as u64));
      acc.push(a.powf(power));
      capped.push(if stop == crate::path_sim::Truncation::Horizon { 1.0 } else { 0.0 });
    },
  );
  let value = m.estimate().scale(k);
  let mut est = CoefficientEstimate::from_sequence(Coefficient::Regime5, &[], vec![value], m.ess(), None);
  est.x_grid.clear();
  est.bounded = true;
  est.last_increment = 0.0;
  if capped.sum() > 0.0 {
    est.notes.push(format!("{} paths reached the horizon cap before the tail bound", capped.sum()));
  }
  Ok(est)
}
