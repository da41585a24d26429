use std::f64::consts::SQRT_2;

use levy_expfun::levy_core::{JumpMeasure, LevyTriplet, Side};
use levy_expfun::mc::{map_reduce, path_rng, Moments};
use levy_expfun::path_sim::*;
use levy_expfun::Error;
use proptest::prelude::*;

fn cfg(step: f64, horizon: f64, n: usize, seed: u64) -> SimConfig {
  SimConfig::new(step, horizon, n, seed)
}

/// Moments of `ξ(t)` over `n` paths using the streaming sampler.
fn endpoint_moments(t: &LevyTriplet, step: f64, horizon: f64, n: usize, seed: u64, cutoff: Option<f64>) -> Moments {
  let sampler = IncrementSampler::new(t, step, cutoff).unwrap();
  let steps = (horizon / step).round() as usize;
  map_reduce(n, Moments::default, |i, m| {
    let mut rng = path_rng(seed, 99, i as u64);
    let mut x = 0.0;
    for _ in 0..steps {
      x += sampler.sample(&mut rng);
    }
    m.push(x);
  })
}

#[test]
fn zero_triplet_gives_zero_path() {
  let p = simulate_path(&LevyTriplet::brownian(0.0, 0.0).unwrap(), &cfg(0.1, 1.0, 1, 3), 0.0).unwrap();
  assert!(p.values.iter().chain(&p.sup).chain(&p.inf).all(|&v| v == 0.0));
  assert_eq!(p.len(), 11);
}

#[test]
fn pure_drift_path_is_linear() {
  let p = simulate_path(&LevyTriplet::brownian(-1.0, 0.0).unwrap(), &cfg(0.5, 2.0, 1, 3), 0.0).unwrap();
  assert_eq!(p.values, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
  assert_eq!(p.times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
}

#[test]
fn start_point_is_respected() {
  let p = simulate_path(&LevyTriplet::brownian(0.0, 1.0).unwrap(), &cfg(0.1, 1.0, 1, 3), 2.5).unwrap();
  assert_eq!(p.start(), 2.5);
}

#[test]
fn gaussian_variance_of_unit_time_increment() {
  let m = endpoint_moments(&LevyTriplet::brownian(0.0, 1.0).unwrap(), 1.0, 1.0, 100_000, 11, None);
  assert!((m.variance() - 1.0).abs() < 0.02, "variance {}", m.variance());
  assert!(m.mean.abs() < 4.0 * m.stderr());
}

#[test]
fn jump_families_reproduce_first_two_moments() {
  let families = [
    LevyTriplet::new(0.3, 0.4, JumpMeasure::point_mass(2.0, -0.8)).unwrap(),
    LevyTriplet::new(-0.2, 0.0, JumpMeasure::two_sided_exponential(1.5, 0.35, 3.0, 2.0)).unwrap(),
    LevyTriplet::new(0.5, 0.2, JumpMeasure::gaussian(0.8, 0.3, 0.6)).unwrap(),
    LevyTriplet::new(0.1, 0.2, JumpMeasure::tempered_stable(Side::Positive, 0.5, 1.2, 2.0)).unwrap(),
    LevyTriplet::new(0.1, 0.0, JumpMeasure::tempered_stable(Side::Negative, 1.5, 0.4, 1.0)).unwrap(),
  ];
  for (k, t) in families.iter().enumerate() {
    let m = endpoint_moments(t, 0.25, 1.0, 40_000, 100 + k as u64, Some(0.01));
    let (mean, var) = t.laplace_derivatives(0.0).unwrap();
    assert!((m.mean - mean).abs() < 4.0 * m.stderr(), "{t}: mean {} vs {mean}", m.mean);
    // stderr of the sample variance, bounded generously through the fourth moment of a heavy tail
    assert!((m.variance() - var).abs() < 0.05 * var, "{t}: variance {} vs {var}", m.variance());
  }
}

#[test]
fn default_small_jump_cutoff_follows_variance_rule() {
  let t = LevyTriplet::new(0.0, 0.0, JumpMeasure::tempered_stable(Side::Positive, 0.5, 1.0, 1.0)).unwrap();
  let info = IncrementSampler::new(&t, 0.1, None).unwrap().small_jumps().unwrap();
  assert!(!info.rate_capped);
  assert!((info.replaced_fraction - SMALL_JUMP_VARIANCE_FRACTION).abs() < 1e-3 * SMALL_JUMP_VARIANCE_FRACTION);
  assert!(info.large_jump_rate <= MAX_LARGE_JUMP_RATE);
  // near-Gaussian stability: the variance rule would need an enormous jump rate
  let t = LevyTriplet::new(0.0, 0.0, JumpMeasure::tempered_stable(Side::Positive, 1.8, 1.0, 1.0)).unwrap();
  let info = IncrementSampler::new(&t, 0.1, None).unwrap().small_jumps().unwrap();
  assert!(info.rate_capped);
  assert!((info.large_jump_rate - MAX_LARGE_JUMP_RATE).abs() < 1e-6 * MAX_LARGE_JUMP_RATE);
  assert!(info.replaced_fraction > SMALL_JUMP_VARIANCE_FRACTION && info.replaced_fraction < 1.0);
  assert!(IncrementSampler::new(&LevyTriplet::brownian(0.0, 1.0).unwrap(), 0.1, None).unwrap().small_jumps().is_none());
}

#[test]
fn exp_functional_examples() {
  let zero = PathSample::from_values((0..=50).map(|i| i as f64 * 0.1).collect(), vec![0.0; 51]).unwrap();
  assert!((exp_functional(&zero, 2.0).value - 5.0).abs() < 1e-12);
  let piecewise = PathSample::from_values(vec![0.0, 1.0, 2.0], vec![0.0, 2f64.ln(), 2f64.ln()]).unwrap();
  assert!((exp_functional(&piecewise, 1.0).value - 1.5).abs() < 1e-15);
  let drift = simulate_path(&LevyTriplet::brownian(-1.0, 0.0).unwrap(), &cfg(1e-4, 3.0, 1, 0), 0.0).unwrap();
  let v = exp_functional(&drift, 1.0).value;
  assert!((v - (1.0 - (-3.0f64).exp())).abs() < 1e-4, "{v}");
}

#[test]
fn exp_functional_inf_pure_drift() {
  let t = LevyTriplet::brownian(-1.0, 0.0).unwrap();
  let s = exp_functional_inf(&t, 1.0, &cfg(1e-5, 1e3, 1, 0), 1e-4, 0).unwrap();
  assert!((s.value - 1.0).abs() < 1e-4, "{}", s.value);
  assert_eq!(s.truncation, Some(Truncation::TailBound));
  assert_eq!(s.t, None);
  let capped = exp_functional_inf(&t, 1.0, &cfg(1e-3, 2.0, 1, 0), 1e-12, 0).unwrap();
  assert_eq!(capped.truncation, Some(Truncation::Horizon));
}

#[test]
fn exp_functional_inf_rejects_non_positive_mean() {
  let e = exp_functional_inf(&LevyTriplet::brownian(0.0, SQRT_2).unwrap(), 1.0, &cfg(0.01, 10.0, 1, 0), 1e-6, 0);
  assert!(matches!(e, Err(Error::InfiniteFunctional { .. })));
  let e = exp_functional_inf(&LevyTriplet::brownian(0.5, 1.0).unwrap(), 1.0, &cfg(0.01, 10.0, 1, 0), 1e-6, 0);
  assert!(matches!(e, Err(Error::InfiniteFunctional { .. })));
}

#[test]
fn hitting_time_examples() {
  let p = simulate_path(&LevyTriplet::brownian(1.0, 0.0).unwrap(), &cfg(0.01, 5.0, 1, 0), 0.0).unwrap();
  assert!((hitting_time(&p, -2.0).unwrap() - 2.0).abs() <= 0.01 + 1e-12);
  let zero = simulate_path(&LevyTriplet::brownian(0.0, 0.0).unwrap(), &cfg(0.01, 5.0, 1, 0), 0.0).unwrap();
  assert_eq!(hitting_time(&zero, -1.0), None);
}

#[test]
fn reproducible_across_calls_and_thread_counts() {
  let t = LevyTriplet::new(0.2, 0.8, JumpMeasure::two_sided_exponential(2.0, 0.5, 2.0, 3.0)).unwrap();
  let c = cfg(0.05, 2.0, 3000, 42);
  let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
  let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
  let a = one.install(|| simulate_paths(&t, &c, 0.0).unwrap());
  let b = many.install(|| simulate_paths(&t, &c, 0.0).unwrap());
  assert_eq!(a, b);
  assert_eq!(a[1234], simulate_path_indexed(&t, &c, 0.0, 1234).unwrap());
  let other = simulate_path_indexed(&t, &SimConfig { seed: 43, ..c }, 0.0, 1234).unwrap();
  assert_ne!(a[1234], other);
}

#[test]
fn refinement_changes_mean_functional_by_less_than_stderr() {
  let t = LevyTriplet::brownian(0.0, 0.5).unwrap();
  let mean_at = |step: f64| {
    let paths = simulate_paths(&t, &cfg(step, 1.0, 10_000, 5), 0.0).unwrap();
    let mut m = Moments::default();
    paths.iter().for_each(|p| m.push(exp_functional(p, 1.0).value));
    m
  };
  let (coarse, fine) = (mean_at(0.02), mean_at(0.01));
  assert!((coarse.mean - fine.mean).abs() < fine.stderr(), "{} vs {} (se {})", coarse.mean, fine.mean, fine.stderr());
}

#[test]
fn negative_moment_bounds_on_subcritical_brownian() {
  let t = LevyTriplet::brownian(1.0, SQRT_2).unwrap();
  let b = functional_bounds(&t, 1.0, 1.0, 3.0, &cfg(0.01, 3.0, 20_000, 8)).unwrap();
  assert!(b.sup_bound_holds(3.0));
  assert!(b.doob_bound_holds(3.0));
  assert!(b.product_bound_holds(3.0));
  assert!(b.reversal_holds(3.0), "{:?} vs {:?}", b.neg_moment, b.reversed);
  assert!(functional_bounds(&t, 1.0, 1.0, 1.5, &cfg(0.01, 3.0, 10, 8)).is_err());
}

#[test]
fn path_dump_round_trip() {
  let t = LevyTriplet::brownian(0.0, 1.0).unwrap();
  let c = cfg(0.1, 1.0, 1, 77);
  let p = simulate_path(&t, &c, 0.0).unwrap();
  let mut buf = Vec::new();
  write_path_dump(&mut buf, &p, &t.hash(), c.seed, c.step).unwrap();
  assert_eq!(buf.len(), 8 + 16 + 24 + 16 * p.len());
  let back = read_path_dump(buf.as_slice()).unwrap();
  assert_eq!(back.path, p);
  assert_eq!((back.triplet_hash, back.seed, back.step), (t.hash(), 77, 0.1));
  assert!(read_path_dump(&b"garbage!"[..]).is_err());
}

#[test]
fn config_validation_lists_problems() {
  let bad = SimConfig { step: 2.0, horizon: 1.0, n_paths: 0, seed: 0, small_jump_cutoff: Some(-1.0) };
  let fields: Vec<String> = bad.violations().into_iter().map(|v| v.0).collect();
  assert_eq!(fields, ["step", "n_paths", "small_jump_cutoff"]);
  assert!(cfg(0.3, 1.0, 1, 0).n_steps().is_err());
}

proptest! {
  #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

  #[test]
  fn path_invariants(a in -2.0..2.0f64, s in 0.0..2.0f64, rate in 0.0..3.0f64, start in -3.0..3.0f64, seed in any::<u64>(), alpha in 0.1..2.0f64) {
    let t = LevyTriplet::new(a, s, JumpMeasure::two_sided_exponential(rate, 0.4, 2.0, 1.5)).unwrap();
    let p = simulate_path_indexed(&t, &cfg(0.05, 2.0, 1, seed), start, seed % 17).unwrap();
    prop_assert_eq!(p.values[0], start);
    for i in 0..p.len() {
      prop_assert!(p.inf[i] <= p.values[i] && p.values[i] <= p.sup[i]);
      if i > 0 {
        prop_assert!(p.sup[i] >= p.sup[i - 1] && p.inf[i] <= p.inf[i - 1]);
      }
    }
    let f = exp_functional(&p, alpha);
    let min = *p.inf.last().unwrap();
    prop_assert!(f.value >= 0.0);
    prop_assert!(f.value <= p.horizon() * (-alpha * min).exp() * (1.0 + 1e-12));
  }
}
