use levy_expfun::cbre::*;
use levy_expfun::levy_core::{JumpMeasure, Side};
use levy_expfun::path_sim::{exp_functional, exp_functional_inf_samples, simulate_path, PathSample, SimConfig};
use levy_expfun::Error;
use proptest::prelude::*;

fn params(x0: f64, env: EnvironmentSpec) -> CbreParams {
  CbreParams { x0, c: 1.0, alpha: 1.0, env }
}

#[test]
fn environment_drift_examples() {
  let xi = xi_from_environment(&EnvironmentSpec::brownian(0.7, 0.0)).unwrap();
  assert_eq!(xi.mean_increment(), 0.7);
  let xi = xi_from_environment(&EnvironmentSpec::brownian(0.7, 1.5)).unwrap();
  assert!((xi.mean_increment() - (0.7 - 1.125)).abs() < 1e-15);
  assert_eq!(xi.sigma, 1.5);
  let ln2 = 2f64.ln();
  let env = EnvironmentSpec { beta_drift: 0.3, sigma: 0.0, jumps: JumpMeasure::point_mass(1.0, ln2) };
  let xi = xi_from_environment(&env).unwrap();
  assert!((xi.mean_increment() - (0.3 - 1.0 + ln2)).abs() < 1e-14);
}

#[test]
fn environment_drift_counts_large_jumps_and_unit_atoms() {
  // a jump of size 2 is outside [-1, 1]: it only adds 2 per unit rate
  let env = EnvironmentSpec { beta_drift: 0.0, sigma: 0.0, jumps: JumpMeasure::point_mass(0.5, 2.0) };
  assert!((xi_from_environment(&env).unwrap().mean_increment() - 1.0).abs() < 1e-15);
  // an atom at exactly 1 belongs to the compensated part
  let env = EnvironmentSpec { beta_drift: 0.0, sigma: 0.0, jumps: JumpMeasure::point_mass(1.0, 1.0) };
  let want = -(1f64.exp() - 2.0);
  assert!((xi_from_environment(&env).unwrap().mean_increment() - want).abs() < 1e-15);
}

#[test]
fn environment_drift_for_continuous_jumps_matches_direct_quadrature() {
  let jumps = JumpMeasure::tempered_stable(Side::Negative, 0.6, 0.4, 2.0);
  let env = EnvironmentSpec { beta_drift: 0.5, sigma: 0.3, jumps };
  // density 0.4 e^{-2y} y^{-1.6} at z = -y; Simpson with y = u^{2.5} (p = 1/(2-α)) near 0
  let dens = |y: f64| 0.4 * (-2.0 * y).exp() * y.powf(-1.6);
  let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize| {
    let h = (b - a) / n as f64;
    (0..=n).map(|i| {
      let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
      w * f(a + i as f64 * h)
    }).sum::<f64>() * h / 3.0
  };
  let p = 1.0 / 1.4;
  let inner = simpson(&|u: f64| {
    if u == 0.0 {
      // limit of (y²/2)·0.4·y^{-1.6}·p·u^{p-1}, which is constant in u
      return 0.2 * p;
    }
    let y = u.powf(p);
    ((-y).exp_m1() + y) * dens(y) * p * u.powf(p - 1.0)
  }, 0.0, 1.0, 200_000);
  let outer = simpson(&|y: f64| -y * dens(y), 1.0, 40.0, 200_000);
  let want = 0.5 - 0.045 - inner + outer;
  let got = xi_from_environment(&env).unwrap().mean_increment();
  assert!((got - want).abs() < 1e-8, "{got} vs {want}");
}

#[test]
fn u_transform_examples() {
  let zero = PathSample::from_values((0..=100).map(|i| i as f64 * 0.05).collect(), vec![0.0; 101]).unwrap();
  assert_eq!(u_transform(&zero, 2.0, 2.0, Lambda::Finite(3.7), 1.0, 0.5).unwrap(), 3.7);
  let (c, alpha, t) = (0.8, 0.6, 5.0);
  let u = u_transform(&zero, 0.0, t, Lambda::Infinite, c, alpha).unwrap();
  assert!((u - (c * alpha * t).powf(-1.0 / alpha)).abs() < 1e-12 * u);
  assert_eq!(u_transform(&zero, 0.0, t, Lambda::Infinite, 0.0, alpha).unwrap(), f64::INFINITY);
  assert!(matches!(u_transform(&zero, 0.0, 1.01, Lambda::Infinite, c, alpha), Err(Error::Grid(_))));
}

#[test]
fn ode_residual_is_first_order() {
  let (c, alpha, t) = (1.0, 0.7, 2.0);
  let residual = |h: f64| {
    let n = (t / h).round() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let path = PathSample::from_values(times.clone(), times.iter().map(|s| s.sin()).collect()).unwrap();
    let mut worst = 0.0f64;
    for k in 0..n / 2 {
      let (r, r1) = (times[k], times[k + 1]);
      let u0 = u_transform(&path, r, t, Lambda::Finite(2.0), c, alpha).unwrap();
      let u1 = u_transform(&path, r1, t, Lambda::Finite(2.0), c, alpha).unwrap();
      let fd = (u1 - u0) / h;
      worst = worst.max((fd - c * (-alpha * r.sin()).exp() * u0.powf(1.0 + alpha)).abs());
    }
    worst
  };
  let (e1, e2) = (residual(0.02), residual(0.01));
  let order = (e1 / e2).log2();
  assert!(order >= 0.9, "order {order}");
}

#[test]
fn zero_environment_survival_is_closed_form() {
  // β = σ = 0 and no jumps: ξ ≡ 0
  let p = CbreParams { x0: 1.5, c: 0.7, alpha: 0.8, env: EnvironmentSpec::brownian(0.0, 0.0) };
  let grid = [0.0, 0.5, 1.0, 3.0, 10.0];
  let s = survival_probability(&p, &grid, &SimConfig::new(0.01, 10.0, 20, 1)).unwrap();
  for (t, v) in s.times().iter().zip(s.probabilities()) {
    let want = if *t == 0.0 { 1.0 } else { 1.0 - (-1.5 * (0.7 * 0.8 * t).powf(-1.0 / 0.8)).exp() };
    assert!((v - want).abs() < 1e-6, "t={t}: {v} vs {want}");
  }
}

#[test]
fn classification_labels_and_constants() {
  let sigma = 2f64.sqrt();
  let labels: Vec<String> = [1.0, 0.0, -1.0, -2.0, -3.0]
    .iter()
    .map(|a0| classify_cbre(&params(1.0, EnvironmentSpec::brownian(a0 + 1.0, sigma))).unwrap().label)
    .collect();
  assert_eq!(
    labels,
    ["Supercritical", "Critical", "WeaklySubcritical", "IntermediatelySubcritical", "StronglySubcritical"]
  );
  let p = CbreParams { x0: 2.0, c: 0.5, alpha: 0.5, env: EnvironmentSpec::brownian(-1.0, sigma) };
  let c = classify_cbre(&p).unwrap();
  assert!((c.tail_constant - 2.0 * 0.25f64.powf(-2.0)).abs() < 1e-12);
  assert!(c.notes.iter().any(|n| n.contains("taken at 1")));
  let c = classify_cbre(&params(1.0, EnvironmentSpec::brownian(-2.0, sigma))).unwrap();
  assert!(c.notes.iter().any(|n| n.contains("Φ'(1) < 0")));
  assert!((c.predicted_decay.0 + 2.0).abs() < 1e-12);
}

#[test]
fn supercritical_survival_plateau_matches_infinite_horizon_functional() {
  let p = params(1.0, EnvironmentSpec::brownian(2.0, 2f64.sqrt()));
  let cfg = SimConfig::new(0.01, 40.0, 10_000, 2);
  let s = survival_probability(&p, &[5.0, 10.0, 20.0, 40.0], &cfg).unwrap();
  assert!(s.curve.monotonicity_violation(0.0).is_none());
  let xi = xi_from_environment(&p.env).unwrap();
  let f = p.fspec();
  let inf = exp_functional_inf_samples(&xi, 1.0, &SimConfig::new(0.01, 400.0, 10_000, 3), 1e-6).unwrap();
  let n = inf.len() as f64;
  let vals: Vec<f64> = inf.iter().map(|s| f.eval(s.value)).collect();
  let mean = vals.iter().sum::<f64>() / n;
  let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
  let last = s.curve.points.last().unwrap();
  assert!((last.estimate - mean).abs() < 3.0 * last.stderr.hypot(se), "{} vs {mean}", last.estimate);
  // ξ = t + √2 B: A_∞ = 1/Z with Z ~ Gamma(1): E[1 - e^{-Z}] = 1/2
  assert!((mean - 0.5).abs() < 3.0 * se + 0.005);
}

#[test]
fn invalid_parameters_are_listed() {
  let p = CbreParams { x0: -1.0, c: 0.0, alpha: 1.5, env: EnvironmentSpec::brownian(0.0, -1.0) };
  let fields: Vec<String> = p.violations().into_iter().map(|(f, _)| f).collect();
  assert_eq!(fields, ["cbre.x0", "cbre.c", "cbre.alpha", "environment.sigma"]);
}

proptest! {
  #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

  #[test]
  fn flow_property(seed in 0u64..10_000, a in 0usize..40, b in 0usize..40, c2 in 0usize..40, lam in 0.1f64..10.0, alpha in 0.2f64..1.0) {
    let env_xi = xi_from_environment(&EnvironmentSpec::brownian(0.2, 1.0)).unwrap();
    let path = simulate_path(&env_xi, &SimConfig::new(0.05, 2.0, 1, seed), 0.0).unwrap();
    let mut k = [a, b, c2];
    k.sort();
    let (r, s, t) = (k[0] as f64 * 0.05, k[1] as f64 * 0.05, k[2] as f64 * 0.05);
    let direct = u_transform(&path, r, t, Lambda::Finite(lam), 1.3, alpha).unwrap();
    let inner = u_transform(&path, s, t, Lambda::Finite(lam), 1.3, alpha).unwrap();
    let composed = u_transform(&path, r, s, Lambda::Finite(inner), 1.3, alpha).unwrap();
    prop_assert!((direct - composed).abs() <= 1e-12 * direct);
  }

  #[test]
  fn survival_is_monotone_in_x0_and_consistent_with_u(seed in 0u64..1000, x0 in 0.1f64..3.0) {
    let env = EnvironmentSpec::brownian(0.5, 1.0);
    let cfg = SimConfig::new(0.05, 4.0, 100, seed);
    let grid = [1.0, 2.0, 4.0];
    let lo = survival_probability_with_tilt(&params(x0, env), &grid, &cfg, None, None).unwrap();
    let hi = survival_probability_with_tilt(&params(x0 * 1.5, env), &grid, &cfg, None, None).unwrap();
    for (a, b) in lo.probabilities().iter().zip(hi.probabilities()) {
      prop_assert!(*a <= b && *a >= 0.0 && b <= 1.0);
    }
    // integrand on one path: 1 - exp(-x u_{0,t}(∞)) = F_x(A_t)
    let xi = xi_from_environment(&env).unwrap();
    let path = simulate_path(&xi, &cfg, 0.0).unwrap();
    let u = u_transform(&path, 0.0, 4.0, Lambda::Infinite, 1.0, 1.0).unwrap();
    let a_t = exp_functional(&path, 1.0).value;
    let (lhs, rhs) = (-(-x0 * u).exp_m1(), params(x0, env).fspec().eval(a_t));
    prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs, "{} vs {}", lhs, rhs);
  }
}
