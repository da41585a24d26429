use std::f64::consts::{E, PI, SQRT_2};

use levy_expfun::levy_core::*;
use levy_expfun::Error;
use proptest::prelude::*;

fn unit_atom() -> LevyTriplet {
  LevyTriplet::new(0.0, 0.0, JumpMeasure::point_mass(1.0, 1.0)).unwrap()
}

fn families() -> Vec<LevyTriplet> {
  vec![
    LevyTriplet::brownian(0.7, 1.3).unwrap(),
    LevyTriplet::new(-0.2, 0.5, JumpMeasure::point_mass(2.0, -0.8)).unwrap(),
    LevyTriplet::new(0.4, 0.3, JumpMeasure::two_sided_exponential(1.5, 0.35, 3.0, 2.0)).unwrap(),
    LevyTriplet::new(1.0, 0.0, JumpMeasure::gaussian(0.8, 0.3, 0.6)).unwrap(),
    LevyTriplet::new(0.1, 0.2, JumpMeasure::tempered_stable(Side::Positive, 0.5, 1.2, 2.0)).unwrap(),
    LevyTriplet::new(0.1, 0.0, JumpMeasure::tempered_stable(Side::Negative, 1.0, 0.7, 1.5)).unwrap(),
    LevyTriplet::new(-0.3, 0.4, JumpMeasure::tempered_stable(Side::Positive, 1.5, 0.4, 1.0)).unwrap(),
  ]
}

#[test]
fn laplace_exponent_examples() {
  let bm = LevyTriplet::brownian(1.0, SQRT_2).unwrap();
  assert!(bm.laplace_exponent(1.0).abs() < 1e-15);
  for t in families() {
    assert_eq!(t.laplace_exponent(0.0), 0.0);
  }
  assert!((unit_atom().laplace_exponent(1.0) - (E - 2.0)).abs() < 1e-15);
}

#[test]
fn derivative_examples() {
  let bm = LevyTriplet::brownian(1.0, SQRT_2).unwrap();
  let (d1, d2) = bm.laplace_derivatives(0.0).unwrap();
  assert_eq!(d1, -1.0);
  assert!((d2 - 2.0).abs() < 1e-15);
  assert_eq!(unit_atom().laplace_derivatives(0.0).unwrap().0, 0.0);
}

#[test]
fn characteristic_exponent_examples() {
  let g = LevyTriplet::brownian(0.0, 1.0).unwrap();
  let psi = g.characteristic_exponent(2.0);
  assert!((psi.re - 2.0).abs() < 1e-15 && psi.im == 0.0);
  for t in families() {
    assert_eq!(t.characteristic_exponent(0.0).norm(), 0.0);
  }
  let psi = unit_atom().characteristic_exponent(PI);
  assert!((psi.re - 2.0).abs() < 1e-14 && (psi.im - PI).abs() < 1e-14);
}

#[test]
fn characteristic_exponent_matches_quadrature() {
  for t in families() {
    for &lam in &[-2.5, -0.3, 0.7, 4.0] {
      let psi = t.characteristic_exponent(lam);
      let re = t.jumps.integrate("1-cos", |x| 2.0 * (0.5 * lam * x).sin().powi(2), f64::NEG_INFINITY, f64::INFINITY).unwrap();
      let im = t.jumps.integrate("x-sin", |x| lam * x - (lam * x).sin(), f64::NEG_INFINITY, f64::INFINITY).unwrap();
      let want_re = 0.5 * t.sigma * t.sigma * lam * lam + re;
      let want_im = t.drift_a * lam + im;
      assert!((psi.re - want_re).abs() < 1e-8 * (1.0 + want_re.abs()), "{t}: Re Ψ({lam}) {} vs {want_re}", psi.re);
      assert!((psi.im - want_im).abs() < 1e-8 * (1.0 + want_im.abs()), "{t}: Im Ψ({lam}) {} vs {want_im}", psi.im);
    }
  }
}

#[test]
fn domain_examples() {
  let d = LevyTriplet::brownian(3.0, 1.0).unwrap().domain();
  assert!(d.lower == f64::NEG_INFINITY && d.upper == f64::INFINITY);
  let d = LevyTriplet::new(0.0, 1.0, JumpMeasure::two_sided_exponential(1.0, 0.5, 3.0, 2.0)).unwrap().domain();
  assert_eq!((d.lower, d.upper, d.lower_closed, d.upper_closed), (-2.0, 3.0, false, false));
  let d = LevyTriplet::new(0.0, 0.0, JumpMeasure::tempered_stable(Side::Positive, 0.6, 1.0, 1.0)).unwrap().domain();
  assert_eq!(d.upper, 1.0);
  assert!(d.upper_closed && d.contains(1.0) && !d.interior_contains(1.0));
  for t in families() {
    let d = t.domain();
    assert!(d.lower <= 0.0 && d.upper >= 0.0);
  }
}

#[test]
fn outside_domain_is_infinite_and_derivative_errors() {
  let t = LevyTriplet::new(0.0, 1.0, JumpMeasure::two_sided_exponential(1.0, 0.5, 3.0, 2.0)).unwrap();
  assert_eq!(t.laplace_exponent(3.0), f64::INFINITY);
  assert_eq!(t.laplace_exponent(-2.5), f64::INFINITY);
  assert!(matches!(t.laplace_derivatives(3.0), Err(Error::Domain { .. })));
  let ts = LevyTriplet::new(0.0, 0.0, JumpMeasure::tempered_stable(Side::Positive, 0.6, 1.0, 1.0)).unwrap();
  assert!(ts.laplace_exponent(1.0).is_finite());
  assert_eq!(ts.laplace_exponent(1.0 + 1e-9), f64::INFINITY);
  assert!(ts.laplace_derivatives(1.0).is_err());
}

/// Direct, cancellation-prone evaluation of the tempered stable exponent, usable away from 0.
fn ts_direct(alpha: f64, c: f64, lam: f64, u: f64) -> f64 {
  if alpha == 1.0 {
    if u == lam {
      return c * lam; // (λ-u) ln(λ-u) → 0
    }
    return c * ((lam - u) * ((lam - u) / lam).ln() + u);
  }
  c * statrs::function::gamma::gamma(-alpha) * ((lam - u).powf(alpha) - lam.powf(alpha) + alpha * lam.powf(alpha - 1.0) * u)
}

#[test]
fn closed_forms_match_quadrature_and_direct_formulas() {
  for t in families() {
    let d = t.domain();
    for &lam in &[-1.7, -0.9, -0.05, 1e-4, 0.4, 1.2, 1.9] {
      if !d.interior_contains(lam) {
        continue;
      }
      let closed = t.laplace_exponent(lam);
      let quad = t.laplace_exponent_quadrature(lam).unwrap();
      assert!((closed - quad).abs() <= 1e-9 * (1.0 + closed.abs()), "{t} λ={lam}: {closed} vs {quad}");
    }
  }
  for &(alpha, c, lam) in &[(0.5, 1.2, 2.0), (1.0, 0.7, 1.5), (1.5, 0.4, 1.0)] {
    let t = LevyTriplet::new(0.0, 0.0, JumpMeasure::tempered_stable(Side::Positive, alpha, c, lam)).unwrap();
    for &u in &[-3.0, -0.5, 0.5, 0.9 * lam, lam] {
      let got = t.laplace_exponent(u);
      let want = ts_direct(alpha, c, lam, u);
      assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-3), "α={alpha} u={u}: {got} vs {want}");
    }
  }
}

#[test]
fn small_lambda_keeps_relative_precision() {
  // Φ(λ) ≈ Φ''(0)λ²/2 near 0 for zero-drift triplets; naive formulas lose every digit here.
  let lam = 1e-7;
  for t in families() {
    let t0 = LevyTriplet { drift_a: 0.0, ..t };
    let (_, d2) = t0.laplace_derivatives(0.0).unwrap();
    let v = t0.laplace_exponent(lam);
    let approx = 0.5 * d2 * lam * lam;
    assert!((v - approx).abs() < 1e-5 * approx, "{t}: {v} vs {approx}");
  }
}

#[test]
fn esscher_examples() {
  let bm = LevyTriplet::brownian(1.0, SQRT_2).unwrap();
  let tilted = bm.esscher(0.5).unwrap();
  assert!(tilted.drift_a.abs() < 1e-15 && tilted.sigma == SQRT_2 && tilted.jumps == JumpMeasure::Zero);
  for t in families() {
    let id = t.esscher(0.0).unwrap();
    for &lam in &[-0.5, 0.3, 0.8] {
      let (a, b) = (id.laplace_exponent(lam), t.laplace_exponent(lam));
      assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
    }
  }
  let t = LevyTriplet::new(0.0, 1.0, JumpMeasure::two_sided_exponential(2.0, 0.4, 3.0, 2.0)).unwrap();
  let tt = t.esscher(1.0).unwrap();
  match tt.jumps {
    JumpMeasure::CompoundPoisson { rate, law: JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } } => {
      assert_eq!((eta_up, eta_down), (2.0, 3.0));
      let up = 2.0 * 0.4 * 3.0 / 2.0;
      let down = 2.0 * 0.6 * 2.0 / 3.0;
      assert!((rate - (up + down)).abs() < 1e-14);
      assert!((p_up - up / (up + down)).abs() < 1e-14);
    }
    other => panic!("unexpected {other:?}"),
  }
}

#[test]
fn esscher_rejects_boundary() {
  let ts = LevyTriplet::new(0.0, 0.0, JumpMeasure::tempered_stable(Side::Positive, 0.6, 1.0, 1.0)).unwrap();
  assert!(matches!(ts.esscher(1.0), Err(Error::Domain { .. })));
}

#[test]
fn dual_examples() {
  for t in families() {
    for &lam in &[-0.9, -0.2, 0.6, 1.4] {
      let (a, b) = (t.dual().laplace_exponent(lam), t.laplace_exponent(-lam));
      assert!(a == b || (a - b).abs() <= 1e-14 * b.abs(), "{t}: {a} vs {b}");
    }
  }
  for t in families().into_iter().filter(|t| !matches!(t.jumps, JumpMeasure::CompoundPoisson { law: JumpLaw::TwoSidedExponential { .. }, .. })) {
    assert_eq!(t.dual().dual(), t);
  }
  let t = LevyTriplet::new(1.0, 0.0, JumpMeasure::point_mass(1.0, 1.0)).unwrap();
  assert_eq!(t.dual(), LevyTriplet::new(-1.0, 0.0, JumpMeasure::point_mass(1.0, -1.0)).unwrap());
}

#[test]
fn find_rho_examples() {
  let bm = LevyTriplet::brownian(1.0, SQRT_2).unwrap();
  let rho = find_rho(&bm, 1.0).unwrap();
  assert!((rho - 0.5).abs() < 1e-12);
  assert!((bm.laplace_exponent(rho) + 0.25).abs() < 1e-12);
  assert!((find_rho(&bm, 0.6).unwrap() - 0.5).abs() < 1e-12);
  let err = find_rho(&LevyTriplet::brownian(2.0, SQRT_2).unwrap(), 1.0).unwrap_err();
  match err {
    Error::RegimeMismatch(msg) => assert!(msg.contains("= 0"), "{msg}"),
    other => panic!("{other:?}"),
  }
}

#[test]
fn find_rho_with_jumps_meets_tolerance() {
  let t = LevyTriplet::new(1.0, 0.5, JumpMeasure::tempered_stable(Side::Positive, 1.2, 0.8, 3.0)).unwrap();
  let rho = find_rho(&t, 2.5).unwrap();
  let (d1, d2) = t.laplace_derivatives(rho).unwrap();
  assert!(d1.abs() <= 1e-10 * d2.max(1.0));
}

#[test]
fn classify_canonical_configs() {
  let opts = RegimeOptions { exact_critical: true, ..Default::default() };
  let names: Vec<&str> = [-1.0, 0.0, 1.0, 2.0, 3.0]
    .iter()
    .map(|&a| classify_regime(&LevyTriplet::brownian(a, SQRT_2).unwrap(), 1.0, &opts).unwrap().regime.name())
    .collect();
  assert_eq!(
    names,
    ["supercritical", "critical", "weakly_subcritical", "intermediately_subcritical", "strongly_subcritical"]
  );
  let r = classify_regime(&LevyTriplet::brownian(1.0, SQRT_2).unwrap(), 1.0, &opts).unwrap();
  match r.regime {
    Regime::WeaklySubcritical { rho, phi_rho, .. } => {
      assert!((rho - 0.5).abs() < 1e-12 && (phi_rho + 0.25).abs() < 1e-12)
    }
    other => panic!("{other:?}"),
  }
  assert_eq!(r.mean, -1.0);
}

#[test]
fn classify_flags_undeclared_boundary_and_rejects_bad_beta() {
  let bm = LevyTriplet::brownian(0.0, SQRT_2).unwrap();
  let r = classify_regime(&bm, 1.0, &RegimeOptions::default()).unwrap();
  assert_eq!(r.warnings.len(), 1);
  assert!(classify_regime(&bm, 0.0, &RegimeOptions::default()).is_err());
  let ts = LevyTriplet::new(0.0, 0.0, JumpMeasure::tempered_stable(Side::Positive, 0.6, 1.0, 1.0)).unwrap();
  assert!(classify_regime(&ts, 1.0, &RegimeOptions::default()).is_err());
}

#[test]
fn zero_tolerance_is_configurable() {
  let bm = LevyTriplet::brownian(1e-6, 1.0).unwrap();
  let strict = classify_regime(&bm, 1.0, &RegimeOptions::default()).unwrap();
  assert_ne!(strict.regime.name(), "critical");
  let loose = classify_regime(&bm, 1.0, &RegimeOptions { zero_tol: 1e-5, exact_critical: true }).unwrap();
  assert_eq!(loose.regime.name(), "critical");
}

fn family_strategy() -> impl Strategy<Value = LevyTriplet> {
  let drift = -2.0..2.0f64;
  let sigma = 0.0..2.0f64;
  prop_oneof![
    (drift.clone(), sigma.clone()).prop_map(|(a, s)| LevyTriplet::brownian(a, s).unwrap()),
    (drift.clone(), sigma.clone(), 0.1..3.0f64, prop_oneof![-2.0..-0.1f64, 0.1..2.0f64])
      .prop_map(|(a, s, r, h)| LevyTriplet::new(a, s, JumpMeasure::point_mass(r, h)).unwrap()),
    (drift.clone(), sigma.clone(), 0.1..3.0f64, 0.0..1.0f64, 1.0..5.0f64, 1.0..5.0f64).prop_map(
      |(a, s, r, p, u, d)| LevyTriplet::new(a, s, JumpMeasure::two_sided_exponential(r, p, u, d)).unwrap()
    ),
    (drift.clone(), sigma.clone(), 0.1..3.0f64, -1.0..1.0f64, 0.05..1.0f64)
      .prop_map(|(a, s, r, m, sd)| LevyTriplet::new(a, s, JumpMeasure::gaussian(r, m, sd)).unwrap()),
    (drift, sigma, any::<bool>(), 0.1..1.9f64, 0.1..2.0f64, 1.0..4.0f64).prop_map(|(a, s, pos, al, c, l)| {
      let side = if pos { Side::Positive } else { Side::Negative };
      LevyTriplet::new(a, s, JumpMeasure::tempered_stable(side, al, c, l)).unwrap()
    }),
  ]
}

proptest! {
  #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(256) })]

  #[test]
  fn esscher_identity(t in family_strategy(), th in -0.9..0.9f64, lam in -0.9..0.9f64) {
    prop_assume!(t.domain().interior_contains(th + lam));
    let tilted = t.esscher(th).unwrap();
    let want = t.laplace_exponent(lam + th) - t.laplace_exponent(th);
    let got = tilted.laplace_exponent(lam);
    prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "{} vs {}", got, want);
  }

  #[test]
  fn derivatives_match_finite_differences(t in family_strategy(), lam in -0.8..0.8f64) {
    let h = 1e-4;
    let (d1, d2) = t.laplace_derivatives(lam).unwrap();
    let (p, m, c) = (t.laplace_exponent(lam + h), t.laplace_exponent(lam - h), t.laplace_exponent(lam));
    let fd1 = (p - m) / (2.0 * h);
    let fd2 = (p - 2.0 * c + m) / (h * h);
    prop_assert!((fd1 - d1).abs() <= 1e-5 * d1.abs().max(1.0), "Φ' {} vs {}", d1, fd1);
    prop_assert!((fd2 - d2).abs() <= 1e-5 * d2.abs().max(1.0), "Φ'' {} vs {}", d2, fd2);
  }

  #[test]
  fn exponent_is_convex_and_vanishes_at_zero(t in family_strategy(), x in -0.9..0.9f64, y in -0.9..0.9f64, w in 0.0..1.0f64) {
    prop_assert_eq!(t.laplace_exponent(0.0), 0.0);
    let mid = t.laplace_exponent(w * x + (1.0 - w) * y);
    let chord = w * t.laplace_exponent(x) + (1.0 - w) * t.laplace_exponent(y);
    prop_assert!(mid <= chord + 1e-12 * (1.0 + chord.abs()));
    prop_assert!(t.laplace_derivatives(x).unwrap().1 >= 0.0);
  }

  #[test]
  fn dual_reflects_exponent(t in family_strategy(), lam in -0.9..0.9f64) {
    let a = t.dual().laplace_exponent(lam);
    let b = t.laplace_exponent(-lam);
    prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
    let dd = t.dual().dual();
    prop_assert!((dd.laplace_exponent(lam) - t.laplace_exponent(lam)).abs() <= 1e-14 * (1.0 + b.abs()));
  }

  #[test]
  fn characteristic_exponent_has_non_negative_real_part(t in family_strategy(), lam in -10.0..10.0f64) {
    prop_assert!(t.characteristic_exponent(lam).re >= -1e-12);
  }
}
