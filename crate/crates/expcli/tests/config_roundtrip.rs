use expcli::config::{parse_config, validate_config, ExperimentConfig, Kind};
use levy_expfun::asymptotics::{FSpec, Pin};
use levy_expfun::cbre::EnvironmentSpec;
use levy_expfun::levy_core::{JumpMeasure, LevyTriplet, Side};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = Kind> {
  prop_oneof![
    Just(Kind::Exponent),
    Just(Kind::Simulate),
    Just(Kind::Firstpassage),
    Just(Kind::Asymptotics),
    Just(Kind::Cbre),
    Just(Kind::Acceptance)
  ]
}

fn jumps() -> impl Strategy<Value = JumpMeasure> {
  prop_oneof![
    Just(JumpMeasure::Zero),
    (0.0..5.0, -3.0..3.0).prop_map(|(r, h)| JumpMeasure::point_mass(r, h)),
    (0.0..5.0, 0.0..1.0, 0.1..5.0, 0.1..5.0).prop_map(|(r, p, u, d)| JumpMeasure::two_sided_exponential(r, p, u, d)),
    (0.0..5.0, -1.0..1.0, 0.0..2.0).prop_map(|(r, m, s)| JumpMeasure::gaussian(r, m, s)),
    (any::<bool>(), 0.05..1.95, 0.0..3.0, 0.1..5.0).prop_map(|(pos, a, c, l)| {
      JumpMeasure::tempered_stable(if pos { Side::Positive } else { Side::Negative }, a, c, l)
    }),
  ]
}

fn fspec() -> impl Strategy<Value = FSpec> {
  prop_oneof![
    (0.1..5.0, 0.1..5.0, 0.1..1.0).prop_map(|(x0, c, alpha)| FSpec::CbreTail { x0, c, alpha }),
    (0.1..5.0, 0.1..3.0, 0.1..2.0, 0.0..1.0).prop_map(|(k, beta, alpha, f)| FSpec::PowerTail { k, beta, alpha, beta0: f * beta }),
  ]
}

fn pin() -> impl Strategy<Value = Pin> {
  prop_oneof![Just(Pin::Free), (-3.0..0.0).prop_map(Pin::Rate), (-2.0..0.5).prop_map(Pin::Exponent)]
}

fn grid() -> impl Strategy<Value = Vec<f64>> {
  prop::collection::vec(-10.0..200.0f64, 0..6)
}

prop_compose! {
  fn config()(
    kind in prop::option::of(kind()),
    seed in prop::option::of(any::<u64>()),
    n_paths in 1usize..10_000_000,
    step in 1e-4..1.0f64,
    horizon in prop::option::of(1.0..500.0f64),
    small_jump_cutoff in prop::option::of(1e-4..0.5f64),
    alpha in 0.1..2.0f64,
    beta in prop::option::of(0.1..3.0f64),
    tilt in prop::option::of(-1.0..2.0f64),
    triplet in prop::option::of((-3.0..3.0f64, 0.0..2.0f64, jumps())),
    environment in prop::option::of((-3.0..3.0f64, 0.0..2.0f64, jumps())),
    fspec in prop::option::of(fspec()),
    grids in (grid(), grid(), grid(), grid()),
    fit in pin(),
    fp in prop::option::of(0.1..5.0f64),
    exact_critical in any::<bool>(),
    rate_rel in 0.001..0.5f64,
    criteria in prop::collection::vec(1u8..13, 0..4),
  ) -> ExperimentConfig {
    let mut c = parse_config("").unwrap();
    c.kind = kind;
    c.seed = seed;
    c.n_paths = n_paths;
    c.step = step;
    c.horizon = horizon;
    c.small_jump_cutoff = small_jump_cutoff;
    c.alpha = alpha;
    c.beta = beta;
    c.tilt = tilt;
    c.triplet = triplet.map(|(drift_a, sigma, jumps)| LevyTriplet { drift_a, sigma, jumps });
    c.environment = environment.map(|(beta_drift, sigma, jumps)| EnvironmentSpec { beta_drift, sigma, jumps });
    c.fspec = fspec;
    (c.grid.t, c.grid.x, c.grid.y, c.grid.lambda) = grids;
    c.fit = fit;
    c.first_passage = fp.map(|x| expcli::config::FirstPassageSection { x });
    c.regime.exact_critical = exact_critical;
    c.tolerances.rate_rel = rate_rel;
    c.acceptance.criteria = criteria;
    c
  }
}

proptest! {
  #![proptest_config(ProptestConfig::with_cases(256))]

  #[test]
  fn serialising_and_parsing_gives_the_same_config(c in config()) {
    let text = c.to_toml();
    let back = parse_config(&text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?;
    prop_assert_eq!(&back, &c);
    prop_assert_eq!(back.to_toml(), text);
  }

  #[test]
  fn valid_configs_stay_valid(c in config()) {
    if let Ok(v) = validate_config(&c.to_toml()) {
      prop_assert_eq!(validate_config(&v.to_toml()).unwrap(), v);
    }
  }
}

#[test]
fn shipped_examples_validate() {
  let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
  let mut n = 0;
  for entry in std::fs::read_dir(dir).unwrap() {
    let path = entry.unwrap().path();
    if path.extension().is_some_and(|e| e == "toml") {
      let text = std::fs::read_to_string(&path).unwrap();
      if let Err(d) = validate_config(&text) {
        panic!("{}: {d:?}", path.display());
      }
      n += 1;
    }
  }
  assert!(n >= 6);
}
