//! Runs one experiment kind and assembles its report.

use levy_expfun::asymptotics::{
  check_conditions, coeff_d2, coeff_d3, coeff_d4, coeff_regime5, estimate_expectation_curve, first_passage_asymptotics, fit_decay,
  CoefficientEstimate, DecayFit, ExpectationCurve, Pin,
};
use levy_expfun::cbre::{classify_cbre, survival_probability_with_tilt};
use levy_expfun::levy_core::{classify_regime, JumpMeasure, LevyTriplet, Regime};
use levy_expfun::mc::{map_reduce, Moments};
use levy_expfun::path_sim::{simulate_path_indexed, simulate_paths, SimConfig};
use serde_json::json;

use crate::acceptance::Suite;
use crate::config::{ExperimentConfig, Kind, Tolerances};
use crate::report::{CheckResult, Report, Table};

type Run = Result<(), String>;

/// Runs the experiment; library errors end up in `report.error` rather than aborting.
pub fn run_experiment(config: &ExperimentConfig, progress: &mut dyn FnMut(&str)) -> Report {
  let mut report = Report::new(config);
  let outcome = match config.kind() {
    Kind::Exponent => exponent(config, &mut report),
    Kind::Simulate => simulate(config, &mut report),
    Kind::Firstpassage => first_passage(config, &mut report),
    Kind::Asymptotics => asymptotics(config, &mut report),
    Kind::Cbre => cbre(config, &mut report),
    Kind::Acceptance => acceptance(config, &mut report, progress),
  };
  if let Err(e) = outcome {
    report.error = Some(e);
  }
  report.finish();
  report
}

fn err(e: impl std::fmt::Display) -> String {
  e.to_string()
}

fn triplet(config: &ExperimentConfig) -> LevyTriplet {
  config.triplet.expect("validated config has a triplet")
}

fn curve_table(name: &str, curve: &ExpectationCurve) -> Table {
  let mut t = Table::new(name, &["t", "estimate", "stderr", "ess", "flagged"]);
  for p in &curve.points {
    t.push(vec![p.t, p.estimate, p.stderr, p.ess, if p.flagged { 1.0 } else { 0.0 }]);
  }
  t
}

/// Compares a fit with a predicted `(rate, exponent)`, skipping whatever the fit pinned.
fn decay_checks(report: &mut Report, label: &str, fit: &DecayFit, predicted: (f64, f64), tol: &Tolerances) {
  let (rate, exponent) = predicted;
  if !matches!(fit.pin, Pin::Rate(_)) {
    let (ok, bound) = if rate == 0.0 {
      ((fit.rate).abs() <= tol.rate_abs, format!("± {}", tol.rate_abs))
    } else {
      ((fit.rate / rate - 1.0).abs() <= tol.rate_rel, format!("± {}%", 100.0 * tol.rate_rel))
    };
    report.check(CheckResult::new(
      format!("{label} rate"),
      ok,
      format!("fitted {:.6} ± {:.6}, predicted {rate:.6} {bound}", fit.rate, fit.rate_stderr()),
    ));
  }
  if !matches!(fit.pin, Pin::Exponent(_)) {
    report.check(CheckResult::new(
      format!("{label} exponent"),
      (fit.exponent - exponent).abs() <= tol.exponent_abs,
      format!("fitted {:.4} ± {:.4}, predicted {exponent} ± {}", fit.exponent, fit.exponent_stderr(), tol.exponent_abs),
    ));
  }
  report.warnings.extend(fit.warnings.iter().map(|w| format!("{label} fit: {w}")));
}

fn fit_line(label: &str, fit: &DecayFit) -> String {
  format!(
    "{label}: E ≍ exp({:.6}·t) · t^({:.4}) [pin {:?}, {} points, chi²/dof {:.3}]",
    fit.rate, fit.exponent, fit.pin, fit.n_points, fit.chi2_per_dof
  )
}

fn exponent(config: &ExperimentConfig, report: &mut Report) -> Run {
  let t = triplet(config);
  let dom = t.domain();
  let mut table = Table::new("exponent", &["lambda", "phi", "phi1", "phi2"]);
  for &l in &config.grid.lambda {
    if dom.contains(l) {
      let (d1, d2) = t.laplace_derivatives(l).unwrap_or((f64::INFINITY, f64::INFINITY));
      table.push(vec![l, t.laplace_exponent(l), d1, d2]);
    } else {
      table.push(vec![l, f64::INFINITY, f64::NAN, f64::NAN]);
    }
  }
  let regime = classify_regime(&t, config.beta(), &config.regime.options());
  report.summary.push(format!("triplet {} ({}), domain {dom}, mean {:.6}", t.hash(), t.jumps.family_name(), t.mean_increment()));
  match &regime {
    Ok(r) => {
      report.summary.push(format!("regime at β = {}: {}", config.beta(), r.regime));
      report.warnings.extend(r.warnings.clone());
    }
    Err(e) => report.warnings.push(format!("regime not classified: {e}")),
  }
  report.results = json!({
    "triplet_hash": t.hash(),
    "domain": dom,
    "mean": t.mean_increment(),
    "regime": regime.ok(),
    "table": &table,
  });
  report.tables.push(table);
  Ok(())
}

fn simulate(config: &ExperimentConfig, report: &mut Report) -> Run {
  let t = triplet(config);
  let sim = config.sim_config();
  let marks: Vec<usize> = config.grid.t.iter().map(|&s| sim.steps_to(s)).collect::<Result<_, _>>().map_err(err)?;
  let alpha = config.alpha;
  let k = marks.len();
  simulate_path_indexed(&t, &sim, 0.0, 0).map_err(err)?;
  let (a_moments, xi_moments) = map_reduce(
    sim.n_paths,
    || (vec![Moments::default(); k], vec![Moments::default(); k]),
    |i, (am, xm): &mut (Vec<Moments>, Vec<Moments>)| {
      let path = simulate_path_indexed(&t, &sim, 0.0, i as u64).expect("validated above");
      let mut acc = 0.0;
      let mut next = 0;
      for (j, w) in path.times.windows(2).enumerate() {
        while next < k && marks[next] == j {
          am[next].push(acc);
          xm[next].push(path.values[j]);
          next += 1;
        }
        acc += (-alpha * path.values[j]).exp() * (w[1] - w[0]);
      }
      while next < k {
        am[next].push(acc);
        xm[next].push(*path.values.last().expect("non-empty"));
        next += 1;
      }
    },
  );
  let mut table = Table::new("functional", &["t", "mean_A", "stderr_A", "mean_xi", "stderr_xi"]);
  for ((s, a), x) in config.grid.t.iter().zip(&a_moments).zip(&xi_moments) {
    let (a, x) = (a.estimate(), x.estimate());
    table.push(vec![*s, a.mean, a.stderr, x.mean, x.stderr]);
  }

  // exact for the skeleton: E[h Σ_{j<n} e^{-α ξ(jh)}] = h Σ_{j<n} e^{j h Φ(-α)}
  let finite_activity = !matches!(t.jumps, JumpMeasure::TemperedStable(_));
  if finite_activity && t.domain().contains(-alpha) {
    let phi = t.laplace_exponent(-alpha);
    let h = sim.step;
    let mut worst: f64 = 0.0;
    let mut all = true;
    for (&n, m) in marks.iter().zip(&a_moments) {
      let exact = if phi == 0.0 { n as f64 * h } else { h * (n as f64 * h * phi).exp_m1() / (h * phi).exp_m1() };
      let e = m.estimate();
      let z = if e.stderr > 0.0 { (e.mean - exact).abs() / e.stderr } else if e.mean == exact { 0.0 } else { f64::INFINITY };
      worst = worst.max(z);
      all &= z <= 4.0;
    }
    report.check(CheckResult::new("E[A_t] against the exact skeleton mean", all, format!("largest deviation {worst:.2} standard errors (limit 4)")));
  }
  let mean = t.mean_increment();
  let mut all = true;
  for (&s, m) in config.grid.t.iter().zip(&xi_moments) {
    let e = m.estimate();
    all &= (e.mean - mean * s).abs() <= 4.0 * e.stderr.max(1e-300) || (e.stderr == 0.0 && (e.mean - mean * s).abs() < 1e-9 * s.max(1.0));
  }
  report.check(CheckResult::new("E[ξ(t)] = t·E[ξ(1)] within 4 standard errors", all, format!("E[ξ(1)] = {mean:.6}")));

  let keep = config.output.max_paths.unwrap_or(5).min(sim.n_paths);
  if keep > 0 {
    let sample = SimConfig { n_paths: keep, ..sim };
    let paths = simulate_paths(&t, &sample, 0.0).map_err(err)?;
    let mut pt = Table::new("paths", &["path", "t", "value"]);
    for (i, p) in paths.iter().enumerate() {
      for (s, v) in p.times.iter().zip(&p.values) {
        pt.push(vec![i as f64, *s, *v]);
      }
    }
    report.tables.push(pt);
  }
  report.summary.push(format!("{} paths of {} ({}), step {}, horizon {}", sim.n_paths, t.hash(), t.jumps.family_name(), sim.step, sim.horizon));
  report.results = json!({ "triplet_hash": t.hash(), "functional": &table });
  report.tables.push(table);
  Ok(())
}

fn first_passage(config: &ExperimentConfig, report: &mut Report) -> Run {
  let t = triplet(config);
  let x = config.first_passage.expect("validated").x;
  let fp = first_passage_asymptotics(&t, x, &config.grid.t, &config.sim_config(), config.tilt, config.fit).map_err(err)?;
  let mut table = Table::new("survival", &["t", "p", "stderr", "survivors"]);
  for p in &fp.points {
    table.push(vec![p.t, p.p, p.stderr, p.survivors as f64]);
  }
  report.summary.push(fit_line(&format!("P(τ_-{x} > t)"), &fp.fit));
  match fp.predicted {
    Some(pred) => decay_checks(report, "first passage", &fp.fit, pred, &config.tolerances),
    None => report.warnings.push("no predicted decay for this process".into()),
  }
  if let Some(t0) = fp.truncated_at {
    report.summary.push(format!("grid truncated at t = {t0}"));
  }
  report.warnings.extend(fp.warnings.clone());
  report.results = serde_json::to_value(&fp).map_err(err)?;
  report.tables.push(table);
  Ok(())
}

fn coefficient(config: &ExperimentConfig, t: &LevyTriplet, regime: &Regime) -> Result<Option<CoefficientEstimate>, String> {
  let f = config.fspec.expect("validated");
  let (k, _) = f.tail();
  let (alpha, beta) = (config.alpha, config.beta());
  let sim = config.sim_config();
  let horizon = sim.horizon;
  let xs = &config.grid.x;
  let c = match *regime {
    Regime::Supercritical { .. } => return Ok(None),
    Regime::Critical { .. } => coeff_d2(t, &f, alpha, xs, horizon, &sim),
    Regime::WeaklySubcritical { rho, .. } => {
      if config.grid.y.is_empty() {
        return Err("the weakly subcritical coefficient needs grid.y".into());
      }
      coeff_d3(t, &f, alpha, rho, xs, &config.grid.y, horizon, &sim)
    }
    Regime::IntermediatelySubcritical { .. } => coeff_d4(t, alpha, beta, k, xs, horizon, &sim),
    Regime::StronglySubcritical { .. } => coeff_regime5(t, alpha, beta, k, &sim),
  };
  c.map(Some).map_err(err)
}

fn asymptotics(config: &ExperimentConfig, report: &mut Report) -> Run {
  let t = triplet(config);
  let f = config.fspec.expect("validated");
  let beta = config.beta();
  let conditions = check_conditions(&f, &t, beta);
  let class = classify_regime(&t, beta, &config.regime.options()).map_err(err)?;
  report.warnings.extend(class.warnings.clone());
  report.warnings.extend(conditions.notes.iter().map(|n| format!("conditions: {n}")));
  let tilt = config.tilt.or(class.regime.default_tilt());
  let curve = estimate_expectation_curve(&t, &f, config.alpha, &config.grid.t, &config.sim_config(), tilt).map_err(err)?;
  report.ess_flagged |= curve.any_flagged();
  let predicted = class.regime.predicted_decay();
  report.summary.push(format!("regime {} at β = {beta}; predicted E ≍ exp({:.6}·t) · t^({})", class.regime, predicted.0, predicted.1));
  let fit = fit_decay(&curve, config.fit);
  match &fit {
    Ok(fit) => {
      report.summary.push(fit_line("E[F(A_t)]", fit));
      decay_checks(report, "E[F(A_t)]", fit, predicted, &config.tolerances);
    }
    Err(e) => report.warnings.push(format!("no decay fit: {e}")),
  }
  let coeff = if config.grid.x.is_empty() {
    None
  } else {
    match coefficient(config, &t, &class.regime) {
      Ok(c) => c,
      Err(e) => {
        report.warnings.push(format!("coefficient not computed: {e}"));
        None
      }
    }
  };
  if let Some(c) = &coeff {
    report.ess_flagged |= c.flagged;
    let positive = c.prelimit.iter().all(|e| e.mean > 0.0) && c.value.mean > 0.0;
    report.check(CheckResult::new(
      format!("{:?} positive, increasing and bounded", c.which),
      positive && c.increasing && c.bounded,
      format!("positive {positive}, increasing {}, bounded {} (last step {:+.2}%)", c.increasing, c.bounded, 100.0 * c.last_increment),
    ));
    report.summary.push(format!("{:?} = {:.6} ± {:.6}; paired constant {:.6} ± {:.6}", c.which, c.value.mean, c.value.stderr, c.paired_constant.mean, c.paired_constant.stderr));
    report.summary.extend(c.notes.iter().map(|n| format!("  {n}")));
  }
  report.results = json!({
    "triplet_hash": t.hash(),
    "beta": beta,
    "tilt": tilt,
    "conditions": conditions,
    "regime": class,
    "predicted": predicted,
    "curve": &curve,
    "fit": fit.ok(),
    "coefficient": coeff,
  });
  report.tables.push(curve_table("curve", &curve));
  Ok(())
}

fn cbre(config: &ExperimentConfig, report: &mut Report) -> Run {
  let p = config.cbre_params().expect("validated");
  let class = classify_cbre(&p);
  let regime = class.as_ref().ok().map(|c| c.regime);
  let tilt = config.tilt.or(regime.and_then(|r| r.default_tilt()));
  let s = survival_probability_with_tilt(&p, &config.grid.t, &config.sim_config(), tilt, class.as_ref().ok().cloned()).map_err(err)?;
  report.ess_flagged |= s.curve.any_flagged();
  let mut table = curve_table("survival", &s.curve);
  match &class {
    Ok(c) => {
      report.summary.push(format!("{}: predicted P(X(t) > 0) ≍ exp({:.6}·t) · t^({}); {}", c.label, c.predicted_decay.0, c.predicted_decay.1, c.limit_constant));
      report.warnings.extend(c.notes.clone());
    }
    Err(e) => report.warnings.push(format!("not classified: {e}")),
  }

  let env = p.env;
  let zero_env = env.beta_drift == 0.0 && env.sigma == 0.0 && env.jumps.is_zero();
  let mut fit = None;
  if zero_env {
    let mut worst: f64 = 0.0;
    table = Table::new("survival", &["t", "estimate", "closed_form"]);
    for pt in &s.curve.points {
      let exact = if pt.t == 0.0 { 1.0 } else { -(-p.x0 * (p.c * p.alpha * pt.t).powf(-1.0 / p.alpha)).exp_m1() };
      worst = worst.max((pt.estimate - exact).abs());
      table.push(vec![pt.t, pt.estimate, exact]);
    }
    report.check(CheckResult::new(
      "zero environment closed form",
      worst <= config.tolerances.closed_form,
      format!("max |P - (1 - exp(-x (cαt)^(-1/α)))| = {worst:.2e} (limit {:e})", config.tolerances.closed_form),
    ));
  } else if let Some(c) = class.as_ref().ok().filter(|c| c.regime.index() > 1) {
    match fit_decay(&s.curve, config.fit) {
      Ok(f) => {
        report.summary.push(fit_line("P(X(t) > 0)", &f));
        decay_checks(report, "survival", &f, c.predicted_decay, &config.tolerances);
        fit = Some(f);
      }
      Err(e) => report.warnings.push(format!("no decay fit: {e}")),
    }
  }
  report.results = json!({
    "classification": class.ok(),
    "tilt": tilt,
    "curve": &s.curve,
    "fit": fit,
  });
  report.tables.push(table);
  Ok(())
}

fn acceptance(config: &ExperimentConfig, report: &mut Report, progress: &mut dyn FnMut(&str)) -> Run {
  let ids: Vec<u8> = if config.acceptance.criteria.is_empty() { (1..=12).collect() } else { config.acceptance.criteria.clone() };
  let suite = Suite::new(config.seed());
  let results = suite.run_all(&ids, |r| progress(&r.line()));
  for r in &results {
    report.check(CheckResult::new(format!("C{} {}", r.id, r.name), r.passed, r.detail.clone()));
  }
  report.results = serde_json::to_value(&results).map_err(err)?;
  Ok(())
}
