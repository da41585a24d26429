//! The acceptance suite: one check per criterion, each printing a single pass/fail line.
//!
//! Oracles here are written independently of the library code they check (closed forms,
//! quadrature of known densities, reflection formulas).

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::time::Instant;

use levy_expfun::asymptotics::*;
use levy_expfun::cbre::*;
use levy_expfun::levy_core::{classify_regime, JumpMeasure, LevyTriplet, RegimeOptions, Side};
use levy_expfun::mc::{map_reduce, path_rng, Estimate, Moments};
use levy_expfun::path_sim::{
  exp_functional_inf_samples, functional_bounds, simulate_path, IncrementSampler, PathSample, SimConfig,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
  pub id: u8,
  pub name: String,
  pub passed: bool,
  pub detail: String,
  /// Wall time; left out of serialised reports so they stay reproducible.
  #[serde(skip)]
  pub seconds: f64,
}

impl CriterionResult {
  pub fn line(&self) -> String {
    format!(
      "{} C{:<2} {} ({:.1}s): {}",
      if self.passed { "PASS" } else { "FAIL" },
      self.id,
      self.name,
      self.seconds,
      self.detail
    )
  }
}

pub const NAMES: [&str; 12] = [
  "exponent closed forms",
  "Esscher identity and martingale",
  "Dufresne law of the perpetuity",
  "supercritical curve plateau",
  "critical t^(-1/2) decay",
  "weakly subcritical decay",
  "intermediately subcritical decay",
  "strongly subcritical decay and constant",
  "negative-moment bounds and duality",
  "limiting coefficients",
  "CBRE closed form, flow and ODE",
  "CBRE regime wiring",
];

type Check = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Check {
  if ok {
    Ok(detail)
  } else {
    Err(detail)
  }
}

fn sqrt2() -> f64 {
  2f64.sqrt()
}

fn bm(a: f64) -> LevyTriplet {
  LevyTriplet::brownian(a, sqrt2()).expect("valid Brownian triplet")
}

fn power_f() -> FSpec {
  FSpec::power_tail(1.0, 1.0, 1.0).expect("valid F")
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
  let n = ((stop - start) / step).round() as usize;
  (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Simpson's rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
  let h = (b - a) / n as f64;
  let mut s = f(a) + f(b);
  for i in 1..n {
    s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
  }
  s * h / 3.0
}

/// Curves shared between criteria, computed on first use.
#[derive(Default)]
struct Shared {
  curves: BTreeMap<&'static str, ExpectationCurve>,
}

pub struct Suite {
  seed: u64,
  shared: RefCell<Shared>,
}

impl Suite {
  pub fn new(seed: u64) -> Self {
    Self { seed, shared: RefCell::new(Shared::default()) }
  }

  pub fn run(&self, id: u8) -> CriterionResult {
    let start = Instant::now();
    let outcome = match id {
      1 => self.c1(),
      2 => self.c2(),
      3 => self.c3(),
      4 => self.c4(),
      5 => self.c5(),
      6 => self.c6(),
      7 => self.c7(),
      8 => self.c8(),
      9 => self.c9(),
      10 => self.c10(),
      11 => self.c11(),
      12 => self.c12(),
      _ => Err(format!("no criterion {id}")),
    };
    let (passed, detail) = match outcome {
      Ok(d) => (true, d),
      Err(d) => (false, d),
    };
    CriterionResult {
      id,
      name: NAMES.get(id as usize - 1).copied().unwrap_or("unknown").into(),
      passed,
      detail,
      seconds: start.elapsed().as_secs_f64(),
    }
  }

  pub fn run_all(&self, ids: &[u8], mut on_result: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    ids
      .iter()
      .map(|&id| {
        let r = self.run(id);
        on_result(&r);
        r
      })
      .collect()
  }

  fn cfg(&self, step: f64, horizon: f64, n: usize, offset: u64) -> SimConfig {
    SimConfig::new(step, horizon, n, self.seed.wrapping_add(offset))
  }

  fn curve(&self, key: &'static str) -> std::result::Result<ExpectationCurve, String> {
    if let Some(c) = self.shared.borrow().curves.get(key) {
      return Ok(c.clone());
    }
    let f = power_f();
    let c = match key {
      "critical" => estimate_expectation_curve(&bm(0.0), &f, 1.0, &grid(10.0, 200.0, 10.0), &self.cfg(0.05, 200.0, 1_000_000, 5), None),
      "weak" => estimate_expectation_curve(&bm(1.0), &f, 1.0, &grid(10.0, 100.0, 5.0), &self.cfg(0.05, 100.0, 500_000, 6), Some(0.5)),
      "intermediate" => estimate_expectation_curve(&bm(2.0), &f, 1.0, &grid(10.0, 200.0, 10.0), &self.cfg(0.05, 200.0, 200_000, 7), Some(1.0)),
      "strong" => estimate_expectation_curve(&bm(3.0), &f, 1.0, &grid(5.0, 50.0, 2.5), &self.cfg(0.05, 50.0, 200_000, 8), Some(1.0)),
      _ => unreachable!("unknown curve {key}"),
    }
    .map_err(|e| format!("curve {key}: {e}"))?;
    self.shared.borrow_mut().curves.insert(key, c.clone());
    Ok(c)
  }

  /// `g(t)·E[F(A_t)]` at the last grid point.
  fn plateau(&self, key: &'static str, g: impl Fn(f64) -> f64) -> std::result::Result<Estimate, String> {
    let c = self.curve(key)?;
    Ok(*c.scaled(g).last().expect("non-empty"))
  }

  fn c1(&self) -> Check {
    let lambdas: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
    let mut worst = 0.0f64;
    // relative error measured against the size of the terms, so that roots of Φ are harmless
    let mut record = |got: f64, want: f64, scale: f64| worst = worst.max((got - want).abs() / scale.max(f64::MIN_POSITIVE));
    for &(a, sigma) in &[(0.0, 1.0), (1.0, sqrt2()), (-0.7, 0.3), (2.5, 0.0)] {
      let t = LevyTriplet::brownian(a, sigma).map_err(|e| e.to_string())?;
      for &l in &lambdas {
        let (d1, d2) = t.laplace_derivatives(l).map_err(|e| e.to_string())?;
        let s2 = sigma * sigma;
        record(t.laplace_exponent(l), -a * l + 0.5 * s2 * l * l, (a * l).abs() + 0.5 * s2 * l * l);
        record(d1, -a + s2 * l, a.abs() + s2 * l.abs());
        record(d2, s2, s2.max(1e-300));
      }
    }
    for &(rate, h, a, sigma) in &[(1.0, 0.5, 0.3, 1.0), (2.0, -1.0, -0.5, 0.0), (0.5, 2.0, 1.0, 0.7)] {
      let t = LevyTriplet::new(a, sigma, JumpMeasure::point_mass(rate, h)).map_err(|e| e.to_string())?;
      for &l in &lambdas {
        let (d1, d2) = t.laplace_derivatives(l).map_err(|e| e.to_string())?;
        let s2 = sigma * sigma;
        let x = l * h;
        // e^x - 1 - x without cancellation
        let em1x = if x.abs() < 0.5 {
          (2..30).map(|k| x.powi(k) / (1..=k).map(|j| j as f64).product::<f64>()).sum::<f64>()
        } else {
          x.exp() - 1.0 - x
        };
        let jump = rate * em1x;
        record(t.laplace_exponent(l), jump - a * l + 0.5 * s2 * l * l, jump.abs() + (a * l).abs() + 0.5 * s2 * l * l);
        let j1 = rate * h * x.exp_m1();
        record(d1, j1 - a + s2 * l, j1.abs() + a.abs() + s2 * l.abs());
        let j2 = rate * h * h * x.exp();
        record(d2, j2 + s2, j2 + s2);
      }
    }
    check(worst < 1e-12, format!("max relative error {worst:.2e} (tolerance 1e-12)"))
  }

  fn families() -> Vec<(&'static str, LevyTriplet, f64)> {
    let t = |a: f64, s: f64, j: JumpMeasure| LevyTriplet::new(a, s, j).expect("valid triplet");
    vec![
      ("brownian", t(0.5, 1.0, JumpMeasure::Zero), 0.7),
      ("point mass", t(0.2, 0.5, JumpMeasure::point_mass(1.5, -0.4)), 0.8),
      ("two-sided exponential", t(-0.3, 0.4, JumpMeasure::two_sided_exponential(2.0, 0.4, 3.0, 2.5)), 1.0),
      ("gaussian jumps", t(0.1, 0.0, JumpMeasure::gaussian(1.0, 0.2, 0.5)), 0.9),
      ("tempered stable +", t(0.0, 0.3, JumpMeasure::tempered_stable(Side::Positive, 0.7, 0.5, 3.0)), 1.2),
      ("tempered stable -", t(0.4, 0.0, JumpMeasure::tempered_stable(Side::Negative, 1.4, 0.3, 2.0)), 0.6),
    ]
  }

  fn c2(&self) -> Check {
    let mut worst = 0.0f64;
    for (name, t, theta_max) in Self::families() {
      for i in 1..=5 {
        let theta = theta_max * (i as f64 / 5.0 - 0.55);
        let tilted = t.esscher(theta).map_err(|e| format!("{name}: {e}"))?;
        let phi_theta = t.laplace_exponent(theta);
        for j in -10..=10 {
          let l = 0.1 * j as f64 * theta_max;
          if !t.domain().interior_contains(l + theta) {
            continue;
          }
          worst = worst.max((tilted.laplace_exponent(l) - (t.laplace_exponent(l + theta) - phi_theta)).abs());
        }
      }
    }
    let mut lines = vec![format!("identity max error {worst:.2e}")];
    let mut ok = worst < 1e-10;
    for (k, (name, t, theta)) in Self::families().into_iter().enumerate() {
      let cfg = SimConfig { small_jump_cutoff: Some(0.01), ..self.cfg(1.0, 1.0, 100_000, 20 + k as u64) };
      let sampler = IncrementSampler::new(&t, 1.0, cfg.small_jump_cutoff).map_err(|e| e.to_string())?;
      let phi = t.laplace_exponent(theta);
      let m = map_reduce(cfg.n_paths, Moments::default, |i, acc: &mut Moments| {
        let mut rng = path_rng(cfg.seed, 0, i as u64);
        acc.push((theta * sampler.sample(&mut rng) - phi).exp());
      });
      let est = m.estimate();
      let good = (est.mean - 1.0).abs() <= 3.0 * est.stderr;
      ok &= good;
      lines.push(format!("{name} {:.4}±{:.4}", est.mean, est.stderr));
    }
    check(ok, lines.join("; "))
  }

  /// `(mean, variance, E[F(A)])` of the inverse-gamma law with shape `k` and scale `s`, by quadrature.
  fn inverse_gamma_oracle(k: f64, s: f64, f: &FSpec) -> (f64, f64, f64) {
    let ln_norm = k * s.ln() - statrs::function::gamma::ln_gamma(k);
    let dens = |a: f64| if a <= 0.0 { 0.0 } else { (ln_norm - (k + 1.0) * a.ln() - s / a).exp() };
    let top = 200.0 * s / k;
    let n = 400_000;
    let m0 = simpson(dens, 0.0, top, n);
    let m1 = simpson(|a| a * dens(a), 0.0, top, n);
    let m2 = simpson(|a| a * a * dens(a), 0.0, top, n);
    let ef = simpson(|a| f.eval(a) * dens(a), 0.0, top, n);
    (m1 / m0, m2 / m0 - (m1 / m0).powi(2), ef / m0)
  }

  fn dufresne() -> (LevyTriplet, FSpec, (f64, f64, f64)) {
    // ξ(t) = 3t + B(t): A_∞ = 2/Z with Z ~ Gamma(2μ/σ² = 6), i.e. inverse gamma (6, 2)
    let t = LevyTriplet::brownian(-3.0, 1.0).expect("valid");
    let f = FSpec::cbre_tail(1.0, 1.0, 1.0).expect("valid");
    let oracle = Self::inverse_gamma_oracle(6.0, 2.0, &f);
    (t, f, oracle)
  }

  fn c3(&self) -> Check {
    let (t, f, (mean, var, ef)) = Self::dufresne();
    let samples = exp_functional_inf_samples(&t, 1.0, &self.cfg(1e-3, 100.0, 100_000, 30), 1e-6).map_err(|e| e.to_string())?;
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let m = xs.iter().sum::<f64>() / n;
    let c2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let c4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let se_m = (c2 / n).sqrt();
    let se_v = ((c4 - c2 * c2) / n).sqrt();
    let fm = xs.iter().map(|&x| f.eval(x)).sum::<f64>() / n;
    let ok_m = (m - mean).abs() <= 3.0 * se_m;
    let ok_v = (c2 - var).abs() <= 3.0 * se_v;
    let ok_f = (fm - ef).abs() <= 0.02 * ef;
    check(
      ok_m && ok_v && ok_f,
      format!(
        "mean {m:.5}±{se_m:.5} vs {mean:.5}; variance {c2:.5}±{se_v:.5} vs {var:.5}; E[F] {fm:.5} vs {ef:.5} ({:+.2}%)",
        100.0 * (fm / ef - 1.0)
      ),
    )
  }

  fn c4(&self) -> Check {
    let (t, f, (_, _, ef)) = Self::dufresne();
    let times = [0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 30.0, 50.0];
    let curve = estimate_expectation_curve(&t, &f, 1.0, &times, &self.cfg(2e-3, 50.0, 20_000, 40), None).map_err(|e| e.to_string())?;
    let mono = curve.monotonicity_violation(2.0);
    let last = curve.points.last().expect("non-empty");
    let ok = mono.is_none() && (last.estimate - ef).abs() <= 3.0 * last.stderr;
    check(
      ok,
      format!(
        "E[F(A_t)] from {:.4} to {:.5}±{:.5} at t = 50 vs oracle {ef:.5}; monotone: {}",
        curve.points[0].estimate,
        last.estimate,
        last.stderr,
        mono.is_none()
      ),
    )
  }

  fn c5(&self) -> Check {
    let curve = self.curve("critical")?;
    let fit = fit_decay(&curve, Pin::Rate(0.0)).map_err(|e| e.to_string())?;
    let fp = first_passage_asymptotics(&bm(0.0), 1.0, &grid(10.0, 200.0, 10.0), &self.cfg(0.05, 200.0, 1_000_000, 50), None, Pin::Rate(0.0))
      .map_err(|e| e.to_string())?;
    let ok = (fit.exponent + 0.5).abs() <= 0.1 && (fp.fit.exponent + 0.5).abs() <= 0.1;
    check(
      ok,
      format!(
        "E[F(A_t)] exponent {:.3}±{:.3}; P(τ > t) exponent {:.3}±{:.3} (target -0.5 ± 0.1)",
        fit.exponent,
        fit.exponent_stderr(),
        fp.fit.exponent,
        fp.fit.exponent_stderr()
      ),
    )
  }

  fn c6(&self) -> Check {
    let curve = self.curve("weak")?;
    let fit = fit_decay(&curve, Pin::Free).map_err(|e| e.to_string())?;
    let ok = (fit.rate / -0.25 - 1.0).abs() <= 0.05 && (fit.exponent + 1.5).abs() <= 0.3 && !curve.any_flagged();
    check(ok, format!("rate {:.4} (target -0.25 ± 5%), exponent {:.3} (target -1.5 ± 0.3)", fit.rate, fit.exponent))
  }

  fn c7(&self) -> Check {
    let curve = self.curve("intermediate")?;
    let fit = fit_decay(&curve, Pin::Rate(-1.0)).map_err(|e| e.to_string())?;
    let ok = (fit.exponent + 0.5).abs() <= 0.15 && !curve.any_flagged();
    check(ok, format!("with rate pinned at Φ(1) = -1, exponent {:.3}±{:.3} (target -0.5 ± 0.15)", fit.exponent, fit.exponent_stderr()))
  }

  fn regime5(&self) -> std::result::Result<CoefficientEstimate, String> {
    coeff_regime5(&bm(3.0), 1.0, 1.0, power_f().tail().0, &self.cfg(0.005, 200.0, 100_000, 80)).map_err(|e| e.to_string())
  }

  fn c8(&self) -> Check {
    let curve = self.curve("strong")?;
    let fit = fit_decay(&curve, Pin::Free).map_err(|e| e.to_string())?;
    let plateau = self.plateau("strong", |t| (2.0 * t).exp())?;
    let direct = self.regime5()?.value;
    let rel = plateau.mean / direct.mean - 1.0;
    let ok = (fit.rate / -2.0 - 1.0).abs() <= 0.05 && fit.exponent.abs() <= 0.2 && rel.abs() <= 0.15;
    check(
      ok,
      format!(
        "rate {:.4}, exponent {:.3}; plateau e^(2t)E = {:.4}±{:.4} vs K·E[A_∞(-ξ)^(-1)] = {:.4}±{:.4} ({:+.1}%)",
        fit.rate,
        fit.exponent,
        plateau.mean,
        plateau.stderr,
        direct.mean,
        direct.stderr,
        100.0 * rel
      ),
    )
  }

  fn c9(&self) -> Check {
    let mut ok = true;
    let mut lines = Vec::new();
    for (k, a) in [-1.0, 0.0, 1.0, 2.0, 3.0].into_iter().enumerate() {
      let b = functional_bounds(&bm(a), 1.0, 1.0, 3.0, &self.cfg(0.01, 3.0, 100_000, 90 + k as u64)).map_err(|e| e.to_string())?;
      let good = b.sup_bound_holds(3.0) && b.doob_bound_holds(3.0) && b.product_bound_holds(3.0) && b.reversal_holds(3.0);
      ok &= good;
      lines.push(format!(
        "a={a}: E[A^-1] {:.4} ≤ sup {:.4}, Doob {:.4}, product {:.4}; reversed {:.4}±{:.4}{}",
        b.neg_moment.mean,
        b.sup_bound.mean,
        b.doob_bound.mean,
        b.product_bound.mean,
        b.reversed.mean,
        b.reversed.stderr,
        if good { "" } else { " FAILED" }
      ));
    }
    check(ok, lines.join("; "))
  }

  fn structure(c: &CoefficientEstimate) -> bool {
    c.prelimit.iter().all(|e| e.mean > 0.0) && c.increasing && c.bounded && !c.flagged
  }

  fn describe(c: &CoefficientEstimate, plateau: Estimate) -> String {
    let seq: Vec<String> = c.prelimit.iter().map(|e| format!("{:.4}", e.mean)).collect();
    format!(
      "{:?} [{}] last step {:+.1}%, paired {:.4}±{:.4} vs plateau {:.4}±{:.4} ({:+.1}%)",
      c.which,
      seq.join(", "),
      100.0 * c.last_increment,
      c.paired_constant.mean,
      c.paired_constant.stderr,
      plateau.mean,
      plateau.stderr,
      100.0 * (c.paired_constant.mean / plateau.mean - 1.0)
    )
  }

  fn c10(&self) -> Check {
    let xs = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0];
    let rel = |c: &CoefficientEstimate, p: Estimate| (c.paired_constant.mean / p.mean - 1.0).abs();

    let d2 = coeff_d2(&bm(0.0), &power_f(), 1.0, &xs, 400.0, &self.cfg(0.05, 400.0, 20_000, 100)).map_err(|e| e.to_string())?;
    let p2 = self.plateau("critical", f64::sqrt)?;
    let ok2 = Self::structure(&d2) && rel(&d2, p2) <= 0.15;

    let d4 = coeff_d4(&bm(2.0), 1.0, 1.0, power_f().tail().0, &xs, 400.0, &self.cfg(0.05, 400.0, 20_000, 101)).map_err(|e| e.to_string())?;
    let p4 = self.plateau("intermediate", |t| t.sqrt() * t.exp())?;
    let ok4 = Self::structure(&d4) && rel(&d4, p4) <= 0.25;

    // the conditioned functional needs T well beyond x² to settle
    let x3 = [1.0, 2.0, 4.0, 8.0];
    let y3 = grid(0.0, 60.0, 1.0);
    let d3 = coeff_d3(&bm(1.0), &power_f(), 1.0, 0.5, &x3, &y3, 1600.0, &self.cfg(0.1, 1600.0, 32_000, 102)).map_err(|e| e.to_string())?;
    let p3 = self.plateau("weak", |t| t.powf(1.5) * (0.25 * t).exp())?;
    // structure is required of D2 and D4 only; for D3 it is reported
    let ok3 = d3.value.mean > 0.0 && rel(&d3, p3) <= 0.25;

    let r5 = self.regime5()?;
    let p5 = self.plateau("strong", |t| (2.0 * t).exp())?;
    let ok5 = r5.value.mean > 0.0 && rel(&r5, p5) <= 0.15;

    check(
      ok2 && ok3 && ok4 && ok5,
      format!(
        "{}; {}; {}; {}",
        Self::describe(&d2, p2),
        Self::describe(&d3, p3),
        Self::describe(&d4, p4),
        Self::describe(&r5, p5)
      ),
    )
  }

  fn c11(&self) -> Check {
    let p = CbreParams { x0: 1.3, c: 0.8, alpha: 0.6, env: EnvironmentSpec::brownian(0.0, 0.0) };
    let times = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let s = survival_probability(&p, &times, &self.cfg(0.01, 10.0, 10, 110)).map_err(|e| e.to_string())?;
    let closed = s
      .times()
      .iter()
      .zip(s.probabilities())
      .map(|(&t, v)| {
        let want = if t == 0.0 { 1.0 } else { 1.0 - (-1.3 * (0.8 * 0.6 * t).powf(-1.0 / 0.6)).exp() };
        (v - want).abs()
      })
      .fold(0.0f64, f64::max);

    let xi = xi_from_environment(&EnvironmentSpec::brownian(0.3, 1.0)).map_err(|e| e.to_string())?;
    let mut flow = 0.0f64;
    for k in 0..200u64 {
      let path = simulate_path(&xi, &self.cfg(0.01, 3.0, 1, 1000 + k), 0.0).map_err(|e| e.to_string())?;
      let mut rng = path_rng(self.seed, 111, k);
      use rand::Rng;
      let mut idx = [rng.random_range(0..=300), rng.random_range(0..=300), rng.random_range(0..=300)];
      idx.sort();
      let [r, s, t] = idx.map(|i| path.times[i]);
      let lam = Lambda::Finite(rng.random_range(0.05..20.0));
      let alpha = rng.random_range(0.1..=1.0);
      let direct = u_transform(&path, r, t, lam, 0.7, alpha).map_err(|e| e.to_string())?;
      let inner = u_transform(&path, s, t, lam, 0.7, alpha).map_err(|e| e.to_string())?;
      let composed = u_transform(&path, r, s, Lambda::Finite(inner), 0.7, alpha).map_err(|e| e.to_string())?;
      flow = flow.max((direct - composed).abs() / direct);
    }

    let residual = |h: f64| -> std::result::Result<f64, String> {
      let n = (2.0 / h).round() as usize;
      let times: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
      let path = PathSample::from_values(times.clone(), times.iter().map(|s| (1.5 * s).sin()).collect()).map_err(|e| e.to_string())?;
      let mut worst = 0.0f64;
      for k in 0..n {
        let u0 = u_transform(&path, times[k], 2.0, Lambda::Finite(1.5), 0.9, 0.5).map_err(|e| e.to_string())?;
        let u1 = u_transform(&path, times[k + 1], 2.0, Lambda::Finite(1.5), 0.9, 0.5).map_err(|e| e.to_string())?;
        let rhs = 0.9 * (-0.5 * (1.5 * times[k]).sin()).exp() * u0.powf(1.5);
        worst = worst.max(((u1 - u0) / h - rhs).abs());
      }
      Ok(worst)
    };
    let orders: Vec<f64> = [0.04, 0.02, 0.01, 0.005]
      .windows(2)
      .map(|w| Ok((residual(w[0])? / residual(w[1])?).log2()))
      .collect::<std::result::Result<_, String>>()?;
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    check(
      closed < 1e-6 && flow < 1e-12 && min_order >= 0.9,
      format!("closed-form error {closed:.1e}; flow error {flow:.1e}; ODE residual orders {orders:.3?}"),
    )
  }

  fn c12(&self) -> Check {
    let sigma = sqrt2();
    let params = |a0: f64| CbreParams { x0: 1.0, c: 1.0, alpha: 1.0, env: EnvironmentSpec::brownian(a0 + 1.0, sigma) };
    let expected = ["Supercritical", "Critical", "WeaklySubcritical", "IntermediatelySubcritical", "StronglySubcritical"];
    let mut ok = true;
    let mut lines = Vec::new();
    for (k, (a0, label)) in [1.0, 0.0, -1.0, -2.0, -3.0].into_iter().zip(expected).enumerate() {
      let p = params(a0);
      let class = classify_cbre(&p).map_err(|e| e.to_string())?;
      let mut good = class.label == label;
      let seed = 120 + k as u64;
      let detail = match label {
        "Supercritical" => {
          let s = survival_probability(&p, &grid(5.0, 40.0, 5.0), &self.cfg(0.01, 40.0, 20_000, seed)).map_err(|e| e.to_string())?;
          let last = *s.curve.points.last().expect("non-empty");
          let xi = xi_from_environment(&p.env).map_err(|e| e.to_string())?;
          let inf = exp_functional_inf_samples(&xi, 1.0, &self.cfg(0.01, 400.0, 20_000, seed + 50), 1e-6).map_err(|e| e.to_string())?;
          let mut m = Moments::default();
          inf.iter().for_each(|s| m.push(p.fspec().eval(s.value)));
          let direct = m.estimate();
          good &= last.as_estimate().agrees_with(direct, 3.0);
          format!("plateau {:.4}±{:.4} vs E[F_x(A_∞)] {:.4}±{:.4}", last.estimate, last.stderr, direct.mean, direct.stderr)
        }
        "Critical" => {
          let s = survival_probability(&p, &grid(10.0, 200.0, 10.0), &self.cfg(0.05, 200.0, 1_000_000, seed)).map_err(|e| e.to_string())?;
          let fit = fit_decay(&s.curve, Pin::Rate(0.0)).map_err(|e| e.to_string())?;
          good &= (fit.exponent + 0.5).abs() <= 0.1;
          format!("exponent {:.3}", fit.exponent)
        }
        "WeaklySubcritical" => {
          let s = survival_probability(&p, &grid(10.0, 100.0, 5.0), &self.cfg(0.05, 100.0, 500_000, seed)).map_err(|e| e.to_string())?;
          let fit = fit_decay(&s.curve, Pin::Free).map_err(|e| e.to_string())?;
          good &= (fit.rate / -0.25 - 1.0).abs() <= 0.05 && (fit.exponent + 1.5).abs() <= 0.3;
          format!("rate {:.4}, exponent {:.3}", fit.rate, fit.exponent)
        }
        "IntermediatelySubcritical" => {
          let s = survival_probability(&p, &grid(10.0, 200.0, 10.0), &self.cfg(0.05, 200.0, 200_000, seed)).map_err(|e| e.to_string())?;
          let fit = fit_decay(&s.curve, Pin::Rate(-1.0)).map_err(|e| e.to_string())?;
          good &= (fit.exponent + 0.5).abs() <= 0.15;
          format!("exponent {:.3} at pinned rate -1", fit.exponent)
        }
        _ => {
          let s = survival_probability(&p, &grid(5.0, 50.0, 2.5), &self.cfg(0.05, 50.0, 200_000, seed)).map_err(|e| e.to_string())?;
          let fit = fit_decay(&s.curve, Pin::Free).map_err(|e| e.to_string())?;
          good &= (fit.rate / -2.0 - 1.0).abs() <= 0.05 && fit.exponent.abs() <= 0.2;
          format!("rate {:.4}, exponent {:.3}", fit.rate, fit.exponent)
        }
      };
      ok &= good;
      lines.push(format!("a0={a0}: {} {detail}{}", class.label, if good { "" } else { " FAILED" }));
    }
    // the classifier agrees with the library-level regime of the derived triplet
    let xi = xi_from_environment(&params(-2.0).env).map_err(|e| e.to_string())?;
    let r = classify_regime(&xi, 1.0, &RegimeOptions::default()).map_err(|e| e.to_string())?;
    ok &= r.regime.index() == 4;
    check(ok, lines.join("; "))
  }
}
