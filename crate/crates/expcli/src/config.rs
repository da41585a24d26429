//! Experiment configuration: a flat TOML file with dotted keys (`triplet.sigma = 1.4`).
//!
//! See `docs/config.md` for the full schema and one example per experiment kind.

use std::fmt;
use std::path::PathBuf;

use levy_expfun::asymptotics::{FSpec, Pin};
use levy_expfun::cbre::{CbreParams, EnvironmentSpec};
use levy_expfun::levy_core::{LevyTriplet, RegimeOptions, DEFAULT_ZERO_TOL};
use levy_expfun::path_sim::SimConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
  /// Table of `Φ, Φ', Φ''` on `grid.lambda`.
  Exponent,
  /// Sample paths and `E[A_t]` on `grid.t`.
  Simulate,
  /// `P(τ_{-x} > t)` on `grid.t` and its decay fit.
  Firstpassage,
  /// `E[F(A_t)]` on `grid.t`, decay fit and, with `grid.x`, the limiting coefficient.
  Asymptotics,
  /// Survival of the branching process in random environment on `grid.t`.
  Cbre,
  /// The acceptance suite.
  Acceptance,
}

impl Kind {
  pub fn name(self) -> &'static str {
    match self {
      Kind::Exponent => "exponent",
      Kind::Simulate => "simulate",
      Kind::Firstpassage => "firstpassage",
      Kind::Asymptotics => "asymptotics",
      Kind::Cbre => "cbre",
      Kind::Acceptance => "acceptance",
    }
  }
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
  *v == T::default()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Grids {
  #[serde(default, skip_serializing_if = "Vec::is_empty")]
  pub t: Vec<f64>,
  #[serde(default, skip_serializing_if = "Vec::is_empty")]
  pub x: Vec<f64>,
  #[serde(default, skip_serializing_if = "Vec::is_empty")]
  pub y: Vec<f64>,
  #[serde(default, skip_serializing_if = "Vec::is_empty")]
  pub lambda: Vec<f64>,
}

/// Branching parameters; the environment lives in its own section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbreSection {
  pub x0: f64,
  pub c: f64,
  pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstPassageSection {
  /// Barrier depth: the path is killed at or below `-x`.
  pub x: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub dir: Option<PathBuf>,
  /// Paths written to `paths.csv` by the `simulate` kind.
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub max_paths: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSection {
  #[serde(default)]
  pub exact_critical: bool,
  #[serde(default = "default_zero_tol")]
  pub zero_tol: f64,
}

fn default_zero_tol() -> f64 {
  DEFAULT_ZERO_TOL
}

impl Default for RegimeSection {
  fn default() -> Self {
    Self { exact_critical: false, zero_tol: DEFAULT_ZERO_TOL }
  }
}

impl RegimeSection {
  pub fn options(&self) -> RegimeOptions {
    RegimeOptions { zero_tol: self.zero_tol, exact_critical: self.exact_critical }
  }
}

/// Tolerances for the predicted-vs-fitted checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
  /// Relative error allowed on a nonzero decay rate.
  #[serde(default = "default_rate_rel")]
  pub rate_rel: f64,
  /// Absolute error allowed on a zero decay rate.
  #[serde(default = "default_rate_abs")]
  pub rate_abs: f64,
  #[serde(default = "default_exponent_abs")]
  pub exponent_abs: f64,
  /// Maximum deviation from a closed form.
  #[serde(default = "default_closed_form")]
  pub closed_form: f64,
}

fn default_rate_rel() -> f64 {
  0.05
}
fn default_rate_abs() -> f64 {
  0.01
}
fn default_exponent_abs() -> f64 {
  0.2
}
fn default_closed_form() -> f64 {
  1e-6
}

impl Default for Tolerances {
  fn default() -> Self {
    Self {
      rate_rel: default_rate_rel(),
      rate_abs: default_rate_abs(),
      exponent_abs: default_exponent_abs(),
      closed_form: default_closed_form(),
    }
  }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceSection {
  /// Criterion numbers to run; all when empty.
  #[serde(default, skip_serializing_if = "Vec::is_empty")]
  pub criteria: Vec<u8>,
}

fn default_n_paths() -> usize {
  10_000
}
fn default_step() -> f64 {
  0.01
}
fn default_alpha() -> f64 {
  1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub kind: Option<Kind>,
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub seed: Option<u64>,
  #[serde(default = "default_n_paths")]
  pub n_paths: usize,
  #[serde(default = "default_step")]
  pub step: f64,
  /// Defaults to the largest time in `grid.t`.
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub horizon: Option<f64>,
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub small_jump_cutoff: Option<f64>,
  #[serde(default = "default_alpha")]
  pub alpha: f64,
  /// Defaults to the tail index of `fspec`, or 1.
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub beta: Option<f64>,
  /// Esscher tilt; defaults to the one the regime calls for.
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub tilt: Option<f64>,
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub triplet: Option<LevyTriplet>,
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub environment: Option<EnvironmentSpec>,
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub cbre: Option<CbreSection>,
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub fspec: Option<FSpec>,
  #[serde(default, skip_serializing_if = "is_default")]
  pub grid: Grids,
  #[serde(default, skip_serializing_if = "is_default")]
  pub fit: Pin,
  #[serde(default, skip_serializing_if = "Option::is_none")]
  pub first_passage: Option<FirstPassageSection>,
  #[serde(default, skip_serializing_if = "is_default")]
  pub output: OutputSection,
  #[serde(default, skip_serializing_if = "is_default")]
  pub regime: RegimeSection,
  #[serde(default, skip_serializing_if = "is_default")]
  pub tolerances: Tolerances,
  #[serde(default, skip_serializing_if = "is_default")]
  pub acceptance: AcceptanceSection,
}

/// One problem with a config file; `line` is 1-based when the key could be located.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
  pub field: String,
  pub message: String,
  pub line: Option<usize>,
}

impl fmt::Display for Diagnostic {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match self.line {
      Some(l) => write!(f, "line {l}: {}: {}", self.field, self.message),
      None => write!(f, "{}: {}", self.field, self.message),
    }
  }
}

/// Finds the line defining the dotted key `field`, either written out in full or as a leaf
/// key under a `[section]` header.
fn line_of(text: &str, field: &str) -> Option<usize> {
  let key_of = |line: &str| line.split('=').next().map(|k| k.trim().to_string());
  let mut section = String::new();
  let mut best = None;
  for (i, raw) in text.lines().enumerate() {
    let line = raw.trim();
    if line.starts_with('[') {
      section = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
      continue;
    }
    if line.starts_with('#') || !line.contains('=') {
      continue;
    }
    let Some(key) = key_of(line) else { continue };
    let full = if section.is_empty() { key } else { format!("{section}.{key}") };
    if full == field {
      return Some(i + 1);
    }
    // a diagnostic on `triplet.jumps` points at the first key that builds it
    if best.is_none() && full.starts_with(&format!("{field}.")) {
      best = Some(i + 1);
    }
  }
  best
}

struct Diagnostics<'a> {
  text: &'a str,
  list: Vec<Diagnostic>,
}

impl Diagnostics<'_> {
  fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
    let field = field.into();
    let line = line_of(self.text, &field);
    self.list.push(Diagnostic { field, message: message.into(), line });
  }
}

impl ExperimentConfig {
  pub fn kind(&self) -> Kind {
    self.kind.expect("validated config has a kind")
  }

  pub fn seed(&self) -> u64 {
    self.seed.expect("validated config has a seed")
  }

  pub fn beta(&self) -> f64 {
    self.beta.or(self.fspec.map(|f| f.tail().1)).unwrap_or(1.0)
  }

  pub fn horizon(&self) -> f64 {
    self.horizon.unwrap_or_else(|| self.grid.t.iter().cloned().fold(self.step, f64::max))
  }

  pub fn sim_config(&self) -> SimConfig {
    SimConfig {
      step: self.step,
      horizon: self.horizon(),
      n_paths: self.n_paths,
      seed: self.seed.unwrap_or(0),
      small_jump_cutoff: self.small_jump_cutoff,
    }
  }

  pub fn cbre_params(&self) -> Option<CbreParams> {
    let c = self.cbre?;
    Some(CbreParams { x0: c.x0, c: c.c, alpha: c.alpha, env: self.environment? })
  }

  /// The canonical TOML form; parsing it gives back an identical config.
  pub fn to_toml(&self) -> String {
    toml::to_string(self).expect("config serialises")
  }

  /// Every violated invariant, without stopping at the first.
  fn check(&self, d: &mut Diagnostics<'_>) {
    let Some(kind) = self.kind else {
      d.push("kind", "kind required (exponent, simulate, firstpassage, asymptotics, cbre or acceptance)");
      return;
    };
    if self.seed.is_none() {
      d.push("seed", "seed required");
    }
    if kind != Kind::Exponent && kind != Kind::Acceptance {
      for (f, r) in self.sim_config().violations() {
        d.push(f, r);
      }
    }
    if !(self.alpha.is_finite() && self.alpha > 0.0) {
      d.push("alpha", format!("must be finite and positive, got {}", self.alpha));
    }
    if !(self.regime.zero_tol.is_finite() && self.regime.zero_tol > 0.0) {
      d.push("regime.zero_tol", format!("must be finite and positive, got {}", self.regime.zero_tol));
    }
    let tol = &self.tolerances;
    for (name, v) in [
      ("tolerances.rate_rel", tol.rate_rel),
      ("tolerances.rate_abs", tol.rate_abs),
      ("tolerances.exponent_abs", tol.exponent_abs),
      ("tolerances.closed_form", tol.closed_form),
    ] {
      if !(v.is_finite() && v > 0.0) {
        d.push(name, format!("must be finite and positive, got {v}"));
      }
    }
    for (name, g) in [("grid.t", &self.grid.t), ("grid.x", &self.grid.x), ("grid.y", &self.grid.y), ("grid.lambda", &self.grid.lambda)] {
      if g.iter().any(|v| !v.is_finite()) {
        d.push(name, "values must be finite");
      }
    }
    if let Some(f) = &self.fspec {
      for (field, r) in f.violations() {
        d.push(format!("fspec.{field}"), r);
      }
      if (f.alpha() - self.alpha).abs() > 1e-12 * self.alpha.abs().max(1.0) {
        d.push("fspec.alpha", format!("must equal alpha = {}, got {}", self.alpha, f.alpha()));
      }
    }

    let needs_triplet = matches!(kind, Kind::Exponent | Kind::Simulate | Kind::Firstpassage | Kind::Asymptotics);
    if needs_triplet {
      match &self.triplet {
        None => d.push("triplet", format!("a triplet section is required for kind = \"{}\"", kind.name())),
        Some(t) => {
          let violations = t.violations();
          for (f, r) in &violations {
            d.push(format!("triplet.{f}"), r.clone());
          }
          if violations.is_empty() && kind == Kind::Asymptotics {
            self.check_beta(t, d);
          }
        }
      }
    }
    if kind == Kind::Cbre {
      match (&self.cbre, &self.environment) {
        (Some(c), Some(env)) => {
          let p = CbreParams { x0: c.x0, c: c.c, alpha: c.alpha, env: *env };
          for (f, r) in p.violations() {
            d.push(f, r);
          }
        }
        (c, env) => {
          if c.is_none() {
            d.push("cbre", "a cbre section (x0, c, alpha) is required for kind = \"cbre\"");
          }
          if env.is_none() {
            d.push("environment", "an environment section is required for kind = \"cbre\"");
          }
        }
      }
    }

    match kind {
      Kind::Exponent => {
        if self.grid.lambda.is_empty() {
          d.push("grid.lambda", "must be non-empty for kind = \"exponent\"");
        }
      }
      Kind::Simulate | Kind::Firstpassage | Kind::Asymptotics | Kind::Cbre => {
        if self.grid.t.is_empty() {
          d.push("grid.t", format!("must be non-empty for kind = \"{}\"", kind.name()));
        } else if self.grid.t.windows(2).any(|w| w[1] <= w[0]) || self.grid.t[0] < 0.0 {
          d.push("grid.t", "must be non-negative and strictly increasing");
        } else if let Some(h) = self.horizon {
          let last = *self.grid.t.last().expect("non-empty");
          if last > h {
            d.push("grid.t", format!("last time {last} exceeds horizon {h}"));
          }
        }
      }
      Kind::Acceptance => {
        if let Some(bad) = self.acceptance.criteria.iter().find(|&&c| !(1..=12).contains(&c)) {
          d.push("acceptance.criteria", format!("criteria are numbered 1 to 12, got {bad}"));
        }
      }
    }
    match kind {
      Kind::Asymptotics if self.fspec.is_none() => d.push("fspec", "an fspec section is required for kind = \"asymptotics\""),
      Kind::Firstpassage => match self.first_passage {
        None => d.push("first_passage.x", "barrier depth required for kind = \"firstpassage\""),
        Some(fp) if !(fp.x.is_finite() && fp.x > 0.0) => {
          d.push("first_passage.x", format!("must be finite and positive, got {}", fp.x))
        }
        _ => {}
      },
      _ => {}
    }
    if let Some(theta) = self.tilt {
      if !theta.is_finite() {
        d.push("tilt", format!("must be finite, got {theta}"));
      } else if let Some(t) = self.triplet.filter(|t| t.violations().is_empty()) {
        let dom = t.domain();
        if !dom.interior_contains(theta) {
          d.push("tilt", format!("{theta} lies outside the interior of the exponent domain {dom}"));
        }
      }
    }
  }

  /// `β` must lie in the interior of `D(Φ) ∩ (0, ∞)`.
  fn check_beta(&self, t: &LevyTriplet, d: &mut Diagnostics<'_>) {
    let beta = self.beta();
    let dom = t.domain();
    let lower = dom.lower.max(0.0);
    if !(beta > lower && dom.interior_contains(beta)) {
      let field = if self.beta.is_some() { "beta" } else { "fspec.beta" };
      d.push(
        field,
        format!("β = {beta} must lie in the open interval ({lower}, {}), the interior of the domain {dom} of Φ on the positive half-line", dom.upper),
      );
    }
  }
}

/// Parses and validates a config, listing every problem found.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
  validate_config_with_seed(text, None)
}

/// As [`validate_config`], with `seed` replacing whatever the file says.
pub fn validate_config_with_seed(text: &str, seed: Option<u64>) -> Result<ExperimentConfig, Vec<Diagnostic>> {
  let (parsed, mut d) = parse(text);
  let Some(mut cfg) = parsed else { return Err(d.list) };
  if seed.is_some() {
    cfg.seed = seed;
  }
  cfg.check(&mut d);
  if d.list.is_empty() {
    Ok(cfg)
  } else {
    Err(d.list)
  }
}

/// Structural parse only: syntax, types and unknown keys, but no invariants.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
  match parse(text) {
    (Some(cfg), d) if d.list.is_empty() => Ok(cfg),
    (_, d) => Err(d.list),
  }
}

fn parse(text: &str) -> (Option<ExperimentConfig>, Diagnostics<'_>) {
  let mut d = Diagnostics { text, list: Vec::new() };
  let de = match toml::de::Deserializer::parse(text) {
    Ok(de) => de,
    Err(e) => {
      d.list.push(syntax_diagnostic(text, &e));
      return (None, d);
    }
  };
  let mut unknown = Vec::new();
  let parsed: Result<ExperimentConfig, _> = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()));
  for key in unknown {
    d.push(key, "unknown key");
  }
  match parsed {
    Ok(cfg) => (Some(cfg), d),
    Err(e) => {
      d.list.push(syntax_diagnostic(text, &e));
      (None, d)
    }
  }
}

fn syntax_diagnostic(text: &str, e: &toml::de::Error) -> Diagnostic {
  let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
  Diagnostic { field: "config".into(), message: e.message().trim().to_string(), line }
}
