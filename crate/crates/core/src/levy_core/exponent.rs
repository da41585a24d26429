use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::triplet::{JumpLaw, JumpMeasure, LevyTriplet, Side, TemperedStable};
use crate::error::{Error, Result};
use crate::numerics::{expm1_minus_x, ln1p_minus_x};
use crate::quadrature::{self, Tolerance};

/// Interval `D(Φ) = {λ : Φ(λ) < ∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentDomain {
  pub lower: f64,
  pub upper: f64,
  pub lower_closed: bool,
  pub upper_closed: bool,
}

impl ExponentDomain {
  const WHOLE_LINE: Self =
    Self { lower: f64::NEG_INFINITY, upper: f64::INFINITY, lower_closed: false, upper_closed: false };

  pub fn contains(&self, lambda: f64) -> bool {
    let above = lambda > self.lower || (self.lower_closed && lambda == self.lower);
    let below = lambda < self.upper || (self.upper_closed && lambda == self.upper);
    above && below
  }

  pub fn interior_contains(&self, lambda: f64) -> bool {
    lambda > self.lower && lambda < self.upper
  }
}

impl fmt::Display for ExponentDomain {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let l = if self.lower_closed { '[' } else { '(' };
    let r = if self.upper_closed { ']' } else { ')' };
    write!(f, "{l}{}, {}{r}", self.lower, self.upper)
  }
}

/// `J(u)`, `J'(u)`, `J''(u)` of a single tempered stable side written for the positive half-line.
fn ts_positive(ts: &TemperedStable, u: f64) -> (f64, f64, f64) {
  let (alpha, c, lam) = (ts.stability, ts.scale, ts.tempering);
  if u > lam {
    return (f64::INFINITY, f64::INFINITY, f64::INFINITY);
  }
  if u == lam {
    // closed endpoint: J is finite, its derivatives are not
    let j = if (alpha - 1.0).abs() < 1e-12 { c * lam } else { c * gamma(-alpha) * lam.powf(alpha) * (alpha - 1.0) };
    return (j, f64::INFINITY, f64::INFINITY);
  }
  let v = u / lam;
  if (alpha - 1.0).abs() < 1e-12 {
    let l = (-v).ln_1p();
    let j = c * lam * (ln1p_minus_x(-v) - v * l);
    return (j, -c * l, c / (lam - u));
  }
  let g = gamma(-alpha);
  let w = alpha * (-v).ln_1p();
  let j = c * g * lam.powf(alpha) * (expm1_minus_x(w) + alpha * ln1p_minus_x(-v));
  let d1 = -c * g * alpha * lam.powf(alpha - 1.0) * ((alpha - 1.0) * (-v).ln_1p()).exp_m1();
  let d2 = c * gamma(2.0 - alpha) * (lam - u).powf(alpha - 2.0);
  (j, d1, d2)
}

fn ts_positive_complex(ts: &TemperedStable, u: Complex64) -> Complex64 {
  let (alpha, c, lam) = (ts.stability, ts.scale, ts.tempering);
  let lam_c = Complex64::new(lam, 0.0);
  if (alpha - 1.0).abs() < 1e-12 {
    return c * ((lam_c - u) * ((lam_c - u) / lam).ln() + u);
  }
  c * gamma(-alpha) * ((lam_c - u).powf(alpha) - lam.powf(alpha) + alpha * lam.powf(alpha - 1.0) * u)
}

impl JumpMeasure {
  pub fn domain(&self) -> ExponentDomain {
    match *self {
      JumpMeasure::Zero => ExponentDomain::WHOLE_LINE,
      JumpMeasure::CompoundPoisson { rate, law } => {
        if rate == 0.0 {
          return ExponentDomain::WHOLE_LINE;
        }
        match law {
          JumpLaw::PointMass { .. } | JumpLaw::Gaussian { .. } => ExponentDomain::WHOLE_LINE,
          JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => ExponentDomain {
            lower: if p_up < 1.0 { -eta_down } else { f64::NEG_INFINITY },
            upper: if p_up > 0.0 { eta_up } else { f64::INFINITY },
            lower_closed: false,
            upper_closed: false,
          },
        }
      }
      JumpMeasure::TemperedStable(ts) => match ts.side {
        Side::Positive => ExponentDomain {
          lower: f64::NEG_INFINITY,
          upper: ts.tempering,
          lower_closed: false,
          upper_closed: true,
        },
        Side::Negative => ExponentDomain {
          lower: -ts.tempering,
          upper: f64::INFINITY,
          lower_closed: true,
          upper_closed: false,
        },
      },
    }
  }

  /// `(J, J', J'')` at `u`; infinite outside the domain.
  pub fn integral_terms(&self, u: f64) -> (f64, f64, f64) {
    const INF: (f64, f64, f64) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    match *self {
      JumpMeasure::Zero => (0.0, 0.0, 0.0),
      JumpMeasure::CompoundPoisson { rate, law } => {
        if rate == 0.0 {
          return (0.0, 0.0, 0.0);
        }
        match law {
          JumpLaw::PointMass { at } => {
            let z = u * at;
            (rate * expm1_minus_x(z), rate * at * z.exp_m1(), rate * at * at * z.exp())
          }
          JumpLaw::Gaussian { mean, std } => {
            let s2 = std * std;
            let q = u * mean + 0.5 * u * u * s2;
            let eq = q.exp();
            let j = rate * (expm1_minus_x(q) + 0.5 * u * u * s2);
            let d1 = rate * (mean * q.exp_m1() + u * s2 * eq);
            let d2 = rate * eq * (s2 + (mean + u * s2).powi(2));
            (j, d1, d2)
          }
          JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => {
            let (mut j, mut d1, mut d2) = (0.0, 0.0, 0.0);
            if p_up > 0.0 {
              if u >= eta_up {
                return INF;
              }
              let e = eta_up - u;
              j += p_up * u * u / (eta_up * e);
              d1 += p_up * u * (2.0 * eta_up - u) / (eta_up * e * e);
              d2 += p_up * 2.0 * eta_up / (e * e * e);
            }
            if p_up < 1.0 {
              if u <= -eta_down {
                return INF;
              }
              let q = 1.0 - p_up;
              let e = eta_down + u;
              j += q * u * u / (eta_down * e);
              d1 += q * u * (2.0 * eta_down + u) / (eta_down * e * e);
              d2 += q * 2.0 * eta_down / (e * e * e);
            }
            (rate * j, rate * d1, rate * d2)
          }
        }
      }
      JumpMeasure::TemperedStable(ts) => match ts.side {
        Side::Positive => ts_positive(&ts, u),
        Side::Negative => {
          let (j, d1, d2) = ts_positive(&ts, -u);
          (j, -d1, d2)
        }
      },
    }
  }

  /// `∫(e^{ux} - 1 - ux) ν(dx)` for complex `u` on the strip where it converges.
  pub fn integral_complex(&self, u: Complex64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    match *self {
      JumpMeasure::Zero => zero,
      JumpMeasure::CompoundPoisson { rate, law } => {
        if rate == 0.0 {
          return zero;
        }
        match law {
          JumpLaw::PointMass { at } => {
            let z = u * at;
            rate * (z.exp() - 1.0 - z)
          }
          JumpLaw::Gaussian { mean, std } => {
            let q = u * mean + 0.5 * u * u * std * std;
            rate * (q.exp() - 1.0 - u * mean)
          }
          JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => {
            let up = p_up * u * u / (eta_up * (eta_up - u));
            let down = (1.0 - p_up) * u * u / (eta_down * (eta_down + u));
            rate * (up + down)
          }
        }
      }
      JumpMeasure::TemperedStable(ts) => match ts.side {
        Side::Positive => ts_positive_complex(&ts, u),
        Side::Negative => ts_positive_complex(&ts, -u),
      },
    }
  }

  /// Density of the jump measure at `x != 0`; `None` for atomic measures.
  pub fn density(&self, x: f64) -> Option<f64> {
    match *self {
      JumpMeasure::Zero => Some(0.0),
      JumpMeasure::CompoundPoisson { rate, law } => match law {
        JumpLaw::PointMass { .. } => None,
        JumpLaw::Gaussian { mean, std } => {
          if std == 0.0 {
            return None;
          }
          let z = (x - mean) / std;
          Some(rate * (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt()))
        }
        JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => Some(if x > 0.0 {
          rate * p_up * eta_up * (-eta_up * x).exp()
        } else {
          rate * (1.0 - p_up) * eta_down * (eta_down * x).exp()
        }),
      },
      JumpMeasure::TemperedStable(ts) => {
        let y = ts.side.sign() * x;
        Some(if y > 0.0 { ts.scale * (-ts.tempering * y).exp() * y.powf(-1.0 - ts.stability) } else { 0.0 })
      }
    }
  }

  /// `∫_{lo < x < hi, x != 0} g(x) ν(dx)` by quadrature (atoms are summed exactly).
  ///
  /// For infinite-activity measures `g` must vanish at least quadratically at 0.
  pub fn integrate<G: Fn(f64) -> f64>(&self, label: &str, g: G, lo: f64, hi: f64) -> Result<f64> {
    if lo >= hi {
      return Ok(0.0);
    }
    let tol = Tolerance::default();
    match *self {
      JumpMeasure::Zero => Ok(0.0),
      JumpMeasure::CompoundPoisson { rate, law } => {
        if rate == 0.0 {
          return Ok(0.0);
        }
        if let JumpLaw::PointMass { at } = law {
          return Ok(if at > lo && at < hi { rate * g(at) } else { 0.0 });
        }
        if let JumpLaw::Gaussian { mean, std: 0.0 } = law {
          return Ok(if mean > lo && mean < hi { rate * g(mean) } else { 0.0 });
        }
        let h = |x: f64| weighted(g(x), self.density(x).unwrap_or(0.0));
        // split at 0 (exponential kink) and at the Gaussian centre
        let mut cuts = vec![lo, hi];
        if lo < 0.0 && hi > 0.0 {
          cuts.push(0.0);
        }
        if let JumpLaw::Gaussian { mean, .. } = law {
          if lo < mean && mean < hi && mean != 0.0 {
            cuts.push(mean);
          }
        }
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in cuts.windows(2) {
          total += integrate_segment(label, &h, w[0], w[1], tol)?;
        }
        Ok(total)
      }
      JumpMeasure::TemperedStable(ts) => {
        // work on the positive half-line y = side·x
        let s = ts.side.sign();
        let (ylo, yhi) = if s > 0.0 { (lo.max(0.0), hi) } else { ((-hi).max(0.0), -lo) };
        if ylo >= yhi {
          return Ok(0.0);
        }
        let (alpha, c, lam) = (ts.stability, ts.scale, ts.tempering);
        let dens = |y: f64| c * (-lam * y).exp() * y.powf(-1.0 - alpha);
        let mut total = 0.0;
        let mut start = ylo;
        if ylo == 0.0 {
          // y = t^p with p = 1/(2-α) turns g(y)·y^{-1-α} dy into a bounded integrand
          let p = 1.0 / (2.0 - alpha);
          let top = yhi.min(1.0);
          let f = |t: f64| {
            if t <= 0.0 {
              return 0.0;
            }
            let y = t.powf(p);
            if y * y == 0.0 {
              return 0.0;
            }
            let gy = g(s * y);
            if gy == 0.0 {
              0.0
            } else {
              gy / (y * y) * c * (-lam * y).exp() * p
            }
          };
          total += quadrature::integrate(label, f, 0.0, top.powf(1.0 / p), tol)?;
          start = top;
        }
        if start < yhi {
          let h = |y: f64| weighted(g(s * y), dens(y));
          total += integrate_segment(label, &h, start, yhi, tol)?;
        }
        Ok(total)
      }
    }
  }
}

/// `g·d`, treating an overflowing `g` against an underflowed density as zero mass.
fn weighted(g: f64, d: f64) -> f64 {
  if d == 0.0 || g == 0.0 {
    return 0.0;
  }
  let v = g * d;
  if !v.is_finite() && d < 1e-290 {
    0.0
  } else {
    v
  }
}

fn integrate_segment<H: Fn(f64) -> f64>(label: &str, h: &H, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
  match (a.is_finite(), b.is_finite()) {
    (true, true) => quadrature::integrate(label, h, a, b, tol),
    (true, false) => quadrature::integrate_to_infinity(label, h, a, tol),
    (false, true) => quadrature::integrate_from_neg_infinity(label, h, b, tol),
    (false, false) => {
      Ok(quadrature::integrate_from_neg_infinity(label, h, 0.0, tol)? + quadrature::integrate_to_infinity(label, h, 0.0, tol)?)
    }
  }
}

impl LevyTriplet {
  pub fn domain(&self) -> ExponentDomain {
    self.jumps.domain()
  }

  /// `Φ(λ) = log E[e^{λ ξ(1)}]`, `+∞` outside the domain.
  pub fn laplace_exponent(&self, lambda: f64) -> f64 {
    if !self.domain().contains(lambda) {
      return f64::INFINITY;
    }
    let (j, _, _) = self.jumps.integral_terms(lambda);
    -self.drift_a * lambda + 0.5 * self.sigma * self.sigma * lambda * lambda + j
  }

  /// `(Φ'(λ), Φ''(λ))` on the interior of the domain.
  pub fn laplace_derivatives(&self, lambda: f64) -> Result<(f64, f64)> {
    let dom = self.domain();
    if !dom.interior_contains(lambda) {
      return Err(Error::Domain { lambda, domain: dom.to_string() });
    }
    let (_, d1, d2) = self.jumps.integral_terms(lambda);
    let s2 = self.sigma * self.sigma;
    Ok((-self.drift_a + s2 * lambda + d1, s2 + d2))
  }

  /// `Ψ(λ) = -log E[e^{iλ ξ(1)}] = -Φ(iλ)`.
  pub fn characteristic_exponent(&self, lambda: f64) -> Complex64 {
    let u = Complex64::new(0.0, lambda);
    Complex64::new(0.0, self.drift_a * lambda) + 0.5 * self.sigma * self.sigma * lambda * lambda
      - self.jumps.integral_complex(u)
  }

  /// `E[ξ(1)] = Φ'(0)`.
  pub fn mean_increment(&self) -> f64 {
    self.laplace_derivatives(0.0).map(|(d1, _)| d1).unwrap_or(f64::NAN)
  }

  /// `Φ(λ)` with the jump integral evaluated by quadrature rather than in closed form.
  pub fn laplace_exponent_quadrature(&self, lambda: f64) -> Result<f64> {
    if !self.domain().contains(lambda) {
      return Ok(f64::INFINITY);
    }
    let j = self.jumps.integrate("e^{λx}-1-λx", |x| expm1_minus_x(lambda * x), f64::NEG_INFINITY, f64::INFINITY)?;
    Ok(-self.drift_a * lambda + 0.5 * self.sigma * self.sigma * lambda * lambda + j)
  }

  /// Esscher transform: the law under `dP^{(θ)} = e^{θξ(t) - Φ(θ)t} dP`.
  pub fn esscher(&self, theta: f64) -> Result<LevyTriplet> {
    let dom = self.domain();
    if !dom.interior_contains(theta) {
      return Err(Error::Domain { lambda: theta, domain: dom.to_string() });
    }
    let (d1, _) = self.laplace_derivatives(theta)?;
    let jumps = match self.jumps {
      JumpMeasure::Zero => JumpMeasure::Zero,
      JumpMeasure::CompoundPoisson { rate, law } => match law {
        JumpLaw::PointMass { at } => JumpMeasure::point_mass(rate * (theta * at).exp(), at),
        JumpLaw::Gaussian { mean, std } => {
          let s2 = std * std;
          JumpMeasure::gaussian(rate * (theta * mean + 0.5 * theta * theta * s2).exp(), mean + theta * s2, std)
        }
        JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => {
          let up = rate * p_up * eta_up / (eta_up - theta);
          let down = rate * (1.0 - p_up) * eta_down / (eta_down + theta);
          let new_rate = up + down;
          let p = if new_rate > 0.0 { up / new_rate } else { p_up };
          JumpMeasure::two_sided_exponential(new_rate, p, eta_up - theta, eta_down + theta)
        }
      },
      JumpMeasure::TemperedStable(ts) => JumpMeasure::TemperedStable(TemperedStable {
        tempering: ts.tempering - ts.side.sign() * theta,
        ..ts
      }),
    };
    Ok(LevyTriplet { drift_a: -d1, sigma: self.sigma, jumps })
  }

  /// The dual process `-ξ`.
  pub fn dual(&self) -> LevyTriplet {
    let jumps = match self.jumps {
      JumpMeasure::Zero => JumpMeasure::Zero,
      JumpMeasure::CompoundPoisson { rate, law } => {
        let law = match law {
          JumpLaw::PointMass { at } => JumpLaw::PointMass { at: -at },
          JumpLaw::Gaussian { mean, std } => JumpLaw::Gaussian { mean: -mean, std },
          JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => {
            JumpLaw::TwoSidedExponential { p_up: 1.0 - p_up, eta_up: eta_down, eta_down: eta_up }
          }
        };
        JumpMeasure::CompoundPoisson { rate, law }
      }
      JumpMeasure::TemperedStable(ts) => JumpMeasure::TemperedStable(TemperedStable { side: ts.side.flip(), ..ts }),
    };
    LevyTriplet { drift_a: -self.drift_a, sigma: self.sigma, jumps }
  }
}
