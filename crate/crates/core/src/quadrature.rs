//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
  0.991_455_371_120_812_6,
  0.949_107_912_342_758_5,
  0.864_864_423_359_769_1,
  0.741_531_185_599_394_4,
  0.586_087_235_467_691_1,
  0.405_845_151_377_397_2,
  0.207_784_955_007_898_5,
  0.0,
];
const WGK: [f64; 8] = [
  0.022_935_322_010_529_22,
  0.063_092_092_629_978_55,
  0.104_790_010_322_250_2,
  0.140_653_259_715_525_9,
  0.169_004_726_639_267_9,
  0.190_350_578_064_785_4,
  0.204_432_940_075_298_9,
  0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
  0.129_484_966_168_869_7,
  0.279_705_391_489_276_7,
  0.381_830_050_505_118_9,
  0.417_959_183_673_469_4,
];

pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Relative floor: below this, double precision rounding dominates the Kronrod error estimate.
pub const DEFAULT_REL_TOL: f64 = 1e-12;
const MAX_INTERVALS: usize = 2_000;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
  pub abs: f64,
  pub rel: f64,
}

impl Default for Tolerance {
  fn default() -> Self {
    Self { abs: DEFAULT_ABS_TOL, rel: DEFAULT_REL_TOL }
  }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
  a: f64,
  b: f64,
  value: f64,
  error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
  let center = 0.5 * (a + b);
  let half = 0.5 * (b - a);
  let fc = f(center);
  let mut kronrod = fc * WGK[7];
  let mut gauss = fc * WG[3];
  for j in 0..7 {
    let dx = half * XGK[j];
    let s = f(center - dx) + f(center + dx);
    kronrod += WGK[j] * s;
    if j % 2 == 1 {
      gauss += WG[j / 2] * s;
    }
  }
  Segment { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(label: &str, f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
  if a == b {
    return Ok(0.0);
  }
  if !(a.is_finite() && b.is_finite()) {
    return Err(Error::param("interval", format!("[{a}, {b}] must be finite; use integrate_to_infinity")));
  }
  let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
  let mut segments = vec![gk15(&f, lo, hi)];
  let mut evaluations = 15;
  loop {
    let total: f64 = segments.iter().map(|s| s.value).sum();
    let err: f64 = segments.iter().map(|s| s.error).sum();
    if !total.is_finite() || !err.is_finite() {
      return Err(Error::Quadrature {
        integrand: label.to_string(),
        lower: lo,
        upper: hi,
        estimate: total,
        error_estimate: err,
        evaluations,
      });
    }
    if err <= tol.abs.max(tol.rel * total.abs()) {
      return Ok(sign * total);
    }
    if segments.len() >= MAX_INTERVALS {
      return Err(Error::Quadrature {
        integrand: label.to_string(),
        lower: lo,
        upper: hi,
        estimate: total,
        error_estimate: err,
        evaluations,
      });
    }
    let (worst, _) = segments
      .iter()
      .enumerate()
      .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
      .expect("non-empty");
    let s = segments.swap_remove(worst);
    let mid = 0.5 * (s.a + s.b);
    if mid <= s.a || mid >= s.b {
      // interval can no longer be split in floating point
      return Err(Error::Quadrature {
        integrand: label.to_string(),
        lower: lo,
        upper: hi,
        estimate: total,
        error_estimate: err,
        evaluations,
      });
    }
    segments.push(gk15(&f, s.a, mid));
    segments.push(gk15(&f, mid, s.b));
    evaluations += 30;
  }
}

/// Integrates `f` over `[a, ∞)` through `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(label: &str, f: F, a: f64, tol: Tolerance) -> Result<f64> {
  let g = |s: f64| {
    if s >= 1.0 {
      return 0.0;
    }
    let one_minus = 1.0 - s;
    let x = a + s / one_minus;
    let v = f(x) / (one_minus * one_minus);
    if v.is_finite() {
      v
    } else if x.is_infinite() {
      0.0
    } else {
      v
    }
  };
  integrate(label, g, 0.0, 1.0, tol)
}

/// Integrates `f` over `(-∞, b]`.
pub fn integrate_from_neg_infinity<F: Fn(f64) -> f64>(label: &str, f: F, b: f64, tol: Tolerance) -> Result<f64> {
  integrate_to_infinity(label, |y| f(-y), -b, tol)
}
