use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use super::curve::ExpectationCurve;
use crate::error::{Error, Result};

/// Fewest usable points accepted by [`fit_decay`].
pub const MIN_FIT_POINTS: usize = 6;

/// Parameter held fixed in the decay fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "pin", content = "value", rename_all = "snake_case")]
pub enum Pin {
  #[default]
  Free,
  Rate(f64),
  Exponent(f64),
}

/// Weighted least-squares fit of `log y = intercept + rate·t + exponent·log t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
  pub rate: f64,
  pub exponent: f64,
  pub intercept: f64,
  /// Covariance of `(intercept, rate, exponent)`; rows of pinned parameters are zero.
  pub covariance: [[f64; 3]; 3],
  pub pin: Pin,
  /// Weighted residual sum of squares per degree of freedom.
  pub chi2_per_dof: f64,
  pub n_points: usize,
  /// Whether delta-method weights were used (otherwise unit weights and a residual-scaled covariance).
  pub weighted: bool,
  pub dropped: Vec<f64>,
  pub warnings: Vec<String>,
}

impl DecayFit {
  pub fn intercept_stderr(&self) -> f64 {
    self.covariance[0][0].sqrt()
  }

  pub fn rate_stderr(&self) -> f64 {
    self.covariance[1][1].sqrt()
  }

  pub fn exponent_stderr(&self) -> f64 {
    self.covariance[2][2].sqrt()
  }

  /// Fitted `log y` at `t`.
  pub fn predict_log(&self, t: f64) -> f64 {
    self.intercept + self.rate * t + self.exponent * t.ln()
  }
}

/// Fits the decay model to the points of `curve`.
///
/// Points on one curve share paths, so the reported covariance treats them as independent and
/// understates the true uncertainty.
pub fn fit_decay(curve: &ExpectationCurve, pin: Pin) -> Result<DecayFit> {
  let t: Vec<f64> = curve.points.iter().map(|p| p.t).collect();
  let y: Vec<f64> = curve.points.iter().map(|p| p.estimate).collect();
  let se: Vec<f64> = curve.points.iter().map(|p| p.stderr).collect();
  fit_decay_points(&t, &y, &se, pin)
}

/// As [`fit_decay`] on raw `(t, y, stderr)` columns.
pub fn fit_decay_points(t: &[f64], y: &[f64], se: &[f64], pin: Pin) -> Result<DecayFit> {
  if t.len() != y.len() || t.len() != se.len() {
    return Err(Error::Fit("t, y and stderr columns differ in length".into()));
  }
  let mut warnings = Vec::new();
  let mut dropped = Vec::new();
  let mut rows = Vec::new();
  for i in 0..t.len() {
    if y[i] > 0.0 && y[i].is_finite() && t[i] > 0.0 {
      rows.push(i);
    } else {
      dropped.push(t[i]);
    }
  }
  if !dropped.is_empty() {
    warnings.push(format!("dropped {} points with non-positive values or t <= 0: {:?}", dropped.len(), dropped));
  }
  let free: Vec<usize> = match pin {
    Pin::Free => vec![0, 1, 2],
    Pin::Rate(_) => vec![0, 2],
    Pin::Exponent(_) => vec![0, 1],
  };
  if rows.len() < MIN_FIT_POINTS {
    return Err(Error::Fit(format!("{} usable points, need at least {MIN_FIT_POINTS}", rows.len())));
  }
  let weighted = rows.iter().all(|&i| se[i] > 0.0 && se[i].is_finite());
  if !weighted {
    warnings.push("some standard errors are not positive; using unit weights".into());
  }
  let n = rows.len();
  let p = free.len();
  let mut x = DMatrix::<f64>::zeros(n, p);
  let mut b = DVector::<f64>::zeros(n);
  for (r, &i) in rows.iter().enumerate() {
    // delta method: sd(log y) ≈ se / y
    let w = if weighted { y[i] / se[i] } else { 1.0 };
    let full = [1.0, t[i], t[i].ln()];
    let offset = match pin {
      Pin::Free => 0.0,
      Pin::Rate(r0) => r0 * t[i],
      Pin::Exponent(e0) => e0 * t[i].ln(),
    };
    for (c, &j) in free.iter().enumerate() {
      x[(r, c)] = w * full[j];
    }
    b[r] = w * (y[i].ln() - offset);
  }
  let xtx = x.transpose() * &x;
  let chol = xtx
    .clone()
    .cholesky()
    .ok_or_else(|| Error::Fit("design matrix is singular: the time grid needs distinct, non-degenerate points".into()))?;
  let beta = chol.solve(&(x.transpose() * &b));
  let resid = &b - &x * &beta;
  let dof = (n - p).max(1) as f64;
  let chi2 = resid.norm_squared() / dof;
  let mut cov_free = chol.inverse();
  if !weighted {
    cov_free *= chi2;
  }
  let mut params = [0.0; 3];
  match pin {
    Pin::Free => {}
    Pin::Rate(r0) => params[1] = r0,
    Pin::Exponent(e0) => params[2] = e0,
  }
  let mut cov = Matrix3::<f64>::zeros();
  for (c, &j) in free.iter().enumerate() {
    params[j] = beta[c];
    for (c2, &j2) in free.iter().enumerate() {
      cov[(j, j2)] = cov_free[(c, c2)];
    }
  }
  Ok(DecayFit {
    rate: params[1],
    exponent: params[2],
    intercept: params[0],
    covariance: cov.into(),
    pin,
    chi2_per_dof: chi2,
    n_points: n,
    weighted,
    dropped,
    warnings,
  })
}
