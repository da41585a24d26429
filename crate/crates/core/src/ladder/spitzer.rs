use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_core::LevyTriplet;
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};

/// Terms of the series summed exactly before the Edgeworth tail takes over.
const SERIES_TERMS: usize = 2000;

/// Mean strict ascending ladder height of the step-`δ` skeleton of a zero-mean process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderHeightMean {
  pub value: f64,
  /// Size of the Edgeworth tail added to the exponent, a proxy for the truncation error.
  pub tail_correction: f64,
  pub terms: usize,
}

/// `P(ξ(t) ≤ 0)` by Gil-Pelaez inversion.
pub fn prob_nonpositive(triplet: &LevyTriplet, t: f64) -> Result<f64> {
  let im_phi = |u: f64| {
    if u == 0.0 {
      return 0.0;
    }
    let psi = triplet.characteristic_exponent(u);
    -(-t * psi.re).exp() * (t * psi.im).sin() / u
  };
  let tol = Tolerance { abs: 1e-12, rel: 1e-10 };
  let integral = if triplet.sigma > 0.0 {
    // |φ(u)| ≤ e^{-tσ²u²/2}
    let cut = (90.0 / (t * triplet.sigma * triplet.sigma)).sqrt();
    integrate("Gil-Pelaez", im_phi, 0.0, cut, tol)?
  } else {
    integrate_to_infinity("Gil-Pelaez", im_phi, 0.0, tol)?
  };
  Ok(0.5 - integral / std::f64::consts::PI)
}

/// `E[H]` for the strict ascending ladder heights of the walk `S_n = ξ(nδ)`, from
///
/// `E[H] = (s/√2) exp{Σ_n n^{-1} (P(S_n ≤ 0) - 1/2)}`, `s² = Var S_1`,
///
/// valid for a mean-zero walk with finite variance. Terms past the first 2000 are replaced
/// by their Edgeworth approximation `γ/(6√(2π)) n^{-3/2}`.
pub fn mean_ladder_height(triplet: &LevyTriplet, step: f64) -> Result<LadderHeightMean> {
  let (mean, phi2) = triplet.laplace_derivatives(0.0)?;
  if mean.abs() > 1e-8 * phi2.sqrt().max(1.0) {
    return Err(Error::RegimeMismatch(format!("ladder height series needs a zero-mean process, mean is {mean}")));
  }
  if triplet.sigma == 0.0 && triplet.jumps.is_finite_activity() {
    return Err(Error::Unsupported("marginals with an atom at 0 (finite activity, no Gaussian part)".into()));
  }
  if !(step > 0.0 && step.is_finite()) {
    return Err(Error::param("step", format!("must be positive, got {step}")));
  }
  let s = (phi2 * step).sqrt();
  let mut sum = 0.0;
  if !(triplet.jumps.is_zero()) {
    for n in 1..=SERIES_TERMS {
      sum += (prob_nonpositive(triplet, n as f64 * step)? - 0.5) / n as f64;
    }
  }
  let kappa3 = step * triplet.jumps.integrate("third moment", |x| x * x * x, f64::NEG_INFINITY, f64::INFINITY)?;
  let gamma = kappa3 / s.powi(3);
  let tail = gamma / (6.0 * (2.0 * std::f64::consts::PI).sqrt()) * zeta_three_halves_tail(SERIES_TERMS);
  Ok(LadderHeightMean {
    value: s / 2f64.sqrt() * (sum + tail).exp(),
    tail_correction: tail,
    terms: if triplet.jumps.is_zero() { 0 } else { SERIES_TERMS },
  })
}

/// `Σ_{n>N} n^{-3/2}` by Euler–Maclaurin.
fn zeta_three_halves_tail(n: usize) -> f64 {
  let x = n as f64;
  2.0 / x.sqrt() - 0.5 * x.powf(-1.5) + 0.125 * x.powf(-2.5)
}

#[cfg(test)]
mod tests {
  use super::*;

  #[test]
  fn zeta_tail_matches_direct_sum() {
    let direct: f64 = (11..2_000_000).map(|n| (n as f64).powf(-1.5)).sum::<f64>() + zeta_three_halves_tail(1_999_999);
    assert!((zeta_three_halves_tail(10) - direct).abs() < 1e-6);
  }

  #[test]
  fn brownian_marginal_is_half_below_zero() {
    let bm = LevyTriplet::brownian(0.0, 1.3).unwrap();
    assert!((prob_nonpositive(&bm, 0.7).unwrap() - 0.5).abs() < 1e-12);
    let drifting = LevyTriplet::brownian(-1.0, 1.0).unwrap();
    // ξ(t) ~ N(t, t): P(ξ(2) ≤ 0) = Φ(-√2)
    let want = 0.5 * statrs::function::erf::erfc(1.0);
    assert!((prob_nonpositive(&drifting, 2.0).unwrap() - want).abs() < 1e-10);
  }
}
