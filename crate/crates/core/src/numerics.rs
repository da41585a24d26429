//! Cancellation-free elementary helpers.

/// `e^z - 1 - z`, accurate for small `|z|`.
pub fn expm1_minus_x(z: f64) -> f64 {
  if z.abs() < 0.1 {
    // Horner on z^2 (1/2 + z/6 + ... + z^7/9!)
    let mut acc = 1.0 / 362_880.0;
    for k in (2..9).rev() {
      acc = acc * z + 1.0 / factorial(k);
    }
    acc * z * z
  } else {
    z.exp_m1() - z
  }
}

/// `ln(1 + x) - x`, accurate for small `|x|`.
pub fn ln1p_minus_x(x: f64) -> f64 {
  if x.abs() < 0.1 {
    let mut acc = 0.0;
    for k in (2..=18).rev() {
      let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
      acc = acc * x + sign / k as f64;
    }
    acc * x * x
  } else {
    x.ln_1p() - x
  }
}

fn factorial(k: u32) -> f64 {
  (1..=k).map(f64::from).product()
}

/// Hex encoding of a byte slice.
pub fn hex(bytes: &[u8]) -> String {
  bytes.iter().map(|b| format!("{b:02x}")).collect()
}
