//! Gamma-family helpers: real log-gamma with sign tracking, the Pochhammer
//! symbol, and a complex log-gamma used along Mellin-Barnes contours.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const LN_PI: f64 = 1.144_729_885_849_400_2;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Returns `(ln|Γ(x)|, sign Γ(x))` for any real `x` that is not a pole.
/// At the poles (non-positive integers) the magnitude is `+∞` and the sign is
/// `0`, so that `1/Γ` evaluates to zero through [`recip_gamma_signed`].
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (statrs::function::gamma::ln_gamma(x), 1.0);
    }
    if x == x.floor() {
        return (f64::INFINITY, 0.0);
    }
    // Γ(x) Γ(1 − x) = π / sin(πx)
    let s = sin_pi(x);
    let (lg, _) = ln_gamma_signed(1.0 - x);
    (LN_PI - s.abs().ln() - lg, s.signum())
}

/// `(ln|1/Γ(x)|, sign)`; the sign is zero at the poles of Γ.
pub fn recip_gamma_signed(x: f64) -> (f64, f64) {
    let (lg, s) = ln_gamma_signed(x);
    if s == 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        (-lg, s)
    }
}

/// `sin(πx)` with exact argument reduction, so that large `|x|` keep full
/// relative accuracy near the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    // r in [-1, 1]
    if r.abs() <= 0.25 {
        (PI * r).sin()
    } else if r > 0.75 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.75 {
        -(PI * (1.0 + r)).sin()
    } else if r > 0.0 {
        (PI * (0.5 - r)).cos()
    } else {
        -(PI * (0.5 + r)).cos()
    }
}

/// Rising factorial `(a)_n = a (a+1) ... (a+n-1)`.
pub fn pochhammer(a: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (a + k as f64))
}

// Stirling-series coefficients B_{2k} / (2k (2k-1)).
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Complex `ln Γ(z)` (some branch; only `exp` of the result is meaningful).
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return Complex64::new(LN_PI, 0.0) - s.ln() - ln_gamma_complex(1.0 - z);
    }
    let mut w = z;
    let mut shift = Complex64::new(1.0, 0.0);
    let mut shifted = false;
    while w.norm() < 15.0 {
        shift *= w;
        w += 1.0;
        shifted = true;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut tail = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        tail += p * c;
        p *= inv2;
    }
    let mut out = (w - 0.5) * w.ln() - w + HALF_LN_2PI + tail;
    if shifted {
        out -= shift.ln();
    }
    out
}
