use crate::error::{Error, Result};

use super::SeriesControl;

/// A truncated series value together with the number of terms summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
}

fn regularize(b: f64, eps: f64) -> f64 {
    if b <= 0.0 && b == b.round() {
        b + eps
    } else {
        b
    }
}

/// Generalized hypergeometric `₁F₂(a; b1, b2; z)` by direct summation.
///
/// Lower parameters sitting on a non-positive integer are shifted by
/// `ctl.pole_epsilon`. Summation stops at the first term whose magnitude is
/// below `ctl.rel_tol` times the running sum.
pub fn hyp1f2(a: f64, b1: f64, b2: f64, z: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    let b1 = regularize(b1, ctl.pole_epsilon);
    let b2 = regularize(b2, ctl.pole_epsilon);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..ctl.max_terms {
        let k = n as f64;
        term *= (a + k) / ((b1 + k) * (b2 + k) * (k + 1.0)) * z;
        sum += term;
        if term.abs() <= ctl.rel_tol * sum.abs() {
            return Ok(SeriesSum {
                value: sum,
                terms: n + 2,
            });
        }
        if !sum.is_finite() {
            break;
        }
    }
    Err(Error::SeriesFailure {
        terms: ctl.max_terms,
        partial: sum,
    })
}
