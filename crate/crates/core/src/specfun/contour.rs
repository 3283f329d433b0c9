//! Mellin-Barnes integral along a vertical line,
//! `G = (1/π) ∫₀^∞ Re[φ(c + it) z^{c + it}] dt`.
//!
//! The abscissa `c` is placed at the real minimum of the (smoothed) integrand
//! magnitude, which keeps the integrand close to a single hump and limits
//! cancellation.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::gamma::ln_gamma_complex;
use super::{MeijerGSpec, SeriesControl};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadratureControl};

const LN_PI: f64 = 1.144_729_885_849_400_2;
const MAX_PANELS: usize = 4000;

fn failure(spec: &MeijerGSpec, abscissa: f64, tail: f64, reason: impl Into<String>) -> Error {
    Error::ContourFailure {
        spec: spec.to_string(),
        abscissa,
        tail,
        reason: reason.into(),
    }
}

/// Real `ln|Γ(x)|` with the oscillating `ln|sin πx|` of the reflection
/// formula dropped, so it is smooth across the negative axis.
fn ln_gamma_envelope(x: f64) -> f64 {
    if x >= 0.5 {
        statrs::function::gamma::ln_gamma(x)
    } else {
        LN_PI - statrs::function::gamma::ln_gamma(1.0 - x)
    }
}

struct Integrand<'a> {
    g: &'a MeijerGSpec,
    ln_z: f64,
}

impl Integrand<'_> {
    fn lists(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let (a, b) = (self.g.a(), self.g.b());
        (
            &b[..self.g.m()],
            &a[..self.g.n()],
            &b[self.g.m()..],
            &a[self.g.n()..],
        )
    }

    fn envelope(&self, c: f64) -> f64 {
        let (bl, al, br, ar) = self.lists();
        bl.iter().map(|&b| ln_gamma_envelope(b - c)).sum::<f64>()
            + al.iter()
                .map(|&a| ln_gamma_envelope(1.0 - a + c))
                .sum::<f64>()
            - br.iter()
                .map(|&b| ln_gamma_envelope(1.0 - b + c))
                .sum::<f64>()
            - ar.iter().map(|&a| ln_gamma_envelope(a - c)).sum::<f64>()
            + c * self.ln_z
    }

    fn ln_phi(&self, s: Complex64) -> Complex64 {
        let (bl, al, br, ar) = self.lists();
        let mut acc = s * self.ln_z;
        for &b in bl {
            acc += ln_gamma_complex(b - s);
        }
        for &a in al {
            acc += ln_gamma_complex(1.0 - a + s);
        }
        for &b in br {
            acc -= ln_gamma_complex(1.0 - b + s);
        }
        for &a in ar {
            acc -= ln_gamma_complex(a - s);
        }
        acc
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-10 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Evaluates `G^{m,n}_{p,q}(z | a; b)` as a numerical Mellin-Barnes integral.
pub fn meijer_g_contour(spec: &MeijerGSpec, ctl: &SeriesControl) -> Result<f64> {
    ctl.validate()?;
    let g = spec.reduced();
    if g.m() == 0 {
        return Ok(0.0);
    }
    let (m, n, p, q) = (g.m(), g.n(), g.p(), g.q());
    let delta = (m + n) as f64 - 0.5 * (p + q) as f64;
    if delta <= 0.0 {
        return Err(failure(
            spec,
            f64::NAN,
            f64::INFINITY,
            format!("integrand does not decay along vertical lines (m + n - (p + q)/2 = {delta})"),
        ));
    }
    let hi = g.b()[..m].iter().copied().fold(f64::INFINITY, f64::min);
    let lo = g.a()[..n]
        .iter()
        .map(|a| a - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    if lo >= hi {
        return Err(failure(
            spec,
            f64::NAN,
            f64::INFINITY,
            format!("no vertical line separates the pole sequences (need {lo} < c < {hi})"),
        ));
    }

    let f = Integrand {
        g: &g,
        ln_z: g.z().ln(),
    };
    let (search_lo, search_hi) = if lo.is_finite() {
        let margin = 1e-3 * (hi - lo).min(1.0);
        (lo + margin, hi - margin)
    } else {
        let reach = 20.0 + 4.0 * g.z().powf(1.0 / (q - p).max(1) as f64);
        (hi - reach, hi - 1e-3)
    };
    let c = golden_min(|x| f.envelope(x), search_lo, search_hi);
    let h0 = f.envelope(c);

    let d = 1e-3 * (1.0 + c.abs()).min(0.25 * (hi - c).min(c - lo));
    let curvature = (f.envelope(c + d) - 2.0 * h0 + f.envelope(c - d)) / (d * d);
    let width = if curvature > 0.0 {
        (1.0 / curvature.sqrt()).clamp(0.02, 20.0)
    } else {
        1.0
    };

    let eval = |t: f64| -> f64 {
        let l = f.ln_phi(Complex64::new(c, t)) - h0;
        (l.re.exp() * l.im.cos()).max(f64::MIN).min(f64::MAX)
    };
    let magnitude = |t: f64| -> f64 { (f.ln_phi(Complex64::new(c, t)).re - h0).exp() };

    let mut tol = 1e-3 * ctl.rel_tol;
    for _ in 0..4 {
        let qctl = QuadratureControl {
            abs_tol: tol * width,
            rel_tol: 1e-3 * ctl.rel_tol,
            max_subdivisions: 200,
        };
        let mut total = 0.0;
        let mut err = 0.0;
        let mut quiet = 0;
        let mut tail = f64::INFINITY;
        let mut done = false;
        for k in 0..MAX_PANELS {
            let (t0, t1) = (k as f64 * width, (k + 1) as f64 * width);
            let r = integrate(&eval, t0, t1, &qctl)
                .map_err(|e| failure(spec, c, tail, format!("panel [{t0}, {t1}]: {e}")))?;
            total += r.value;
            err += r.error;
            tail = magnitude(t1) * (width + 1.0 / (PI * delta));
            if tail <= 0.01 * ctl.rel_tol * total.abs() || tail < 1e-300 {
                quiet += 1;
                if quiet >= 2 {
                    done = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if !done {
            return Err(failure(
                spec,
                c,
                tail,
                format!("tail not negligible after {MAX_PANELS} panels"),
            ));
        }
        if err + tail <= 0.5 * ctl.rel_tol * total.abs() {
            let out = total / PI * h0.exp();
            if !out.is_finite() {
                return Err(failure(spec, c, tail, "result overflows f64"));
            }
            return Ok(out);
        }
        if total == 0.0 {
            break;
        }
        tol = 0.1 * ctl.rel_tol * total.abs().min(1.0) / ((err / tol).max(1.0));
        if tol < 1e-15 {
            break;
        }
    }
    Err(failure(
        spec,
        c,
        f64::NAN,
        "cancellation along the contour prevents reaching the requested accuracy",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize, n: usize, a: &[f64], b: &[f64], z: f64) -> MeijerGSpec {
        MeijerGSpec::new(m, n, a.to_vec(), b.to_vec(), z).unwrap()
    }

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs()
    }

    #[test]
    fn exponential_identity() {
        let ctl = SeriesControl::default();
        let v = meijer_g_contour(&spec(1, 0, &[], &[0.0], 2.0), &ctl).unwrap();
        assert!(rel(v, 0.135_335_283_236_612_7) < 1e-10, "{v}");
    }

    #[test]
    fn half_integer_pair_identity() {
        let ctl = SeriesControl::default();
        let v = meijer_g_contour(&spec(2, 0, &[], &[0.0, 0.5], 4.0), &ctl).unwrap();
        assert!(rel(v, PI.sqrt() * (-4.0f64).exp()) < 1e-10, "{v}");
    }

    #[test]
    fn handles_coincident_poles_directly() {
        // 2 K_0(2)
        let ctl = SeriesControl::default();
        let v = meijer_g_contour(&spec(2, 0, &[], &[0.0, 0.0], 1.0), &ctl).unwrap();
        assert!(rel(v, 2.0 * 0.113_893_872_749_533_44) < 1e-10, "{v}");
    }

    #[test]
    fn rejects_non_decaying_integrand() {
        let ctl = SeriesControl::default();
        let r = meijer_g_contour(&spec(1, 0, &[0.5], &[0.0], 0.5), &ctl);
        assert!(matches!(r, Err(Error::ContourFailure { .. })));
    }
}
