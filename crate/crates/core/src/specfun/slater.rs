//! Slater residue expansion of the Meijer G-function.
//!
//! `G = Σ_h Σ_k Res_{s = b_h + k}`, one series per parameter `b_h` of the
//! first `m`. Each series is built from its first non-vanishing term by the
//! term ratio. Evaluation runs in `f64` first; if the accumulated magnitude of
//! the terms makes the cancellation error exceed the target, it is repeated
//! in MPFR arithmetic at increasing precision.

use rug::Float;

use super::gamma::{ln_gamma_signed, recip_gamma_signed};
use super::{MeijerGSpec, SeriesControl};
use crate::error::{Error, Result};

const MAX_PRECISION: u32 = 4096;

fn unusable(spec: &MeijerGSpec, reason: impl Into<String>) -> Error {
    Error::SlaterUnusable {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn near_integer(x: f64, tol: f64) -> bool {
    (x - x.round()).abs() <= tol
}

/// Rounds differences that are integers up to representation error.
fn snap(x: f64) -> f64 {
    if near_integer(x, 1e-12 * x.abs().max(1.0)) {
        x.round()
    } else {
        x
    }
}

fn non_positive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Evaluates `G^{m,n}_{p,q}(z | a; b)` by Slater's theorem.
///
/// Integer-spaced lower parameters among the first `m` are split by
/// `±ctl.pole_epsilon` and the two evaluations averaged, which leaves an
/// `O(ε²)` error.
pub fn meijer_g_slater(spec: &MeijerGSpec, ctl: &SeriesControl) -> Result<f64> {
    ctl.validate()?;
    let g = spec.reduced();
    if g.m() == 0 {
        return Ok(0.0);
    }
    if g.p() == g.q() && g.z() >= 1.0 {
        return Err(unusable(
            spec,
            "residue series diverge for p = q and z >= 1",
        ));
    }
    match split_coincident_poles(&g, ctl.pole_epsilon) {
        None => residue_sum(&g, spec, ctl),
        Some((plus, minus)) => {
            let hi = residue_sum(&plus, spec, ctl)?;
            let lo = residue_sum(&minus, spec, ctl)?;
            Ok(0.5 * (hi + lo))
        }
    }
}

fn split_coincident_poles(g: &MeijerGSpec, eps: f64) -> Option<(MeijerGSpec, MeijerGSpec)> {
    let b = g.b();
    let mut shift = vec![0.0; b.len()];
    let mut any = false;
    for j in 1..g.m() {
        let hits = (0..j)
            .filter(|&k| near_integer(b[j] - b[k], 0.5 * eps))
            .count();
        if hits > 0 {
            shift[j] = hits as f64 * eps;
            any = true;
        }
    }
    if !any {
        return None;
    }
    let plus = b.iter().zip(&shift).map(|(x, s)| x + s).collect();
    let minus = b.iter().zip(&shift).map(|(x, s)| x - s).collect();
    Some((g.with_b(plus), g.with_b(minus)))
}

/// Parameter differences seen from the residue series at `b_h`.
struct Offsets {
    h: usize,
    /// `b_j - b_h`, `j < m`, `j != h`
    num_b: Vec<f64>,
    /// `1 - a_j + b_h`, `j < n`
    num_a: Vec<f64>,
    /// `1 - b_j + b_h`, `j >= m`
    den_b: Vec<f64>,
    /// `a_j - b_h`, `j >= n`
    den_a: Vec<f64>,
    /// First index with a non-zero residue, or `None` if all vanish.
    k0: Option<usize>,
}

fn offsets(g: &MeijerGSpec, spec: &MeijerGSpec, h: usize) -> Result<Offsets> {
    let (a, b, m, n) = (g.a(), g.b(), g.m(), g.n());
    let bh = b[h];
    let num_b: Vec<f64> = (0..m)
        .filter(|&j| j != h)
        .map(|j| snap(b[j] - bh))
        .collect();
    let num_a: Vec<f64> = a[..n].iter().map(|&aj| snap(1.0 - aj + bh)).collect();
    let den_b: Vec<f64> = b[m..].iter().map(|&bj| snap(1.0 - bj + bh)).collect();
    let den_a: Vec<f64> = a[n..].iter().map(|&aj| snap(aj - bh)).collect();

    if let Some(x) = num_a.iter().find(|&&x| non_positive_integer(x)) {
        return Err(unusable(
            spec,
            format!("poles of Γ(b - s) and Γ(1 - a + s) coincide (offset {x})"),
        ));
    }
    let k0 = if den_a.iter().any(|&x| non_positive_integer(x)) {
        None
    } else {
        Some(
            den_b
                .iter()
                .filter(|&&x| non_positive_integer(x))
                .map(|&x| (1.0 - x) as usize)
                .max()
                .unwrap_or(0),
        )
    };
    Ok(Offsets {
        h,
        num_b,
        num_a,
        den_b,
        den_a,
        k0,
    })
}

enum Outcome {
    Done(f64),
    NeedsPrecision { loss_bits: f64 },
}

fn residue_sum(g: &MeijerGSpec, spec: &MeijerGSpec, ctl: &SeriesControl) -> Result<f64> {
    let offs: Vec<Offsets> = (0..g.m())
        .map(|h| offsets(g, spec, h))
        .collect::<Result<_>>()?;
    let loss_bits = match residue_sum_f64(g, &offs, ctl)? {
        Outcome::Done(v) => return Ok(v),
        Outcome::NeedsPrecision { loss_bits } => loss_bits,
    };
    let mut prec = (53.0 + loss_bits.min(2.0 * MAX_PRECISION as f64) + 32.0).ceil() as u32;
    loop {
        let prec_now = prec.min(MAX_PRECISION);
        match residue_sum_mpfr(g, &offs, ctl, prec_now)? {
            Outcome::Done(v) => return Ok(v),
            Outcome::NeedsPrecision { loss_bits } => {
                if prec_now >= MAX_PRECISION {
                    return Err(unusable(
                        spec,
                        format!("cancellation exceeds {MAX_PRECISION}-bit arithmetic"),
                    ));
                }
                prec = (2 * prec_now).max((53.0 + loss_bits + 64.0).ceil() as u32);
            }
        }
    }
}

struct SeriesF64 {
    log_scale: f64,
    sum: f64,
    abs_sum: f64,
    peak_k: usize,
}

fn series_f64(
    g: &MeijerGSpec,
    o: &Offsets,
    k0: usize,
    ctl: &SeriesControl,
) -> Result<Option<SeriesF64>> {
    let z = g.z();
    let bh = g.b()[o.h];
    let kf = k0 as f64;
    // ln |first term| and its sign
    let mut log_t = (bh + kf) * z.ln() - statrs::function::gamma::ln_gamma(kf + 1.0);
    let mut sign = if k0 % 2 == 0 { 1.0 } else { -1.0 };
    for &x in &o.num_b {
        let (l, s) = ln_gamma_signed(x - kf);
        log_t += l;
        sign *= s;
    }
    for &x in &o.num_a {
        let (l, s) = ln_gamma_signed(x + kf);
        log_t += l;
        sign *= s;
    }
    for &x in &o.den_b {
        let (l, s) = recip_gamma_signed(x + kf);
        log_t += l;
        sign *= s;
    }
    for &x in &o.den_a {
        let (l, s) = recip_gamma_signed(x - kf);
        log_t += l;
        sign *= s;
    }
    if sign == 0.0 {
        return Ok(None);
    }
    if !log_t.is_finite() {
        return Ok(None);
    }

    let mut u = sign;
    let mut sum = u;
    let mut abs_sum = 1.0;
    let mut peak = 1.0;
    let mut peak_k = k0;
    let mut quiet = 0;
    for k in k0..k0 + ctl.max_terms {
        let kf = k as f64;
        let mut r = -z / (kf + 1.0);
        for &x in &o.num_a {
            r *= x + kf;
        }
        for &x in &o.den_a {
            r *= x - kf - 1.0;
        }
        for &x in &o.num_b {
            r /= x - kf - 1.0;
        }
        for &x in &o.den_b {
            r /= x + kf;
        }
        u *= r;
        if !u.is_finite() {
            return Ok(Some(SeriesF64 {
                log_scale: log_t,
                sum: f64::NAN,
                abs_sum: f64::INFINITY,
                peak_k,
            }));
        }
        sum += u;
        abs_sum += u.abs();
        if u.abs() > peak {
            peak = u.abs();
            peak_k = k + 1;
        }
        if u == 0.0 {
            return Ok(Some(SeriesF64 {
                log_scale: log_t,
                sum,
                abs_sum,
                peak_k,
            }));
        }
        if u.abs() <= 1e-18 * peak && r.abs() < 1.0 {
            quiet += 1;
            if quiet >= 3 {
                return Ok(Some(SeriesF64 {
                    log_scale: log_t,
                    sum,
                    abs_sum,
                    peak_k,
                }));
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::SeriesFailure {
        terms: ctl.max_terms,
        partial: sum * log_t.exp(),
    })
}

fn residue_sum_f64(g: &MeijerGSpec, offs: &[Offsets], ctl: &SeriesControl) -> Result<Outcome> {
    let mut parts = Vec::with_capacity(offs.len());
    for o in offs {
        let Some(k0) = o.k0 else { continue };
        if let Some(s) = series_f64(g, o, k0, ctl)? {
            parts.push(s);
        }
    }
    if parts.is_empty() {
        return Ok(Outcome::Done(0.0));
    }
    let top = parts
        .iter()
        .map(|s| s.log_scale)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut value = 0.0;
    let mut abs_value = 0.0;
    let mut depth = 0usize;
    for s in &parts {
        let w = (s.log_scale - top).exp();
        value += w * s.sum;
        abs_value += w * s.abs_sum;
        depth = depth.max(s.peak_k);
    }
    if !value.is_finite() || !abs_value.is_finite() {
        return Ok(Outcome::NeedsPrecision { loss_bits: 1100.0 });
    }
    let err = abs_value * f64::EPSILON * (8.0 + depth as f64);
    if err <= 0.25 * ctl.rel_tol * value.abs() {
        let out = value * top.exp();
        if out.is_finite() {
            return Ok(Outcome::Done(out));
        }
        return Err(Error::Domain(format!(
            "Meijer G value overflows f64 (log magnitude {})",
            top + value.abs().ln()
        )));
    }
    let loss_bits = if value == 0.0 {
        120.0
    } else {
        (abs_value / value.abs()).log2().max(0.0)
    };
    Ok(Outcome::NeedsPrecision { loss_bits })
}

fn residue_sum_mpfr(
    g: &MeijerGSpec,
    offs: &[Offsets],
    ctl: &SeriesControl,
    prec: u32,
) -> Result<Outcome> {
    let fl = |x: f64| Float::with_val(prec, x);
    let a: Vec<Float> = g.a().iter().map(|&x| fl(x)).collect();
    let b: Vec<Float> = g.b().iter().map(|&x| fl(x)).collect();
    let (m, n) = (g.m(), g.n());
    let ln_z = fl(g.z()).ln();
    let one = fl(1.0);

    let mut total = fl(0.0);
    let mut total_abs = fl(0.0);
    let mut depth = 0usize;

    // Differences are recomputed from exact parameters so that every residue
    // series sees a consistent parameter set; only integer snaps come from f64.
    let pick = |snapped: f64, exact: Float| -> Float {
        if snapped == snapped.round() {
            fl(snapped)
        } else {
            exact
        }
    };

    for o in offs {
        let Some(k0) = o.k0 else { continue };
        let h = o.h;
        let bh = &b[h];
        let num_b: Vec<Float> = (0..m)
            .filter(|&j| j != h)
            .zip(&o.num_b)
            .map(|(j, &s)| pick(s, Float::with_val(prec, &b[j] - bh)))
            .collect();
        let num_a: Vec<Float> = (0..n)
            .zip(&o.num_a)
            .map(|(j, &s)| pick(s, Float::with_val(prec, &one - &a[j]) + bh))
            .collect();
        let den_b: Vec<Float> = (m..b.len())
            .zip(&o.den_b)
            .map(|(j, &s)| pick(s, Float::with_val(prec, &one - &b[j]) + bh))
            .collect();
        let den_a: Vec<Float> = (n..a.len())
            .zip(&o.den_a)
            .map(|(j, &s)| pick(s, Float::with_val(prec, &a[j] - bh)))
            .collect();

        let k0f = fl(k0 as f64);
        let mut t = Float::with_val(prec, bh + &k0f) * &ln_z;
        t.exp_mut();
        let fact = Float::with_val(prec, &k0f + 1u32).gamma();
        t /= fact;
        if k0 % 2 == 1 {
            t = -t;
        }
        for x in &num_b {
            t *= Float::with_val(prec, x - &k0f).gamma();
        }
        for x in &num_a {
            t *= Float::with_val(prec, x + &k0f).gamma();
        }
        for x in &den_b {
            t /= Float::with_val(prec, x + &k0f).gamma();
        }
        for x in &den_a {
            t /= Float::with_val(prec, x - &k0f).gamma();
        }
        if !t.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite residue at b_{h} = {}",
                g.b()[h]
            )));
        }

        let mut sum = t.clone();
        let mut abs_sum = Float::with_val(prec, t.abs_ref());
        let mut peak_exp = t.get_exp().unwrap_or(i32::MIN);
        let mut peak_k = k0;
        let mut quiet = 0;
        let mut converged = false;
        let mut r = fl(0.0);
        let mut w = fl(0.0);
        for k in k0..k0 + ctl.max_terms {
            let kf = k as f64;
            r.assign_f64(-g.z());
            r /= kf + 1.0;
            for x in &num_a {
                w.assign_add(x, kf);
                r *= &w;
            }
            for x in &den_a {
                w.assign_add(x, -kf - 1.0);
                r *= &w;
            }
            for x in &num_b {
                w.assign_add(x, -kf - 1.0);
                r /= &w;
            }
            for x in &den_b {
                w.assign_add(x, kf);
                r /= &w;
            }
            t *= &r;
            if t.is_zero() {
                converged = true;
                break;
            }
            sum += &t;
            abs_sum += Float::with_val(prec, t.abs_ref());
            let e = t.get_exp().unwrap_or(i32::MIN);
            if e > peak_exp {
                peak_exp = e;
                peak_k = k + 1;
            }
            let small = (e as i64) + (prec as i64) + 8 < peak_exp as i64;
            if small && r.cmp_abs(&one) == Some(std::cmp::Ordering::Less) {
                quiet += 1;
                if quiet >= 3 {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if !converged {
            return Err(Error::SeriesFailure {
                terms: ctl.max_terms,
                partial: sum.to_f64(),
            });
        }
        total += &sum;
        total_abs += &abs_sum;
        depth = depth.max(peak_k);
    }

    if total.is_zero() {
        if total_abs.is_zero() {
            return Ok(Outcome::Done(0.0));
        }
        return Ok(Outcome::NeedsPrecision {
            loss_bits: prec as f64,
        });
    }
    // log2 of the cancellation ratio
    let loss = Float::with_val(prec, &total_abs / &total)
        .abs()
        .log2()
        .to_f64();
    let err_bits = loss - prec as f64 + (8.0 + depth as f64).log2();
    if err_bits <= (0.25 * ctl.rel_tol).log2() {
        let v = total.to_f64();
        if !v.is_finite() {
            return Err(Error::Domain("Meijer G value overflows f64".into()));
        }
        return Ok(Outcome::Done(v));
    }
    Ok(Outcome::NeedsPrecision { loss_bits: loss })
}

trait AssignExt {
    fn assign_f64(&mut self, v: f64);
    fn assign_add(&mut self, x: &Float, v: f64);
}

impl AssignExt for Float {
    fn assign_f64(&mut self, v: f64) {
        use rug::Assign;
        self.assign(v);
    }

    fn assign_add(&mut self, x: &Float, v: f64) {
        use rug::Assign;
        self.assign(x + v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(m: usize, n: usize, a: &[f64], b: &[f64], z: f64) -> MeijerGSpec {
        MeijerGSpec::new(m, n, a.to_vec(), b.to_vec(), z).unwrap()
    }

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs()
    }

    #[test]
    fn exponential_identity() {
        let ctl = SeriesControl::default();
        let v = meijer_g_slater(&spec(1, 0, &[], &[0.0], 1.0), &ctl).unwrap();
        assert!(rel(v, (-1.0f64).exp()) < 1e-14);
        // heavy cancellation forces the multiprecision path
        let v = meijer_g_slater(&spec(1, 0, &[], &[0.0], 50.0), &ctl).unwrap();
        assert!(rel(v, (-50.0f64).exp()) < 1e-10, "{v}");
    }

    #[test]
    fn half_integer_pair_identity() {
        let ctl = SeriesControl::default();
        let v = meijer_g_slater(&spec(2, 0, &[], &[0.0, 0.5], 1.0), &ctl).unwrap();
        assert!(rel(v, PI.sqrt() * (-2.0f64).exp()) < 1e-13);
    }

    #[test]
    fn coincident_poles_are_split() {
        // G^{2,0}_{0,2}(z | 0, 0) = 2 K_0(2√z); K_0(2) = 0.11389387274953344
        let ctl = SeriesControl::default();
        let v = meijer_g_slater(&spec(2, 0, &[], &[0.0, 0.0], 1.0), &ctl).unwrap();
        assert!(rel(v, 2.0 * 0.113_893_872_749_533_44) < 1e-10, "{v}");
        // G^{2,0}_{0,2}(z | 1, 0) = 2 √z K_1(2√z); K_1(2) = 0.13986588181652243
        let v = meijer_g_slater(&spec(2, 0, &[], &[1.0, 0.0], 1.0), &ctl).unwrap();
        assert!(rel(v, 2.0 * 0.139_865_881_816_522_43) < 1e-10, "{v}");
    }

    #[test]
    fn terminating_and_vanishing_series() {
        let ctl = SeriesControl::default();
        // G^{1,1}_{1,1}(z | 0; 0) = 1/(1+z)
        let v = meijer_g_slater(&spec(1, 1, &[0.0], &[0.0], 0.5), &ctl).unwrap();
        assert!(rel(v, 1.0 / 1.5) < 1e-13);
        // 1/Γ(a_j - b_h) with a_j = b_h kills the whole expansion after reduction
        let v = meijer_g_slater(&spec(1, 0, &[0.3], &[0.3], 0.5), &ctl).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn p_equal_q_outside_unit_disk_is_unusable() {
        let ctl = SeriesControl::default();
        let r = meijer_g_slater(&spec(1, 1, &[0.0], &[0.0], 2.0), &ctl);
        assert!(matches!(r, Err(Error::SlaterUnusable { .. })));
    }
}
