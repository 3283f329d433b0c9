use rug::Float;
use serde::{Deserialize, Serialize};

use super::GammaGammaPe;
use crate::error::{Error, Result};
use crate::specfun::{ln_gamma_signed, meijer_g, MeijerGSpec, SeriesControl};

const MAX_PRECISION: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdfMethod {
    /// `ξ²/(Γ(α)Γ(β)) G^{3,1}_{2,4}(αβκ√(γ/γ̄) | 1, ξ²+1; ξ², α, β, 0)`
    Meijer,
    /// Power series in `√(γ/γ̄)` from the residues of the Meijer-G form.
    SeriesA,
    /// Leading power law as `γ → 0`.
    AsymptoticB,
}

/// Which parameter sets the small-SNR exponent of the Gamma-Gamma CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    Beta,
    Xi,
    Alpha,
}

/// One power-law term `coefficient · (γ/γ̄)^exponent` of the small-SNR CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticBranch {
    pub kind: BranchKind,
    pub exponent: f64,
    pub coefficient: f64,
}

impl AsymptoticBranch {
    pub fn eval(&self, normalized_snr: f64) -> f64 {
        self.coefficient * normalized_snr.powf(self.exponent)
    }
}

pub(crate) fn ln_norm(p: &GammaGammaPe) -> f64 {
    p.xi2().ln()
        - statrs::function::gamma::ln_gamma(p.alpha)
        - statrs::function::gamma::ln_gamma(p.beta)
}

fn argument(gamma: f64, mean_snr: f64, p: &GammaGammaPe) -> f64 {
    p.alpha * p.beta * p.kappa * (gamma / mean_snr).sqrt()
}

/// The Meijer-G instance inside the CDF at `gamma`.
pub fn gg_pe_cdf_meijer_spec(gamma: f64, mean_snr: f64, p: &GammaGammaPe) -> Result<MeijerGSpec> {
    let xi2 = p.xi2();
    MeijerGSpec::new(
        3,
        1,
        vec![1.0, xi2 + 1.0],
        vec![xi2, p.alpha, p.beta, 0.0],
        argument(gamma, mean_snr, p),
    )
}

fn check_mean(mean_snr: f64) -> Result<()> {
    if mean_snr > 0.0 && mean_snr.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "mean SNR must be positive, got {mean_snr}"
        )))
    }
}

/// CDF of the Gamma-Gamma-with-pointing-error SNR.
///
/// `AsymptoticB` returns the raw power law, which exceeds one for large `γ`.
pub fn gg_pe_snr_cdf(
    gamma: f64,
    mean_snr: f64,
    p: &GammaGammaPe,
    method: CdfMethod,
    ctl: &SeriesControl,
) -> Result<f64> {
    check_mean(mean_snr)?;
    if gamma <= 0.0 {
        return Ok(0.0);
    }
    if gamma.is_infinite() {
        return Ok(1.0);
    }
    match method {
        CdfMethod::Meijer => {
            let g = meijer_g(&gg_pe_cdf_meijer_spec(gamma, mean_snr, p)?, ctl)?;
            Ok((ln_norm(p).exp() * g).clamp(0.0, 1.0))
        }
        CdfMethod::SeriesA => Ok(series_a(argument(gamma, mean_snr, p), p, ctl)?.clamp(0.0, 1.0)),
        CdfMethod::AsymptoticB => Ok(gg_pe_asymptotic_branches(p, ctl.pole_epsilon)
            .iter()
            .map(|b| b.eval(gamma / mean_snr))
            .sum()),
    }
}

/// `ξ²/(2γΓ(α)Γ(β)) G^{3,0}_{1,3}(αβκ√(γ/γ̄) | ξ²+1; ξ², α, β)`.
pub fn gg_pe_snr_pdf(
    gamma: f64,
    mean_snr: f64,
    p: &GammaGammaPe,
    ctl: &SeriesControl,
) -> Result<f64> {
    check_mean(mean_snr)?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!(
            "Gamma-Gamma density needs 0 < γ < ∞, got {gamma}"
        )));
    }
    let xi2 = p.xi2();
    let spec = MeijerGSpec::new(
        3,
        0,
        vec![xi2 + 1.0],
        vec![xi2, p.alpha, p.beta],
        argument(gamma, mean_snr, p),
    )?;
    let g = meijer_g(&spec, ctl)?;
    Ok((ln_norm(p).exp() * g / (2.0 * gamma)).max(0.0))
}

fn coefficient(kind: BranchKind, p: &GammaGammaPe) -> f64 {
    let (a, b, x2) = (p.alpha, p.beta, p.xi2());
    let ln_abk = (a * b * p.kappa).ln();
    let lg = |x: f64| statrs::function::gamma::ln_gamma(x);
    let (l, s) = match kind {
        BranchKind::Beta => {
            let (g, s) = ln_gamma_signed(a - b);
            (
                x2.ln() + g - lg(a) - lg(b + 1.0) - (x2 - b).abs().ln() + b * ln_abk,
                s * (x2 - b).signum(),
            )
        }
        BranchKind::Alpha => {
            let (g, s) = ln_gamma_signed(b - a);
            (
                x2.ln() + g - lg(a + 1.0) - lg(b) - (x2 - a).abs().ln() + a * ln_abk,
                s * (x2 - a).signum(),
            )
        }
        BranchKind::Xi => {
            let (g1, s1) = ln_gamma_signed(a - x2);
            let (g2, s2) = ln_gamma_signed(b - x2);
            (g1 + g2 - lg(a) - lg(b) + x2 * ln_abk, s1 * s2)
        }
    };
    s * l.exp()
}

/// Leading small-SNR power laws of the CDF, in the normalized SNR `γ/γ̄`.
///
/// Normally a single branch, chosen by the smallest of `α`, `β`, `ξ²`. When
/// two of them tie, the later one is shifted by `eps` and both branches are
/// returned; their individually divergent coefficients cancel in the sum.
pub fn gg_pe_asymptotic_branches(p: &GammaGammaPe, eps: f64) -> Vec<AsymptoticBranch> {
    let mut q = *p;
    let candidates = [
        (BranchKind::Beta, p.beta),
        (BranchKind::Xi, p.xi2()),
        (BranchKind::Alpha, p.alpha),
    ];
    let lowest = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * lowest.max(1.0);
    let tied: Vec<BranchKind> = candidates
        .iter()
        .filter(|c| c.1 - lowest <= tol)
        .map(|c| c.0)
        .collect();
    if tied.len() > 1 {
        for (i, kind) in tied.iter().enumerate().skip(1) {
            let shift = i as f64 * eps;
            match kind {
                BranchKind::Xi => q.xi = (q.xi2() + shift).sqrt(),
                BranchKind::Alpha => q.alpha += shift,
                BranchKind::Beta => q.beta += shift,
            }
        }
    }
    tied.into_iter()
        .map(|kind| {
            let e = match kind {
                BranchKind::Beta => q.beta,
                BranchKind::Xi => q.xi2(),
                BranchKind::Alpha => q.alpha,
            };
            AsymptoticBranch {
                kind,
                exponent: 0.5 * e,
                coefficient: coefficient(kind, &q),
            }
        })
        .collect()
}

fn near_integer(x: f64, tol: f64) -> bool {
    (x - x.round()).abs() <= tol
}

/// Series form of the CDF in `x = αβκ√(γ/γ̄)`:
/// `X₀ x^{ξ²} + Σ Yₙ x^{n+α} + Σ Zₙ x^{n+β}`.
fn series_a(x: f64, p: &GammaGammaPe, ctl: &SeriesControl) -> Result<f64> {
    let eps = ctl.pole_epsilon;
    let (a, b, x2) = (p.alpha, p.beta, p.xi2());
    let db = if near_integer(a - b, 0.5 * eps) {
        eps
    } else {
        0.0
    };
    let dx = if near_integer(x2 - a, 0.5 * eps) || near_integer(x2 - b, 0.5 * eps) {
        3.0 * eps
    } else {
        0.0
    };
    if db == 0.0 && dx == 0.0 {
        return series_a_adaptive(x, a, b, x2, ctl);
    }
    let hi = series_a_adaptive(x, a, b + db, x2 + dx, ctl)?;
    let lo = series_a_adaptive(x, a, b - db, x2 - dx, ctl)?;
    Ok(0.5 * (hi + lo))
}

fn series_a_adaptive(x: f64, a: f64, b: f64, x2: f64, ctl: &SeriesControl) -> Result<f64> {
    // Magnitude of the largest term is about e^{2√x}.
    let mut prec = 96 + (2.0 * x.sqrt() * std::f64::consts::LOG2_E).ceil() as u32;
    loop {
        let prec_now = prec.min(MAX_PRECISION);
        let (sum, abs_sum, terms) = series_a_at(x, a, b, x2, ctl, prec_now)?;
        if sum.is_zero() {
            return Ok(0.0);
        }
        let loss = Float::with_val(prec_now, &abs_sum / &sum)
            .abs()
            .log2()
            .to_f64();
        let err_bits = loss - prec_now as f64 + (8.0 + terms as f64).log2();
        if err_bits <= (0.25 * ctl.rel_tol).log2() {
            return Ok(sum.to_f64());
        }
        if prec_now >= MAX_PRECISION {
            return Err(Error::SeriesFailure {
                terms,
                partial: sum.to_f64(),
            });
        }
        prec = (2 * prec_now).max((loss + 117.0).ceil() as u32);
    }
}

/// Sums one precision pass; returns (sum, Σ|terms|, terms used).
fn series_a_at(
    x: f64,
    a: f64,
    b: f64,
    x2: f64,
    ctl: &SeriesControl,
    prec: u32,
) -> Result<(Float, Float, usize)> {
    let fl = |v: f64| Float::with_val(prec, v);
    let (af, bf, x2f) = (fl(a), fl(b), fl(x2));
    let xf = fl(x);
    let ln_x = xf.clone().ln();
    // ξ²/(Γ(α)Γ(β))
    let norm = Float::with_val(prec, &x2f / af.clone().gamma()) / bf.clone().gamma();

    // X₀ x^{ξ²} with X₀ = Γ(α-ξ²)Γ(β-ξ²)/ξ² (before the common factor)
    let mut lead = Float::with_val(prec, &af - &x2f).gamma();
    lead *= Float::with_val(prec, &bf - &x2f).gamma();
    lead /= &x2f;
    lead *= Float::with_val(prec, &x2f * &ln_x).exp();

    let mut sum = lead.clone();
    let mut abs_sum = Float::with_val(prec, lead.abs_ref());
    let mut used = 0;

    // Residue series at s = c + n for c = α (other = β) and c = β (other = α):
    // (-1)^n Γ(other-c-n) / (n! (c+n) (ξ²-c-n)) x^{c+n}
    for (c, other) in [(&af, &bf), (&bf, &af)] {
        let mut t = Float::with_val(prec, other - c).gamma();
        t /= c;
        t /= Float::with_val(prec, &x2f - c);
        t *= Float::with_val(prec, c * &ln_x).exp();
        let mut peak_exp = t.get_exp().unwrap_or(i32::MIN);
        sum += &t;
        abs_sum += Float::with_val(prec, t.abs_ref());
        let mut quiet = 0;
        let mut converged = false;
        for n in 0..ctl.max_terms {
            let nf = n as f64;
            let mut r = Float::with_val(prec, &xf * -1.0);
            r /= nf + 1.0;
            r /= Float::with_val(prec, other - c) - (nf + 1.0);
            r *= Float::with_val(prec, c + nf);
            r /= Float::with_val(prec, c + (nf + 1.0));
            r *= Float::with_val(prec, &x2f - c) - nf;
            r /= Float::with_val(prec, &x2f - c) - (nf + 1.0);
            t *= &r;
            used = used.max(n + 1);
            if t.is_zero() {
                converged = true;
                break;
            }
            sum += &t;
            abs_sum += Float::with_val(prec, t.abs_ref());
            let e = t.get_exp().unwrap_or(i32::MIN);
            peak_exp = peak_exp.max(e);
            let small = (e as i64) + (prec as i64) + 8 < peak_exp as i64;
            if small && r.cmp_abs(&fl(1.0)) == Some(std::cmp::Ordering::Less) {
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
                partial: (sum * &norm).to_f64(),
            });
        }
    }
    sum *= &norm;
    abs_sum *= &norm;
    Ok((sum, abs_sum, used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadratureControl};

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn cdf_is_zero_at_origin() {
        for p in [GammaGammaPe::moderate(), GammaGammaPe::strong()] {
            for m in [
                CdfMethod::Meijer,
                CdfMethod::SeriesA,
                CdfMethod::AsymptoticB,
            ] {
                assert_eq!(gg_pe_snr_cdf(0.0, 10.0, &p, m, &ctl()).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn cdf_matches_integrated_pdf() {
        let p = GammaGammaPe::moderate();
        let mean = 10.0;
        let qctl = QuadratureControl {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_subdivisions: 400,
        };
        // substitute γ = mean·v² to remove the γ^{β/2 - 1} endpoint singularity
        let r = integrate(
            |v| {
                let g = mean * v * v;
                gg_pe_snr_pdf(g, mean, &p, &ctl()).unwrap() * 2.0 * mean * v
            },
            0.0,
            1.0,
            &qctl,
        )
        .unwrap();
        let cdf = gg_pe_snr_cdf(mean, mean, &p, CdfMethod::Meijer, &ctl()).unwrap();
        assert!((r.value - cdf).abs() < 1e-9, "{} vs {cdf}", r.value);
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        for p in [GammaGammaPe::moderate(), GammaGammaPe::strong()] {
            let mean = 3.0;
            let h = 1e-4 * mean;
            let f = |g: f64| gg_pe_snr_cdf(g, mean, &p, CdfMethod::Meijer, &ctl()).unwrap();
            let fd = (f(mean + h) - f(mean - h)) / (2.0 * h);
            let pdf = gg_pe_snr_pdf(mean, mean, &p, &ctl()).unwrap();
            assert!(((fd - pdf) / pdf).abs() < 1e-5, "{fd} vs {pdf}");
        }
    }

    #[test]
    fn pdf_rejects_origin() {
        let p = GammaGammaPe::moderate();
        assert!(gg_pe_snr_pdf(0.0, 1.0, &p, &ctl()).is_err());
    }

    #[test]
    fn pdf_tail_decreases() {
        let p = GammaGammaPe::strong();
        let mut last = f64::INFINITY;
        for k in 1..30 {
            let g = 10.0 * k as f64;
            let v = gg_pe_snr_pdf(g, 1.0, &p, &ctl()).unwrap();
            assert!(v < last && v >= 0.0);
            last = v;
        }
    }

    #[test]
    fn branch_selection_follows_smallest_parameter() {
        let b = gg_pe_asymptotic_branches(&GammaGammaPe::moderate(), 1e-6);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].kind, BranchKind::Beta);
        assert!((b[0].exponent - 0.95).abs() < 1e-15);
        assert!(b[0].coefficient > 0.0);
        let b = gg_pe_asymptotic_branches(&GammaGammaPe::strong(), 1e-6);
        assert_eq!(b[0].kind, BranchKind::Beta);
        let p = GammaGammaPe::new(3.0, 2.0, 1.2).unwrap();
        assert_eq!(gg_pe_asymptotic_branches(&p, 1e-6)[0].kind, BranchKind::Xi);
    }

    #[test]
    fn tied_branches_stay_finite() {
        // β = ξ² = 2: the two divergent coefficients cancel
        let p = GammaGammaPe::new(3.5, 2.0, 2f64.sqrt()).unwrap();
        let b = gg_pe_asymptotic_branches(&p, 1e-6);
        assert_eq!(b.len(), 2);
        let u = 1e-8;
        let asym: f64 = b.iter().map(|x| x.eval(u)).sum();
        let exact = gg_pe_snr_cdf(u, 1.0, &p, CdfMethod::Meijer, &ctl()).unwrap();
        assert!(asym.is_finite());
        assert!((asym / exact - 1.0).abs() < 0.05, "{asym} vs {exact}");
    }

    #[test]
    fn asymptote_approaches_exact_cdf() {
        for p in [GammaGammaPe::moderate(), GammaGammaPe::strong()] {
            let u = 1e-6;
            let a = gg_pe_snr_cdf(u, 1.0, &p, CdfMethod::AsymptoticB, &ctl()).unwrap();
            let m = gg_pe_snr_cdf(u, 1.0, &p, CdfMethod::Meijer, &ctl()).unwrap();
            assert!((a / m - 1.0).abs() < 0.01, "{a} vs {m}");
        }
    }

    #[test]
    fn series_matches_meijer() {
        for p in [GammaGammaPe::moderate(), GammaGammaPe::strong()] {
            for &u in &[1e-3, 0.1, 1.0, 10.0, 100.0, 1e3] {
                let s = gg_pe_snr_cdf(u, 1.0, &p, CdfMethod::SeriesA, &ctl()).unwrap();
                let m = gg_pe_snr_cdf(u, 1.0, &p, CdfMethod::Meijer, &ctl()).unwrap();
                assert!(((s - m) / m).abs() < 1e-6, "u={u}: {s} vs {m}");
            }
        }
    }
}
