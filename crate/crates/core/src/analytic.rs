//! Closed-form outage probability and DPSK bit-error rate of the relay chain,
//! with the quadrature, residue-series and high-SNR forms used to cross-check
//! them.
//!
//! Notation shared by the evaluators: `x = γ/γ̄RF`, `u = γ/γ̄FSO`, `F` is the
//! FSO CDF and `a = 1 + s/γ̄RF` is the exponential tilt left after averaging
//! `e^{-γ}` against `e^{-sγ/γ̄RF}`.

use std::cell::RefCell;
use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{
    gg_ln_norm, gg_pe_asymptotic_branches, gg_pe_cdf_meijer_spec, AsymptoticBranch, GammaGammaPe,
    TurbulenceParams,
};
use crate::error::{Error, Result};
pub use crate::quad::QuadratureControl;
use crate::quad::{integrate, Integral};
use crate::specfun::{ln_gamma_signed, meijer_g, MeijerGSpec, SeriesControl};
use crate::system::{
    gg_duplication_prefactor, signed_binomial, unknown_gg_spec, unknown_ne_spec, CsiMode,
    SystemConfig,
};

const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Pout,
    Ber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    SeriesExact,
    Asymptotic,
    Quadrature,
    MonteCarlo,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Pout, Metric::Ber];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Pout => "pout",
            Metric::Ber => "ber",
        }
    }
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::ClosedForm,
        Method::SeriesExact,
        Method::Asymptotic,
        Method::Quadrature,
        Method::MonteCarlo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::SeriesExact => "series_exact",
            Method::Asymptotic => "asymptotic",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{s}`")))
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// One point of a performance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfPoint {
    pub avg_snr_db: f64,
    pub metric: Metric,
    pub method: Method,
    pub value: f64,
    /// Standard error, present exactly for Monte Carlo points.
    pub stderr: Option<f64>,
}

impl PerfPoint {
    pub fn new(
        avg_snr_db: f64,
        metric: Metric,
        method: Method,
        value: f64,
        stderr: Option<f64>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Domain(format!(
                "{metric} value must be a probability, got {value}"
            )));
        }
        match (method, stderr) {
            (Method::MonteCarlo, Some(s)) if s >= 0.0 => {}
            (Method::MonteCarlo, _) => {
                return Err(Error::Domain(
                    "Monte Carlo points need a non-negative standard error".into(),
                ))
            }
            (_, Some(_)) => {
                return Err(Error::Domain(format!(
                    "only Monte Carlo points carry a standard error, not {method}"
                )))
            }
            (_, None) => {}
        }
        Ok(Self {
            avg_snr_db,
            metric,
            method,
            value,
            stderr,
        })
    }
}

/// A labelled sweep of one metric computed by one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfCurve {
    pub label: String,
    pub metric: Metric,
    pub method: Method,
    pub points: Vec<PerfPoint>,
}

impl PerfCurve {
    pub fn new(label: impl Into<String>, points: Vec<PerfPoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::Domain("a curve needs at least one point".into()))?;
        let (metric, method) = (first.metric, first.method);
        if points
            .iter()
            .any(|p| p.metric != metric || p.method != method)
        {
            return Err(Error::Domain(
                "all points of a curve must share metric and method".into(),
            ));
        }
        let mut points = points;
        points.sort_by(|a, b| a.avg_snr_db.total_cmp(&b.avg_snr_db));
        Ok(Self {
            label: label.into(),
            metric,
            method,
            points,
        })
    }
}

/// A closed-form probability together with the unclamped alternating sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormValue {
    pub value: f64,
    pub raw: f64,
}

impl ClosedFormValue {
    fn from_raw(raw: f64) -> Self {
        Self {
            value: raw.clamp(0.0, 1.0),
            raw,
        }
    }

    pub fn in_range(&self) -> bool {
        (-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&self.raw)
    }

    /// Describes the cancellation problem when the raw sum left `[0, 1]`.
    pub fn diagnostic(&self) -> Option<String> {
        (!self.in_range()).then(|| {
            format!(
                "alternating closed-form sum left [0, 1] (raw value {:e}); binomial cancellation exceeds f64 precision",
                self.raw
            )
        })
    }
}

/// Meijer-G evaluation with optional recording of every instance evaluated.
struct Terms<'a> {
    ctl: &'a SeriesControl,
    log: Option<RefCell<Vec<MeijerGSpec>>>,
}

impl<'a> Terms<'a> {
    fn new(ctl: &'a SeriesControl) -> Self {
        Self { ctl, log: None }
    }

    fn recording(ctl: &'a SeriesControl) -> Self {
        Self {
            ctl,
            log: Some(RefCell::new(Vec::new())),
        }
    }

    fn g(&self, spec: MeijerGSpec) -> Result<f64> {
        let v = meijer_g(&spec, self.ctl).map_err(|e| e.in_term(spec.to_string()));
        if let Some(log) = &self.log {
            log.borrow_mut().push(spec);
        }
        v
    }

    fn gg_cdf(&self, gamma: f64, mean: f64, p: &GammaGammaPe) -> Result<f64> {
        if gamma <= 0.0 {
            return Ok(0.0);
        }
        let g = self.g(gg_pe_cdf_meijer_spec(gamma, mean, p)?)?;
        Ok((gg_ln_norm(p).exp() * g).clamp(0.0, 1.0))
    }
}

/// `G^{2,0}_{0,2}(z | 0, ½) = √π e^{-2√z}`.
fn root_exp_spec(z: f64) -> Result<MeijerGSpec> {
    MeijerGSpec::new(2, 0, vec![], vec![0.0, 0.5], z)
}

/// `∫₀^∞ γ^ν e^{-aγ} G(bγ | A; B) dγ = a^{-ν-1} G^{m,n+1}_{p+1,q}(b/a | -ν, A; B)`.
/// Returns the Meijer-G factor of the right-hand side.
fn laplace_spec(spec: &MeijerGSpec, nu: f64, a: f64) -> Result<MeijerGSpec> {
    let mut upper = vec![-nu];
    upper.extend_from_slice(spec.a());
    MeijerGSpec::new(
        spec.m(),
        spec.n() + 1,
        upper,
        spec.b().to_vec(),
        spec.z() / a,
    )
}

fn binomial(n: u32, k: u32) -> f64 {
    signed_binomial(n, k).abs()
}

fn users_and_hops(cfg: &SystemConfig) -> (u32, u32) {
    (cfg.n_users, cfg.n_relays - 1)
}

fn pout_raw(cfg: &SystemConfig, gamma: f64, terms: &Terms) -> Result<f64> {
    if gamma <= 0.0 {
        return Ok(0.0);
    }
    let (n, m1) = users_and_hops(cfg);
    let x = gamma / cfg.mean_snr_rf;
    let u_fso = gamma / cfg.mean_snr_fso;
    let mut sum = 0.0;
    match (cfg.csi_mode, &cfg.fso_turbulence) {
        (CsiMode::Known, TurbulenceParams::GammaGammaPe(p)) => {
            let f = terms.gg_cdf(gamma, cfg.mean_snr_fso, p)?;
            for k in 1..=n {
                for t in 0..=m1 {
                    for u in 0..=t {
                        let omega =
                            signed_binomial(n, k) * signed_binomial(m1, t) * signed_binomial(t, u);
                        sum += omega * (-((k + u) as f64) * x).exp() * f.powi(t as i32) * (1.0 - f);
                    }
                }
            }
            Ok(1.0 + sum)
        }
        (CsiMode::Known, TurbulenceParams::NegExp(p)) => {
            for v in 0..=m1 {
                let lv = p.lambda * (v + 1) as f64;
                let e = terms.g(root_exp_spec(lv * lv * u_fso / 4.0)?)? / PI.sqrt();
                for k in 1..=n {
                    for t in v..=m1 {
                        for u in 0..=t {
                            let lambda = signed_binomial(n, k)
                                * signed_binomial(m1, t)
                                * signed_binomial(t, u)
                                * signed_binomial(t, v);
                            sum += lambda * (-((k + u) as f64) * x).exp() * e;
                        }
                    }
                }
            }
            Ok(1.0 + sum)
        }
        (CsiMode::Unknown, TurbulenceParams::GammaGammaPe(p)) => {
            let c = cfg.gain()?;
            let f = terms.gg_cdf(gamma, cfg.mean_snr_fso, p)?;
            let kp = gg_duplication_prefactor(p);
            for k in 0..n {
                let kk = (k + 1) as f64;
                let w = gamma * c * kk / (cfg.mean_snr_rf * cfg.mean_snr_fso);
                let s_k = 1.0 - kp * terms.g(unknown_gg_spec(w, p)?)?;
                for t in 0..=m1 {
                    for u in 0..=t {
                        let varsigma = signed_binomial(n - 1, k)
                            * signed_binomial(m1, t)
                            * signed_binomial(t, u)
                            * n as f64
                            / kk;
                        sum +=
                            varsigma * (-((k + u + 1) as f64) * x).exp() * f.powi(t as i32) * s_k;
                    }
                }
            }
            Ok(1.0 - sum)
        }
        (CsiMode::Unknown, TurbulenceParams::NegExp(p)) => {
            let c = cfg.gain()?;
            let mut hop = Vec::with_capacity(m1 as usize + 1);
            for v in 0..=m1 {
                hop.push(if v == 0 {
                    1.0
                } else {
                    let lv = p.lambda * v as f64;
                    terms.g(root_exp_spec(lv * lv * u_fso / 4.0)?)? / PI.sqrt()
                });
            }
            for k in 0..n {
                let kk = (k + 1) as f64;
                let w = gamma * c * kk / (cfg.mean_snr_rf * cfg.mean_snr_fso);
                let s_k = terms.g(unknown_ne_spec(w, p)?)? / PI.sqrt();
                for t in 0..=m1 {
                    for u in 0..=t {
                        for (v, e) in hop.iter().enumerate().take(t as usize + 1) {
                            let rho = signed_binomial(n - 1, k)
                                * signed_binomial(m1, t)
                                * signed_binomial(t, u)
                                * signed_binomial(t, v as u32)
                                * n as f64
                                / kk;
                            sum += rho * (-((k + u + 1) as f64) * x).exp() * e * s_k;
                        }
                    }
                }
            }
            Ok(1.0 - sum)
        }
    }
}

/// Outage probability at threshold `gamma_th` from the binomially expanded
/// closed forms (four CSI/turbulence combinations).
pub fn pout_closed_form(
    cfg: &SystemConfig,
    gamma_th: f64,
    ctl: &SeriesControl,
) -> Result<ClosedFormValue> {
    cfg.validate()?;
    if !(gamma_th > 0.0) {
        return Err(Error::Domain(format!(
            "threshold must be positive, got {gamma_th}"
        )));
    }
    Ok(ClosedFormValue::from_raw(pout_raw(
        cfg,
        gamma_th,
        &Terms::new(ctl),
    )?))
}

/// `½ ∫₀^∞ e^{-γ} F(γ) dγ` for a CDF `F`.
///
/// The head `(0, γ_cut)`, `γ_cut = max(50, 20 γ̄)`, is split into panels with
/// geometrically growing edges; panels whose trivial bound `½(e^{-a} - e^{-b})`
/// is negligible are skipped and the bound is added to the error, as is the
/// tail `½ e^{-γ_cut}`.
pub fn dpsk_ber_from_cdf<F>(mut cdf: F, mean_snr: f64, ctl: &QuadratureControl) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    ctl.validate()?;
    let cut = 50f64.max(20.0 * mean_snr);
    let mut edges = vec![0.0];
    let mut e = 2f64.powi(-24);
    while e < cut {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(cut);
    let panel_ctl = QuadratureControl {
        abs_tol: ctl.abs_tol / edges.len() as f64,
        ..*ctl
    };

    let mut out = Integral {
        value: 0.0,
        error: 0.5 * (-cut).exp(),
        abs_value: 0.0,
        subdivisions: 0,
    };
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let bound = 0.5 * ((-a).exp() - (-b).exp());
        if bound <= 1e-3 * ctl.rel_tol * out.value.abs() || bound <= 1e-3 * panel_ctl.abs_tol {
            out.error += bound;
            continue;
        }
        let mut failure = None;
        let r = integrate(
            |g| match cdf(g) {
                Ok(f) => 0.5 * (-g).exp() * f,
                Err(err) => {
                    failure.get_or_insert(err);
                    f64::NAN
                }
            },
            a,
            b,
            &panel_ctl,
        );
        if let Some(err) = failure {
            return Err(err.in_term(format!("integrand on [{a}, {b}]")));
        }
        let r = r?;
        out.value += r.value;
        out.error += r.error;
        out.abs_value += r.abs_value;
        out.subdivisions += r.subdivisions;
    }
    Ok(out)
}

/// DPSK bit-error rate by numerical integration of the closed-form outage
/// probability.
pub fn ber_quadrature(
    cfg: &SystemConfig,
    qctl: &QuadratureControl,
    sctl: &SeriesControl,
) -> Result<f64> {
    cfg.validate()?;
    let terms = Terms::new(sctl);
    let r = dpsk_ber_from_cdf(
        |g| pout_raw(cfg, g, &terms),
        cfg.mean_snr_fso.max(cfg.mean_snr_rf),
        qctl,
    )?;
    Ok(r.value)
}

fn gg_params(cfg: &SystemConfig, what: &str) -> Result<GammaGammaPe> {
    match cfg.fso_turbulence {
        TurbulenceParams::GammaGammaPe(p) => Ok(p),
        TurbulenceParams::NegExp(_) => Err(Error::Unsupported(format!(
            "{what} is defined for Gamma-Gamma turbulence only; use ber_quadrature"
        ))),
    }
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

/// Power series of the Gamma-Gamma CDF in `w = √(γ/γ̄FSO)`:
/// `F = X₀ w^{ξ²} + Σ Y_n w^{α+n} + Σ Z_n w^{β+n}`.
struct CdfSeries {
    params: GammaGammaPe,
    x0: f64,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl CdfSeries {
    fn new(p: &GammaGammaPe, ctl: &SeriesControl) -> Self {
        let mut q = *p;
        if near_integer(q.alpha - q.beta) || near_integer(q.xi2() - q.beta) {
            q.beta += ctl.pole_epsilon;
        }
        if near_integer(q.xi2() - q.alpha) {
            q.xi = (q.xi2() + ctl.pole_epsilon).sqrt();
        }
        let (a, b, x2) = (q.alpha, q.beta, q.xi2());
        let ln_c = (a * b * q.kappa).ln();
        let lg = statrs::function::gamma::ln_gamma;
        let ln_norm = x2.ln() - lg(a) - lg(b);

        let (g1, s1) = ln_gamma_signed(a - x2);
        let (g2, s2) = ln_gamma_signed(b - x2);
        let x0 = s1 * s2 * (g1 + g2 - lg(a) - lg(b) + x2 * ln_c).exp();

        let residues = |c: f64, other: f64| -> Vec<f64> {
            (0..ctl.max_terms)
                .map(|n| {
                    let nf = n as f64;
                    let (g, s) = ln_gamma_signed(other - c - nf);
                    let d = x2 - c - nf;
                    let sign = if n % 2 == 0 { s } else { -s } * d.signum();
                    let ln =
                        ln_norm + g - lg(nf + 1.0) - (c + nf).ln() - d.abs().ln() + (c + nf) * ln_c;
                    sign * ln.exp()
                })
                .collect()
        };
        Self {
            params: q,
            x0,
            y: residues(a, b),
            z: residues(b, a),
        }
    }

    /// Coefficients of `(Σ_n v_n w^n)^j`, truncated to the stored length.
    fn power(v: &[f64], j: u32) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        out[0] = 1.0;
        for _ in 0..j {
            out = Self::convolve(&out, v);
        }
        out
    }

    fn convolve(x: &[f64], y: &[f64]) -> Vec<f64> {
        let len = x.len();
        (0..len)
            .map(|n| (0..=n).map(|i| x[i] * y[n - i]).sum())
            .collect()
    }
}

/// The average `∫₀^∞ e^{-aγ} (γ/γ̄FSO)^{E/2} (1 - F(γ)) dγ` (known CSI) or
/// `∫₀^∞ e^{-aγ} (γ/γ̄FSO)^{E/2} S_k(γ) dγ` (unknown CSI) in closed form.
struct Brackets<'a, 'b> {
    cfg: &'a SystemConfig,
    p: GammaGammaPe,
    kp: f64,
    terms: &'a Terms<'b>,
}

impl Brackets<'_, '_> {
    fn eval(&self, e: f64, k: u32, u: u32) -> Result<f64> {
        let cfg = self.cfg;
        let nu = e / 2.0;
        let (shift, spec) = match cfg.csi_mode {
            CsiMode::Known => {
                let s = (k + u) as f64;
                let a = 1.0 + s / cfg.mean_snr_rf;
                let (al, be, x2) = (self.p.alpha, self.p.beta, self.p.xi2());
                let c = al * be * self.p.kappa;
                let spec = MeijerGSpec::new(
                    6,
                    3,
                    vec![-nu, 0.5, 1.0, (x2 + 1.0) / 2.0, (x2 + 2.0) / 2.0],
                    vec![
                        x2 / 2.0,
                        (x2 + 1.0) / 2.0,
                        al / 2.0,
                        (al + 1.0) / 2.0,
                        be / 2.0,
                        (be + 1.0) / 2.0,
                        0.0,
                        0.5,
                    ],
                    c * c / (16.0 * cfg.mean_snr_fso * a),
                )?;
                (s, spec)
            }
            CsiMode::Unknown => {
                let s = (k + u + 1) as f64;
                let a = 1.0 + s / cfg.mean_snr_rf;
                let w = cfg.gain()? * (k + 1) as f64 / (cfg.mean_snr_rf * cfg.mean_snr_fso);
                (s, laplace_spec(&unknown_gg_spec(w, &self.p)?, nu, a)?)
            }
        };
        let a = 1.0 + shift / cfg.mean_snr_rf;
        let ln_pref = -nu * cfg.mean_snr_fso.ln() - (1.0 + nu) * a.ln();
        let g = self.terms.g(spec)?;
        let lg = statrs::function::gamma::ln_gamma(1.0 + nu);
        Ok((ln_pref + lg).exp() - self.kp * g * ln_pref.exp())
    }
}

/// Signed outer coefficient and user index range for the CSI mode.
fn outer_terms(cfg: &SystemConfig) -> Vec<(u32, u32, u32, f64)> {
    let (n, m1) = users_and_hops(cfg);
    let mut out = Vec::new();
    let ks: Vec<u32> = match cfg.csi_mode {
        CsiMode::Known => (1..=n).collect(),
        CsiMode::Unknown => (0..n).collect(),
    };
    for k in ks {
        for t in 0..=m1 {
            for u in 0..=t {
                let base = signed_binomial(m1, t) * signed_binomial(t, u);
                let c = match cfg.csi_mode {
                    CsiMode::Known => signed_binomial(n, k) * base,
                    CsiMode::Unknown => {
                        signed_binomial(n - 1, k) * base * n as f64 / (k + 1) as f64
                    }
                };
                out.push((k, t, u, c));
            }
        }
    }
    out
}

fn finish(cfg: &SystemConfig, total: f64) -> f64 {
    match cfg.csi_mode {
        CsiMode::Known => 0.5 * (1.0 + total),
        CsiMode::Unknown => 0.5 * (1.0 - total),
    }
}

fn series_impl(cfg: &SystemConfig, terms: &Terms) -> Result<f64> {
    cfg.validate()?;
    let ctl = terms.ctl;
    ctl.validate()?;
    let p = gg_params(cfg, "the residue-series error rate")?;
    let s = CdfSeries::new(&p, ctl);
    let q = s.params;
    let br = Brackets {
        cfg,
        p: q,
        kp: gg_duplication_prefactor(&q),
        terms,
    };
    let m1 = cfg.n_relays - 1;
    let mut tables = std::collections::HashMap::new();
    for j1 in 0..=m1 {
        for j2 in 0..=m1 - j1 {
            let conv =
                CdfSeries::convolve(&CdfSeries::power(&s.y, j1), &CdfSeries::power(&s.z, j2));
            tables.insert((j1, j2), conv);
        }
    }

    let mut total = 0.0;
    for (k, t, u, outer) in outer_terms(cfg) {
        for k1 in 0..=t {
            for k2 in 0..=k1 {
                let comb = binomial(t, k1) * binomial(k1, k2) * s.x0.powi((t - k1) as i32);
                if comb == 0.0 {
                    continue;
                }
                let conv = &tables[&(k1 - k2, k2)];
                let base =
                    q.xi2() * (t - k1) as f64 + q.alpha * (k1 - k2) as f64 + q.beta * k2 as f64;
                let mut partial = 0.0;
                let mut small = 0;
                let mut converged = false;
                for (n, &cn) in conv.iter().enumerate() {
                    let term = if cn == 0.0 {
                        0.0
                    } else {
                        comb * cn
                            * br.eval(n as f64 + base, k, u).map_err(|e| {
                                e.in_term(format!(
                                    "error-rate series term k={k}, t={t}, u={u}, k1={k1}, k2={k2}, n={n}"
                                ))
                            })?
                    };
                    partial += term;
                    if term.abs() <= ctl.rel_tol * partial.abs() {
                        small += 1;
                        if small >= 3 {
                            converged = true;
                            break;
                        }
                    } else {
                        small = 0;
                    }
                }
                if !converged {
                    return Err(Error::SeriesFailure {
                        terms: conv.len(),
                        partial,
                    }
                    .in_term(format!(
                        "error-rate series k={k}, t={t}, u={u}, k1={k1}, k2={k2}"
                    )));
                }
                total += outer * partial;
            }
        }
    }
    Ok(finish(cfg, total))
}

/// DPSK bit-error rate from the residue series of the Gamma-Gamma CDF,
/// averaged term by term against the exponential weight.
pub fn ber_series_exact(cfg: &SystemConfig, ctl: &SeriesControl) -> Result<f64> {
    series_impl(cfg, &Terms::new(ctl))
}

/// High-SNR error rate with the branches of the small-SNR CDF that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticBer {
    pub value: f64,
    pub branches: Vec<AsymptoticBranch>,
}

fn asymptotic_impl(cfg: &SystemConfig, terms: &Terms) -> Result<AsymptoticBer> {
    cfg.validate()?;
    terms.ctl.validate()?;
    let p = gg_params(cfg, "the asymptotic error rate")?;
    let branches = gg_pe_asymptotic_branches(&p, terms.ctl.pole_epsilon);
    let br = Brackets {
        cfg,
        p,
        kp: gg_duplication_prefactor(&p),
        terms,
    };
    // (coefficient, exponent of √(γ/γ̄FSO)) of the t-th power of the power law
    let mut powers: Vec<Vec<(f64, f64)>> = vec![vec![(1.0, 0.0)]];
    for _ in 0..cfg.n_relays - 1 {
        let last = powers.last().expect("non-empty");
        let next = last
            .iter()
            .flat_map(|&(c, e)| {
                branches
                    .iter()
                    .map(move |b| (c * b.coefficient, e + 2.0 * b.exponent))
            })
            .collect();
        powers.push(next);
    }
    let mut total = 0.0;
    for (k, t, u, outer) in outer_terms(cfg) {
        for &(c, e) in &powers[t as usize] {
            total += outer
                * c
                * br.eval(e, k, u)
                    .map_err(|err| err.in_term(format!("asymptotic term k={k}, t={t}, u={u}")))?;
        }
    }
    Ok(AsymptoticBer {
        value: finish(cfg, total),
        branches,
    })
}

/// High-SNR DPSK error rate: the FSO CDF raised to the later-hop powers is
/// replaced by its leading power law.
pub fn ber_asymptotic(cfg: &SystemConfig, ctl: &SeriesControl) -> Result<AsymptoticBer> {
    asymptotic_impl(cfg, &Terms::new(ctl))
}

fn closed_ne_impl(cfg: &SystemConfig, terms: &Terms) -> Result<f64> {
    cfg.validate()?;
    if cfg.csi_mode == CsiMode::Unknown {
        return Err(Error::Unsupported(
            "no finite closed-form error rate for unknown CSI with Negative Exponential turbulence; use ber_quadrature".into(),
        ));
    }
    let p = match cfg.fso_turbulence {
        TurbulenceParams::NegExp(p) => p,
        TurbulenceParams::GammaGammaPe(_) => {
            return Err(Error::Unsupported(
                "the finite closed-form error rate needs Negative Exponential turbulence; use ber_series_exact".into(),
            ))
        }
    };
    let (n, m1) = users_and_hops(cfg);
    let mut sum = 0.0;
    for k in 1..=n {
        for t in 0..=m1 {
            for u in 0..=t {
                let a = 1.0 + (k + u) as f64 / cfg.mean_snr_rf;
                for v in 0..=t {
                    let lv = p.lambda * (v + 1) as f64;
                    let spec =
                        laplace_spec(&root_exp_spec(lv * lv / (4.0 * cfg.mean_snr_fso))?, 0.0, a)?;
                    let lambda = signed_binomial(n, k)
                        * signed_binomial(m1, t)
                        * signed_binomial(t, u)
                        * signed_binomial(t, v)
                        / PI.sqrt();
                    sum += lambda / a * terms.g(spec)?;
                }
            }
        }
    }
    Ok(0.5 * (1.0 + sum))
}

/// Finite closed-form DPSK error rate for known CSI and Negative Exponential
/// turbulence.
pub fn ber_closed_ne(cfg: &SystemConfig, ctl: &SeriesControl) -> Result<f64> {
    closed_ne_impl(cfg, &Terms::new(ctl))
}

/// Every distinct Meijer-G instance the closed-form evaluators use for `cfg`:
/// outage at `cfg.gamma_th`, and the series, asymptotic and finite
/// closed-form error rates where they apply.
pub fn emitted_meijer_terms(cfg: &SystemConfig, ctl: &SeriesControl) -> Result<Vec<MeijerGSpec>> {
    cfg.validate()?;
    let terms = Terms::recording(ctl);
    pout_raw(cfg, cfg.gamma_th, &terms)?;
    match (cfg.csi_mode, &cfg.fso_turbulence) {
        (_, TurbulenceParams::GammaGammaPe(_)) => {
            series_impl(cfg, &terms)?;
            asymptotic_impl(cfg, &terms)?;
        }
        (CsiMode::Known, TurbulenceParams::NegExp(_)) => {
            closed_ne_impl(cfg, &terms)?;
        }
        (CsiMode::Unknown, TurbulenceParams::NegExp(_)) => {}
    }
    let mut seen = HashSet::new();
    Ok(terms
        .log
        .expect("recording")
        .into_inner()
        .into_iter()
        .filter(|s| seen.insert(s.to_string()))
        .collect())
}

/// Evaluates one deterministic `(metric, method)` pair at the operating point
/// stored in `cfg`.
pub fn evaluate(
    cfg: &SystemConfig,
    metric: Metric,
    method: Method,
    qctl: &QuadratureControl,
    sctl: &SeriesControl,
) -> Result<f64> {
    match (metric, method) {
        (Metric::Pout, Method::ClosedForm) => {
            let v = pout_closed_form(cfg, cfg.gamma_th, sctl)?;
            match v.diagnostic() {
                Some(d) => Err(Error::Domain(d)),
                None => Ok(v.value),
            }
        }
        (Metric::Ber, Method::Quadrature) => ber_quadrature(cfg, qctl, sctl),
        (Metric::Ber, Method::SeriesExact) => ber_series_exact(cfg, sctl),
        (Metric::Ber, Method::Asymptotic) => Ok(ber_asymptotic(cfg, sctl)?.value),
        (Metric::Ber, Method::ClosedForm) => ber_closed_ne(cfg, sctl),
        (_, Method::MonteCarlo) => Err(Error::Unsupported(
            "Monte Carlo estimates come from the montecarlo module".into(),
        )),
        (Metric::Pout, m) => Err(Error::Unsupported(format!(
            "outage probability has no {m} evaluator"
        ))),
    }
}
