//! Link model: multiuser selection at the first relay, amplify-and-forward
//! combining with known or unknown CSI, FSO/RF selection on later hops, and
//! the resulting SNR distributions.

use serde::{Deserialize, Serialize};

use crate::channels::{
    fso_snr_cdf, rayleigh_snr_cdf, GammaGammaPe, NegExp, SnrSample, TurbulenceParams,
};
use crate::error::{Error, Result};
use crate::specfun::{meijer_g, MeijerGSpec, SeriesControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Known,
    Unknown,
}

/// How the simulator combines the two first-relay SNRs under known CSI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnownCsiCombiner {
    /// `γ₁γ₂/(γ₁+γ₂+1)`
    #[default]
    Exact,
    /// `min(γ₁, γ₂)`, the high-SNR form the closed-form expressions use.
    MinApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_users: u32,
    pub n_relays: u32,
    pub mean_snr_fso: f64,
    pub mean_snr_rf: f64,
    pub csi_mode: CsiMode,
    /// Fixed-gain constant `C`; present exactly when `csi_mode` is `Unknown`.
    pub gain_c: Option<f64>,
    /// Optical-to-electrical conversion efficiency. It cancels out of every
    /// SNR expression and is kept for completeness.
    pub eta: f64,
    pub gamma_th: f64,
    pub fso_turbulence: TurbulenceParams,
    #[serde(default)]
    pub known_csi_combiner: KnownCsiCombiner,
}

/// `10^{dB/10}`
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_users < 1 || self.n_relays < 1 {
            return bad(format!(
                "n_users and n_relays must be at least 1, got {} and {}",
                self.n_users, self.n_relays
            ));
        }
        for (name, v) in [
            ("mean_snr_fso", self.mean_snr_fso),
            ("mean_snr_rf", self.mean_snr_rf),
            ("eta", self.eta),
            ("gamma_th", self.gamma_th),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        match (self.csi_mode, self.gain_c) {
            (CsiMode::Unknown, Some(c)) if c > 0.0 && c.is_finite() => {}
            (CsiMode::Unknown, Some(c)) => return bad(format!("gain_c must be positive, got {c}")),
            (CsiMode::Unknown, None) => return bad("gain_c is required with unknown CSI".into()),
            (CsiMode::Known, Some(_)) => return bad("gain_c only applies to unknown CSI".into()),
            (CsiMode::Known, None) => {}
        }
        self.fso_turbulence.validate()
    }

    /// Binds both mean SNRs to one average SNR given in dB.
    pub fn with_avg_snr_db(mut self, db: f64) -> Self {
        let v = db_to_linear(db);
        self.mean_snr_fso = v;
        self.mean_snr_rf = v;
        self
    }

    pub fn with_gamma_th(mut self, gamma_th: f64) -> Self {
        self.gamma_th = gamma_th;
        self
    }

    pub(crate) fn gain(&self) -> Result<f64> {
        self.gain_c
            .ok_or_else(|| Error::InvalidConfig("gain_c is required with unknown CSI".into()))
    }
}

/// SNR pair of one later hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopDraw {
    pub snr_fso: SnrSample,
    pub snr_rf: SnrSample,
}

impl HopDraw {
    pub fn selected(&self) -> SnrSample {
        if self.snr_fso.value() >= self.snr_rf.value() {
            self.snr_fso
        } else {
            self.snr_rf
        }
    }
}

/// CDF of the strongest of `N` Rayleigh users, `(1 - e^{-γ/γ̄RF})^N`.
pub fn multiuser_cdf(gamma: f64, cfg: &SystemConfig) -> f64 {
    rayleigh_snr_cdf(gamma, cfg.mean_snr_rf).powi(cfg.n_users as i32)
}

pub fn af_known_csi(g1: SnrSample, g2: SnrSample, combiner: KnownCsiCombiner) -> SnrSample {
    let (a, b) = (g1.value(), g2.value());
    let v = match combiner {
        KnownCsiCombiner::Exact => a * b / (a + b + 1.0),
        KnownCsiCombiner::MinApprox => a.min(b),
    };
    SnrSample::new(v).unwrap_or_else(|_| SnrSample::zero())
}

/// `γ₁γ₂/(C + γ₂)`; tends to `γ₁` as `γ₂ → ∞`.
pub fn af_unknown_csi(g1: SnrSample, g2: SnrSample, c: f64) -> SnrSample {
    let (a, b) = (g1.value(), g2.value());
    let v = if b.is_infinite() { a } else { a * b / (c + b) };
    SnrSample::new(v).unwrap_or_else(|_| SnrSample::zero())
}

/// CDF of a later hop's SNR after FSO/RF selection: `F_FSO(γ) F_RF(γ)`.
pub fn hop_select_cdf(gamma: f64, cfg: &SystemConfig, ctl: &SeriesControl) -> Result<f64> {
    if gamma <= 0.0 {
        return Ok(0.0);
    }
    let rf = rayleigh_snr_cdf(gamma, cfg.mean_snr_rf);
    Ok(rf * fso_snr_cdf(gamma, cfg.mean_snr_fso, &cfg.fso_turbulence, ctl)?)
}

/// `(-1)^k C(n, k)`
pub(crate) fn signed_binomial(n: u32, k: u32) -> f64 {
    let c = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    if k % 2 == 0 {
        c
    } else {
        -c
    }
}

/// `ξ² 2^{α+β-3} / (π Γ(α) Γ(β))`, the prefactor left by the duplication
/// formula when the Gamma-Gamma survival function is averaged against an
/// exponential.
pub(crate) fn gg_duplication_prefactor(p: &GammaGammaPe) -> f64 {
    let lg = statrs::function::gamma::ln_gamma;
    (p.xi2().ln() + (p.alpha + p.beta - 3.0) * std::f64::consts::LN_2
        - std::f64::consts::PI.ln()
        - lg(p.alpha)
        - lg(p.beta))
    .exp()
}

/// `P(γ₂ C / Y > γ)`-type average `E[1 - F_FSO(γC/Y)]` with `Y ~ Exp(rate)`,
/// expressed as a Meijer-G term.
pub(crate) fn unknown_csi_survival(
    gamma: f64,
    rate: f64,
    cfg: &SystemConfig,
    ctl: &SeriesControl,
) -> Result<f64> {
    let c = cfg.gain()?;
    match &cfg.fso_turbulence {
        TurbulenceParams::GammaGammaPe(p) => {
            let spec = unknown_gg_spec(gamma * c * rate / cfg.mean_snr_fso, p)?;
            let g = meijer_g(&spec, ctl).map_err(|e| e.in_term(spec.to_string()))?;
            Ok(1.0 - gg_duplication_prefactor(p) * g)
        }
        TurbulenceParams::NegExp(p) => {
            let spec = unknown_ne_spec(gamma * c * rate / cfg.mean_snr_fso, p)?;
            let g = meijer_g(&spec, ctl).map_err(|e| e.in_term(spec.to_string()))?;
            Ok(g / std::f64::consts::PI.sqrt())
        }
    }
}

/// `G^{7,2}_{4,9}((αβκ)² w / 16 | 1, ½, (ξ²+1)/2, (ξ²+2)/2;
/// ξ²/2, (ξ²+1)/2, α/2, (α+1)/2, β/2, (β+1)/2, 1, 0, ½)` where
/// `w = γ C rate / γ̄FSO`.
pub(crate) fn unknown_gg_spec(w: f64, p: &GammaGammaPe) -> Result<MeijerGSpec> {
    let (a, b, x2) = (p.alpha, p.beta, p.xi2());
    let abk = a * b * p.kappa;
    MeijerGSpec::new(
        7,
        2,
        vec![1.0, 0.5, (x2 + 1.0) / 2.0, (x2 + 2.0) / 2.0],
        vec![
            x2 / 2.0,
            (x2 + 1.0) / 2.0,
            a / 2.0,
            (a + 1.0) / 2.0,
            b / 2.0,
            (b + 1.0) / 2.0,
            1.0,
            0.0,
            0.5,
        ],
        abk * abk * w / 16.0,
    )
}

/// `G^{3,0}_{0,3}(λ² w / 4 | 1, 0, ½)` with `w = γ C rate / γ̄FSO`.
pub(crate) fn unknown_ne_spec(w: f64, p: &NegExp) -> Result<MeijerGSpec> {
    MeijerGSpec::new(
        3,
        0,
        vec![],
        vec![1.0, 0.0, 0.5],
        p.lambda * p.lambda * w / 4.0,
    )
}

/// CDF of the first-relay output SNR (the SNR seen by the second relay).
///
/// Known CSI uses `min(γ₁, γ₂)`: `1 - (1 - F_{γ₁})(1 - F_FSO)`. Unknown CSI
/// averages the FSO survival function over the multiuser SNR:
/// `1 - Σ_k C(N-1,k)(-1)^k N/(k+1) e^{-(k+1)γ/γ̄RF} S_k(γ)`.
pub fn second_relay_cdf(gamma: f64, cfg: &SystemConfig, ctl: &SeriesControl) -> Result<f64> {
    if gamma <= 0.0 {
        return Ok(0.0);
    }
    match cfg.csi_mode {
        CsiMode::Known => {
            let f1 = multiuser_cdf(gamma, cfg);
            let f2 = fso_snr_cdf(gamma, cfg.mean_snr_fso, &cfg.fso_turbulence, ctl)?;
            Ok(1.0 - (1.0 - f1) * (1.0 - f2))
        }
        CsiMode::Unknown => {
            let n = cfg.n_users;
            let mut survival = 0.0;
            for k in 0..n {
                let kk = (k + 1) as f64;
                let rate = kk / cfg.mean_snr_rf;
                let s = unknown_csi_survival(gamma, rate, cfg, ctl)
                    .map_err(|e| e.in_term(format!("user term k = {k}")))?;
                survival += signed_binomial(n - 1, k) * n as f64 / kk
                    * (-kk * gamma / cfg.mean_snr_rf).exp()
                    * s;
            }
            Ok(1.0 - survival)
        }
    }
}

/// End-to-end SNR of one realization: the weakest of the first-hop output
/// and each later hop's selected branch.
pub fn e2e_snr_from_draws(first_hop: SnrSample, later_hops: &[HopDraw]) -> SnrSample {
    later_hops
        .iter()
        .map(HopDraw::selected)
        .fold(
            first_hop,
            |acc, s| if s.value() < acc.value() { s } else { acc },
        )
}

/// CDF of the end-to-end SNR: `1 - (1 - F_{2nd})(1 - F_hop)^{M-1}`.
pub fn end_to_end_cdf(gamma: f64, cfg: &SystemConfig, ctl: &SeriesControl) -> Result<f64> {
    if gamma <= 0.0 {
        return Ok(0.0);
    }
    let first = second_relay_cdf(gamma, cfg, ctl)?;
    let later = if cfg.n_relays > 1 {
        hop_select_cdf(gamma, cfg, ctl)?
    } else {
        0.0
    };
    Ok(1.0 - (1.0 - first) * (1.0 - later).powi(cfg.n_relays as i32 - 1))
}
