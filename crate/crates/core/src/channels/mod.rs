//! SNR-domain fading models: Rayleigh (RF), Negative Exponential and
//! Gamma-Gamma with pointing error (FSO). Provides CDFs, the Gamma-Gamma pdf,
//! series and power-law approximations of its CDF, and random samplers.

mod gamma_gamma;
mod sampler;

pub(crate) use gamma_gamma::ln_norm as gg_ln_norm;
pub use gamma_gamma::{
    gg_pe_asymptotic_branches, gg_pe_cdf_meijer_spec, gg_pe_snr_cdf, gg_pe_snr_pdf,
    AsymptoticBranch, BranchKind, CdfMethod,
};
pub use sampler::SnrSampler;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An instantaneous SNR on the linear scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SnrSample(f64);

impl SnrSample {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma >= 0.0 && !gamma.is_nan() {
            Ok(Self(gamma))
        } else {
            Err(Error::Domain(format!(
                "SNR must be non-negative, got {gamma}"
            )))
        }
    }

    pub fn zero() -> Self {
        Self(0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Gamma-Gamma turbulence with pointing error. `kappa` scales the argument
/// of the Meijer-G forms of the pdf and CDF; [`GammaGammaPe::new`] sets it to
/// `ξ²/(ξ²+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaGammaPe {
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    pub kappa: f64,
}

impl GammaGammaPe {
    pub fn new(alpha: f64, beta: f64, xi: f64) -> Result<Self> {
        let xi2 = xi * xi;
        Self::with_kappa(alpha, beta, xi, xi2 / (xi2 + 1.0))
    }

    pub fn with_kappa(alpha: f64, beta: f64, xi: f64, kappa: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            xi,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    /// Moderate turbulence: α = 4, β = 1.9, ξ = 10.45.
    pub fn moderate() -> Self {
        Self::new(4.0, 1.9, 10.45).expect("valid preset")
    }

    /// Strong turbulence: α = 4.2, β = 1.4, ξ = 2.45.
    pub fn strong() -> Self {
        Self::new(4.2, 1.4, 2.45).expect("valid preset")
    }

    pub fn xi2(&self) -> f64 {
        self.xi * self.xi
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.alpha) && ok(self.beta) && ok(self.xi) && ok(self.kappa)) {
            return Err(Error::InvalidConfig(format!(
                "Gamma-Gamma parameters must be positive and finite, got {self:?}"
            )));
        }
        if self.alpha < self.beta {
            return Err(Error::InvalidConfig(format!(
                "Gamma-Gamma parameters must satisfy alpha >= beta, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Negative Exponential (saturated) turbulence with rate `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegExp {
    pub lambda: f64,
}

impl NegExp {
    pub fn new(lambda: f64) -> Result<Self> {
        let p = Self { lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda > 0.0 && self.lambda.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "Negative Exponential rate must be positive, got {}",
                self.lambda
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TurbulenceParams {
    GammaGammaPe(GammaGammaPe),
    NegExp(NegExp),
}

impl TurbulenceParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::GammaGammaPe(p) => p.validate(),
            Self::NegExp(p) => p.validate(),
        }
    }
}

/// `1 - e^{-γ/γ̄}`.
pub fn rayleigh_snr_cdf(gamma: f64, mean_snr: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    -(-gamma / mean_snr).exp_m1()
}

/// `1 - e^{-λ √(γ/γ̄)}`.
pub fn negexp_snr_cdf(gamma: f64, mean_snr: f64, params: &NegExp) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    -(-params.lambda * (gamma / mean_snr).sqrt()).exp_m1()
}

/// CDF of the FSO-link SNR for either turbulence family; Gamma-Gamma uses
/// the Meijer-G form.
pub fn fso_snr_cdf(
    gamma: f64,
    mean_snr: f64,
    params: &TurbulenceParams,
    ctl: &crate::specfun::SeriesControl,
) -> Result<f64> {
    match params {
        TurbulenceParams::GammaGammaPe(p) => {
            gg_pe_snr_cdf(gamma, mean_snr, p, CdfMethod::Meijer, ctl)
        }
        TurbulenceParams::NegExp(p) => Ok(negexp_snr_cdf(gamma, mean_snr, p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_examples() {
        assert_eq!(rayleigh_snr_cdf(0.0, 10.0), 0.0);
        assert!((rayleigh_snr_cdf(7.0, 7.0) - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!((rayleigh_snr_cdf(30.0, 3.0) - 0.999_954_600_070_237_5).abs() < 1e-15);
    }

    #[test]
    fn negexp_examples() {
        let one = NegExp::new(1.0).unwrap();
        let two = NegExp::new(2.0).unwrap();
        assert_eq!(negexp_snr_cdf(0.0, 5.0, &one), 0.0);
        assert!((negexp_snr_cdf(5.0, 5.0, &one) - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!((negexp_snr_cdf(20.0, 5.0, &two) - 0.981_684_361_111_265_8).abs() < 1e-15);
    }

    #[test]
    fn parameter_validation() {
        assert!(GammaGammaPe::new(1.0, 2.0, 1.0).is_err());
        assert!(GammaGammaPe::new(2.0, 1.0, 0.0).is_err());
        assert!(NegExp::new(-1.0).is_err());
        assert!(SnrSample::new(-0.1).is_err());
        let m = GammaGammaPe::moderate();
        assert!((m.kappa - m.xi2() / (m.xi2() + 1.0)).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn closed_form_cdfs_are_monotone(g1 in 0.0f64..1e4, d in 0.0f64..1e3, mean in 0.01f64..1e4) {
            let ne = NegExp::new(1.7).unwrap();
            proptest::prop_assert!(rayleigh_snr_cdf(g1, mean) <= rayleigh_snr_cdf(g1 + d, mean));
            proptest::prop_assert!(negexp_snr_cdf(g1, mean, &ne) <= negexp_snr_cdf(g1 + d, mean, &ne));
            let v = rayleigh_snr_cdf(g1, mean);
            proptest::prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
