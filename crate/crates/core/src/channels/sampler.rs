use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use super::{GammaGammaPe, NegExp, SnrSample, TurbulenceParams};
use crate::error::{Error, Result};

/// Draws instantaneous SNRs for one fading link.
#[derive(Debug, Clone)]
pub enum SnrSampler {
    /// `γ = γ̄ E`, `E ~ Exp(1)`.
    Rayleigh { mean: f64 },
    /// `γ = γ̄ (E/λ)²`, the inverse of `1 - e^{-λ√(γ/γ̄)}`.
    NegExp { mean: f64, lambda: f64 },
    /// `γ = γ̄ (X_a X_b U^{1/ξ²} / κ)²` with unit-mean Gamma factors `X_a`,
    /// `X_b` and a uniform pointing-error draw `U`.
    GammaGammaPe {
        mean: f64,
        inv_xi2: f64,
        kappa: f64,
        large: Gamma<f64>,
        small: Gamma<f64>,
    },
}

fn check_mean(mean: f64) -> Result<()> {
    if mean > 0.0 && mean.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "mean SNR must be positive, got {mean}"
        )))
    }
}

impl SnrSampler {
    pub fn rayleigh(mean: f64) -> Result<Self> {
        check_mean(mean)?;
        Ok(Self::Rayleigh { mean })
    }

    pub fn neg_exp(mean: f64, p: &NegExp) -> Result<Self> {
        check_mean(mean)?;
        p.validate()?;
        Ok(Self::NegExp {
            mean,
            lambda: p.lambda,
        })
    }

    pub fn gamma_gamma(mean: f64, p: &GammaGammaPe) -> Result<Self> {
        check_mean(mean)?;
        p.validate()?;
        let gamma = |shape: f64| {
            Gamma::new(shape, 1.0 / shape)
                .map_err(|e| Error::InvalidConfig(format!("Gamma({shape}) sampler: {e}")))
        };
        Ok(Self::GammaGammaPe {
            mean,
            inv_xi2: 1.0 / p.xi2(),
            kappa: p.kappa,
            large: gamma(p.alpha)?,
            small: gamma(p.beta)?,
        })
    }

    pub fn fso(mean: f64, p: &TurbulenceParams) -> Result<Self> {
        match p {
            TurbulenceParams::GammaGammaPe(g) => Self::gamma_gamma(mean, g),
            TurbulenceParams::NegExp(n) => Self::neg_exp(mean, n),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SnrSample {
        let g = match self {
            Self::Rayleigh { mean } => {
                let e: f64 = Exp1.sample(rng);
                mean * e
            }
            Self::NegExp { mean, lambda } => {
                let e: f64 = Exp1.sample(rng);
                let r = e / lambda;
                mean * r * r
            }
            Self::GammaGammaPe {
                mean,
                inv_xi2,
                kappa,
                large,
                small,
            } => {
                // 1 - U lies in (0, 1]
                let u = 1.0 - rng.gen::<f64>();
                let i = large.sample(rng) * small.sample(rng) * u.powf(*inv_xi2) / kappa;
                mean * i * i
            }
        };
        SnrSample(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{negexp_snr_cdf, rayleigh_snr_cdf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn empirical(s: &SnrSampler, at: f64, n: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        (0..n).filter(|_| s.sample(&mut rng).value() <= at).count() as f64 / n as f64
    }

    #[test]
    fn rayleigh_empirical_cdf() {
        let s = SnrSampler::rayleigh(10.0).unwrap();
        let e = empirical(&s, 10.0, 200_000);
        assert!((e - rayleigh_snr_cdf(10.0, 10.0)).abs() < 0.004);
    }

    #[test]
    fn negexp_empirical_cdf() {
        let p = NegExp::new(1.0).unwrap();
        let s = SnrSampler::neg_exp(5.0, &p).unwrap();
        let e = empirical(&s, 5.0, 200_000);
        assert!((e - negexp_snr_cdf(5.0, 5.0, &p)).abs() < 0.004);
    }

    #[test]
    fn samples_are_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = SnrSampler::gamma_gamma(2.0, &GammaGammaPe::strong()).unwrap();
        assert!((0..10_000).all(|_| s.sample(&mut rng).value() >= 0.0));
    }
}
