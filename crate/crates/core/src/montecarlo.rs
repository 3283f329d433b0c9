//! Seeded, parallel Monte Carlo estimation of outage probability and DPSK
//! error rate.
//!
//! Trials are grouped in fixed batches; batch `b` draws from the ChaCha8
//! stream `b` of the run seed, and batch results are reduced in batch order.
//! Estimates therefore depend only on `(config, trials, seed)`, never on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::Metric;
use crate::channels::{SnrSample, SnrSampler};
use crate::error::{Error, Result};
use crate::system::{
    af_known_csi, af_unknown_csi, e2e_snr_from_draws, CsiMode, HopDraw, SystemConfig,
};

pub const BATCH: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Samplers for one operating point.
struct Link {
    cfg: SystemConfig,
    user: SnrSampler,
    fso: SnrSampler,
    rf: SnrSampler,
}

impl Link {
    fn new(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: *cfg,
            user: SnrSampler::rayleigh(cfg.mean_snr_rf)?,
            fso: SnrSampler::fso(cfg.mean_snr_fso, &cfg.fso_turbulence)?,
            rf: SnrSampler::rayleigh(cfg.mean_snr_rf)?,
        })
    }

    fn trial(&self, rng: &mut ChaCha8Rng, hops: &mut Vec<HopDraw>) -> SnrSample {
        let g1 =
            (0..self.cfg.n_users)
                .map(|_| self.user.sample(rng))
                .fold(
                    SnrSample::zero(),
                    |a, b| if b.value() > a.value() { b } else { a },
                );
        let g2 = self.fso.sample(rng);
        let first = match self.cfg.csi_mode {
            CsiMode::Known => af_known_csi(g1, g2, self.cfg.known_csi_combiner),
            CsiMode::Unknown => af_unknown_csi(g1, g2, self.cfg.gain_c.unwrap_or(1.0)),
        };
        hops.clear();
        for _ in 1..self.cfg.n_relays {
            hops.push(HopDraw {
                snr_fso: self.fso.sample(rng),
                snr_rf: self.rf.sample(rng),
            });
        }
        e2e_snr_from_draws(first, hops)
    }
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

fn batches(trials: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let count = trials.div_ceil(BATCH) as usize;
    (0..count).into_par_iter().map(move |b| {
        let b = b as u64;
        (b, BATCH.min(trials - b * BATCH))
    })
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidConfig(
            "Monte Carlo needs at least one trial".into(),
        ));
    }
    Ok(())
}

/// End-to-end SNR of every trial, in trial order.
pub fn sample_e2e(cfg: &SystemConfig, trials: u64, seed: u64) -> Result<Vec<f64>> {
    check_trials(trials)?;
    let link = Link::new(cfg)?;
    let chunks: Vec<Vec<f64>> = batches(trials)
        .map(|(b, len)| {
            let mut rng = batch_rng(seed, b);
            let mut hops = Vec::new();
            (0..len)
                .map(|_| link.trial(&mut rng, &mut hops).value())
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Fraction of trials whose end-to-end SNR is below `cfg.gamma_th`.
pub fn simulate_pout_at(cfg: &SystemConfig, trials: u64, seed: u64) -> Result<McEstimate> {
    check_trials(trials)?;
    let link = Link::new(cfg)?;
    let th = cfg.gamma_th;
    let outages: u64 = batches(trials)
        .map(|(b, len)| {
            let mut rng = batch_rng(seed, b);
            let mut hops = Vec::new();
            (0..len)
                .filter(|_| link.trial(&mut rng, &mut hops).value() < th)
                .count() as u64
        })
        .sum();
    let p = outages as f64 / trials as f64;
    Ok(McEstimate {
        mean: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
        seed,
    })
}

/// Mean of the conditional DPSK error rate `½ e^{-γ_e2e}`.
pub fn simulate_ber_at(cfg: &SystemConfig, trials: u64, seed: u64) -> Result<McEstimate> {
    check_trials(trials)?;
    let link = Link::new(cfg)?;
    // Per-batch (mean, sum of squared deviations), merged in batch order.
    let parts: Vec<(f64, f64, f64)> = batches(trials)
        .map(|(b, len)| {
            let mut rng = batch_rng(seed, b);
            let mut hops = Vec::new();
            let (mut mean, mut m2) = (0.0, 0.0);
            for i in 0..len {
                let x = 0.5 * (-link.trial(&mut rng, &mut hops).value()).exp();
                let d = x - mean;
                mean += d / (i + 1) as f64;
                m2 += d * (x - mean);
            }
            (len as f64, mean, m2)
        })
        .collect();
    let (n, mean, m2) = parts
        .into_iter()
        .fold((0.0, 0.0, 0.0), |(na, ma, sa), (nb, mb, sb)| {
            let n = na + nb;
            let d = mb - ma;
            (n, ma + d * nb / n, sa + sb + d * d * na * nb / n)
        });
    let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        trials,
        seed,
    })
}

pub fn simulate_pout(
    cfg: &SystemConfig,
    avg_snr_db: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    simulate_pout_at(&cfg.with_avg_snr_db(avg_snr_db), trials, seed)
}

pub fn simulate_ber(
    cfg: &SystemConfig,
    avg_snr_db: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    simulate_ber_at(&cfg.with_avg_snr_db(avg_snr_db), trials, seed)
}

/// Estimates `metric` at the mean SNRs already stored in `cfg`.
pub fn simulate(cfg: &SystemConfig, metric: Metric, trials: u64, seed: u64) -> Result<McEstimate> {
    match metric {
        Metric::Pout => simulate_pout_at(cfg, trials, seed),
        Metric::Ber => simulate_ber_at(cfg, trials, seed),
    }
}

/// Draws `n` samples from one fading law, deterministically in `seed`.
pub fn draw_samples(sampler: &SnrSampler, n: u64, seed: u64) -> Vec<f64> {
    let chunks: Vec<Vec<f64>> = batches(n)
        .map(|(b, len)| {
            let mut rng = batch_rng(seed, b);
            (0..len).map(|_| sampler.sample(&mut rng).value()).collect()
        })
        .collect();
    chunks.concat()
}

/// Upper bound on the Kolmogorov-Smirnov distance between the empirical
/// distribution of `samples` and `cdf`, evaluating `cdf` only at every
/// `stride`-th order statistic.
///
/// Between evaluated order statistics `x_(i) ≤ x < x_(j)` both the empirical
/// and the model CDF are monotone, so the gap is at most
/// `max(F(x_(j)) - i/n, j/n - F(x_(i)))`.
pub fn ks_upper_bound<F>(mut samples: Vec<f64>, mut cdf: F, stride: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if samples.is_empty() || stride == 0 {
        return Err(Error::Domain(
            "KS bound needs samples and a positive stride".into(),
        ));
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    let values = idx
        .iter()
        .map(|&i| cdf(samples[i]))
        .collect::<Result<Vec<f64>>>()?;
    let nf = n as f64;
    // Below the smallest sample the empirical CDF is 0.
    let mut d = values[0];
    for w in 0..idx.len() - 1 {
        let (i, j) = (idx[w], idx[w + 1]);
        // On [x_(i), x_(j)) the empirical CDF lies in [(i+1)/n, j/n].
        d = d
            .max(values[w + 1] - (i + 1) as f64 / nf)
            .max(j as f64 / nf - values[w]);
    }
    // At and above the largest sample the empirical CDF is 1.
    Ok(d.max(1.0 - values[idx.len() - 1]))
}
