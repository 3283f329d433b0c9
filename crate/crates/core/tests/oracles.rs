use fsorelay::analytic::{ber_quadrature, pout_closed_form, QuadratureControl};
use fsorelay::channels::{
    gg_pe_snr_cdf, CdfMethod, GammaGammaPe, NegExp, SnrSampler, TurbulenceParams,
};
use fsorelay::montecarlo::{draw_samples, ks_upper_bound, simulate_ber, simulate_pout};
use fsorelay::specfun::SeriesControl;
use fsorelay::system::{
    db_to_linear, hop_select_cdf, second_relay_cdf, CsiMode, KnownCsiCombiner, SystemConfig,
};

fn cfg(csi: CsiMode, turb: TurbulenceParams, n: u32, m: u32) -> SystemConfig {
    SystemConfig {
        n_users: n,
        n_relays: m,
        mean_snr_fso: 1.0,
        mean_snr_rf: 1.0,
        csi_mode: csi,
        gain_c: (csi == CsiMode::Unknown).then_some(1.0),
        eta: 1.0,
        gamma_th: db_to_linear(10.0),
        fso_turbulence: turb,
        known_csi_combiner: KnownCsiCombiner::Exact,
    }
}

fn moderate() -> TurbulenceParams {
    TurbulenceParams::GammaGammaPe(GammaGammaPe::moderate())
}

fn ne(lambda: f64) -> TurbulenceParams {
    TurbulenceParams::NegExp(NegExp::new(lambda).unwrap())
}

const TRIALS: u64 = 1_000_000;

#[test]
fn gamma_gamma_sampler_matches_cdf() {
    for p in [GammaGammaPe::moderate(), GammaGammaPe::strong()] {
        let s = SnrSampler::gamma_gamma(10.0, &p).unwrap();
        let ctl = SeriesControl::default();
        let x = draw_samples(&s, 200_000, 4);
        let d = ks_upper_bound(
            x,
            |g| gg_pe_snr_cdf(g, 10.0, &p, CdfMethod::Meijer, &ctl),
            100,
        )
        .unwrap();
        // KS 99.9% critical value at n = 2e5 is about 0.0044
        assert!(d < 0.0044, "{p:?}: {d}");
    }
}

#[test]
fn hop_selection_cdf_matches_simulation() {
    let c = cfg(CsiMode::Known, moderate(), 1, 2).with_avg_snr_db(0.0);
    let ctl = SeriesControl::default();
    let f = hop_select_cdf(1.0, &c, &ctl).unwrap();
    let fso = draw_samples(
        &SnrSampler::fso(1.0, &c.fso_turbulence).unwrap(),
        TRIALS,
        11,
    );
    let rf = draw_samples(&SnrSampler::rayleigh(1.0).unwrap(), TRIALS, 12);
    let hits = fso
        .iter()
        .zip(&rf)
        .filter(|(a, b)| a.max(**b) <= 1.0)
        .count();
    let p = hits as f64 / TRIALS as f64;
    let se = (p * (1.0 - p) / TRIALS as f64).sqrt();
    assert!((f - p).abs() < 3.0 * se, "{f} vs {p} ± {se}");
}

#[test]
fn known_csi_second_relay_matches_min_simulation() {
    let mut c = cfg(CsiMode::Known, moderate(), 2, 1).with_avg_snr_db(0.0);
    c.known_csi_combiner = KnownCsiCombiner::MinApprox;
    let c = c.with_gamma_th(1.0);
    let ctl = SeriesControl::default();
    let f = second_relay_cdf(1.0, &c, &ctl).unwrap();
    let e = simulate_pout(&c, 0.0, TRIALS, 21).unwrap();
    assert!((f - e.mean).abs() < 3.0 * e.stderr, "{f} vs {e:?}");
}

#[test]
fn unknown_csi_second_relay_matches_simulation() {
    let c = cfg(CsiMode::Unknown, ne(1.0), 1, 1).with_gamma_th(1.0);
    let ctl = SeriesControl::default();
    let f = second_relay_cdf(1.0, &c, &ctl).unwrap();
    let e = simulate_pout(&c, 0.0, TRIALS, 22).unwrap();
    assert!((f - e.mean).abs() < 3.0 * e.stderr, "{f} vs {e:?}");
}

#[test]
fn outage_closed_forms_match_simulation() {
    let ctl = SeriesControl::default();
    let mut known = cfg(CsiMode::Known, moderate(), 2, 2);
    known.known_csi_combiner = KnownCsiCombiner::MinApprox;
    let unknown = cfg(CsiMode::Unknown, ne(1.0), 2, 2);
    for (i, c) in [known, unknown].into_iter().enumerate() {
        let at = c.with_avg_snr_db(20.0);
        let p = pout_closed_form(&at, at.gamma_th, &ctl).unwrap();
        let e = simulate_pout(&c, 20.0, TRIALS, 30 + i as u64).unwrap();
        assert!(
            (p.value - e.mean).abs() < 3.0 * e.stderr,
            "{c:?}: {p:?} vs {e:?}"
        );
    }
}

#[test]
fn error_rate_quadrature_matches_simulation() {
    let (q, s) = (QuadratureControl::default(), SeriesControl::default());
    let mut known = cfg(CsiMode::Known, moderate(), 2, 2);
    known.known_csi_combiner = KnownCsiCombiner::MinApprox;
    let unknown = cfg(CsiMode::Unknown, moderate(), 2, 2);
    for (i, c) in [known, unknown].into_iter().enumerate() {
        let b = ber_quadrature(&c.with_avg_snr_db(20.0), &q, &s).unwrap();
        let e = simulate_ber(&c, 20.0, TRIALS, 40 + i as u64).unwrap();
        assert!((b - e.mean).abs() < 3.0 * e.stderr, "{c:?}: {b} vs {e:?}");
    }
}
