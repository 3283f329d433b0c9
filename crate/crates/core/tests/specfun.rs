use std::f64::consts::PI;

use fsorelay::specfun::{meijer_g, meijer_g_contour, meijer_g_slater, MeijerGSpec, SeriesControl};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

fn both(spec: &MeijerGSpec) -> (f64, f64) {
    let ctl = SeriesControl::default();
    (
        meijer_g_slater(spec, &ctl).unwrap(),
        meijer_g_contour(spec, &ctl).unwrap(),
    )
}

#[test]
fn identity_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let z: f64 = rng.gen_range(0.01..50.0);
        let e = MeijerGSpec::new(1, 0, vec![], vec![0.0], z).unwrap();
        let (s, c) = both(&e);
        let want = (-z).exp();
        assert!(rel(s, want) <= 1e-10, "slater e^-z at {z}: {s}");
        assert!(rel(c, want) <= 1e-10, "contour e^-z at {z}: {c}");

        let k = MeijerGSpec::new(2, 0, vec![], vec![0.0, 0.5], z).unwrap();
        let (s, c) = both(&k);
        let want = PI.sqrt() * (-2.0 * z.sqrt()).exp();
        assert!(rel(s, want) <= 1e-10, "slater sqrt identity at {z}: {s}");
        assert!(rel(c, want) <= 1e-10, "contour sqrt identity at {z}: {c}");
    }
}

#[test]
fn documented_values() {
    let ctl = SeriesControl::default();
    let g = MeijerGSpec::new(1, 0, vec![], vec![0.0], 1.0).unwrap();
    assert!(rel(meijer_g_slater(&g, &ctl).unwrap(), 0.367_879_441_171_442_3) < 1e-12);
    let g = MeijerGSpec::new(2, 0, vec![], vec![0.0, 0.5], 1.0).unwrap();
    assert!(rel(meijer_g_slater(&g, &ctl).unwrap(), 0.239_875_543_936_122_9) < 1e-12);
    let g = MeijerGSpec::new(1, 0, vec![], vec![0.0], 2.0).unwrap();
    assert!(rel(meijer_g_contour(&g, &ctl).unwrap(), 0.135_335_283_236_612_7) < 1e-10);
    let g = MeijerGSpec::new(2, 0, vec![], vec![0.0, 0.5], 4.0).unwrap();
    assert!(
        rel(
            meijer_g_contour(&g, &ctl).unwrap(),
            0.032_463_624_680_131_72
        ) < 1e-10
    );
}

#[test]
fn gamma_gamma_cdf_instance_agrees() {
    let xi2 = 10.45f64 * 10.45;
    let g = MeijerGSpec::new(3, 1, vec![1.0, xi2 + 1.0], vec![xi2, 4.0, 1.9, 0.0], 0.8).unwrap();
    let (s, c) = both(&g);
    assert!(rel(s, c) <= 1e-8, "{s} vs {c}");
}

#[test]
fn degenerate_triple_instance_agrees() {
    let g = MeijerGSpec::new(3, 0, vec![], vec![1.0, 0.0, 0.5], 1.0).unwrap();
    let (s, c) = both(&g);
    assert!(rel(s, c) <= 1e-8, "{s} vs {c}");
}

#[test]
fn dispatcher_falls_back_to_contour() {
    // p = q outside the unit disk: G^{1,1}_{1,1}(z | 0; 0) = 1/(1+z)
    let g = MeijerGSpec::new(1, 1, vec![0.0], vec![0.0], 3.0).unwrap();
    let v = meijer_g(&g, &SeriesControl::default()).unwrap();
    assert!(rel(v, 0.25) < 1e-9, "{v}");
}
