//! Adaptive Gauss-Kronrod (7/15) quadrature with global bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances for adaptive quadrature. Integration stops once the estimated
/// absolute error drops below `max(abs_tol, rel_tol * |I|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-9,
            max_subdivisions: 400,
        }
    }
}

impl QuadratureControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_subdivisions == 0 {
            return Err(Error::InvalidConfig(format!(
                "quadrature control needs positive tolerances and max_subdivisions >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    /// Integral of `|f|`, useful for judging cancellation.
    pub abs_value: f64,
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for i in 0..7 {
        let dx = h * XGK[i];
        let (f1, f2) = (f(c - dx), f(c + dx));
        kron += WGK[i] * (f1 + f2);
        abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let value = kron * h;
    if !value.is_finite() {
        return Err(Error::Domain(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }
    Ok(Segment {
        a,
        b,
        value,
        error: ((kron - gauss) * h).abs(),
        abs_value: abs * h.abs(),
    })
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    ctl: &QuadratureControl,
) -> Result<Integral> {
    ctl.validate()?;
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            abs_value: 0.0,
            subdivisions: 0,
        });
    }
    let mut segs = vec![gk15(&mut f, a, b)?];
    loop {
        let value: f64 = segs.iter().map(|s| s.value).sum();
        let error: f64 = segs.iter().map(|s| s.error).sum();
        let abs_value: f64 = segs.iter().map(|s| s.abs_value).sum();
        if error <= ctl.abs_tol.max(ctl.rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                error,
                abs_value,
                subdivisions: segs.len(),
            });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        // Rounding has made further bisection meaningless.
        if segs.len() + 1 >= ctl.max_subdivisions || mid <= s.a.min(s.b) || mid >= s.a.max(s.b) {
            segs.push(s);
            if error <= 50.0 * f64::EPSILON * abs_value {
                return Ok(Integral {
                    value,
                    error,
                    abs_value,
                    subdivisions: segs.len(),
                });
            }
            return Err(Error::Quadrature {
                estimate: value,
                error,
                subdivisions: segs.len(),
            });
        }
        segs.push(gk15(&mut f, s.a, mid)?);
        segs.push(gk15(&mut f, mid, s.b)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let ctl = QuadratureControl::default();
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &ctl).unwrap();
        assert!((r.value - (63.0 / 6.0 - 9.0)).abs() < 1e-13);
        assert_eq!(r.subdivisions, 1);
    }

    #[test]
    fn resolves_endpoint_singularity() {
        let ctl = QuadratureControl {
            rel_tol: 1e-10,
            ..Default::default()
        };
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &ctl).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn oscillatory_integrand() {
        let ctl = QuadratureControl::default();
        let r = integrate(|x| (20.0 * x).cos(), 0.0, 3.0, &ctl).unwrap();
        assert!((r.value - (60f64).sin() / 20.0).abs() < 1e-12);
        assert!(r.abs_value > r.value.abs());
    }

    #[test]
    fn reports_failure() {
        let ctl = QuadratureControl {
            max_subdivisions: 3,
            abs_tol: 1e-15,
            rel_tol: 1e-15,
        };
        let r = integrate(|x| (1.0 / x).sin(), 1e-3, 1.0, &ctl);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
