//! Point-by-point agreement between two curves and dB gaps at target
//! probabilities.

use std::fmt;

use fsorelay::analytic::{Method, PerfCurve, PerfPoint};

use crate::error::{CliError, Result};

/// Grid points closer than this (dB) are the same point.
const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    /// Allowed distance in standard errors when either side is Monte Carlo.
    pub sigmas: f64,
    /// Allowed relative difference between two deterministic methods.
    pub rel_tol: f64,
    /// Points whose reference value is below this are not assessed.
    pub floor: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            sigmas: 3.0,
            rel_tol: 1e-3,
            floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    BelowFloor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointVerdict {
    pub avg_snr_db: f64,
    pub a: f64,
    pub b: f64,
    /// Absolute tolerance the difference was held to.
    pub tolerance: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub target: f64,
    pub at_a: Option<f64>,
    pub at_b: Option<f64>,
}

impl Gap {
    /// `x_b − x_a` in dB.
    pub fn db(&self) -> Option<f64> {
        Some(self.at_b? - self.at_a?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub label_a: String,
    pub label_b: String,
    pub points: Vec<PointVerdict>,
    pub gaps: Vec<Gap>,
}

impl Report {
    pub fn count(&self, v: Verdict) -> usize {
        self.points.iter().filter(|p| p.verdict == v).count()
    }

    pub fn passed(&self) -> bool {
        self.count(Verdict::Fail) == 0
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "a = {}", self.label_a)?;
        writeln!(f, "b = {}", self.label_b)?;
        writeln!(
            f,
            "{:>9} {:>13} {:>13} {:>11}  verdict",
            "gamma_dB", "a", "b", "tol"
        )?;
        for p in &self.points {
            let v = match p.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::BelowFloor => "below floor",
            };
            writeln!(
                f,
                "{:>9} {:>13.5e} {:>13.5e} {:>11.3e}  {v}",
                p.avg_snr_db, p.a, p.b, p.tolerance
            )?;
        }
        writeln!(
            f,
            "{} pass, {} fail, {} below floor",
            self.count(Verdict::Pass),
            self.count(Verdict::Fail),
            self.count(Verdict::BelowFloor)
        )?;
        for g in &self.gaps {
            let show =
                |x: Option<f64>| x.map_or_else(|| "not reached".into(), |v| format!("{v:.3} dB"));
            writeln!(
                f,
                "target {:e}: a at {}, b at {}, gap {}",
                g.target,
                show(g.at_a),
                show(g.at_b),
                g.db()
                    .map_or_else(|| "n/a".into(), |d| format!("{d:.3} dB"))
            )?;
        }
        Ok(())
    }
}

fn sorted(c: &PerfCurve) -> Vec<PerfPoint> {
    let mut p = c.points.clone();
    p.sort_by(|a, b| a.avg_snr_db.total_cmp(&b.avg_snr_db));
    p
}

/// Average SNR (dB) where the curve first crosses `target`, interpolating
/// linearly in `log(value)` between the bracketing grid points.
pub fn crossing(curve: &PerfCurve, target: f64) -> Option<f64> {
    let p = sorted(curve);
    if let Some(hit) = p.iter().find(|q| q.value == target) {
        return Some(hit.avg_snr_db);
    }
    p.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        let brackets = (a.value - target) * (b.value - target) < 0.0;
        if !brackets || a.value <= 0.0 || b.value <= 0.0 {
            return None;
        }
        let t = (target.ln() - a.value.ln()) / (b.value.ln() - a.value.ln());
        Some(a.avg_snr_db + t * (b.avg_snr_db - a.avg_snr_db))
    })
}

/// Gaps between the crossings of two curves, one per target.
pub fn db_gaps(a: &PerfCurve, b: &PerfCurve, targets: &[f64]) -> Vec<Gap> {
    targets
        .iter()
        .map(|&t| Gap {
            target: t,
            at_a: crossing(a, t),
            at_b: crossing(b, t),
        })
        .collect()
}

/// Compares two curves on a shared grid.
pub fn compare_report(
    a: &PerfCurve,
    b: &PerfCurve,
    policy: &TolerancePolicy,
    targets: &[f64],
) -> Result<Report> {
    if a.metric != b.metric {
        return Err(CliError::Usage(format!(
            "curves have different metrics ({} and {})",
            a.metric, b.metric
        )));
    }
    let (pa, pb) = (sorted(a), sorted(b));
    let same_grid = pa.len() == pb.len()
        && pa
            .iter()
            .zip(&pb)
            .all(|(x, y)| (x.avg_snr_db - y.avg_snr_db).abs() <= GRID_TOL);
    if !same_grid {
        return Err(CliError::Usage(format!(
            "curves `{}` and `{}` are on different gamma_avg grids",
            a.label, b.label
        )));
    }
    let points = pa
        .iter()
        .zip(&pb)
        .map(|(x, y)| verdict(x, y, policy))
        .collect();
    Ok(Report {
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        points,
        gaps: db_gaps(a, b, targets),
    })
}

fn verdict(x: &PerfPoint, y: &PerfPoint, policy: &TolerancePolicy) -> PointVerdict {
    let mc = |p: &PerfPoint| p.method == Method::MonteCarlo;
    // the deterministic side is the reference when there is one
    let reference = match (mc(x), mc(y)) {
        (false, true) => x.value,
        (true, false) => y.value,
        _ => x.value.max(y.value),
    };
    let tolerance = match (x.stderr, y.stderr) {
        (None, None) => policy.rel_tol * x.value.abs().max(y.value.abs()),
        (sa, sb) => {
            let (sa, sb) = (sa.unwrap_or(0.0), sb.unwrap_or(0.0));
            policy.sigmas * sa.hypot(sb)
        }
    };
    let verdict = if reference < policy.floor {
        Verdict::BelowFloor
    } else if (x.value - y.value).abs() <= tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    PointVerdict {
        avg_snr_db: x.avg_snr_db,
        a: x.value,
        b: y.value,
        tolerance,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fsorelay::analytic::Metric;
    use proptest::prelude::*;

    fn curve(method: Method, pts: &[(f64, f64)], se: Option<f64>) -> PerfCurve {
        let points = pts
            .iter()
            .map(|&(x, v)| PerfPoint::new(x, Metric::Pout, method, v, se).unwrap())
            .collect();
        PerfCurve::new("c", points).unwrap()
    }

    fn decay(shift: f64) -> Vec<(f64, f64)> {
        (0..=20)
            .map(|i| {
                let x = 2.0 * i as f64;
                (x, 10f64.powf(-(x - shift) / 10.0).min(1.0))
            })
            .collect()
    }

    #[test]
    fn identical_curves_pass_everywhere() {
        let c = curve(Method::ClosedForm, &decay(0.0), None);
        let policy = TolerancePolicy {
            floor: 0.0,
            ..Default::default()
        };
        let r = compare_report(&c, &c, &policy, &[]).unwrap();
        assert!(r.passed());
        assert_eq!(r.count(Verdict::Pass), 21);
    }

    #[test]
    fn log_linear_gap_is_exact_for_power_laws() {
        let a = curve(Method::ClosedForm, &decay(0.0), None);
        let b = curve(Method::ClosedForm, &decay(3.3), None);
        let r = compare_report(&a, &b, &TolerancePolicy::default(), &[1e-2, 1e-3]).unwrap();
        for g in &r.gaps {
            assert!((g.db().unwrap() - 3.3).abs() < 1e-9, "{g:?}");
        }
        assert!(!r.passed());
    }

    #[test]
    fn three_sigma_rule() {
        let a = curve(Method::ClosedForm, &[(0.0, 0.5), (1.0, 0.1)], None);
        let b = curve(
            Method::MonteCarlo,
            &[(0.0, 0.502), (1.0, 0.1004)],
            Some(1e-3),
        );
        let r = compare_report(&a, &b, &TolerancePolicy::default(), &[]).unwrap();
        assert!(r.passed());
        let b = curve(Method::MonteCarlo, &[(0.0, 0.504), (1.0, 0.1)], Some(1e-3));
        let r = compare_report(&a, &b, &TolerancePolicy::default(), &[]).unwrap();
        assert_eq!(r.count(Verdict::Fail), 1);
    }

    #[test]
    fn points_below_floor_are_not_assessed() {
        let a = curve(Method::ClosedForm, &[(0.0, 1e-5)], None);
        let b = curve(Method::MonteCarlo, &[(0.0, 0.0)], Some(0.0));
        let r = compare_report(&a, &b, &TolerancePolicy::default(), &[]).unwrap();
        assert_eq!(r.count(Verdict::BelowFloor), 1);
        assert!(r.passed());
    }

    #[test]
    fn mismatched_grids_are_a_usage_error() {
        let a = curve(Method::ClosedForm, &[(0.0, 0.5), (1.0, 0.1)], None);
        let b = curve(Method::ClosedForm, &[(0.0, 0.5), (2.0, 0.1)], None);
        assert!(matches!(
            compare_report(&a, &b, &TolerancePolicy::default(), &[]),
            Err(CliError::Usage(_))
        ));
        let c = curve(Method::ClosedForm, &[(0.0, 0.5)], None);
        assert!(matches!(
            compare_report(&a, &c, &TolerancePolicy::default(), &[]),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn unreached_target_has_no_gap() {
        let a = curve(Method::ClosedForm, &decay(0.0), None);
        let g = db_gaps(&a, &a, &[1e-9]);
        assert_eq!(g[0].db(), None);
    }

    proptest! {
        #[test]
        fn gaps_ignore_point_order(perm in Just((0..21usize).collect::<Vec<_>>()).prop_shuffle(),
                                   shift in 0.0f64..8.0, target in 1e-3f64..0.5) {
            let a = curve(Method::ClosedForm, &decay(0.0), None);
            let b = curve(Method::ClosedForm, &decay(shift), None);
            let mut shuffled = b.clone();
            shuffled.points = perm.iter().map(|&i| b.points[i]).collect();
            let g1 = db_gaps(&a, &b, &[target]);
            let g2 = db_gaps(&a, &shuffled, &[target]);
            prop_assert_eq!(g1, g2);
        }
    }
}
