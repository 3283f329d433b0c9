//! Experiment description: the TOML schema, its validation, and the sweep
//! grid it expands to.

use std::path::{Path, PathBuf};

use fsorelay::analytic::{Method, Metric};
use fsorelay::channels::{GammaGammaPe, NegExp, TurbulenceParams};
use fsorelay::system::{db_to_linear, CsiMode, KnownCsiCombiner, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub type Pair = (Metric, Method);

/// Upper bound on grid points, guarding against typos like `step_db = 1e-9`.
const MAX_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl Sweep {
    /// Grid points `start + i·step` up to `stop`, rounded to 1e-9 dB so that
    /// decimal steps print cleanly.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| ((self.start_db + i as f64 * self.step_db) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum TurbulenceSpec {
    GammaGammaPe {
        alpha: f64,
        beta: f64,
        xi: f64,
        /// Defaults to `ξ²/(ξ²+1)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
    },
    NegExp {
        lambda: f64,
    },
}

impl TurbulenceSpec {
    pub fn params(&self) -> fsorelay::Result<TurbulenceParams> {
        Ok(match *self {
            Self::GammaGammaPe {
                alpha,
                beta,
                xi,
                kappa: None,
            } => TurbulenceParams::GammaGammaPe(GammaGammaPe::new(alpha, beta, xi)?),
            Self::GammaGammaPe {
                alpha,
                beta,
                xi,
                kappa: Some(k),
            } => TurbulenceParams::GammaGammaPe(GammaGammaPe::with_kappa(alpha, beta, xi, k)?),
            Self::NegExp { lambda } => TurbulenceParams::NegExp(NegExp::new(lambda)?),
        })
    }

    pub fn moderate() -> Self {
        Self::GammaGammaPe {
            alpha: 4.0,
            beta: 1.9,
            xi: 10.45,
            kappa: None,
        }
    }

    pub fn strong() -> Self {
        Self::GammaGammaPe {
            alpha: 4.2,
            beta: 1.4,
            xi: 2.45,
            kappa: None,
        }
    }
}

/// Link parameters without the mean SNRs, which the sweep supplies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n_users: u32,
    pub n_relays: u32,
    pub csi_mode: CsiMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_c: Option<f64>,
    #[serde(default = "unit")]
    pub eta: f64,
    /// Outage threshold, linear. Exactly one of `gamma_th` and
    /// `gamma_th_db` must be given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_th: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_th_db: Option<f64>,
    #[serde(default)]
    pub known_csi_combiner: KnownCsiCombiner,
    pub fso_turbulence: TurbulenceSpec,
}

fn unit() -> f64 {
    1.0
}

impl SystemSpec {
    /// Config with both mean SNRs at 0 dB.
    pub fn to_config(&self) -> fsorelay::Result<SystemConfig> {
        let gamma_th = match (self.gamma_th, self.gamma_th_db) {
            (Some(g), None) => g,
            (None, Some(db)) => db_to_linear(db),
            _ => {
                return Err(fsorelay::Error::InvalidConfig(
                    "give exactly one of gamma_th and gamma_th_db".into(),
                ))
            }
        };
        let cfg = SystemConfig {
            n_users: self.n_users,
            n_relays: self.n_relays,
            mean_snr_fso: 1.0,
            mean_snr_rf: 1.0,
            csi_mode: self.csi_mode,
            gain_c: self.gain_c,
            eta: self.eta,
            gamma_th,
            fso_turbulence: self.fso_turbulence.params()?,
            known_csi_combiner: self.known_csi_combiner,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub label: String,
    pub metrics: Vec<Metric>,
    pub methods: Vec<Method>,
    /// Monte Carlo trials per grid point.
    #[serde(default)]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    pub output_path: PathBuf,
    pub sweep: Sweep,
    pub system: SystemSpec,
}

/// A violated invariant and the config key it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub key: &'static str,
    pub message: String,
}

impl ExperimentSpec {
    pub fn validate(&self) -> std::result::Result<(), Invalid> {
        let bad = |key, message: String| Err(Invalid { key, message });
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!(
                    "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            );
        }
        let Sweep {
            start_db,
            stop_db,
            step_db,
        } = self.sweep;
        if !(start_db.is_finite() && stop_db.is_finite()) {
            return bad("start_db", "sweep bounds must be finite".into());
        }
        if start_db >= stop_db {
            return bad(
                "start_db",
                format!("start_db ({start_db}) must be below stop_db ({stop_db})"),
            );
        }
        if !(step_db > 0.0 && step_db.is_finite()) {
            return bad(
                "step_db",
                format!("step_db must be positive, got {step_db}"),
            );
        }
        if (stop_db - start_db) / step_db > MAX_POINTS as f64 {
            return bad(
                "step_db",
                format!("sweep has more than {MAX_POINTS} points"),
            );
        }
        if self.metrics.is_empty() {
            return bad("metrics", "at least one metric is required".into());
        }
        if self.methods.is_empty() {
            return bad("methods", "at least one method is required".into());
        }
        if has_duplicates(&self.metrics) {
            return bad("metrics", "metrics are listed more than once".into());
        }
        if has_duplicates(&self.methods) {
            return bad("methods", "methods are listed more than once".into());
        }
        if self.methods.contains(&Method::MonteCarlo) && self.trials < 1 {
            return bad("trials", "monte_carlo requires trials >= 1".into());
        }
        let s = &self.system;
        if s.n_users < 1 {
            return bad("n_users", "n_users must be at least 1".into());
        }
        if s.n_relays < 1 {
            return bad("n_relays", "n_relays must be at least 1".into());
        }
        match (s.gamma_th, s.gamma_th_db) {
            (Some(_), Some(_)) => {
                return bad(
                    "gamma_th_db",
                    "give only one of gamma_th and gamma_th_db".into(),
                )
            }
            (None, None) => return bad("system", "gamma_th or gamma_th_db is required".into()),
            _ => {}
        }
        let fields: &[(&'static str, Option<f64>)] = match s.fso_turbulence {
            TurbulenceSpec::GammaGammaPe {
                alpha,
                beta,
                xi,
                kappa,
            } => &[
                ("alpha", Some(alpha)),
                ("beta", Some(beta)),
                ("xi", Some(xi)),
                ("kappa", kappa),
            ],
            TurbulenceSpec::NegExp { lambda } => &[("lambda", Some(lambda))],
        };
        for &(key, v) in fields {
            if let Some(v) = v.filter(|v| !(*v > 0.0 && v.is_finite())) {
                return bad(key, format!("{key} must be positive and finite, got {v}"));
            }
        }
        if let Err(e) = s.fso_turbulence.params() {
            let key = if e.to_string().contains("alpha >= beta") {
                "alpha"
            } else {
                "fso_turbulence"
            };
            return bad(key, e.to_string());
        }
        if let Err(e) = s.to_config() {
            let msg = e.to_string();
            let key = ["gain_c", "eta", "gamma_th"]
                .into_iter()
                .find(|k| msg.contains(k))
                .unwrap_or("system");
            return bad(key, e.to_string());
        }
        Ok(())
    }

    /// Every requested `(metric, method)` pair, split into those defined for
    /// this system and those that are not.
    pub fn pairs(&self) -> (Vec<Pair>, Vec<Pair>) {
        let cfg = self.system.to_config().ok();
        self.metrics
            .iter()
            .flat_map(|&m| self.methods.iter().map(move |&k| (m, k)))
            .partition(|&(m, k)| cfg.as_ref().is_some_and(|c| applicable(m, k, c)))
    }

    /// Parses and validates a config, reporting failures against source
    /// lines of `path`.
    pub fn from_toml(src: &str, path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let spec: Self = toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(src, s.start));
            CliError::Parse {
                path: name.clone(),
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })?;
        spec.validate().map_err(|inv| CliError::Validation {
            path: name,
            line: locate_key(src, inv.key),
            message: inv.message,
        })?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&src, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }
}

/// Whether `method` produces `metric` for this system at all.
pub fn applicable(metric: Metric, method: Method, cfg: &SystemConfig) -> bool {
    let gg = matches!(cfg.fso_turbulence, TurbulenceParams::GammaGammaPe(_));
    match (metric, method) {
        (_, Method::MonteCarlo) => true,
        (Metric::Pout, Method::ClosedForm) => true,
        (Metric::Pout, _) => false,
        (Metric::Ber, Method::Quadrature) => true,
        (Metric::Ber, Method::SeriesExact | Method::Asymptotic) => gg,
        (Metric::Ber, Method::ClosedForm) => !gg && cfg.csi_mode == CsiMode::Known,
    }
}

fn has_duplicates<T: PartialEq>(v: &[T]) -> bool {
    v.iter().enumerate().any(|(i, x)| v[..i].contains(x))
}

/// 1-based line and column of a byte offset.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// 1-based line where `key` is assigned or opened as a table.
fn locate_key(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            let l = l.trim_start();
            let assigned = l
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='));
            let table = l
                .trim_start_matches('[')
                .trim_end()
                .trim_end_matches(']')
                .rsplit('.')
                .next()
                == Some(key)
                && l.starts_with('[');
            assigned || table
        })
        .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
schema_version = 1
label = "demo"
metrics = ["pout", "ber"]
methods = ["closed_form", "monte_carlo"]
trials = 1000
seed = 7
output_path = "demo.csv"

[sweep]
start_db = 0
stop_db = 10
step_db = 2.5

[system]
n_users = 2
n_relays = 2
csi_mode = "unknown"
gain_c = 1.0
gamma_th_db = 10.0

[system.fso_turbulence]
model = "gamma_gamma_pe"
alpha = 4.0
beta = 1.9
xi = 10.45
"#;

    fn parse(src: &str) -> Result<ExperimentSpec> {
        ExperimentSpec::from_toml(src, Path::new("t.toml"))
    }

    #[test]
    fn parses_documented_schema() {
        let s = parse(GOOD).unwrap();
        assert_eq!(s.sweep.points(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        let c = s.system.to_config().unwrap();
        assert!((c.gamma_th - 10.0).abs() < 1e-12);
        assert_eq!(
            c.fso_turbulence,
            TurbulenceParams::GammaGammaPe(GammaGammaPe::moderate())
        );
        assert_eq!(c.known_csi_combiner, KnownCsiCombiner::Exact);
        assert_eq!(c.eta, 1.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let s = parse(GOOD).unwrap();
        assert_eq!(parse(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn monte_carlo_with_zero_trials_is_rejected_at_its_line() {
        let src = GOOD.replace("trials = 1000", "trials = 0");
        match parse(&src) {
            Err(CliError::Validation { line, message, .. }) => {
                assert_eq!(line, Some(6));
                assert!(message.contains("trials"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_invariants() {
        for (from, to, key_line) in [
            ("stop_db = 10", "stop_db = -1", 11),
            ("step_db = 2.5", "step_db = 0", 13),
            ("step_db = 2.5", "step_db = -1", 13),
        ] {
            match parse(&GOOD.replace(from, to)) {
                Err(CliError::Validation { line, .. }) => {
                    assert!(line == Some(key_line) || line == Some(11), "{to}: {line:?}")
                }
                other => panic!("{to}: {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let src = GOOD.replace("n_relays = 2", "n_relays = ");
        match parse(&src) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 17),
            other => panic!("{other:?}"),
        }
        let src = GOOD.replace("n_relays = 2", "n_relays = \"two\"");
        match parse(&src) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 17),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_methods_are_rejected() {
        assert!(matches!(
            parse(&GOOD.replace("seed = 7", "seed = 7\nsead = 8")),
            Err(CliError::Parse { .. })
        ));
        assert!(matches!(
            parse(&GOOD.replace("\"closed_form\",", "\"closed\",")),
            Err(CliError::Parse { line: 5, .. })
        ));
    }

    #[test]
    fn semantic_system_errors_point_at_key() {
        let src = GOOD.replace("gain_c = 1.0", "gain_c = -1.0");
        match parse(&src) {
            Err(CliError::Validation { line, .. }) => assert_eq!(line, Some(19)),
            other => panic!("{other:?}"),
        }
        let src = GOOD.replace("gamma_th_db = 10.0", "gamma_th_db = 10.0\ngamma_th = 10.0");
        assert!(matches!(parse(&src), Err(CliError::Validation { .. })));
        for (from, to, at) in [
            ("alpha = 4.0", "alpha = 1.0", 24),
            ("xi = 10.45", "xi = 0", 26),
        ] {
            match parse(&GOOD.replace(from, to)) {
                Err(CliError::Validation { line, .. }) => assert_eq!(line, Some(at)),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn applicability() {
        let s = parse(GOOD).unwrap();
        let (run, skip) = s.pairs();
        assert_eq!(
            run,
            vec![
                (Metric::Pout, Method::ClosedForm),
                (Metric::Pout, Method::MonteCarlo),
                (Metric::Ber, Method::MonteCarlo)
            ]
        );
        assert_eq!(skip, vec![(Metric::Ber, Method::ClosedForm)]);
    }

    #[test]
    fn decimal_steps_land_on_clean_points() {
        let s = Sweep {
            start_db: 0.0,
            stop_db: 1.0,
            step_db: 0.1,
        };
        let p = s.points();
        assert_eq!(p.len(), 11);
        assert_eq!(p[3], 0.3);
        assert_eq!(p[10], 1.0);
    }
}
