//! Built-in experiments for Figures 2–7: γ̄FSO = γ̄RF = γ_avg, η = 1, C = 1,
//! γth = 10 dB.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use fsorelay::analytic::{Method, Metric};
use fsorelay::system::{CsiMode, KnownCsiCombiner};

use crate::config::{ExperimentSpec, Sweep, SystemSpec, TurbulenceSpec, SCHEMA_VERSION};
use crate::error::CliError;

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Preset::Fig2 => "outage, GG moderate, N=2, M in {1,2,3}",
            Preset::Fig3 => "error rate, GG moderate, M=2, N in {1,2,4}",
            Preset::Fig4 => "error rate, GG moderate and strong, M=2, N=2",
            Preset::Fig5 => "outage, NE lambda=1, M=2, N in {1,2,4}",
            Preset::Fig6 => "outage, NE lambda=1, N=2, M in {1,2,3}",
            Preset::Fig7 => "error rate, NE lambda in {1,2,5}, M=2, N=2",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown preset `{s}`, expected fig2..fig7")))
    }
}

/// One curve family member: its file stem and system.
struct Curve {
    stem: String,
    system: SystemSpec,
}

fn system(csi: CsiMode, turb: TurbulenceSpec, n: u32, m: u32) -> SystemSpec {
    SystemSpec {
        n_users: n,
        n_relays: m,
        csi_mode: csi,
        gain_c: (csi == CsiMode::Unknown).then_some(1.0),
        eta: 1.0,
        gamma_th: None,
        gamma_th_db: Some(10.0),
        known_csi_combiner: KnownCsiCombiner::Exact,
        fso_turbulence: turb,
    }
}

fn csi_name(c: CsiMode) -> &'static str {
    match c {
        CsiMode::Known => "known",
        CsiMode::Unknown => "unknown",
    }
}

const CSI: [CsiMode; 2] = [CsiMode::Known, CsiMode::Unknown];

fn ne(lambda: f64) -> TurbulenceSpec {
    TurbulenceSpec::NegExp { lambda }
}

fn curves(p: Preset) -> Vec<Curve> {
    let mut out = Vec::new();
    for csi in CSI {
        let c = csi_name(csi);
        match p {
            Preset::Fig2 => {
                for m in 1..=3 {
                    out.push(Curve {
                        stem: format!("{c}_m{m}"),
                        system: system(csi, TurbulenceSpec::moderate(), 2, m),
                    });
                }
            }
            Preset::Fig3 => {
                for n in [1, 2, 4] {
                    out.push(Curve {
                        stem: format!("{c}_n{n}"),
                        system: system(csi, TurbulenceSpec::moderate(), n, 2),
                    });
                }
            }
            Preset::Fig4 => {
                for (name, t) in [
                    ("moderate", TurbulenceSpec::moderate()),
                    ("strong", TurbulenceSpec::strong()),
                ] {
                    out.push(Curve {
                        stem: format!("{c}_{name}"),
                        system: system(csi, t, 2, 2),
                    });
                }
            }
            Preset::Fig5 => {
                for n in [1, 2, 4] {
                    out.push(Curve {
                        stem: format!("{c}_n{n}"),
                        system: system(csi, ne(1.0), n, 2),
                    });
                }
            }
            Preset::Fig6 => {
                for m in 1..=3 {
                    out.push(Curve {
                        stem: format!("{c}_m{m}"),
                        system: system(csi, ne(1.0), 2, m),
                    });
                }
            }
            Preset::Fig7 => {
                for l in [1, 2, 5] {
                    out.push(Curve {
                        stem: format!("{c}_lambda{l}"),
                        system: system(csi, ne(l as f64), 2, 2),
                    });
                }
            }
        }
    }
    out
}

/// Experiment specs for every curve of a preset, writing
/// `<out_dir>/<preset>/<csi>_<variant>.csv`.
pub fn preset_specs(p: Preset, trials: u64, seed: u64, out_dir: &Path) -> Vec<ExperimentSpec> {
    let (metric, methods, sweep) = match p {
        Preset::Fig2 | Preset::Fig5 | Preset::Fig6 => (
            Metric::Pout,
            vec![Method::ClosedForm, Method::MonteCarlo],
            Sweep {
                start_db: 0.0,
                stop_db: 40.0,
                step_db: 1.0,
            },
        ),
        Preset::Fig3 | Preset::Fig4 => (
            Metric::Ber,
            vec![
                Method::Quadrature,
                Method::SeriesExact,
                Method::Asymptotic,
                Method::MonteCarlo,
            ],
            Sweep {
                start_db: 0.0,
                stop_db: 40.0,
                step_db: 2.0,
            },
        ),
        Preset::Fig7 => (
            Metric::Ber,
            vec![Method::ClosedForm, Method::Quadrature, Method::MonteCarlo],
            Sweep {
                start_db: 0.0,
                stop_db: 50.0,
                step_db: 1.0,
            },
        ),
    };
    curves(p)
        .into_iter()
        .map(|c| ExperimentSpec {
            schema_version: SCHEMA_VERSION,
            label: format!("{p}_{}", c.stem),
            metrics: vec![metric],
            methods: methods.clone(),
            trials,
            seed,
            output_path: out_dir.join(p.name()).join(format!("{}.csv", c.stem)),
            sweep,
            system: c.system,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for p in Preset::ALL {
            let specs = preset_specs(p, 10, 1, Path::new("out"));
            assert!(!specs.is_empty());
            for s in &specs {
                s.validate().unwrap();
                assert!(s.output_path.starts_with(Path::new("out").join(p.name())));
            }
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig8".parse::<Preset>().is_err());
    }

    #[test]
    fn fig2_binds_section_five_parameters() {
        let specs = preset_specs(Preset::Fig2, 10, 1, Path::new("o"));
        assert_eq!(specs.len(), 6);
        for s in &specs {
            let c = s.system.to_config().unwrap();
            assert_eq!(c.n_users, 2);
            assert!((c.gamma_th - 10.0).abs() < 1e-12);
            assert_eq!(c.eta, 1.0);
            if c.csi_mode == CsiMode::Unknown {
                assert_eq!(c.gain_c, Some(1.0));
            }
        }
    }
}
