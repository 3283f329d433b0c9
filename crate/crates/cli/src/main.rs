use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsorelay::analytic::{Method, Metric, PerfCurve};
use fsorelay_cli::run::{curves, read_csv};
use fsorelay_cli::{
    compare_report, preset_specs, run_experiment, CliError, ExperimentSpec, Preset, TolerancePolicy,
};

const OUT_ENV: &str = "FSORELAY_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "fsorelay",
    version,
    about = "Outage and DPSK error-rate sweeps for relay-assisted hybrid FSO/RF links"
)]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config. Relative output paths are
    /// resolved against $FSORELAY_OUT_DIR when it is set.
    Run { config: PathBuf },
    /// Run a built-in figure preset (fig2..fig7).
    Preset {
        name: Preset,
        #[arg(long, default_value_t = fsorelay_cli::presets::DEFAULT_TRIALS)]
        trials: u64,
        #[arg(long, default_value_t = fsorelay_cli::presets::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, env = OUT_ENV, default_value = "out")]
        out: PathBuf,
    },
    /// Compare two result CSVs point by point and report dB gaps.
    Compare {
        csv_a: PathBuf,
        csv_b: PathBuf,
        /// Probability at which to extract the dB gap (repeatable).
        #[arg(long = "target-pout")]
        targets: Vec<f64>,
        #[arg(long)]
        metric: Option<Metric>,
        /// Method to take from the first file when it holds several.
        #[arg(long)]
        method_a: Option<Method>,
        #[arg(long)]
        method_b: Option<Method>,
        #[arg(long, default_value_t = 3.0)]
        sigmas: f64,
        #[arg(long, default_value_t = 1e-3)]
        rel_tol: f64,
        /// Points below this reference value are not assessed.
        #[arg(long, default_value_t = 1e-4)]
        floor: f64,
        /// Exit successfully even when points disagree.
        #[arg(long)]
        gaps_only: bool,
    },
}

fn pick(
    path: &Path,
    metric: Option<Metric>,
    method: Option<Method>,
) -> Result<PerfCurve, CliError> {
    let rows = read_csv(path)?;
    let all = curves(&path.display().to_string(), &rows)?;
    let found: Vec<_> = all
        .into_iter()
        .filter(|c| metric.is_none_or(|m| c.metric == m) && method.is_none_or(|m| c.method == m))
        .collect();
    match <[PerfCurve; 1]>::try_from(found) {
        Ok([c]) => Ok(c),
        Err(found) if found.is_empty() => Err(CliError::Usage(format!(
            "{}: no curve matches the requested metric and method",
            path.display()
        ))),
        Err(found) => Err(CliError::Usage(format!(
            "{}: several curves match ({}); pass --metric/--method-a/--method-b",
            path.display(),
            found
                .iter()
                .map(|c| format!("{}/{}", c.metric, c.method))
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

fn run_specs(specs: &[ExperimentSpec]) -> Result<bool, CliError> {
    let mut clean = true;
    for spec in specs {
        let s = run_experiment(spec)?;
        print!("{}", s.table());
        println!("manifest: {}", s.manifest_path.display());
        clean &= s.errors() == 0;
    }
    Ok(clean)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Run { config } => ExperimentSpec::load(&config).and_then(|mut spec| {
            if let Some(dir) = std::env::var_os(OUT_ENV) {
                if spec.output_path.is_relative() {
                    spec.output_path = Path::new(&dir).join(&spec.output_path);
                }
            }
            run_specs(&[spec])
        }),
        Command::Preset {
            name,
            trials,
            seed,
            out,
        } => run_specs(&preset_specs(name, trials, seed, &out)),
        Command::Compare {
            csv_a,
            csv_b,
            targets,
            metric,
            method_a,
            method_b,
            sigmas,
            rel_tol,
            floor,
            gaps_only,
        } => (|| {
            let a = pick(&csv_a, metric, method_a)?;
            let b = pick(&csv_b, metric, method_b)?;
            let policy = TolerancePolicy {
                sigmas,
                rel_tol,
                floor,
            };
            let r = compare_report(&a, &b, &policy, &targets)?;
            print!("{r}");
            Ok(gaps_only || r.passed())
        })(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
