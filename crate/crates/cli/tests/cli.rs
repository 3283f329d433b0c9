use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fsorelay(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fsorelay"));
    cmd.args(args).env_remove("FSORELAY_OUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("FSORELAY_OUT_DIR", d);
    }
    cmd.output().unwrap()
}

const CONFIG: &str = r#"
schema_version = 1
label = "small"
metrics = ["pout", "ber"]
methods = ["closed_form", "quadrature", "monte_carlo"]
trials = 20000
seed = 5
output_path = "small.csv"

[sweep]
start_db = 0
stop_db = 20
step_db = 10

[system]
n_users = 2
n_relays = 2
csi_mode = "known"
gamma_th_db = 10

[system.fso_turbulence]
model = "neg_exp"
lambda = 1.0
"#;

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let out = fsorelay(&["run", cfg.to_str().unwrap()], Some(dir.path()));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("small.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("gamma_avg_db,metric,method,value,stderr,status")
    );
    // 3 points × (pout: closed_form, monte_carlo; ber: closed_form, quadrature, monte_carlo)
    assert_eq!(lines.clone().count(), 15);
    assert!(lines.all(|l| l.ends_with(",ok")));
    assert!(!csv.contains("pout,quadrature"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("small.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["library_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["spec"]["system"]["n_users"], 2);

    let again = tempfile::tempdir().unwrap();
    fsorelay(&["run", cfg.to_str().unwrap()], Some(again.path()));
    assert_eq!(
        csv,
        fs::read_to_string(again.path().join("small.csv")).unwrap()
    );
}

#[test]
fn invalid_config_fails_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, CONFIG.replace("trials = 20000", "trials = 0")).unwrap();
    let out = fsorelay(&["run", cfg.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:6:"), "{err}");
    assert!(!dir.path().join("small.csv").exists());
}

#[test]
fn compare_reports_agreement_and_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let out = fsorelay(
        &[
            "preset",
            "fig6",
            "--trials",
            "2000",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let f = |s: &str| {
        dir.path()
            .join("fig6")
            .join(s)
            .to_str()
            .unwrap()
            .to_string()
    };
    let (m1, m2) = (f("unknown_m1.csv"), f("unknown_m2.csv"));

    let same = fsorelay(
        &[
            "compare",
            &m1,
            &m1,
            "--method-a",
            "closed_form",
            "--method-b",
            "closed_form",
        ],
        None,
    );
    assert!(same.status.success());
    assert!(String::from_utf8_lossy(&same.stdout).contains(" 0 fail"));

    let gaps = fsorelay(
        &[
            "compare",
            &m1,
            &m2,
            "--method-a",
            "closed_form",
            "--method-b",
            "closed_form",
            "--target-pout",
            "1e-2",
            "--gaps-only",
        ],
        None,
    );
    assert!(gaps.status.success());
    assert!(String::from_utf8_lossy(&gaps.stdout).contains("target 1e-2"));

    let ambiguous = fsorelay(&["compare", &m1, &m2], None);
    assert_eq!(ambiguous.status.code(), Some(2));
}

#[test]
fn compare_rejects_mismatched_grids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.toml");
    fs::write(&cfg, CONFIG).unwrap();
    fsorelay(&["run", cfg.to_str().unwrap()], Some(dir.path()));
    fs::write(
        &cfg,
        CONFIG
            .replace("step_db = 10", "step_db = 5")
            .replace("small.csv", "fine.csv"),
    )
    .unwrap();
    fsorelay(&["run", cfg.to_str().unwrap()], Some(dir.path()));
    let a = dir.path().join("small.csv");
    let b = dir.path().join("fine.csv");
    let out = fsorelay(
        &[
            "compare",
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--metric",
            "pout",
            "--method-a",
            "closed_form",
            "--method-b",
            "closed_form",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("different gamma_avg grids"));
}

#[test]
fn example_config_is_valid() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/unknown_csi_gg.toml");
    fsorelay_cli::ExperimentSpec::load(&path).unwrap();
}
