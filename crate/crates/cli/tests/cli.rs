use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use backflow_cli::RunReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_backflow"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(out: &Output) -> RunReport {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    RunReport::from_json(&String::from_utf8(out.stdout.clone()).unwrap()).unwrap()
}

#[test]
fn pauli_fixture_is_certified_non_causal() {
    let r = report(&run(&["run", fixture("pauli.json").to_str().unwrap()]));
    let rec = &r.records[0];
    assert_eq!(
        format!("{:?}", rec.classification.verdict),
        "NonCausalCertified"
    );
    let q = rec.entropies.reference_system_qmi;
    assert!(
        (q[0] - 2.0).abs() < 1e-9 && q[1].abs() < 1e-9 && (q[2] - 2.0).abs() < 1e-9,
        "{q:?}"
    );
    assert!(rec.recovery.as_ref().unwrap().bound_satisfied);
    assert_eq!(r.summary.non_causal_certified, 1);
}

#[test]
fn half_bit_swap_is_genuine_with_half_bit_margin() {
    let r = report(&run(&[
        "run",
        fixture("swap_halfbit.json").to_str().unwrap(),
    ]));
    let c = &r.records[0].classification;
    assert_eq!(r.summary.genuine_backflow_witnessed, 1);
    assert_eq!(r.summary.genuine_operational, 1);
    let w = c.evidence.witness.as_ref().unwrap();
    assert!((w.margin - 0.5).abs() < 1e-6, "{}", w.margin);
}

#[test]
fn report_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let status = run(&[
        "run",
        fixture("mixture.json").to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let parsed = RunReport::from_json(&text).unwrap();
    assert_eq!(parsed.to_json().unwrap().trim_end(), text.trim_end());
    assert_eq!(
        RunReport::from_json(&parsed.to_json().unwrap()).unwrap(),
        parsed
    );
    assert!(parsed.records[0].extended_dpi.unwrap().value >= -1e-9);
}

#[test]
fn empty_sweep_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "empty.json",
        r#"{"sweep": {"samples": 0, "generator": {"haar": {"d_system": 2, "d_env": 2, "env_rank": 2}}}}"#,
    );
    let csv = dir.path().join("out.csv");
    let out = run(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let r = report(&out);
    assert!(r.records.is_empty());
    assert_eq!(std::fs::read_to_string(csv).unwrap(), "");
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"scenario": {"swap": {"environment": {"entropy_bits": "half"}}}}"#,
    );
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("scenario.swap.environment.entropy_bits"),
        "{err}"
    );

    let cfg = write(
        dir.path(),
        "tol.json",
        r#"{"scenario": {"pauli-control": {}}, "classify": {"certify_tol": -1}}"#,
    );
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("classify.certify_tol"));

    let out = run(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"sweep": {"seed_start": 5, "samples": 6, "generator": {"haar": {"d_system": 2, "d_env": 2, "env_rank": 2}}},
            "recovery": {"enabled": false}}"#,
    );
    let mut csvs = Vec::new();
    for (k, workers) in ["1", "2"].iter().enumerate() {
        let csv = dir.path().join(format!("run{k}.csv"));
        let out = bin()
            .env("BACKFLOW_WORKERS", workers)
            .args([
                "sweep",
                cfg.to_str().unwrap(),
                "--csv",
                csv.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        let r = report(&out);
        assert_eq!(
            r.records
                .iter()
                .map(|x| x.seed.unwrap())
                .collect::<Vec<_>>(),
            (5..11).collect::<Vec<_>>()
        );
        csvs.push(std::fs::read(csv).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs[0].clone()).unwrap();
    assert!(text.starts_with("seed,revival_magnitude,verdict,witness_margin\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn pure_environment_sweep_carries_model_relative_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "pure.json",
        r#"{"sweep": {"samples": 100, "generator": {"haar": {"d_system": 2, "d_env": 2, "env_rank": 1}}},
            "recovery": {"enabled": false}}"#,
    );
    let r = report(&run(&["sweep", cfg.to_str().unwrap()]));
    for rec in &r.records {
        let pe = rec
            .classification
            .evidence
            .pure_environment
            .as_ref()
            .unwrap();
        assert_eq!(pe.environment_rank, 1);
        assert_eq!(pe.fired, rec.revival.revived);
        if rec.revival.revived {
            assert!(rec.classification.genuine_basis.is_some());
        }
    }
    assert_eq!(
        r.summary.genuine_backflow_witnessed,
        r.summary.genuine_operational + r.summary.genuine_model_relative
    );
}

#[test]
fn markovian_mixture_sweep_is_never_genuine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mix.json",
        r#"{"sweep": {"samples": 100, "generator": {"markovian-mixture": {"d_system": 2, "d_env": 2, "env_rank": 2}}},
            "recovery": {"enabled": false}}"#,
    );
    let r = report(&run(&["sweep", cfg.to_str().unwrap()]));
    assert_eq!(r.records.len(), 100);
    assert_eq!(r.summary.genuine_backflow_witnessed, 0);
    for rec in &r.records {
        assert!(rec.extended_dpi.unwrap().value >= -1e-9);
    }
}

#[test]
fn list_scenarios_names_every_builtin() {
    let out = run(&["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["pauli-control", "swap", "convex-mixture", "haar", "inline"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest", "--seed", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 1);
    assert!(v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["passed"] == true));
}

#[test]
fn every_fixture_runs() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(&fixtures).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let command = if text.contains("\"sweep\"") {
            "sweep"
        } else {
            "run"
        };
        let out = bin()
            .current_dir(dir.path())
            .arg(command)
            .arg(&path)
            .output()
            .unwrap();
        let r = report(&out);
        assert!(!r.records.is_empty(), "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 4);
}
