use std::fs;
use std::process::Command as Process;

use wickspde_cli::report::summary;
use wickspde_cli::{emit_report, parse_config, preflight, run_experiment, CliError, Command, RunOutput};

fn run_to_dir(doc: &str, workers: usize) -> (tempfile::TempDir, RunOutput) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(doc, None).unwrap();
    preflight(dir.path()).unwrap();
    let out = run_experiment(&cfg, workers).unwrap();
    emit_report(dir.path(), &cfg, &out, workers, 0.0).unwrap();
    (dir, out)
}

const SMALL: &[&str] = &[
    "command = \"isometry\"\n[wick]\nensemble = 200\n[subordinator]\nkind = \"poisson\"\nrate = 3.0\n",
    "command = \"covariance\"\n[wick]\nensemble = 150\norder = 2\n[field]\ncutoffs = [3]\ntimes = [0.4, 0.8]\n[subordinator]\nkind = \"deterministic\"\n",
    "command = \"wick-convergence\"\n[wick]\nensemble = 3\n[field]\ncutoffs = [2, 4]\ntime_cells = 4\n[norm]\nepsilon = 0.2\n",
    "command = \"renorm-divergence\"\n[field]\ncutoffs = [8, 16]\n",
    "command = \"jump-continuity\"\n[wick]\nensemble = 3\n[field]\ncutoffs = [4]\n[subordinator]\nkind = \"compound-poisson\"\nrate = 3.0\nlaw = { type = \"exponential\", mean = 0.5 }\n",
    "command = \"solve-heat\"\n[wick]\nensemble = 2\n[field]\ncutoffs = [2, 4]\nhorizon = 0.2\n[solver]\ndt = 0.01\ndata_cells = 5\nresidual = true\n",
    "command = \"solve-wave\"\n[wick]\nensemble = 2\norder = 3\n[field]\nkind = \"wave\"\ncutoffs = [2]\nhorizon = 0.2\n[solver]\ndt = 0.01\ndata_cells = 5\n",
    "command = \"stationary-check\"\n[wick]\nensemble = 20\n[field]\nkind = \"heat-stationary\"\ncutoffs = [2]\ntimes = [0.5, 1.0]\npast_horizon = 4.0\n[subordinator]\nkind = \"gamma\"\nshape = 1.0\nrate = 1.0\ntruncation = 0.01\n",
];

#[test]
fn csvs_are_byte_identical_across_runs_and_worker_counts() {
    for doc in SMALL {
        let (a, out) = run_to_dir(doc, 1);
        let (b, _) = run_to_dir(doc, 3);
        assert!(!out.tables.is_empty());
        for t in &out.tables {
            let x = fs::read(a.path().join(t.file_name())).unwrap();
            let y = fs::read(b.path().join(t.file_name())).unwrap();
            assert_eq!(x, y, "{} differs for\n{doc}", t.file_name());
        }
        assert_eq!(
            fs::read(a.path().join("summary.json")).unwrap(),
            fs::read(b.path().join("summary.json")).unwrap()
        );
    }
}

#[test]
fn deterministic_commands_pass() {
    for doc in [SMALL[3], SMALL[4]] {
        let (_, out) = run_to_dir(doc, 1);
        assert!(out.pass, "{doc}: {:?}", out.metrics);
    }
}

#[test]
fn wick_convergence_csv_has_cutoffs_times_ensemble_rows() {
    let (dir, _) = run_to_dir(SMALL[2], 2);
    let text = fs::read_to_string(dir.path().join("wick_convergence.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kind,k,N,sample,norm_value"));
    assert_eq!(lines.count(), 2 * 3);
    assert!(text.contains("\r\n"));
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let (dir, _) = run_to_dir(SMALL[3], 1);
    let text = fs::read_to_string(dir.path().join("renorm_divergence.csv")).unwrap();
    let field = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = field.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{field}");
}

#[test]
fn empty_result_set_gives_valid_summary() {
    let cfg = parse_config("command = \"isometry\"\n", None).unwrap();
    let s = serde_json::to_value(summary(&cfg, &RunOutput::default())).unwrap();
    assert_eq!(s["tables"].as_array().unwrap().len(), 0);
    let dir = tempfile::tempdir().unwrap();
    emit_report(dir.path(), &cfg, &RunOutput::default(), 1, 0.0).unwrap();
    let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["tables"], serde_json::json!([]));
}

#[test]
fn unwritable_output_fails_before_computation() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    assert!(matches!(preflight(&file.join("sub")), Err(CliError::Output { .. })));
}

#[test]
fn seeds_change_random_outputs_only() {
    let base = "command = \"isometry\"\n[wick]\nensemble = 150\n";
    let a = run_experiment(&parse_config(base, None).unwrap(), 1).unwrap();
    let b = run_experiment(&parse_config(&format!("seed = 2\n{base}"), None).unwrap(), 1).unwrap();
    assert_ne!(a.tables[0].to_csv().unwrap(), b.tables[0].to_csv().unwrap());
    let _ = Command::Isometry;
}

#[test]
fn binary_runs_a_config_and_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[field]\ncutoffs = [8, 16]\n").unwrap();
    let out = dir.path().join("out");
    let status = Process::new(env!("CARGO_BIN_EXE_wickspde"))
        .args(["renorm-divergence", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "5", "--workers", "2"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["summary.json", "manifest.json", "renorm_divergence.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["version"].as_str().unwrap().starts_with("wickspde "));

    fs::write(&cfg, "[wick]\norder = 3\n").unwrap();
    let bad = Process::new(env!("CARGO_BIN_EXE_wickspde"))
        .args(["solve-heat", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("never"))
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("only k = 2"));
    assert!(!dir.path().join("never").exists());
}
