use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use volterra_cli::RunManifest;

fn volterra(args: &[&str], config: &str, out: &Path) -> (Output, Option<RunManifest>) {
    let file = out.join(format!("config-{}.txt", args[0]));
    fs::write(&file, config).unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_volterra"))
        .args(args)
        .arg("--config")
        .arg(&file)
        .arg("--output-dir")
        .arg(out.join("runs"))
        .output()
        .unwrap();
    (output, latest_manifest(&out.join("runs")))
}

fn run_dirs(runs: &Path) -> Vec<PathBuf> {
    fs::read_dir(runs).map(|d| d.map(|e| e.unwrap().path()).collect()).unwrap_or_default()
}

fn latest_manifest(runs: &Path) -> Option<RunManifest> {
    let mut dirs = run_dirs(runs);
    dirs.sort_by_key(|d| fs::metadata(d.join("manifest.txt")).and_then(|m| m.modified()).ok());
    let text = fs::read_to_string(dirs.last()?.join("manifest.txt")).ok()?;
    Some(RunManifest::from_text(&text).unwrap())
}

fn report_value(dir: &Path, quantity: &str) -> f64 {
    let text = fs::read_to_string(dir.join("report.csv")).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{quantity},"))).unwrap();
    line.split(',').nth(2).unwrap().parse().unwrap()
}

const RL: &str = "[kernel]\nkind = rl\nhurst = 0.75\n[mc]\nmaster_seed = 1\n";

#[test]
fn verify_kernel_on_riemann_liouville_passes_with_closed_form_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, manifest) = volterra(&["verify-kernel"], RL, tmp.path());
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let m = manifest.unwrap();
    assert!(m.verdicts.iter().all(|v| v.pass));
    let dir = tmp.path().join("runs").join(&m.config_hash);
    let ratio = report_value(&dir, "inf_ratio");
    assert!((ratio - 1.0 / 1.5f64.sqrt()).abs() < 1e-10, "{ratio}");
}

const PATHS: &str = "[kernel]\nkind = fbm\nhurst = 0.7\n[grid]\nn_points = 32\n[mc]\nmaster_seed = 5\nn_paths = 500\ncsv_paths = 7\n";

#[test]
fn csv_rows_and_checksums_match_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, manifest) = volterra(&["paths"], PATHS, tmp.path());
    assert_eq!(output.status.code(), Some(0));
    let m = manifest.unwrap();
    let dir = tmp.path().join("runs").join(&m.config_hash);
    for f in &m.files {
        let bytes = fs::read(dir.join(&f.name)).unwrap();
        assert_eq!(hex_digest(&bytes), f.sha256, "{}", f.name);
        let data_rows = String::from_utf8(bytes).unwrap().lines().count() - 1;
        assert_eq!(data_rows, f.rows, "{}", f.name);
    }
    assert_eq!(m.file("paths.csv").unwrap().rows, 7 * 32);
    assert!(!dir.join("manifest.txt.tmp").exists());
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn identical_configs_reproduce_identical_checksums() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let threaded = format!("[run]\nthreads = 2\n{PATHS}");
    let (_, first) = volterra(&["paths"], PATHS, a.path());
    let (_, second) = volterra(&["paths"], &threaded, b.path());
    let (first, second) = (first.unwrap(), second.unwrap());
    assert_eq!(first.config_hash, second.config_hash);
    assert_eq!(first.files, second.files);
}

#[test]
fn dirichlet_identity_run_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = "[kernel]\nkind = fbm\nhurst = 0.75\n[drift]\nkind = dirichlet\n[grid]\nn_points = 128\n[mc]\nmaster_seed = 3\nn_paths = 100\n[params]\nx0 = 0.3\n";
    let (output, manifest) = volterra(&["dirichlet"], config, tmp.path());
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&output.stdout).contains("PASS dirichlet_identity"));
    assert_eq!(report_value(&tmp.path().join("runs").join(manifest.unwrap().config_hash), "max_gap"), 0.0);
}

#[test]
fn failed_verdict_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    // the pooled slope for H = 0.9 is 0.917, outside a 0.001 tolerance
    let config = "[kernel]\nkind = fbm\nhurst = 0.9\n[mc]\nmaster_seed = 1\n[tolerances]\nslope_tol = 0.001\n";
    let (output, manifest) = volterra(&["verify-kernel"], config, tmp.path());
    assert_eq!(output.status.code(), Some(2));
    let m = manifest.unwrap();
    assert_eq!(m.status, volterra_cli::Status::Fail);
    assert!(m.verdicts.iter().any(|v| v.name == "slope" && !v.pass));
}

#[test]
fn invalid_config_lists_every_problem_and_exits_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let config = "[kernel]\nkind = fbm\nhurst = 1.2\n[grid]\nn_points = x\n";
    let (output, manifest) = volterra(&["paths"], config, tmp.path());
    assert_eq!(output.status.code(), Some(1));
    assert!(manifest.is_none(), "nothing runs before validation passes");
    let stderr = String::from_utf8_lossy(&output.stderr);
    for needle in ["Hurst parameter must lie in (0,1)", "n_points", "master_seed"] {
        assert!(stderr.contains(needle), "{stderr}");
    }
}

#[test]
fn command_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, _) = volterra(&["paths"], &format!("[run]\ncommand = verify-kernel\n{RL}"), tmp.path());
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn computation_error_is_recorded_with_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    // far too few paths for any α to reach the hit floor of the slope fit
    let config = "[kernel]\nkind = fbm\nhurst = 0.75\n[drift]\nkind = sign\n[grid]\nn_points = 16\n[mc]\nmaster_seed = 2\nn_paths = 20\n";
    let (output, manifest) = volterra(&["small-ball"], config, tmp.path());
    assert_eq!(output.status.code(), Some(1));
    let m = manifest.unwrap();
    assert_eq!(m.status, volterra_cli::Status::Error);
    assert!(m.error.unwrap().contains("insufficient samples"));
}
