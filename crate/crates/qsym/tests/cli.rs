use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

use qsym::config::*;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn qsym(args: &[&str], config: &Path, out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_qsym"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("QSYM_THREADS")
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn bundled_solovev_config_matches_documented_defaults() {
    let text = std::fs::read_to_string(bundled("solovev_verify.toml")).unwrap();
    let cfg = parse_config(&text).unwrap();
    let expected = RunConfig {
        field: FieldSpec::Solovev { r0: 1.0, c0: 1.0, p1: 2.0 },
        derivatives: Derivatives::default(),
        symmetry: Some(SymmetrySpec::Axisym),
        psi: None,
        sampling: Sampling::default(),
        thresholds: Thresholds::default(),
        orbit: None,
        flux: None,
        gs: None,
    };
    assert_eq!(cfg, expected);
}

#[test]
fn every_bundled_config_parses() {
    for entry in std::fs::read_dir(bundled("")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn verify_symmetric_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = qsym(&["verify"], &bundled("solovev_verify.toml"), dir.path());
    assert_eq!(code, 0);
    let r = report(dir.path());
    assert_eq!(r["all_pass"], true);
    assert_eq!(r["status"], "complete");
    assert_eq!(r["checks"].as_array().unwrap().len(), 11);
    assert!(dir.path().join("verify_points.csv").exists());
}

#[test]
fn verify_perturbed_reports_failures_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = qsym(&["verify"], &bundled("perturbed_verify.toml"), dir.path());
    assert_eq!(code, 0);
    let r = report(dir.path());
    assert_eq!(r["all_pass"], false);
    let failing: Vec<&str> =
        r["checks"].as_array().unwrap().iter().filter(|c| c["pass"] == false).map(|c| c["name"].as_str().unwrap()).collect();
    assert!(failing.contains(&"qs.u_grad_modb"), "{failing:?}");
    // --strict turns failed checks into a distinct exit status
    let (code, _) = qsym(&["verify", "--strict"], &bundled("perturbed_verify.toml"), dir.path());
    assert_eq!(code, 3);
}

#[test]
fn degenerate_bpar_exits_two_with_marker() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = qsym(&["orbit"], &bundled("degenerate_orbit.toml"), dir.path());
    assert_eq!(code, 2, "{stderr}");
    let r = report(dir.path());
    assert_eq!(r["status"], "failed");
    assert!(r["error"].as_str().unwrap().starts_with("DegenerateBpar"), "{}", r["error"]);
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.lines().last().unwrap().starts_with("# FAILED: DegenerateBpar"));
}

#[test]
fn config_errors_exit_one_naming_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[field]\nkind = \"uniform\"\nb0 = [0.0, 0.0, 1.0]\nfied = 2\n").unwrap();
    let out = dir.path().join("out");
    let (code, stderr) = qsym(&["verify"], &cfg, &out);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 4") && stderr.contains("fied"), "{stderr}");
    assert!(!out.join("report.json").exists());
    // valid TOML, but verify has nothing to check against
    std::fs::write(&cfg, "[field]\nkind = \"uniform\"\nb0 = [0.0, 0.0, 1.0]\n").unwrap();
    assert_eq!(qsym(&["verify"], &cfg, &out).0, 1);
}

#[test]
fn json_format_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = qsym(&["verify", "--format", "json", "--seed", "7"], &bundled("helical_verify.toml"), dir.path());
    assert_eq!(code, 0);
    assert_eq!(report(dir.path())["metadata"]["seed"], 7);
    let t: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify_points.json")).unwrap()).unwrap();
    assert_eq!(t["rows"].as_array().unwrap().len(), 500);
    assert_eq!(t["status"], "complete");
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(qsym(&["verify", "--threads", "1"], &bundled("perturbed_verify.toml"), &a).0, 0);
    assert_eq!(qsym(&["verify", "--threads", "4"], &bundled("perturbed_verify.toml"), &b).0, 0);
    for f in ["report.json", "verify_points.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn gs_solve_writes_grid_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = qsym(&["gs", "solve", "--format", "json"], &bundled("gs_solovev.toml"), dir.path());
    assert_eq!(code, 0);
    let (nr, nz, psi) = qsym::output::read_grid_bin(dir.path(), "psi").unwrap();
    assert_eq!((nr, nz, psi.len()), (65, 65, 65 * 65));
    let r = report(dir.path());
    assert_eq!(r["all_pass"], true);
    assert!(dir.path().join("gs_history.json").exists());
}
