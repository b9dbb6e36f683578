use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectral-cnn"))
}

#[test]
fn fig1_writes_csv_svg_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fig1", "--k", "4,5", "--m-list", "4,8", "--plot", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fig1_abs_shift.csv")).unwrap();
    assert!(csv.starts_with("signal,s,k,m,error\n"));
    assert_eq!(csv.lines().count(), 5);
    let svg = std::fs::read_to_string(dir.path().join("fig1_x_pow_3_2.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let manifest = std::fs::read_to_string(dir.path().join("fig1_manifest.txt")).unwrap();
    assert!(manifest.contains("m_list=4,8\n") && manifest.contains("abs_shift.k4.slope="));
}

#[test]
fn config_file_is_applied_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "k=4\nm_list=4,16\nseed=9\n").unwrap();
    let out = bin()
        .args(["fig1", "--m-list", "8,16", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = std::fs::read_to_string(dir.path().join("fig1_manifest.txt")).unwrap();
    assert!(manifest.contains("seed=9\n") && manifest.contains("k=4\n") && manifest.contains("m_list=8,16\n"));
}

#[test]
fn bad_config_key_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour=blue\n").unwrap();
    let out = bin().args(["fig1", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn fhn_solve_dumps_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fhn-solve", "--mu", "0.02", "--level", "4", "--t-final", "0.1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let u = std::fs::read_to_string(dir.path().join("fhn_u.csv")).unwrap();
    assert!(u.starts_with("t,x_1,"));
    assert_eq!(u.lines().count(), 1 + 21);
    assert!(dir.path().join("fhn_w.csv").exists());

    let out = bin().args(["fhn-solve", "--mu", "0.5", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quick_validate_reports_every_deterministic_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["validate", "--no-train", "--max-level", "3", "--max-modes", "3", "--k", "5,6", "--m-list", "4,8,16", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")).collect();
    assert_eq!(lines.len(), 8, "{stdout}");
    let any_failed = lines.iter().any(|l| l.starts_with("[FAIL]"));
    assert_eq!(out.status.code(), Some(if any_failed { 1 } else { 0 }));
    assert!(dir.path().join("report.txt").exists() && dir.path().join("exactness.csv").exists());
}
