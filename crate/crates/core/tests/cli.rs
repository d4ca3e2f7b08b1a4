use std::path::Path;
use std::process::{Command, Output};

use omtx::io::report::read_report;
use omtx::io::{read_csv, Cell};

fn omtx(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omtx"))
        .current_dir(dir)
        .env_remove("OMTX_OUT")
        .args(args)
        .output()
        .unwrap()
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = omtx(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn steady_with_pump_off_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# pump off\nkappa = 0.215 MHz\ne_pump = 0\n",
    )
    .unwrap();
    let out = omtx(dir.path(), &["steady", "--config", "run.cfg"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1 root(s)"), "{text}");
    assert!(text.contains("w0 = 0.0 "), "{text}");
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "kappa = 0.215\n").unwrap();
    let out = omtx(dir.path(), &["steady", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    assert_eq!(
        omtx(dir.path(), &["steady", "--config", "missing.cfg"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        omtx(dir.path(), &["steady", "--method", "fast"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let out = omtx(dir.path(), &["spectrum", "--out", "blocker/sub"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_files_show_pump_contrast() {
    let dir = tempfile::tempdir().unwrap();
    let out = omtx(
        dir.path(),
        &["spectrum", "--ds-count", "101", "--pump", "9"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (h, on) = read_csv(&dir.path().join("out/spectrum.csv")).unwrap();
    let (_, off) = read_csv(&dir.path().join("out/spectrum_pump_off.csv")).unwrap();
    assert_eq!(
        h.join(","),
        "delta_s,delta,re_b_plus,im_b_plus,re_eps_t,im_eps_t,abs_eps_t_sq,stable"
    );
    assert_eq!(on.len(), 101);
    let (ds, resp) = (column(&h, "delta_s"), column(&h, "abs_eps_t_sq"));
    let mid = on.iter().position(|r| r[ds] == Cell::Num(0.0)).unwrap();
    let off_peak = off[mid][resp].num().unwrap();
    let on_peak = on[mid][resp].num().unwrap();
    assert!((off_peak - 4.0).abs() < 1e-12);
    assert!(on_peak > off_peak);
    assert_eq!(on[mid][column(&h, "stable")], Cell::Bool(true));
    let svg = std::fs::read_to_string(dir.path().join("out/spectrum.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_omtx"));
        cmd.current_dir(dir.path())
            .env_remove("OMTX_OUT")
            .args(args);
        if let Some(e) = env {
            cmd.env("OMTX_OUT", e);
        }
        assert!(cmd.output().unwrap().status.success());
    };
    let grid = ["stability", "--pump-count", "3"];
    run(&grid, Some("from_env"));
    assert!(dir.path().join("from_env/stability.csv").exists());
    run(
        &[&grid[..], &["--set", "out_dir=from_config"]].concat(),
        Some("from_env"),
    );
    assert!(dir.path().join("from_config/stability.csv").exists());
    run(
        &[
            &grid[..],
            &["--set", "out_dir=from_config", "--out", "from_flag"],
        ]
        .concat(),
        Some("from_env"),
    );
    assert!(dir.path().join("from_flag/stability.csv").exists());
    run(&grid, None);
    assert!(dir.path().join("out/stability.csv").exists());
}

#[test]
fn transistor_curve_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = omtx(
        dir.path(),
        &["transistor", "--pump-count", "16", "--workers", "3"],
    );
    assert!(out.status.success());
    let (h, rows) = read_csv(&dir.path().join("out/transistor.csv")).unwrap();
    assert_eq!(h.join(","), "pump,w0,gain,stable,leading_eig_re");
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0][column(&h, "gain")], Cell::Num(1.0));
    let a = std::fs::read(dir.path().join("out/transistor.svg")).unwrap();
    assert!(omtx(dir.path(), &["transistor", "--pump-count", "16"])
        .status
        .success());
    assert_eq!(
        a,
        std::fs::read(dir.path().join("out/transistor.svg")).unwrap()
    );
}

#[test]
fn validate_writes_one_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = omtx(dir.path(), &["validate", "--workers", "2"]);
    let report = read_report(&dir.path().join("out/conformance_report.json")).unwrap();
    assert_eq!(out.status.code(), Some(if report.passed() { 0 } else { 3 }));
    assert_eq!(report.checks.len(), 7);
    assert_eq!(report.config_sha256.len(), 64);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout
            .lines()
            .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
            .count(),
        7
    );
}

#[test]
fn failing_validation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = omtx(dir.path(), &["validate", "--method", "closed"]);
    assert_eq!(out.status.code(), Some(3));
    let report = read_report(&dir.path().join("out/conformance_report.json")).unwrap();
    assert!(!report.passed());
    assert_eq!(report.figures_method, "closed");
}
