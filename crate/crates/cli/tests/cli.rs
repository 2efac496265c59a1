use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn msfrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msfrac")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn misspelled_key_exits_with_code_two_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[pde]\nnuu = 1.0\n").unwrap();
    let out = msfrac(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nuu"), "{}", stderr(&out));
}

#[test]
fn alpha_outside_the_range_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = msfrac(&["constants", "--alpha", "0.6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("alpha"), "{}", stderr(&out));
    assert!(!dir.path().join("constants.csv").exists());
}

#[test]
fn missing_config_file_is_reported() {
    let out = msfrac(&["verify", "--config", "/nonexistent/msfrac.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/msfrac.toml"));
}

#[test]
fn unknown_suite_is_rejected_by_the_parser() {
    let out = msfrac(&["verify", "--suite", "everything"]);
    assert_eq!(out.status.code(), Some(2));
}

fn summary(dir: &Path) -> String {
    fs::read_to_string(dir.join("summary.csv")).unwrap()
}

#[test]
fn kernel_suite_passes_and_reruns_identically() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = msfrac(&["verify", "--suite", "kernel", "--seed", "7", "--out", d.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    }
    let s = summary(a.path());
    assert_eq!(s, summary(b.path()));
    assert!(s.starts_with("check_id,paper_ref,pass,margin,seconds\n"));
    assert!(s.lines().skip(1).all(|l| l.split(',').count() == 5 && l.ends_with(",0e0")));
    assert!(s.contains("kernel.mass,kernel-identities,true,"));
}

#[test]
fn constants_subcommand_prints_and_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = msfrac(&["constants", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in ["M0", "M1", "kappa0", "T0", "C_d_alpha", "B", "delta0", "C0"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from\n{text}");
    }
    let csv = fs::read_to_string(dir.path().join("constants.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.contains("data,M0,2e0,"));
}

#[test]
fn run_subcommand_writes_a_time_series_per_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = msfrac(&["run", "--t-end", "0.2", "--n", "64", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let series = fs::read_to_string(dir.path().join("run.csv")).unwrap();
    // 200 steps recorded every 50 plus the initial record.
    assert_eq!(series.lines().count(), 1 + 5);
    assert!(series.starts_with("t,linf,lip,theory_bound,modulus_min_margin\n"));
    assert!(summary(dir.path()).contains("run.gradient_bound,gradient-bound,true,"));
}

#[test]
fn picard_subcommand_reports_the_contraction_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = msfrac(&["picard", "--k-max", "5", "--n", "64", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let table = fs::read_to_string(dir.path().join("picard.csv")).unwrap();
    assert!(table.starts_with("k,distance,envelope_margin,ratio\n"));
    assert!(table.lines().count() >= 2);
}

#[test]
fn flags_override_the_configuration_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[pde]\nnu = 1.0\nalpha = 0.25\n[grid]\nperiod = 12.566370614359172\nn = 128\n").unwrap();
    let out = msfrac(&["constants", "--config", cfg.to_str().unwrap(), "--nu", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let reference = msfrac(&["constants", "--nu", "4", "--L", "12.566370614359172", "--n", "128", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(stdout(&out), stdout(&reference));
}
