use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nlddm::io::Report;

const DESK: &str = r#"
[mesh]
h = 0.125

[kernel]
family = "constant"
delta = 0.25

[load]
f = { kind = "sinusoidal", amplitude = 1.0 }
g = { kind = "linear", a = 0.5, b = -0.25, c = 1.0 }

[decomposition]
bx = BX
by = BY
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn nlddm(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nlddm"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("NLDD_THREADS", t),
        None => cmd.env_remove("NLDD_THREADS"),
    };
    cmd.output().unwrap()
}

fn desk(bx: usize, by: usize, extra: &str) -> String {
    DESK.replace("BX", &bx.to_string()).replace("BY", &by.to_string()) + extra
}

#[test]
fn single_subdomain_run_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "one.toml", &desk(1, 1, ""));
    let out = nlddm(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = Report::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.get("bitwise_equal"), Some("true"));
    assert_eq!(report.get("rel_inf_error"), Some("0e0"));
    assert_eq!(report.get("constraint_rows"), Some("0"));
}

#[test]
fn two_by_two_run_meets_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "two.toml", &desk(2, 2, ""));
    let out = nlddm(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let report = Report::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let err: f64 = report.get("rel_inf_error").unwrap().parse().unwrap();
    assert!(err <= 1e-8);
    assert_eq!(report.get("status"), Some("ok"));
}

#[test]
fn oversized_block_grid_reports_empty_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &desk(50, 1, ""));
    let out = nlddm(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("owns no elements"));
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "syntax.toml", "[mesh\nh = 1");
    assert_eq!(nlddm(&["run", bad.to_str().unwrap()], None).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(nlddm(&["run", missing.to_str().unwrap()], None).status.code(), Some(6));
    let strict = write_config(dir.path(), "strict.toml", &desk(3, 3, ""));
    let out = nlddm(&["check", strict.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("collar"));
    let redundant = write_config(dir.path(), "red.toml", &desk(2, 2, "\n[constraints]\nmode = \"redundant\"\n"));
    let out = nlddm(&["run", redundant.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-redundant"));
    let no_mesh = write_config(dir.path(), "nomesh.toml", &desk(1, 1, "\n[mesh]\n"));
    assert_eq!(nlddm(&["check", no_mesh.to_str().unwrap()], None).status.code(), Some(2));
}

#[test]
fn check_stops_after_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "check.toml",
        &desk(3, 3, "collar = \"extended\"\n\n[outputs]\nartifacts = [\"report\"]\n"),
    );
    let out = nlddm(&["check", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("subdomains: 9") && text.contains("status: ok"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn export_writes_only_the_selection() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(dir.path(), "empty.toml", &desk(2, 2, ""));
    let out = nlddm(&["export", empty.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(!dir.path().join("out").exists());
    let some = write_config(
        dir.path(),
        "some.toml",
        &desk(2, 2, "\n[outputs]\ndirectory = \"exp\"\nartifacts = [\"mesh\", \"subdomain_matrices\", \"solution\"]\n"),
    );
    let out = nlddm(&["export", some.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<String> =
        fs::read_dir(dir.path().join("exp")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert!(names.contains(&"mesh.txt".to_string()) && names.contains(&"a_3.mtx".to_string()));
    assert!(!names.contains(&"solution.csv".to_string()));
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn repeated_runs_give_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let all = "\n[outputs]\ndirectory = \"DIR\"\nartifacts = [\"mesh\", \"partition\", \"decomposition\", \"a_single\", \"b_single\", \"subdomain_matrices\", \"constraints\", \"kkt\", \"solution\", \"report\"]\n";
    let mut runs = Vec::new();
    for (k, threads) in [None, None, Some("4")].into_iter().enumerate() {
        let name = format!("run{k}");
        let body = desk(3, 3, &format!("collar = \"extended\"\n{}", all.replace("DIR", &name)));
        let cfg = write_config(dir.path(), &format!("{name}.toml"), &body.replace("constant", "gaussian"));
        let out = nlddm(&["run", cfg.to_str().unwrap()], threads);
        assert_eq!(out.status.code(), Some(0));
        runs.push(artifacts(&dir.path().join(&name)));
    }
    assert!(runs[0].len() > 20);
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}
