use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn wpfp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpfp")).args(args).arg("--out").arg(out).arg("--quiet").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn cfg_arg(name: &str) -> String {
    example(name).to_string_lossy().into_owned()
}

#[test]
fn linear_example_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpfp(&["--config", &cfg_arg("linear_gaussian.cfg")], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["diagnostics.csv", "estimates.csv", "run_config.cfg", "snapshot_0000.bin", "snapshot_0010.bin"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    assert!(!dir.path().join("failures.csv").exists());
    let rows = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    // 20 steps, a row every second step, plus the initial row
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 1 + 11);
}

#[test]
fn bad_params_name_the_clause() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpfp(&["--config", &cfg_arg("bad_params.cfg")], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("Lindblad clause"), "{}", stderr(&o));
}

#[test]
fn ellipticity_clause_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpfp(&["--config", &cfg_arg("linear_gaussian.cfg"), "--set", "beta=0", "--set", "gamma=1"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("ellipticity clause"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &[],
        &["--config", "/nonexistent/run.cfg"],
        &["--config", &cfg_arg("linear_gaussian.cfg"), "--set", "no_such_key=1"],
        &["--config", &cfg_arg("linear_gaussian.cfg"), "--set", "mode=sideways"],
        &["--config", &cfg_arg("linear_gaussian.cfg"), "--set", "nx=7"],
    ];
    for args in cases {
        assert_eq!(code(&wpfp(args, dir.path())), 1, "{args:?}");
    }
}

#[test]
fn unknown_key_in_file_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.cfg");
    fs::write(&cfg, "mode = linear\nsigmaa = 1\n").unwrap();
    let o = wpfp(&["--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("sigmaa"));
}

#[test]
fn failed_assertion_exits_two_with_failures_csv() {
    // 2 Picard iterations cannot reach the tolerance and 0 halvings leave no way out
    let dir = tempfile::tempdir().unwrap();
    let o = wpfp(
        &[
            "--config",
            &cfg_arg("nonlinear_mode.cfg"),
            "--set",
            "picard_max=2",
            "--set",
            "picard_tol=1e-14",
            "--set",
            "max_halvings=0",
            "--set",
            "t_end=0.02",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let failures = fs::read_to_string(dir.path().join("failures.csv")).unwrap();
    assert!(failures.lines().any(|l| l.starts_with("picard_contraction,")), "{failures}");
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = wpfp(&["--config", &cfg_arg("nonlinear_mode.cfg"), "--set", "t_end=0.1", "--seed", "7"], &out);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap())
            .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
            .collect();
        files.sort();
        files
    };
    let a = run("a");
    let b = run("a");
    assert!(a.len() >= 4);
    assert_eq!(a, b);
}

#[test]
fn verify_suite_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        let o = wpfp(&["--config", &cfg_arg("verify_all.cfg"), "--set", "mode=verify-theta", "--set", "cases=3"], dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read(dir.path().join("estimates.csv")).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn every_output_carries_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpfp(&["--config", &cfg_arg("linear_gaussian.cfg"), "--set", "beta = 0.75", "--seed", "11"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["diagnostics.csv", "estimates.csv"] {
        let text = fs::read_to_string(dir.path().join(f)).unwrap();
        let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
        assert!(header.contains(&"# beta = 0.75"), "{f}");
        assert!(header.contains(&"# seed = 11"), "{f}");
        assert!(header.contains(&"# mode = linear"), "{f}");
        assert!(header.len() >= 28, "{f}: {}", header.len());
    }
    let sidecar = fs::read_to_string(dir.path().join("run_config.cfg")).unwrap();
    assert!(sidecar.lines().any(|l| l == "beta = 0.75"));
}

#[test]
fn sidecar_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert_eq!(code(&wpfp(&["--config", &cfg_arg("linear_gaussian.cfg"), "--set", "t_end=0.3"], &first)), 0);
    let second = dir.path().join("second");
    let sidecar = first.join("run_config.cfg");
    assert_eq!(code(&wpfp(&["--config", sidecar.to_str().unwrap()], &second)), 0);
    let strip = |p: &Path| -> Vec<String> {
        fs::read_to_string(p.join("diagnostics.csv")).unwrap().lines().filter(|l| !l.starts_with("# out = ")).map(String::from).collect()
    };
    assert_eq!(strip(&first), strip(&second));
    assert_eq!(fs::read(first.join("snapshot_0000.bin")).unwrap(), fs::read(second.join("snapshot_0000.bin")).unwrap());
}

#[test]
fn verify_all_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wpfp"))
        .args(["--config", &cfg_arg("verify_all.cfg"), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("smoothing_gain_slope") && table.contains("shifted_gamma_ratio_spread"));
    assert!(table.lines().last().unwrap().ends_with(" 0 failed"), "{table}");
    let est = fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    assert!(est.lines().filter(|l| !l.starts_with('#')).skip(1).all(|l| l.ends_with(",true")));
}
