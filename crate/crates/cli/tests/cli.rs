use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bootperc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bootperc"))
        .args(args)
        .current_dir(dir)
        .env_remove("BOOTPERC_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_two_and_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = bootperc(dir.path(), &["pi-decay", "--p", "1.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--p"), "{}", stderr(&o));

    let o = bootperc(dir.path(), &["exponents", "--which", "zeta", "--seed", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("eta"), "{}", stderr(&o));

    let o = bootperc(dir.path(), &["crossing-scan", "--trials", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--trials"), "{}", stderr(&o));

    assert_eq!(code(&bootperc(dir.path(), &["no-such-command"])), 2);
    assert_eq!(code(&bootperc(dir.path(), &["--help"])), 0);
}

#[test]
fn enumerate_prints_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = bootperc(
        dir.path(),
        &[
            "enumerate", "--width", "2", "--height", "2", "--p", "0.5", "--observable", "crossing",
            "--horizon", "0", "--boundary", "closed-halo", "--out", "e",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // vertical *-crossing of a 2x2 window: each of the two rows holds an open site
    assert_eq!(stdout(&o).trim(), "0.5625");
    assert_eq!(json(&dir.path().join("e/enumerate.json"))["value"], 0.5625);
}

#[test]
fn outputs_are_byte_stable_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, threads: &str| {
        let o = bootperc(
            dir.path(),
            &["pi-decay", "--p", "0.3", "--n-max", "6", "--trials", "3000", "--seed", "7", "--threads", threads, "--out", out],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read(dir.path().join(out).join("pi_curve.csv")).unwrap()
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 7);
    assert!(text.starts_with("n,mean,stderr,trials,"));
}

#[test]
fn manifest_records_seed_args_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = bootperc(dir.path(), &["crossing-scan", "--p", "1", "--sizes", "8,12", "--trials", "40", "--seed", "5", "--out", "m"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = json(&dir.path().join("m/manifest.json"));
    assert_eq!(m["subcommand"], "crossing-scan");
    assert_eq!(m["master_seed"], 5);
    assert_eq!(m["seed_generated"], false);
    assert_eq!(m["args"]["trials"], 40);
    assert!(m["outputs"].as_array().unwrap().iter().any(|v| v == "crossing.csv"));

    let csv = fs::read_to_string(dir.path().join("m/crossing.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        // everything crosses at p = 1, before and after the dynamics
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!((f[2], f[4], f[8]), ("1", "1", "0"));
    }

    let o = bootperc(dir.path(), &["crossing-scan", "--p", "1", "--sizes", "8", "--trials", "10", "--out", "g"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&dir.path().join("g/manifest.json"))["seed_generated"], true);
}

#[test]
fn explicit_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.conf"), "# pi run\np = 0.3\nn_max = 5\ntrials = 500\nseed = 3\n").unwrap();
    let o = bootperc(dir.path(), &["pi-decay", "--config", "run.conf", "--trials", "800", "--out", "c"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = json(&dir.path().join("c/manifest.json"));
    assert_eq!(m["args"]["p"], 0.3);
    assert_eq!(m["args"]["n_max"], 5);
    assert_eq!(m["args"]["trials"], 800);
    assert_eq!(m["master_seed"], 3);

    let o = bootperc(dir.path(), &["pi-decay", "--config", "missing.conf"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn stability_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bootperc(dir.path(), &["stability-check", "--exhaustive", "--width", "3", "--height", "3", "--seed", "1", "--out", "ok"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));

    let o = bootperc(
        dir.path(),
        &["stability-check", "--count", "10", "--width", "8", "--height", "8", "--mutant-threshold", "2", "--seed", "1", "--out", "bad"],
    );
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("witness two-core"), "{out}");
    // witnesses are printed as loadable configurations
    assert!(out.contains("8 8 open-halo\n"), "{out}");
}

#[test]
fn find_pcstar_brackets_the_half_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = bootperc(
        dir.path(),
        &["find-pcstar", "--L", "16", "--trials", "400", "--tol", "0.05", "--seed", "2", "--out", "f"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let b = json(&dir.path().join("f/pcstar.json"));
    let (lo, hi) = (b["lo"].as_f64().unwrap(), b["hi"].as_f64().unwrap());
    assert!(lo < hi && hi - lo <= 0.05);
    assert!(lo > 0.2 && hi < 0.6, "[{lo}, {hi}]");
}
