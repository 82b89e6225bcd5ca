use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qpvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpvlab"))
        .args(args)
        .env_remove("QPVLAB_DIM_CAP")
        .output()
        .expect("spawn qpvlab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

const COPY_Z: &str = r#"{"U": {"rows": 4, "cols": 2, "entries": [[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[1,0]]},
 "w_dim": 1, "v1_dim": 2, "v2_dim": 2, "w": [[1,0]], "P": "bloch:0,0,1"}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bound_prints_exact_integers() {
    for (n, want) in [("0", "196"), ("1", "9604"), ("2", "470596")] {
        let out = qpvlab(&["bound", n]);
        assert_eq!(code(&out), 0);
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), want);
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&qpvlab(&["bound", "-1"])), 1);
    assert_eq!(code(&qpvlab(&["bound", "x"])), 1);
    assert_eq!(code(&qpvlab(&["verify-attack", "--no-such-flag"])), 1);
    assert_eq!(code(&qpvlab(&["no-such-command"])), 1);
    assert_eq!(code(&qpvlab(&[])), 1);
    assert_eq!(code(&qpvlab(&["check-hidden"])), 1);
    assert_eq!(code(&qpvlab(&["--help"])), 0);
    assert_eq!(code(&qpvlab(&["--version"])), 0);
}

#[test]
fn check_hidden_exit_codes() {
    let dir = TempDir::new().unwrap();
    let matched = write(&dir, "z.json", COPY_Z);
    let out = qpvlab(&["check-hidden", "--instance", s(&matched)]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["result"]["is_hidden"], true);
    for key in ["residual_v1", "residual_v2", "dist_v1", "dist_v2"] {
        assert!(r["result"]["block_equations"][key].is_number(), "{key}");
    }

    let mismatched = write(&dir, "x.json", &COPY_Z.replace("bloch:0,0,1", "bloch:1,0,0"));
    let out = qpvlab(&["check-hidden", "--instance", s(&mismatched)]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["result"]["criteria_agree"], true);

    let truncated = write(&dir, "t.json", &COPY_Z[..40]);
    assert_eq!(code(&qpvlab(&["check-hidden", "--instance", s(&truncated)])), 1);

    let bad_key = write(&dir, "k.json", &COPY_Z.replace("\"w_dim\"", "\"wdim\""));
    let out = qpvlab(&["check-hidden", "--instance", s(&bad_key)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("wdim"), "{}", stderr(&out));

    let not_isometry = write(&dir, "u.json", &COPY_Z.replace("[0,0],[1,0]]", "[0,0],[2,0]]"));
    let out = qpvlab(&["check-hidden", "--instance", s(&not_isometry)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("`U`"), "{}", stderr(&out));
}

#[test]
fn verify_attack_default_and_y_basis() {
    let out = qpvlab(&["verify-attack"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(&out);
    for b in r["result"]["acceptance"].as_array().unwrap() {
        assert!((b["acceptance"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    // d = 1, h = 0.5, c = 1: receipts at (d - h)/c and (d + h)/c.
    let times: Vec<f64> = r["result"]["runs"][0]["events"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["time"].as_f64().unwrap())
        .collect();
    assert!(times.iter().any(|t| (t - 0.5).abs() < 1e-12));
    assert!(times.iter().any(|t| (t - 1.5).abs() < 1e-12));

    let out = qpvlab(&["verify-attack", "--basis", "bloch:0,1,0"]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
}

#[test]
fn simulate_honest_accepts_and_do_nothing_fails() {
    let out = qpvlab(&["simulate"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["result"]["total"], 100);
    assert_eq!(r["result"]["accepted"], 100);

    let out = qpvlab(&[
        "simulate",
        "--mode",
        "adversarial",
        "--builtin",
        "do-nothing",
        "--runs",
        "40",
    ]);
    assert_eq!(code(&out), 2);
    let accepted = json(&out)["result"]["accepted"].as_u64().unwrap();
    assert!(accepted > 5 && accepted < 35, "{accepted}");

    let out = qpvlab(&["simulate", "--mode", "adversarial", "--runs", "20"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn search_streams_progress_and_writes_csv() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("search.json");
    let out = qpvlab(&["search", "--restarts", "3", "--max-iters", "5", "--out", s(&report)]);
    assert_eq!(code(&out), 0);
    let lines: Vec<String> = stderr(&out).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 3);
    for (i, line) in lines.iter().enumerate() {
        assert!(line.starts_with(&format!("restart {i} value ")), "{line}");
    }
    let csv = std::fs::read_to_string(dir.path().join("search.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("restart,seed,injected,start_value,value,best_so_far"));
}

#[test]
fn search_injected_bb84_is_certified() {
    let out = qpvlab(&[
        "search",
        "--dims",
        "4,4,4,4",
        "--restarts",
        "1",
        "--max-iters",
        "1",
        "--inject-bb84",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["certified_perfect"], true);
}

#[test]
fn lambda_scan_on_builtin_channels() {
    for channel in ["bb84", "copy"] {
        let out = qpvlab(&["lambda-scan", "--channel", channel, "--attempts", "10"]);
        assert_eq!(code(&out), 0, "{channel}");
        let r = json(&out);
        assert_eq!(r["result"]["lemma1"]["violations"], 0);
        assert_eq!(r["result"]["census_within_bound"], true);
    }
}

#[test]
fn lambda_scan_reads_instance_file_as_channel() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "z.json", COPY_Z);
    let out = qpvlab(&["lambda-scan", "--channel", s(&path), "--attempts", "5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["dim_w"], 1);
}

#[test]
fn config_problems_are_listed_together() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"protocol": {"d": -1, "h": 2, "c_light": 0, "basis_set": []}, "mode": "honest", "runs": 0,
            "sample_sphere": false, "seed": 0}"#,
    );
    let out = qpvlab(&["simulate", "--config", s(&bad)]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    let listed = err.lines().filter(|l| l.trim_start().starts_with("- ")).count();
    assert!(listed >= 4, "{err}");
}

#[test]
fn config_cannot_mix_with_flags() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("va.json");
    assert_eq!(code(&qpvlab(&["verify-attack", "--out", s(&report)])), 0);
    let out = qpvlab(&["verify-attack", "--config", s(&report), "--tol", "1e-3"]);
    assert_eq!(code(&out), 1);
    let out = qpvlab(&["simulate", "--config", s(&report)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("verify-attack"));
}

#[test]
fn dim_cap_comes_from_environment() {
    let run = |cap: &str| {
        Command::new(env!("CARGO_BIN_EXE_qpvlab"))
            .args([
                "search",
                "--dims",
                "4,4,4,4",
                "--restarts",
                "1",
                "--max-iters",
                "1",
                "--inject-bb84",
            ])
            .env("QPVLAB_DIM_CAP", cap)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("8")), 1);
    assert_eq!(code(&run("zero")), 1);
    assert_eq!(code(&run("64")), 0);
}

/// Subcommand invocations used by the determinism and re-run checks.
fn determinism_cases(instance: &Path) -> Vec<Vec<String>> {
    let cases: Vec<Vec<&str>> = vec![
        vec!["check-hidden", "--instance", s(instance), "--seed", "4"],
        vec!["simulate", "--runs", "30", "--seed", "4"],
        vec![
            "simulate",
            "--mode",
            "adversarial",
            "--builtin",
            "do-nothing",
            "--runs",
            "30",
            "--seed",
            "4",
        ],
        vec!["verify-attack", "--seed", "4"],
        vec!["search", "--restarts", "3", "--max-iters", "5", "--seed", "4"],
        vec!["lambda-scan", "--attempts", "8", "--seed", "4"],
        vec!["bound", "3"],
    ];
    cases
        .into_iter()
        .map(|c| c.into_iter().map(String::from).collect())
        .collect()
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "z.json", COPY_Z);
    for case in determinism_cases(&inst) {
        let args: Vec<&str> = case.iter().map(String::as_str).collect();
        let a = qpvlab(&args);
        let b = qpvlab(&args);
        assert_eq!(a.stdout, b.stdout, "{case:?}");
        assert_eq!(a.status, b.status, "{case:?}");
    }
}

#[test]
fn rerun_from_embedded_config_reproduces_report() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "z.json", COPY_Z);
    for case in determinism_cases(&inst) {
        if case[0] == "bound" {
            continue;
        }
        let args: Vec<&str> = case.iter().map(String::as_str).collect();
        let first = qpvlab(&args);
        let report = write(&dir, "report.json", std::str::from_utf8(&first.stdout).unwrap());
        let again = qpvlab(&[case[0].as_str(), "--config", s(&report)]);
        assert_eq!(first.stdout, again.stdout, "{case:?}");
    }
}

#[test]
fn different_seeds_differ() {
    let a = qpvlab(&["simulate", "--runs", "5", "--seed", "1"]);
    let b = qpvlab(&["simulate", "--runs", "5", "--seed", "2"]);
    assert_ne!(json(&a)["result"], json(&b)["result"]);
}
