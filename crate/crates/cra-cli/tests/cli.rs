//! End-to-end checks of the binary: exit codes, stream formats, and
//! cross-strategy agreement.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn cra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cra"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn cra_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cra"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().expect("binary finishes")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_det_dense_from_stdin() {
    let out = cra_stdin(&["solve", "--task", "det", "-"], "2\n1 2\n3 4\n");
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "-2");
    let stats = String::from_utf8_lossy(&out.stderr);
    assert!(stats.contains("primes_used="), "stats on stderr: {stats}");
}

#[test]
fn solve_one_by_one_zero() {
    let out = cra_stdin(&["solve", "--task", "det", "-"], "1\n0\n");
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0");
}

#[test]
fn strategies_agree_on_det() {
    let input = "3\n2 -1 0\n-1 2 -1\n0 -1 2\n"; // det = 4
    let mut results = Vec::new();
    for strategy in ["deterministic", "early", "early-multi", "balanced", "amortized"] {
        let out = cra_stdin(
            &["solve", "--task", "det", "--strategy", strategy, "-"],
            input,
        );
        assert!(out.status.success(), "strategy {strategy} failed");
        results.push(stdout(&out).trim().to_owned());
    }
    assert!(results.iter().all(|r| r == "4"), "{results:?}");
}

#[test]
fn charpoly_constant_first() {
    // diag(2, 3): x^2 - 5x + 6 -> lines 6, -5, 1.
    let out = cra_stdin(&["solve", "--task", "charpoly", "-"], "2\n2 0\n0 3\n");
    assert!(out.status.success());
    let lines: Vec<String> = stdout(&out).lines().map(str::to_owned).collect();
    assert_eq!(lines, ["6", "-5", "1"]);
}

#[test]
fn sms_input_parses() {
    let sms = "2 2 M\n1 1 7\n2 2 -3\n1 2 1\n0 0 0\n";
    let out = cra_stdin(&["solve", "--task", "det", "--format", "sms", "-"], sms);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "-21");
}

#[test]
fn json_output_is_an_object_with_stats() {
    let out = cra_stdin(
        &["solve", "--task", "det", "--output", "json", "-"],
        "2\n1 2\n3 4\n",
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["result"][0], "-2");
    assert!(v["stats"]["applies"].as_u64().unwrap() >= 1);
}

#[test]
fn parse_failure_exits_2() {
    let out = cra_stdin(&["solve", "--task", "det", "-"], "not a matrix\n");
    assert_eq!(out.status.code(), Some(2));
    let out = cra(&["solve", "--task", "det", "/nonexistent/input"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixed_task_reconstructs_large_values() {
    let out = cra_stdin(
        &["solve", "--task", "fixed", "--strategy", "early", "-"],
        "-340282366920938463463374607431768211455\n",
    );
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "-340282366920938463463374607431768211455");
}

#[test]
fn parallel_solve_matches_sequential() {
    let input = "4\n3 1 0 2\n-1 4 1 0\n0 2 5 1\n1 0 1 3\n";
    let seq = cra_stdin(&["solve", "--task", "det", "-"], input);
    assert!(seq.status.success());
    for mode in ["adaptive", "naive"] {
        let par = cra_stdin(
            &[
                "solve", "--task", "det", "--parallel", mode, "--workers", "2", "-",
            ],
            input,
        );
        assert!(par.status.success(), "mode {mode}");
        assert_eq!(stdout(&par).trim(), stdout(&seq).trim(), "mode {mode}");
    }
}

#[test]
fn seed_changes_keep_results_identical() {
    let input = "2\n-7 3\n4 9\n";
    let a = cra_stdin(&["solve", "--task", "det", "--strategy", "early", "--seed", "1", "-"], input);
    let b = cra_stdin(&["solve", "--task", "det", "--strategy", "early", "--seed", "999", "-"], input);
    assert_eq!(stdout(&a).trim(), stdout(&b).trim());
}

#[test]
fn selfcheck_passes_and_fault_injection_fails() {
    let ok = cra(&["selfcheck"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("suite crt-bruteforce: ok"));

    let seeded = cra(&["selfcheck", "--seed", "7"]);
    assert!(seeded.status.success());

    let fault = cra(&["selfcheck", "--inject-fault"]);
    assert_eq!(fault.status.code(), Some(1));
    assert!(stdout(&fault).contains("counterexample"));
}

#[test]
fn bench_emits_rows_and_json_parses() {
    let out = cra(&[
        "bench",
        "--task",
        "det",
        "--random",
        "8,6",
        "--workers-list",
        "1,2",
        "--strategy",
        "deterministic",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("deterministic"));
    assert_eq!(text.lines().count(), 3); // header + two rows

    let out = cra(&[
        "bench",
        "--task",
        "det",
        "--random",
        "8,6",
        "--output",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 5); // all strategies at one worker count
    let first = &rows[0]["result"];
    assert!(rows.iter().all(|r| &r["result"] == first));
}
