//! Runs the compiled binary and checks outputs and exit statuses.

use std::process::Command;

use serde_json::Value;

fn pre2(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pre2"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exited normally"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn pre_prints_the_image() {
    let (code, out, _) = pre2(&["pre", "--k", "2", "4,2,1,1"]);
    assert_eq!((code, out.as_str()), (0, "8^1+4^2+2^2+1^1\n"));
    let (code, out, _) = pre2(&["pre", "--k", "3", "1,2,1"]);
    assert_eq!((code, out.as_str()), (0, "2^1\n"));
    let (code, out, _) = pre2(&["pre", "--k", "2", "5"]);
    assert_eq!((code, out.as_str()), (0, "\n"));
}

#[test]
fn invert_round_trips_and_rejects() {
    let (code, out, _) = pre2(&["invert", "--n", "8", "8^1+4^2+2^2+1^1"]);
    assert_eq!((code, out.as_str()), (0, "4,2,1,1\n"));
    let (code, out, _) = pre2(&["invert", "--n", "3", ""]);
    assert_eq!((code, out.as_str()), (0, "3\n"));
    let (code, _, err) = pre2(&["invert", "--n", "6", "6^1"]);
    assert_eq!(code, 2);
    assert!(err.contains("NoPreimage"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["pre", "--k", "2", "3,0"][..],
        &["pre", "--k", "0", "3"],
        &["invert", "--n", "8", "4^1+8^1"],
        &["bogus"],
        &[],
        &["verify", "--n", "5", "--workers", "0"],
        &["verify", "--n", "0"],
        &["cross-collide", "--length", "1", "--max-part", "5"],
        &["sums", "lift", "--base", "2", "1^1+0^1"],
    ] {
        let (code, _, _) = pre2(args);
        assert_eq!(code, 2, "{args:?}");
    }
    let (code, out, _) = pre2(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("verify"));
}

#[test]
fn verify_json_report() {
    let (code, out, _) = pre2(&["verify", "--n", "12", "--workers", "2", "--output", "json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n"], 12);
    assert_eq!(v["partitions_checked"], 77);
    assert_eq!(v["distinct_images"], 77);
    assert_eq!(v["collisions"], Value::Array(vec![]));
    assert_eq!(v["roundtrip_failures"], Value::Array(vec![]));
    assert_eq!(v["workers"], 2);
    assert!(v["wall_time_ms"].is_u64());

    let (code, out, _) = pre2(&[
        "verify",
        "--n",
        "12",
        "--memory-mode",
        "sort_merge",
        "--roundtrip",
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("n=12 partitions_checked=77 distinct_images=77 collisions=0"));
}

#[test]
fn verify_falls_back_to_sort_merge() {
    let (code, out, err) = pre2(&["verify", "--n", "20", "--memory-budget", "1000"]);
    assert_eq!(code, 0);
    assert!(err.contains("sort_merge"));
    assert!(out.contains("partitions_checked=627"));
}

#[test]
fn roundtrip_subcommand() {
    let (code, out, _) = pre2(&["roundtrip", "--n", "8"]);
    assert_eq!((code, out.as_str()), (0, "n=8 failures=0\n"));
    let (code, out, _) = pre2(&[
        "roundtrip",
        "--n",
        "30",
        "--sample",
        "500",
        "--seed",
        "1",
        "--output",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["failures"], Value::Array(vec![]));
}

#[test]
fn cross_collide_subcommand() {
    let (code, out, _) = pre2(&["cross-collide", "--length", "2", "--max-part", "6"]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l == "6,1 ~ 3,2 : 6^1"), "{out}");
    let (code, out, _) = pre2(&[
        "cross-collide",
        "--length",
        "3",
        "--max-part",
        "12",
        "--output",
        "json",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        serde_json::from_str::<Value>(&out).unwrap(),
        Value::Array(vec![])
    );
}

#[test]
fn sums_subcommands() {
    let (code, out, _) = pre2(&["sums", "search", "--length", "4", "--max-abs", "7"]);
    assert_eq!(code, 0);
    assert!(
        out.lines()
            .any(|l| l == "6^1+5^1+3^1+0^1 ~ 7^1+4^1+2^1+1^1 (sets)"),
        "{out}"
    );
    let (code, out, _) = pre2(&["sums", "search", "--length", "3", "--max-abs", "12"]);
    assert_eq!((code, out.as_str()), (0, ""));

    let (code, out, _) = pre2(&[
        "sums",
        "lift",
        "--base",
        "2",
        "6^1+5^1+3^1+0^1/7^1+4^1+2^1+1^1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "64,32,8,1 ~ 128,16,4,2 : 2048^1+512^1+256^1+64^1+32^1+8^1\n"
    );
    let (code, out, _) = pre2(&[
        "sums",
        "lift",
        "--base",
        "3",
        "4^1+0^1/3^1+1^1",
        "--output",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["shared_image"], "81^1");
    let (code, _, err) = pre2(&["sums", "lift", "4^1+0^1/2^1+1^1"]);
    assert_eq!(code, 2);
    assert!(err.contains("LiftVerificationFailed"), "{err}");
}
