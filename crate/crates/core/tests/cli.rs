use std::fs;
use std::process::Command;

use clap::Parser;
use portclone::cli::{run, Cli, CSV_HEADER};

fn invoke(args: &[&str]) -> (i32, String) {
    let cli = Cli::try_parse_from(std::iter::once("portclone").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    let code = match run(cli, &mut out) {
        Ok(c) => c,
        Err((c, _)) => c,
    };
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn fidelity_prints_json() {
    let (code, out) = invoke(&["fidelity", "--protocol", "std-pbtc", "--d", "2", "--N", "3", "--M", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["protocol"], "std-pbtc");
    assert_eq!(v["N"], 3);
    assert!((v["F"].as_f64().unwrap() - 0.375).abs() < 1e-12);
}

#[test]
fn unknown_protocol_is_usage_error() {
    let (code, _) = invoke(&["fidelity", "--protocol", "teleport", "--N", "2"]);
    assert_eq!(code, 2);
}

#[test]
fn sweep_is_stable_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let four = dir.path().join("four.csv");
    let svg = dir.path().join("plot.svg");
    for (path, jobs) in [(&one, "1"), (&four, "4")] {
        let (code, _) = invoke(&[
            "sweep",
            "--d",
            "2",
            "--M",
            "2",
            "--N",
            "2:4",
            "--csv",
            path.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
            "--jobs",
            jobs,
            "--no-timing",
        ]);
        assert_eq!(code, 0);
    }
    let a = fs::read_to_string(&one).unwrap();
    assert_eq!(a, fs::read_to_string(&four).unwrap());
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("clone-mpbt,2,2,2,"));
    assert!(lines[6].starts_with("std-pbtc,2,4,2,0.467621049257,"));
    let plot = fs::read_to_string(&svg).unwrap();
    assert!(plot.starts_with("<svg"));
    assert!(plot.contains("<metadata>"));
}

#[test]
fn sweep_rejects_range_below_m() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let (code, _) = invoke(&["sweep", "--M", "3", "--N", "2:4", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(!csv.exists());
}

#[test]
fn verify_exit_codes() {
    let (code, out) = invoke(&["verify", "--d", "2", "--N", "3", "--M", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("k.stirling_identity"));
    assert!(!out.contains("FAIL"));

    let (code, out) = invoke(&["verify", "--d", "2", "--N", "2", "--M", "2", "--fault"]);
    assert_eq!(code, 1);
    assert!(out.contains("fault injected"));
    assert!(out.contains("FAIL"));

    let (code, _) = invoke(&["verify", "--d", "2", "--N", "2", "--M", "3"]);
    assert_eq!(code, 2);
}

#[test]
fn verify_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.json");
    let (code, _) = invoke(&["verify", "--N", "4", "--M", "2", "--json", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 15);
}

// The cap is process-global, so these go through the real binary.
#[test]
fn dim_cap_flag_and_env() {
    let bin = env!("CARGO_BIN_EXE_portclone");
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let sweep = ["sweep", "--N", "2:4", "--csv", csv.to_str().unwrap()];

    let status = Command::new(bin)
        .args(["--dim-cap", "16"])
        .args(sweep)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("cap"));

    let status = Command::new(bin)
        .env("PORTCLONE_DIM_CAP", "16")
        .args(sweep)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));

    // flag beats environment
    let status = Command::new(bin)
        .env("PORTCLONE_DIM_CAP", "16")
        .args(["--dim-cap", "64"])
        .args(sweep)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(csv.exists());
}

#[test]
fn povm_dump_round_trips() {
    let (code, out) = invoke(&["povm-dump", "--protocol", "std-pbtc", "--N", "2", "--M", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let elements = v["elements"].as_array().unwrap();
    assert_eq!(elements.len(), 1);
    assert_eq!(elements[0]["rows"], 8);
}
