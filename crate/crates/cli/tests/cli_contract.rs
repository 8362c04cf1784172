//! Process-level contract: exit codes, byte determinism, file emission,
//! and crash-freedom on malformed input.

use std::path::Path;
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn workspace_root() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omnistream"))
        .args(args)
        .current_dir(workspace_root())
        .output()
        .expect("spawn")
}

#[test]
fn success_exits_zero() {
    let out = run(&["schedule", "--text", "2", "--speech", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(out.stdout, b"TSSTSS\n");
}

#[test]
fn domain_errors_exit_one_with_a_structured_report() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"segments":[{"kind":"AUDIO","duration":0.0}]}"#).unwrap();

    for format in ["text", "json", "csv"] {
        let out = run(&[
            "positions",
            "--input",
            bad.to_str().unwrap(),
            "--format",
            format,
        ]);
        assert_eq!(out.status.code(), Some(1), "format {format}");
        assert!(!out.stdout.is_empty(), "format {format}: no report");
    }
    let out = run(&["positions", "--input", bad.to_str().unwrap(), "--format", "json"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["error"]["kind"], "VALIDATION");

    // An infeasible interleave budget is a domain error too.
    let out = run(&["schedule", "--text", "0", "--speech", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    // Unknown flag (rejected by the argument parser).
    let out = run(&["schedule", "--text", "2", "--speech", "4", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // Missing input file.
    let out = run(&["budget", "--input", "no_such_file.json"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown override key.
    let out = run(&["budget", "--input", "manifests/audio_10h.json", "--set", "nope=1"]);
    assert_eq!(out.status.code(), Some(2));
    // Override missing '='.
    let out = run(&["budget", "--input", "manifests/audio_10h.json", "--set", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown format value.
    let out = run(&["schedule", "--text", "1", "--speech", "1", "--format", "xml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_inputs_and_seed_are_byte_identical() {
    let args = [
        "positions",
        "--input",
        "manifests/audio_10h.json",
        "--format",
        "json",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let a = run(&["simulate", "--input", "scenarios/flash_audio.json", "--format", "csv"]);
    let b = run(&["simulate", "--input", "scenarios/flash_audio.json", "--format", "csv"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_flag_moves_the_random_stamps() {
    let a = run(&["positions", "--input", "manifests/audio_10h.json", "--seed", "0"]);
    let b = run(&["positions", "--input", "manifests/audio_10h.json", "--seed", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn output_flag_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "budget",
        "--input",
        "manifests/audio_10h.json",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let direct = run(&["budget", "--input", "manifests/audio_10h.json", "--format", "json"]);
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn failed_runs_do_not_write_the_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"segments":[{"kind":"AUDIO","duration":0.0}]}"#).unwrap();
    let report = dir.path().join("report.json");
    let out = run(&[
        "budget",
        "--input",
        bad.to_str().unwrap(),
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!report.exists());
}

#[test]
fn simulate_can_dump_the_event_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let out = run(&[
        "simulate",
        "--input",
        "scenarios/handtrace.json",
        "--set",
        &format!("trace={}", trace.display()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let body = std::fs::read_to_string(&trace).unwrap();
    let first = body.lines().next().unwrap();
    // "time_us KIND index" lines in time order.
    assert_eq!(first.split_whitespace().count(), 3);
    assert!(body.lines().any(|l| l.contains("CODEC_CHUNK_DONE")));
}

#[test]
fn sweep_output_is_independent_of_worker_count() {
    let serial = run(&["sweep", "--input", "scenarios/sweep_flash.json", "--format", "csv"]);
    let threaded = run(&[
        "sweep",
        "--input",
        "scenarios/sweep_flash.json",
        "--format",
        "csv",
        "--set",
        "workers=3",
    ]);
    assert_eq!(serial.status.code(), Some(0));
    assert_eq!(threaded.status.code(), Some(0));
    assert_eq!(serial.stdout, threaded.stdout);
}

#[test]
fn sweep_reports_row_failures_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    std::fs::write(
        &path,
        r#"{
          "scenarios": [
            {"label": "ok", "manifest": {"segments": []}, "ratio": "2/1", "text_len": 4, "concurrency": 1},
            {"label": "missing-level", "manifest": {"segments": []}, "ratio": "2/1", "text_len": 4, "concurrency": 64}
          ],
          "stages": {"levels": {"1": {"thinker_ttft_ms": 10.0, "thinker_tpop_ms": 1.0, "talker_tpop_ms": 1.0}}}
        }"#,
    )
    .unwrap();
    let out = run(&["sweep", "--input", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["error"]["kind"], "DOMAIN");
    let violations = report["error"]["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1);
    assert!(violations[0]["path"].as_str().unwrap().contains("scenarios[1]"));
}

/// Malformed manifests must never crash the process: every mutation exits
/// 0 (still valid) or 1, and never panics.
#[test]
fn fuzzed_manifests_never_crash() {
    let seed_manifest = std::fs::read_to_string(
        workspace_root().join("manifests/av_8s.json"),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = StdRng::seed_from_u64(0xF022);
    for round in 0..200 {
        let mut bytes = seed_manifest.clone().into_bytes();
        for _ in 0..rng.gen_range(1..8) {
            match rng.gen_range(0..3) {
                0 => {
                    let i = rng.gen_range(0..bytes.len());
                    bytes[i] = rng.gen_range(0x20..0x7f);
                }
                1 => {
                    let i = rng.gen_range(0..bytes.len());
                    bytes.remove(i);
                }
                _ => {
                    let i = rng.gen_range(0..=bytes.len());
                    bytes.insert(i, rng.gen_range(0x20..0x7f));
                }
            }
        }
        let path = dir.path().join("m.json");
        std::fs::write(&path, &bytes).unwrap();
        let out = run(&["positions", "--input", path.to_str().unwrap()]);
        let code = out.status.code();
        assert!(
            matches!(code, Some(0) | Some(1)),
            "round {round}: exit {code:?} on {:?}",
            String::from_utf8_lossy(&bytes)
        );
        assert!(
            !String::from_utf8_lossy(&out.stderr).contains("panicked"),
            "round {round}: panic on {:?}",
            String::from_utf8_lossy(&bytes)
        );
    }
}
