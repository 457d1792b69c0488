//! End-to-end tests of the `ia-workbench` binary: exit codes, report
//! shapes, CSV series and the replay round trip.

use std::path::Path;
use std::process::{Command, Output};

fn workbench(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ia-workbench"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json_stdout(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn dof_prints_the_symmetric_value() {
    let dir = tempdir();
    let output = workbench(&["dof", "--M", "3", "--N", "3", "--A", "2"], dir.path());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("18/5"), "missing value in: {text}");
    let json = json_stdout(&output);
    assert_eq!(json["outer_bound"], "18/5");
    assert_eq!(json["invocation"]["subcommand"], "dof");
}

#[test]
fn properness_matches_the_worked_example() {
    let dir = tempdir();
    let output = workbench(
        &[
            "properness",
            "--M",
            "2",
            "--N",
            "2",
            "--A",
            "2",
            "--B",
            "3",
            "--d",
            "1",
        ],
        dir.path(),
    );
    let json = json_stdout(&output);
    assert_eq!(json["N_e"], 8);
    assert_eq!(json["N_v"], 8);
    assert_eq!(json["proper"], true);
}

#[test]
fn cj_verify_passes_and_dumps_channels() {
    let dir = tempdir();
    let dump = dir.path().join("channels.json");
    let output = workbench(
        &[
            "cj-verify",
            "--M",
            "3",
            "--N",
            "2",
            "--m",
            "3",
            "--seed",
            "5",
            "--dump-channels",
            dump.to_str().unwrap(),
        ],
        dir.path(),
    );
    let json = json_stdout(&output);
    assert_eq!(json["pass"], true);
    assert_eq!(json["misses"], 0);

    let channels: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    // One series per (receiver, transmitter, antenna), n entries each.
    assert_eq!(channels.as_object().unwrap().len(), 2 * 3);
    assert_eq!(channels["1/2/0"].as_array().unwrap().len(), 7);
}

#[test]
fn separability_campaign_exit_codes_and_csv() {
    let dir = tempdir();
    let csv = dir.path().join("seeds.csv");
    let output = workbench(
        &[
            "separability",
            "--M",
            "2",
            "--N",
            "2",
            "--R",
            "1",
            "--m",
            "2",
            "--seeds",
            "10",
            "--csv",
            csv.to_str().unwrap(),
        ],
        dir.path(),
    );
    let json = json_stdout(&output);
    assert_eq!(json["passes"], 10);
    assert_eq!(json["pass"], true);

    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("seed,sigma_min,sigma_max,ratio,full_rank"));
    assert_eq!(table.lines().count(), 11);

    // An inadmissible degree is a usage error: exit 2 with a hint.
    let output = workbench(
        &[
            "separability",
            "--M",
            "3",
            "--N",
            "2",
            "--R",
            "2",
            "--m",
            "7",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("smallest admissible m is 8"),
        "stderr: {stderr}"
    );
}

#[test]
fn ia_solve_traces_and_verdicts() {
    let dir = tempdir();
    let trace = dir.path().join("trace.csv");
    let output = workbench(
        &[
            "ia-solve",
            "--M",
            "2",
            "--N",
            "2",
            "--A",
            "2",
            "--B",
            "3",
            "--d",
            "1",
            "--restarts",
            "2",
            "--trace",
            trace.to_str().unwrap(),
        ],
        dir.path(),
    );
    let json = json_stdout(&output);
    assert_eq!(json["verdict"], "FEASIBLE_EVIDENCE");
    assert_eq!(json["properness"]["proper"], true);

    let series = std::fs::read_to_string(&trace).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("restart,iteration,leakage"));
    assert!(lines.next().unwrap().starts_with("0,0,"));
}

#[test]
fn sweep_emits_the_table() {
    let dir = tempdir();
    let output = workbench(
        &[
            "sweep", "--M", "2:3", "--N", "2:2", "--R", "1:1", "--A", "1:2", "--csv", "-",
        ],
        dir.path(),
    );
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    // JSON report first, then the CSV block on stdout.
    assert!(text.contains("M,N,R,A,outer,achievable"));
    assert!(text.contains("2,2,1,1,4/3,4/3"));
    assert!(text.contains("2,2,1,2,8/3,8/3"));
}

#[test]
fn replay_round_trip_is_bit_identical() {
    let dir = tempdir();
    let first = dir.path().join("report.json");
    let second = dir.path().join("replayed.json");
    let output = workbench(
        &[
            "separability",
            "--M",
            "3",
            "--N",
            "2",
            "--m",
            "3",
            "--seeds",
            "5",
            "--seed",
            "9",
            "--out",
            first.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(output.status.success());

    let output = workbench(
        &[
            "--replay",
            first.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(output.status.success());
    assert_eq!(
        std::fs::read_to_string(&first).unwrap(),
        std::fs::read_to_string(&second).unwrap()
    );
}

#[test]
fn unknown_flags_are_usage_errors() {
    let dir = tempdir();
    let output = workbench(&["dof", "--M", "3", "--N", "3", "--Q", "1"], dir.path());
    assert_eq!(output.status.code(), Some(2));

    let output = workbench(&["dof", "--M", "3", "--N", "3"], dir.path());
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("--A") && stderr.contains("--R"),
        "stderr: {stderr}"
    );
}

struct TempDir(std::path::PathBuf);

impl TempDir {
    fn path(&self) -> &Path {
        &self.0
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn tempdir() -> TempDir {
    let base = std::env::temp_dir().join(format!(
        "ia-workbench-test-{}-{:?}",
        std::process::id(),
        std::thread::current().id()
    ));
    std::fs::create_dir_all(&base).unwrap();
    TempDir(base)
}
