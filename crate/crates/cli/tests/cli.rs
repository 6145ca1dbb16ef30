//! End-to-end runs of the `qmem` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn qmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmem")).args(args).env_remove("QMEM_SDP_TOL").output().expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = qmem(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_for_every_subcommand() {
    assert!(qmem(&["--help"]).status.success());
    for sub in ["robustness", "game", "sweep", "decompose", "sample", "synthesize", "dd", "ingest"] {
        let out = qmem(&[sub, "--help"]);
        assert!(out.status.success(), "{sub}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{sub}");
    }
}

#[test]
fn usage_errors_name_the_flag() {
    let out = qmem(&["robustness", "--chanel", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--chanel"));
    let out = qmem(&["sample", "--channel", "a", "--state", "b", "--observable", "c", "--shots", "many"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--shots"));
}

#[test]
fn robustness_of_shipped_channels() {
    let id2 = data("channels/identity2.json");
    for method in ["eig", "sdp", "sdp-gen", "moment"] {
        let v = json_ok(&["robustness", "--channel", p(&id2), "--method", method]);
        let want = if method == "moment" { 2f64.sqrt() - 1.0 } else { 1.0 };
        assert!((v["value"].as_f64().unwrap() - want).abs() < 1e-6, "{method}: {v}");
    }
    let v = json_ok(&["robustness", "--channel", p(&data("channels/identity3.json")), "--method", "sdp"]);
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(v["synthesis_cost"], 2);
    assert!(v["diagnostics"]["iterations"].as_u64().unwrap() > 0);
    let v = json_ok(&["robustness", "--channel", p(&data("channels/erasure_p0.50.json"))]);
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-5);

    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    json_ok(&["robustness", "--channel", p(&id2), "--sdp-trace", p(&trace)]);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.lines().count() > 2 && text.starts_with("iteration,"), "{text}");
}

#[test]
fn games_on_channels() {
    let deph = data("channels/dephasing_p0.75.json");
    let v = json_ok(&["game", "--game", p(&data("games/depolarizing.json")), "--channel", p(&deph)]);
    assert!((v["payoff"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    assert_eq!(v["normalized"], true);
    let v = json_ok(&["game", "--canned", "damping", "--p", "0.5", "--channel", p(&data("channels/damping_p0.50.json"))]);
    assert!((v["payoff"].as_f64().unwrap() - 1.3090).abs() < 1e-3);
    let out = qmem(&["game", "--canned", "damping", "--channel", p(&deph)]);
    assert_eq!(out.status.code(), Some(2));
    let out = qmem(&["game", "--canned", "erasure", "--channel", p(&deph)]);
    assert_eq!(out.status.code(), Some(2), "dimension mismatch");
}

#[test]
fn sweep_writes_csv() {
    let out = qmem(&["sweep", "--family", "depolarizing", "--steps", "4", "--methods", "eig,sdp"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,method,value,is_exact,wall_time_s"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        let p: f64 = r[0].parse().unwrap();
        let v: f64 = r[2].parse().unwrap();
        assert!((v - ((3.0 * p - 1.0) / 2.0).max(0.0)).abs() < 1e-6, "{r:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let v = json_ok(&["sweep", "--family", "erasure", "--from", "0.5", "--to", "1", "--steps", "2", "--methods", "sdp", "--out", p(&path)]);
    assert_eq!(v["rows"], 3);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
    assert_eq!(qmem(&["sweep", "--family", "warp", "--steps", "2"]).status.code(), Some(2));
}

#[test]
fn decompose_sample_synthesize() {
    let deph = data("channels/dephasing_p0.75.json");
    let dir = tempfile::tempdir().unwrap();
    let plus = dir.path().join("plus.json");
    let minus = dir.path().join("minus.json");
    let v = json_ok(&["decompose", "--channel", p(&deph), "--out-plus", p(&plus), "--out-minus", p(&minus)]);
    assert!((v["overhead"].as_f64().unwrap() - 4.0).abs() < 1e-5);
    assert_eq!(v["classical_certified"], true);
    for f in [&plus, &minus] {
        json_ok(&["robustness", "--channel", p(f), "--method", "eig"]);
    }

    let (state, obs) = (data("plus_state.json"), data("pauli_x.json"));
    let args = ["sample", "--channel", p(&deph), "--state", p(&state), "--observable", p(&obs), "--shots", "20000", "--seed", "3"];
    let a = json_ok(&args);
    let b = json_ok(&args);
    assert_eq!(a, b);
    let est = a["estimate"].as_f64().unwrap();
    assert!((est - 0.5).abs() < 5.0 * a["std_error"].as_f64().unwrap(), "{a}");

    let v = json_ok(&["synthesize", "--channel", p(&data("channels/identity3.json"))]);
    assert_eq!(v["probe_dimension"], 3);
    assert_eq!(v["qubits"], 2);
    let v = json_ok(&["synthesize", "--channel", p(&data("channels/depolarizing_p0.50.json"))]);
    assert_eq!(v["probe_dimension"], 2);
}

#[test]
fn dd_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dd.csv");
    let pulsed = json_ok(&["dd", "--steps", "200", "--out", p(&path)]);
    let free = json_ok(&["dd", "--steps", "200", "--no-pulses"]);
    let ratio = pulsed["robustness_at_0.8"].as_f64().unwrap() / free["robustness_at_0.8"].as_f64().unwrap();
    assert!(ratio >= 3.0, "{ratio}");
    assert!(free["non_markovianity"].as_f64().unwrap() > 0.0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("t,robustness,non_markovianity,label"));
    assert_eq!(text.lines().count(), 202);
    assert_eq!(qmem(&["dd", "--steps", "1"]).status.code(), Some(2));
}

#[test]
fn ingest_shipped_counts() {
    let v = json_ok(&["ingest", "--counts", p(&data("counts/dephasing_ibmq_p1.00.json"))]);
    assert!((v["score"].as_f64().unwrap() - 1.8278).abs() < 1e-3);
    let v = json_ok(&["ingest", "--counts", p(&data("counts/erasure_ibmq_p1.00.json"))]);
    assert!((v["score"].as_f64().unwrap() - 1.8845).abs() < 1e-3);
    assert!(v["std"].as_f64().unwrap() > 0.0);
}

#[test]
fn error_exit_codes() {
    let out = qmem(&["robustness", "--channel", "/nonexistent/channel.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"d_in\": 2,\n  \"d_out\": 2, \"kraus\": [[[1, 0], [0]]]}").unwrap();
    let out = qmem(&["robustness", "--channel", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_qmem"))
        .args(["robustness", "--channel", p(&data("channels/identity2.json"))])
        .env("QMEM_SDP_TOL", "bad")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("QMEM_SDP_TOL"));

    let big = dir.path().join("identity5.json");
    let rows: Vec<String> = (0..5).map(|i| format!("[{}]", (0..5).map(|j| if i == j { "1" } else { "0" }).collect::<Vec<_>>().join(", "))).collect();
    std::fs::write(&big, format!("{{\"d_in\": 5, \"d_out\": 5, \"kraus\": [[{}]]}}", rows.join(", "))).unwrap();
    let out = qmem(&["robustness", "--channel", p(&big), "--method", "sdp"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_ok(&["robustness", "--channel", p(&big), "--method", "eig"]);
    assert!((v["value"].as_f64().unwrap() - 4.0).abs() < 1e-9);
}
