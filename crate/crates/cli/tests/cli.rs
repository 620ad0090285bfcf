use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use nodal_core::surgery::parametrized_hamiltonian;
use nodal_core::{Edge, Graph, Hamiltonian, Potential};

const C4_GENERIC: &str =
    r#"{"vertices": 4, "edges": [[0,1],[1,2],[2,3],[3,0]], "potential": [0.13, -0.41, 0.37, 0.05]}"#;

fn nodal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn single_edge_spectrum() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "edge.json", r#"{"vertices": 2, "edges": [[0, 1]], "potential": [0, 0]}"#);
    let out = nodal(&["spectrum", arg(&g)]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines[0]["command"], "spectrum");
    assert_eq!(lines[1]["eigenvalues"], serde_json::json!([-1.0, 1.0]));
    assert_eq!(lines[1]["degenerate_pairs"], serde_json::json!([]));
}

#[test]
fn four_cycle_without_potential_is_degenerate_at_zero() {
    let dir = TempDir::new().unwrap();
    let g = write(
        &dir,
        "c4.json",
        r#"{"vertices": 4, "edges": [[0,1],[1,2],[2,3],[3,0]], "potential": [0, 0, 0, 0]}"#,
    );
    let out = nodal(&["spectrum", arg(&g)]);
    assert!(out.status.success());
    let body = &json_lines(&out)[1];
    let pairs = body["degenerate_pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 1);
    assert_eq!(pairs[0]["n"], 2);
    assert!(pairs[0]["lambda"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{bad");
    assert_eq!(nodal(&["spectrum", arg(&bad)]).status.code(), Some(2));
    let unknown = write(&dir, "unknown.json", r#"{"vertices": 2, "edges": [[0,1]], "potential": [0,0], "colour": 1}"#);
    assert_eq!(nodal(&["spectrum", arg(&unknown)]).status.code(), Some(2));
    let looped = write(&dir, "loop.json", r#"{"vertices": 2, "edges": [[0,0]], "potential": [0,0]}"#);
    assert_eq!(nodal(&["spectrum", arg(&looped)]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(nodal(&["spectrum", arg(&missing)]).status.code(), Some(2));
}

#[test]
fn ensemble_checks_pass() {
    for args in [
        ["verify", "--check", "iru", "--count", "20", "--seed", "5", "--family", "erdos-renyi-connected"],
        ["verify", "--check", "bounds", "--count", "20", "--seed", "5", "--family", "tree"],
        ["verify", "--check", "surgery", "--count", "10", "--seed", "5", "--family", "cycle-plus-chords"],
    ] {
        let out = nodal(&args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
        let lines = json_lines(&out);
        let summary = &lines.last().unwrap()["summary"];
        assert_eq!(summary["passed"], true);
        assert_eq!(summary["total"]["fail"], 0);
        assert!(summary["total"]["pass"].as_u64().unwrap() > 0);
    }
}

#[test]
fn sweep_marks_the_critical_alpha() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "c4.json", C4_GENERIC);
    let out = nodal(&["sweep", arg(&g), "--edge", "0", "1", "--branch", "1", "--alpha-range", "0.01", "100", "--points", "50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(2).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 50);
    let marked: Vec<usize> = (0..rows.len()).filter(|&k| !rows[k][4].is_empty()).collect();
    assert_eq!(marked.len(), 1);
    let k = marked[0];
    let alpha_c: f64 = rows[k][5].parse().unwrap();
    // the derivative changes sign between the neighbouring samples
    let d = |r: &Vec<&str>| r[2].parse::<f64>().unwrap();
    let a = |r: &Vec<&str>| r[0].parse::<f64>().unwrap();
    let (lo, hi) = if a(&rows[k]) < alpha_c { (k, k + 1) } else { (k - 1, k) };
    assert!(a(&rows[lo]) < alpha_c && alpha_c < a(&rows[hi]));
    assert!(d(&rows[lo]) * d(&rows[hi]) < 0.0);
    // at the critical point the branch touches an eigenvalue of G
    let graph = Graph::cycle(4);
    let h = Hamiltonian::new(&graph, &Potential(vec![0.13, -0.41, 0.37, 0.05])).unwrap();
    let lambda_c = parametrized_hamiltonian(&h, Edge::new(0, 1), alpha_c)
        .unwrap()
        .spectrum()
        .unwrap()
        .value(1);
    let s = h.spectrum().unwrap();
    assert!(s.values().iter().any(|l| (l - lambda_c).abs() < 1e-9));
}

#[test]
fn empty_sweep_range_is_rejected() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "c4.json", C4_GENERIC);
    let out = nodal(&["sweep", arg(&g), "--edge", "0", "1", "--branch", "1", "--alpha-range", "1", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = nodal(&["sweep", arg(&g), "--edge", "0", "2", "--branch", "1", "--alpha-range", "1", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_deterministic_apart_from_the_header() {
    let run = || {
        let out = nodal(&["verify", "--check", "iru", "--check", "bounds", "--count", "15", "--seed", "9"]);
        assert!(out.status.success());
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .skip(1)
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
    let single = nodal(&["verify", "--check", "iru", "--count", "15", "--seed", "9", "--jobs", "1"]);
    let multi = nodal(&["verify", "--check", "iru", "--count", "15", "--seed", "9", "--jobs", "3"]);
    assert_eq!(single.stdout, multi.stdout);
}

#[test]
fn generate_then_read_back() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("ensemble.jsonl");
    let out = nodal(&["generate", "--count", "3", "--seed", "4", "--out", arg(&path)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    let graph = serde_json::to_string(&lines[1]["graph"]).unwrap();
    let g = write(&dir, "first.json", &graph);
    assert!(nodal(&["spectrum", arg(&g)]).status.success());
}
