use std::path::Path;
use std::process::{Command, Output};

use hyperdev::io::DecompositionJson;
use hyperdev::tensor::TensorJson;
use hyperdev::{tail_exact_enum, ErModel, RGraph, Status, SymTensor, TailEstimate, TailProblem};
use serde_json::Value;

fn hyperdev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperdev")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn write_tensor(dir: &Path, name: &str, t: &SymTensor) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&t.to_json()).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn delta_prime_values() {
    for (graph, want) in [("clique:4:2", "4"), ("fano", "3"), ("fig1", "2"), ("star:3:3", "4/3")] {
        let v = stdout_json(&hyperdev(&["delta-prime", graph]));
        assert_eq!(v["value"], want, "{graph}");
        assert!(!v["per_edge"].as_array().unwrap().is_empty());
    }
}

#[test]
fn delta_prime_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let h = RGraph::builtin("cycle:5").unwrap();
    std::fs::write(&path, serde_json::to_string(&h).unwrap()).unwrap();
    let v = stdout_json(&hyperdev(&["delta-prime", path.to_str().unwrap()]));
    assert_eq!(v["value"], "3");
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = hyperdev(&["delta-prime", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = hyperdev(&["hom", "clique:3:2", "--tensor", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = hyperdev(&["delta-prime", "nonsense:1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_suite_exits_2() {
    let out = hyperdev(&["verify", "nope", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sidorenko"));
}

#[test]
fn randomized_methods_need_seed() {
    let out = hyperdev(&["tail", "--graph", "clique:3:2", "--delta", "0.2", "--n", "5", "--p", "0.5", "--method", "mc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_sidorenko_passes() {
    let v = stdout_json(&hyperdev(&["verify", "sidorenko", "--seed", "3"]));
    assert_eq!(v["passed"], true);
}

#[test]
fn phi_k2_is_constant() {
    let v = stdout_json(&hyperdev(&["phi", "--graph", "clique:2:2", "--delta", "1", "--n", "10", "--p", "0.2", "--seed", "1"]));
    let (n, p, delta) = (10.0f64, 0.2f64, 1.0f64);
    let q = (1.0 + delta) * p * n / (n - 1.0);
    let want = 45.0 * (q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln());
    let got = v["value"].as_f64().unwrap();
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
}

#[test]
fn tail_exact_matches_library() {
    let out = hyperdev(&["tail", "--graph", "clique:3:2", "--delta", "0.2", "--n", "5", "--p", "0.5"]);
    let est: TailEstimate = serde_json::from_slice(&out.stdout).unwrap();
    let pr = TailProblem::upper(&RGraph::builtin("clique:3:2").unwrap(), 5, 0.5, 0.2).unwrap();
    assert_eq!(est, tail_exact_enum(&pr).unwrap());
}

#[test]
fn tail_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tail.json");
    let out = hyperdev(&[
        "tail", "--graph", "clique:2:2", "--delta", "0.5", "--n", "6", "--p", "0.3", "--method", "mc", "--samples",
        "2000", "--seed", "9", "-o", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let est: TailEstimate = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(est.samples, 2000);
    assert_eq!(est.seed, Some(9));
}

#[test]
fn hom_counts_triangles() {
    let dir = tempfile::tempdir().unwrap();
    let k4 = SymTensor::jay(4, 2).unwrap();
    let path = write_tensor(dir.path(), "k4.json", &k4);
    let v = stdout_json(&hyperdev(&["hom", "clique:3:2", "--tensor", &path]));
    assert_eq!(v["hom"].as_f64().unwrap(), 24.0);
}

#[test]
fn decompose_full_tensor_converges() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tensor(dir.path(), "j.json", &SymTensor::jay(5, 2).unwrap());
    let out = hyperdev(&["decompose", "--tensor", &path, "--base", "matrix:2", "--p", "1", "--eps", "0.1", "--kappa", "1"]);
    let res: DecompositionJson = serde_json::from_slice(&out.stdout).unwrap();
    assert!(out.status.success());
    assert_eq!(res.status, Status::Converged);
    assert!(res.tests.is_empty());
}

#[test]
fn decompose_tiny_kappa_exhausts_budget() {
    let dir = tempfile::tempdir().unwrap();
    let a = ErModel::scalar(8, 2, 0.4).unwrap().sample(11);
    let path = write_tensor(dir.path(), "a.json", &a);
    let out = hyperdev(&["decompose", "--tensor", &path, "--base", "matrix:2", "--p", "0.4", "--eps", "0.1", "--kappa", "1e-6"]);
    let res: DecompositionJson = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(res.status, Status::BudgetExhausted);
    assert!(res.verification.unwrap().all_pass());
    assert!(out.status.success());
}

#[test]
fn norm_round_trips_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let a = ErModel::scalar(6, 2, 0.5).unwrap().sample(2);
    let path = write_tensor(dir.path(), "a.json", &a);
    let v = stdout_json(&hyperdev(&["norm", "--tensor", &path, "--base", "matrix:2", "--p", "0.5", "--centered"]));
    let cert: hyperdev::io::CertificateJson = serde_json::from_value(v).unwrap();
    let wb = hyperdev::io::load_base("matrix:2").unwrap();
    let back = cert.to_certificate(6, &wb).unwrap();
    let z = a.map(|x| x - 0.5).to_dense();
    assert!((back.recompute(&z, 0.5).unwrap() - cert.value).abs() < 1e-12);
}

#[test]
fn tensor_json_round_trip() {
    let a = ErModel::scalar(5, 3, 0.5).unwrap().sample(4);
    let j: TensorJson = serde_json::from_str(&serde_json::to_string(&a.to_json()).unwrap()).unwrap();
    assert_eq!(SymTensor::from_json(&j).unwrap(), a);
}
