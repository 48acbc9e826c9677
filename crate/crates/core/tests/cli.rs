//! Command-line surface: exit codes, file formats, CSV, determinism.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bcrk::aux_chain::{FactoredMarginal, RowSampler};
use bcrk::capacity_theorems::{pareto_filter, FrontierSample};
use bcrk::cli_io::{emit_frontier_csv, parse_frontier_csv, round_sig, AuxFile, ChannelFile, SourceFile};
use bcrk::prob_core::Alphabet;
use bcrk::search::restart_rng;
use common::*;
use rand::Rng;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bcrk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcrk"))
        .args(args)
        .env("BCRK_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn bsc_pair(dir: &Path) -> PathBuf {
    let ch = channel(&bsc(0.1), &bsc(0.2));
    write(dir, "bsc_pair.json", &serde_json::to_value(ChannelFile::from_spec(&ch)).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_bsc_pair() {
    let dir = TempDir::new().unwrap();
    let ch = bsc_pair(dir.path());
    let out = bcrk(&["classify", "--channel", s(&ch), "--budget", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["degraded"]["feasible"], json!(true));
    assert!(v["degraded"]["residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["more_capable"]["verdict"], json!("holds-up-to-search"));
    // cascade witness: BSC(0.1) followed by BSC(0.125) is BSC(0.2)
    let w = &v["degraded"]["witness"];
    assert!((w[0][1].as_f64().unwrap() - 0.125).abs() < 1e-8);
}

#[test]
fn common_part_of_identical_pair() {
    let dir = TempDir::new().unwrap();
    let src = write(dir.path(), "diag.json", &json!({"s_size": 2, "t_size": 2, "p_st": [[0.5, 0.0], [0.0, 0.5]]}));
    let out = bcrk(&["common-part", "--source", s(&src)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["entropies"]["hk"], json!(1.0));
    assert_eq!(v["markov"], json!(true));
}

#[test]
fn selftest_csiszar() {
    let out = bcrk(&["selftest", "csiszar", "--n", "2", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    for r in v["checks"][0]["residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() < 1e-9);
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(bcrk(&["bogus"]).status.code(), Some(1));
    assert_eq!(bcrk(&["classify"]).status.code(), Some(1));
    assert_eq!(bcrk(&["--help"]).status.code(), Some(0));

    let missing = bcrk(&["classify", "--channel", s(&dir.path().join("none.json"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(stdout_json(&missing)["error"]["kind"], json!("io"));

    let garbled = dir.path().join("bad.json");
    std::fs::write(&garbled, "{not json").unwrap();
    let out = bcrk(&["classify", "--channel", s(&garbled)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"]["kind"], json!("json"));

    let unnormalized = write(dir.path(), "u.json", &json!({"s_size": 1, "t_size": 2, "p_st": [[0.5, 0.6]]}));
    let out = bcrk(&["common-part", "--source", s(&unnormalized)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"]["kind"], json!("validation"));

    let ragged = write(dir.path(), "r.json", &json!({"s_size": 2, "t_size": 2, "p_st": [[0.5, 0.0], [0.5]]}));
    let out = bcrk(&["common-part", "--source", s(&ragged)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"]["kind"], json!("format"));

    // Theorem 3 needs a deterministic Y
    let ch = bsc_pair(dir.path());
    let out = bcrk(&["region", "--channel", s(&ch), "--theorem", "3", "--budget", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn searched_chains_feed_back_into_eval() {
    let dir = TempDir::new().unwrap();
    let ch = bsc_pair(dir.path());
    let src = write(dir.path(), "src.json", &json!({"s_size": 2, "t_size": 1, "p_st": [[0.9], [0.1]]}));
    let out = bcrk(&["inner-search", "--source", s(&src), "--channel", s(&ch), "--budget", "8", "--steps", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let aux = write(dir.path(), "aux.json", &v["chain"]);
    let out = bcrk(&["inner-eval", "--source", s(&src), "--channel", s(&ch), "--aux", s(&aux)]);
    assert_eq!(out.status.code(), Some(0));
    let e = stdout_json(&out);
    for (a, b) in e["entries"].as_array().unwrap().iter().zip(v["report"]["entries"].as_array().unwrap()) {
        let (a, b) = (a["slack"].as_f64().unwrap(), b["slack"].as_f64().unwrap());
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    let out = bcrk(&["outer-scan", "--source", s(&src), "--channel", s(&ch), "--budget", "4", "--steps", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let aux = write(dir.path(), "oaux.json", &v["chain"]);
    for theorem in ["1", "2"] {
        let out = bcrk(&["outer-eval", "--source", s(&src), "--channel", s(&ch), "--aux", s(&aux), "--theorem", theorem]);
        assert_eq!(out.status.code(), Some(0));
    }
    // an outer chain is not an inner chain
    let out = bcrk(&["inner-eval", "--source", s(&src), "--channel", s(&ch), "--aux", s(&aux)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn region_with_constant_z_has_zero_private_rate() {
    let dir = TempDir::new().unwrap();
    let ch = channel(&bsc(0.1), &vec![vec![1.0], vec![1.0]]);
    let chf = write(dir.path(), "c.json", &serde_json::to_value(ChannelFile::from_spec(&ch)).unwrap());
    let csv_path = dir.path().join("f.csv");
    let out = bcrk(&["region", "--channel", s(&chf), "--theorem", "4", "--budget", "2", "--steps", "100", "--csv", s(&csv_path)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(stdout_json(&out)["csv"], json!(text));
    let (tags, rows) = parse_frontier_csv(&text).unwrap();
    assert_eq!(tags, ["33", "34", "35"]);
    assert!(text.starts_with("label,rhs_33,rhs_34,rhs_35\n"));
    for (_, r) in &rows {
        assert_eq!(r[1], 0.0);
    }
}

fn dummy_sample(rhs: Vec<f64>) -> FrontierSample {
    let mut rng = restart_rng(0, 0);
    FrontierSample {
        labels: (1..=rhs.len()).map(|i| i.to_string()).collect(),
        weights: vec![1.0 / rhs.len() as f64; rhs.len()],
        aux: FactoredMarginal::sample(vec![Alphabet::new("W", 2).unwrap()], 2, RowSampler::Dirichlet, &mut rng).unwrap(),
        rhs,
    }
}

#[test]
fn single_sample_csv_round_trips() {
    let text = emit_frontier_csv(&[dummy_sample(vec![1.0 / 3.0, 0.25])]).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next().unwrap(), "label,rhs_1,rhs_2");
    let (_, rows) = parse_frontier_csv(&text).unwrap();
    assert_eq!(rows[0].1, vec![round_sig(1.0 / 3.0), 0.25]);
    assert!((rows[0].1[0] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn pareto_sweep_is_a_staircase() {
    let mut rng = restart_rng(5, 0);
    let pts: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    let kept = pareto_filter(pts.iter().cloned().map(dummy_sample).collect());
    assert!(!kept.is_empty() && kept.len() <= 100);
    let dominated = |a: &[f64], b: &[f64]| b[0] >= a[0] && b[1] >= a[1] && (b[0] > a[0] || b[1] > a[1]);
    for p in &pts {
        let in_kept = kept.iter().any(|k| k.rhs == *p);
        let beaten = pts.iter().any(|q| dominated(p, q));
        assert_eq!(in_kept, !beaten);
    }
    for w in kept.windows(2) {
        assert!(w[0].rhs[0] < w[1].rhs[0] && w[0].rhs[1] > w[1].rhs[1]);
    }
    let text = emit_frontier_csv(&kept).unwrap();
    let (_, rows) = parse_frontier_csv(&text).unwrap();
    assert_eq!(rows.len(), kept.len());
    for ((_, r), k) in rows.iter().zip(&kept) {
        for (a, b) in r.iter().zip(&k.rhs) {
            assert!(((a - b) / b).abs() < 1e-11);
        }
    }
}

#[test]
fn file_types_round_trip() {
    for seed in 0..20 {
        let src = random_source(seed, 3);
        let f = SourceFile::from_spec(&src);
        let again: SourceFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(again, f);
        assert_eq!(again.to_spec().unwrap().pst(), src.pst());

        let ch = random_channel(seed, 3);
        let f = ChannelFile::from_spec(&ch);
        let again: ChannelFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(again.to_spec().unwrap(), ch);

        let mut rng = restart_rng(seed, 9);
        let x = ch.x_alpha().size();
        let caps = bcrk::aux_chain::InnerCaps { w: 2, u: 2, v: 1 };
        let inner = bcrk::aux_chain::sample_inner(&src, caps, x, RowSampler::Dirichlet, &mut rng).unwrap();
        let f = AuxFile::from_inner(&inner);
        let again: AuxFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(again.to_inner(&src).unwrap(), inner);

        let ocaps = bcrk::aux_chain::OuterCaps { u: 2, v: 2 };
        let outer = bcrk::aux_chain::sample_outer(&src, ocaps, x, seed % 2 == 0, RowSampler::Dirichlet, &mut rng).unwrap();
        let f = AuxFile::from_outer(&outer);
        let again: AuxFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(again.to_outer(&src).unwrap(), outer);
    }
}

#[test]
fn in_process_run_matches_binary() {
    let dir = TempDir::new().unwrap();
    let ch = bsc_pair(dir.path());
    let args = ["bcrk", "classify", "--channel", s(&ch), "--budget", "5", "--seed", "3"];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = bcrk::cli_io::run(args, &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(out, bcrk(&args[1..]).stdout);
}
