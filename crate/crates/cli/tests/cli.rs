use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_retroplan");

const REACTIONS: &str = "\
CC(=O)OCC\tCC(=O)O.CCO\t6
CC(=O)OCC\tCC(=O)Cl.CCO\t3
CC(=O)Nc1ccccc1\tCC(=O)Cl.Nc1ccccc1\t2
CC(=O)Nc1ccccc1\tCC(=O)O.Nc1ccccc1\t1
CCOC(=O)c1ccccc1\tCCO.O=C(O)c1ccccc1\t4
";

const STOCK: &str = "CCO\nCC(=O)O\nCC(=O)Cl\nNc1ccccc1\nO=C(O)c1ccccc1\n";

const TARGETS: &str = "CCOC(C)=O\nCC(=O)Nc1ccccc1\nCCOC(=O)c1ccccc1\n";

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("rxn.tsv"), REACTIONS).unwrap();
        std::fs::write(dir.path().join("stock.smi"), STOCK).unwrap();
        std::fs::write(dir.path().join("targets.smi"), TARGETS).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN).args(args).current_dir(self.dir.path()).output().unwrap()
    }

    fn json(&self, args: &[&str]) -> Value {
        let out = self.run(args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    }

    fn batch(&self, out: &str) -> Value {
        self.json(&["batch", "--targets", "targets.smi", "--stock", "stock.smi", "--reactions", "rxn.tsv", "--out", out])
    }
}

fn lines(p: &Path) -> usize {
    std::fs::read_to_string(p).unwrap().lines().count()
}

#[test]
fn plan_prints_routes() {
    let f = Fixture::new();
    let v = f.json(&["plan", "--target", "CCOC(C)=O", "--stock", "stock.smi", "--reactions", "rxn.tsv"]);
    assert_eq!(v["solved"], true);
    assert_eq!(v["n_solved_routes"], 2);
    assert_eq!(v["routes"][0]["route"]["children"][0]["metadata"]["rank"], 1);
    assert_eq!(v["config"]["iteration_limit"], 200);
}

#[test]
fn unsolved_is_not_an_error() {
    let f = Fixture::new();
    let v = f.json(&["plan", "--target", "CCCCCC", "--stock", "stock.smi", "--predictor", "table:rxn.tsv"]);
    assert_eq!(v["solved"], false);
    assert_eq!(v["termination"], "exhausted");
}

#[test]
fn config_echo_and_overrides() {
    let f = Fixture::new();
    let base = ["plan", "--target", "CCO", "--stock", "stock.smi", "--reactions", "rxn.tsv"];
    let v = f.json(&base);
    let c = &v["config"];
    assert_eq!((c["iteration_limit"].as_u64(), c["top_k"].as_u64(), c["max_depth"].as_u64()), (Some(200), Some(50), Some(7)));
    assert_eq!(c["time_limit_s"].as_f64(), Some(28800.0));
    let v = f.json(&[&base[..], &["--paroutes"]].concat());
    assert_eq!(v["config"]["max_depth"], 10);

    std::fs::write(f.path("c.json"), r#"{"iteration_limit": 5, "top_k": 3}"#).unwrap();
    let v = f.json(&[&base[..], &["--config", "c.json", "--top-k", "9"]].concat());
    assert_eq!((v["config"]["iteration_limit"].as_u64(), v["config"]["top_k"].as_u64()), (Some(5), Some(9)));

    std::fs::write(f.path("bad.json"), r#"{"iteration_limt": 5}"#).unwrap();
    assert_eq!(f.run(&[&base[..], &["--config", "bad.json"]].concat()).status.code(), Some(2));
    assert_eq!(f.run(&[&base[..], &["--top-k", "0"]].concat()).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    assert_eq!(f.run(&["plan", "--target", "CCO", "--stock", "nope.smi", "--reactions", "rxn.tsv"]).status.code(), Some(2));
    assert_eq!(f.run(&["plan", "--target", "CCO", "--stock", "stock.smi"]).status.code(), Some(2));
    assert_eq!(f.run(&["plan", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(f.run(&[]).status.code(), Some(2));
    assert_eq!(f.run(&["plan", "--target", "C1CC", "--stock", "stock.smi", "--reactions", "rxn.tsv"]).status.code(), Some(1));
    assert_eq!(f.run(&["plan", "--target", "CCO", "--stock", "stock.smi", "--predictor", "http://x"]).status.code(), Some(2));
    std::fs::write(f.path("broken.tsv"), "CCO\n").unwrap();
    assert_eq!(f.run(&["plan", "--target", "CCO", "--stock", "stock.smi", "--reactions", "broken.tsv"]).status.code(), Some(1));
}

#[test]
fn every_subcommand_has_help() {
    let f = Fixture::new();
    for sub in [
        "plan", "batch", "eval-routes", "eval-single-step", "cluster-routes", "cluster-mols", "stats", "subsample",
        "export-stock",
    ] {
        let out = f.run(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("Usage:") && text.contains("--"), "{sub}");
    }
}

#[test]
fn batch_writes_one_line_per_target() {
    let f = Fixture::new();
    let v = f.batch("results.jsonl");
    assert_eq!(lines(&f.path("results.jsonl")), 3);
    assert_eq!(v["summary"]["computed"], 3);
    assert_eq!(v["metrics"]["success_rate"], 100.0);
    assert_eq!(v["config"]["max_depth"], 7);
    let again = f.batch("results.jsonl");
    assert_eq!(again["summary"]["skipped"], 3);
    assert_eq!(lines(&f.path("results.jsonl")), 3);
}

#[test]
fn eval_routes_with_planted_gold() {
    let f = Fixture::new();
    f.batch("results.jsonl");
    let gold = r#"[
      {"type":"mol","smiles":"CCOC(C)=O","children":[{"type":"reaction","children":[
        {"type":"mol","smiles":"CCO","in_stock":true},{"type":"mol","smiles":"CC(=O)O","in_stock":true}]}]},
      {"type":"mol","smiles":"CC(=O)Nc1ccccc1","children":[{"type":"reaction","children":[
        {"type":"mol","smiles":"CC(=O)Cl","in_stock":true},{"type":"mol","smiles":"Nc1ccccc1","in_stock":true}]}]}
    ]"#;
    std::fs::write(f.path("gold.json"), gold).unwrap();
    let v = f.json(&["eval-routes", "--results", "results.jsonl", "--gold", "gold.json", "--top-n", "1,5"]);
    let acc = &v["accuracy"];
    assert_eq!(acc["route_accuracy"][0]["percent"], 100.0);
    assert_eq!(acc["building_block_accuracy"][0]["percent"], 100.0);
    assert_eq!(acc["route_accuracy"][1]["n"], 5);
}

#[test]
fn single_step_self_recall() {
    let f = Fixture::new();
    let v = f.json(&["eval-single-step", "--predictor", "table:rxn.tsv", "--reactions", "rxn.tsv"]);
    let acc = v["report"]["accuracy"].as_array().unwrap();
    assert_eq!(acc.len(), 5);
    assert_eq!(acc[4]["percent"], 100.0);
    assert_eq!(acc[0]["hits"], 3);
}

#[test]
fn stats_subsample_and_determinism() {
    let f = Fixture::new();
    f.batch("results.jsonl");
    let v = f.json(&["stats", "--results", "results.jsonl", "--prior-rank"]);
    assert_eq!(v["metrics"]["n_targets"], 3);
    assert_eq!(v["terminations"]["exhausted"], 3);
    assert_eq!(v["prior_rank"]["total"], 5);
    let sub = ["subsample", "--results", "results.jsonl", "--size", "2", "--repetitions", "50", "--seed", "4"];
    let a = f.run(&sub);
    let b = f.run(&sub);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let full = f.json(&["subsample", "--results", "results.jsonl", "--size", "3", "--repetitions", "7"]);
    assert_eq!(full["report"]["metrics"]["success_rate"]["std"], 0.0);
    assert_eq!(f.run(&["subsample", "--results", "results.jsonl", "--size", "4"]).status.code(), Some(2));
}

#[test]
fn route_and_molecule_clustering() {
    let f = Fixture::new();
    f.batch("a.jsonl");
    f.batch("b.jsonl");
    let v = f.json(&["cluster-routes", "--results", "A=a.jsonl", "--results", "B=b.jsonl", "--cutoff", "0.5"]);
    assert_eq!(v["models"], serde_json::json!(["A", "B"]));
    assert_eq!(v["targets"].as_array().unwrap().len(), 3);
    // identical inputs: every cluster holds both models
    assert_eq!(v["overlap"]["A"], 0);
    assert_eq!(v["overlap"]["B"], 0);
    assert!(v["overlap"]["A+B"].as_u64().unwrap() >= 3);
    assert_eq!(f.run(&["cluster-routes", "--results", "a.jsonl"]).status.code(), Some(2));

    let m = f.json(&["cluster-mols", "--targets", "stock.smi", "--cutoff", "0.0"]);
    assert_eq!(m["n_molecules"], 5);
    assert_eq!(m["n_clusters"], 5);
    let m = f.json(&["cluster-mols", "--targets", "stock.smi", "--cutoff", "1.0"]);
    assert_eq!(m["n_clusters"], 1);
}

#[test]
fn export_stock_is_canonical() {
    let f = Fixture::new();
    std::fs::write(f.path("raw.smi"), "OCC\nCCO\nC(C)O extra\nc1ccccc1\n").unwrap();
    let out = f.run(&["export-stock", "--stock", "raw.smi", "--out", "clean.smi"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(f.path("clean.smi")).unwrap();
    assert_eq!(text, "CCO\nc1ccccc1\n");
    let out = f.run(&["export-stock", "--stock", "raw.smi", "--size", "1", "--out", "one.smi"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(f.path("one.smi")).unwrap(), "CCO\n");
}
