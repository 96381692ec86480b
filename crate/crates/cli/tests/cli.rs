use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mekler_core::graph::Graph;
use mekler_core::tree::{Coloring, TreeDomain};
use mekler_core::witness::{self, BranchStructure, FamilyFile, StructureSource};
use serde_json::Value;

fn mekler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mekler")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> String {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn check_nice_exit_codes() {
    let dir = scratch("check_nice");
    let c5 = write_json(&dir.join("c5.json"), &Graph::cycle(5));
    assert_eq!(code(&mekler(&["check-nice", &c5])), 0);
    assert_eq!(code(&mekler(&["check-nice", "cycle:4"])), 1);
}

#[test]
fn gamma_round_trip() {
    let o = mekler(&["gamma", "--graph", "cycle:5", "-p", "3", "--check-iso"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn json_manifest_hashes_inputs() {
    let dir = scratch("manifest");
    let c5 = write_json(&dir.join("c5.json"), &Graph::cycle(5));
    let o = mekler(&["--json", "check-nice", &c5]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let input = &v["manifest"]["inputs"][0];
    assert_eq!(input["path"], c5.as_str());
    assert_eq!(input["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(v["manifest"]["seed"], 0);
    assert!(v["manifest"]["timing"].is_null());
    assert_eq!(v["pass"], true);
}

#[test]
fn witness_check_reports_counterexample() {
    let dir = scratch("witness");
    let b = BranchStructure::new(4, 2).unwrap();
    let f = b.family();
    write_json(&dir.join("b4.json"), f.structure());

    let mut good = FamilyFile::from_family(&f);
    good.structure = StructureSource::Path("b4.json".into());
    let good = write_json(&dir.join("good.json"), &good);
    for kind in ["sop1", "sop2", "tp1"] {
        let o = mekler(&["witness", "check", "--kind", kind, "--family", &good]);
        assert_eq!(code(&o), 0, "{kind}: {}", stdout(&o));
    }

    let broken = witness::mutate_universal_branch(&b, &f).unwrap();
    let broken = FamilyFile::from_family(&broken);
    // the mutated structure lives inline, the original stays on disk
    assert!(matches!(broken.structure, StructureSource::Inline(_)));
    let broken = write_json(&dir.join("broken.json"), &broken);
    let o = mekler(&["--json", "witness", "check", "--kind", "sop2", "--family", &broken]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], false);
    assert!(stdout(&o).contains("\"kind\""), "counterexample printed: {}", stdout(&o));
}

#[test]
fn tree_mono_finds_embedding() {
    let dir = scratch("mono");
    let col = Coloring::from_fn(TreeDomain::binary(8).unwrap(), |v| (v.len() % 2) as u32);
    let path = write_json(&dir.join("col.json"), &col);
    let o = mekler(&["tree", "mono", "--shape", "sop2", "--depth", "3", "--coloring", &path]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn malformed_input_exits_2() {
    let dir = scratch("malformed");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&mekler(&["check-nice", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&mekler(&["check-nice", dir.join("missing.json").to_str().unwrap()])), 2);
    assert_eq!(code(&mekler(&["no-such-command"])), 2);
    let bad_formula = dir.join("family.json");
    std::fs::write(&bad_formula, r#"{"domain":{"height":2,"branching":2},"structure":{"m":1,"relations":{}},"formula":"(E x","object_vars":["x"],"param_vars":[],"params":{}}"#).unwrap();
    assert_eq!(code(&mekler(&["witness", "check", "--kind", "sop2", "--family", bad_formula.to_str().unwrap()])), 2);
}

#[test]
fn repro_is_deterministic() {
    let a = mekler(&["repro", "--seed", "0", "--json"]);
    let b = mekler(&["repro", "--seed", "0", "--json"]);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
}
