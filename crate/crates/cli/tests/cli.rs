use std::path::Path;
use std::process::{Command, Output};

use expdec::graph::{circulant, degree_check, format_edge_list, read_edge_list, MultiGraph};
use serde_json::Value;

fn expdec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expdec"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn planted() -> MultiGraph {
    let n = 100;
    let a = circulant(n, &[1, 2]).unwrap();
    let mut edges: Vec<(usize, usize)> = a.disjoint_union(&a).edges().to_vec();
    let h = n / 2;
    edges.retain(|e| ![(0, 1), (h, h + 1), (n, n + 1), (n + h, n + h + 1)].contains(e));
    edges.extend([(0, n), (1, n + 1), (h, n + h), (h + 1, n + h + 1)]);
    MultiGraph::from_edges(2 * n, edges).unwrap()
}

#[test]
fn gen_writes_a_regular_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let out = expdec(
        dir.path(),
        &["gen", "--kind", "circulant", "--n", "200", "--d", "4", "--offsets", "1,2", "--out", "g.el"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let g = read_edge_list(dir.path().join("g.el")).unwrap();
    assert_eq!(g.vertex_count(), 200);
    assert!(degree_check(&g).valid);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["degree"], 4);
    assert_eq!(report["config"]["args"]["common"]["seed"], 0);
    assert!(report["timings_ms"].as_object().unwrap().is_empty());
}

#[test]
fn decompose_then_verify_on_planted_fixture() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.el"), format_edge_list(&planted())).unwrap();
    let out = expdec(
        dir.path(),
        &[
            "decompose", "--graph", "g.el", "--epsilon", "0.1", "--gamma", "0.025", "--out", "g2.el", "--report",
            "r.json", "--seed", "7",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    // defaults that were not given on the command line still appear
    let eff = &report["config"]["effective"];
    for key in ["epsilon", "k", "alpha", "beta", "c_prime", "gamma", "delta", "exact_cut_limit", "cut_mode", "seed"] {
        assert!(!eff[key].is_null(), "missing {key}");
    }
    assert_eq!(eff["seed"], 7);
    let verify = expdec(
        dir.path(),
        &["verify", "--before", "g.el", "--after", "g2.el", "--gamma-from-report", "r.json"],
    );
    assert_eq!(verify.status.code(), Some(0), "{}", String::from_utf8_lossy(&verify.stderr));
}

#[test]
fn verify_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = circulant(40, &[1, 2]).unwrap();
    std::fs::write(dir.path().join("c.el"), format_edge_list(&c)).unwrap();
    // a long circulant is a poor expander
    let out = expdec(dir.path(), &["verify", "--before", "c.el", "--after", "c.el", "--gamma", "0.2"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["passes"], false);
}

#[test]
fn out_of_range_weight_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = circulant(6, &[1]).unwrap();
    std::fs::write(dir.path().join("g.el"), format_edge_list(&g)).unwrap();
    let mut weights = String::new();
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        weights.push_str(&format!("{u} {v} {}\n", if i == 0 { 6 } else { 0 }));
    }
    std::fs::write(dir.path().join("w.txt"), weights).unwrap();
    for extra in [&[][..], &["--L", "5"][..]] {
        let mut args = vec!["cover", "--graph", "g.el", "--weights", "w.txt", "--p", "5", "--out", "c.el"];
        args.extend_from_slice(extra);
        let out = expdec(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(!dir.path().join("c.el").exists());
    }
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["gen", "--kind", "hypercube", "--n", "8", "--out", "x.el"],
        &["stats", "--graph", "missing.el", "--radius", "1"],
        &["decompose", "--graph", "missing.el", "--epsilon", "0.1", "--out", "y.el"],
        &["gen", "--kind", "cycle", "--n", "8", "--out", "x.el", "--no-such-flag"],
    ];
    for args in cases {
        assert_eq!(expdec(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
    std::fs::write(dir.path().join("bad.el"), "3 2 2\n0 1\n").unwrap();
    let out = expdec(dir.path(), &["stats", "--graph", "bad.el", "--radius", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stats_reports_exact_defect() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.el"), format_edge_list(&circulant(9, &[1]).unwrap())).unwrap();
    let out = expdec(dir.path(), &["stats", "--graph", "c.el", "--radius", "4", "--cayley", "grid:1"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    // every radius-4 ball of C9 closes into the whole cycle
    assert_eq!(report["result"]["cayley_defect"]["exact"], "1/1");
    assert_eq!(report["result"]["class_count"], 1);
}
