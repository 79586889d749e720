use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stagecraft::fixtures::{common_cause, eight_positions};
use stagecraft::io::{self, ModelDocument};
use stagecraft::scoring::{count_paths, score};
use tempfile::TempDir;

fn stagecraft(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stagecraft"))
        .args(args)
        .current_dir(dir)
        .env_remove("STAGECRAFT_THREADS")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = stagecraft(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field<'a>(line: &'a str, key: &str) -> &'a str {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
}

fn write_fixture(dir: &Path, name: &str, st: stagecraft::StagedTree) -> PathBuf {
    let path = dir.join(name);
    io::write_model(&path, &ModelDocument::new(st)).unwrap();
    path
}

fn simulated(dir: &Path) {
    ok(dir, &[
        "simulate", "--p", "4", "--q", "0.5", "--n", "400", "--seed", "7",
        "--out-model", "truth.json", "--out-data", "data.csv",
    ]);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    simulated(d);
    let unknown = stagecraft(d, &["learn", "--data", "data.csv", "--algorithm", "magic", "--out", "m.json"]);
    assert_eq!(unknown.status.code(), Some(1));
    let err = String::from_utf8_lossy(&unknown.stderr);
    assert!(err.contains("expected one of") && err.contains("--help"));
    let no_order = stagecraft(d, &["learn", "--data", "data.csv", "--algorithm", "marginal", "--out", "m.json"]);
    assert_eq!(no_order.status.code(), Some(1));
    let bad_q = stagecraft(d, &["simulate", "--p", "2", "--q", "1.5", "--n", "1", "--out-model", "a", "--out-data", "b"]);
    assert_eq!(bad_q.status.code(), Some(1));
    let missing = stagecraft(d, &["score", "--model", "nope.json", "--data", "data.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(stagecraft(d, &["--help"]).status.code(), Some(0));
    assert_eq!(stagecraft(d, &["--version"]).status.code(), Some(0));

    // distance across different event trees is a run error
    write_fixture(d, "f2.json", common_cause());
    write_fixture(d, "f4.json", eight_positions());
    assert_eq!(stagecraft(d, &["distance", "--a", "f2.json", "--b", "f4.json"]).status.code(), Some(2));
}

#[test]
fn learn_summary_and_score_agree_with_library() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    simulated(d);
    let line = ok(d, &[
        "learn", "--data", "data.csv", "--algorithm", "marginal",
        "--order", "X1,X2,X3,X4", "--out", "m.json",
    ]);
    assert!(line.starts_with("algo=marginal "));
    assert_eq!(field(&line, "stages"), field(&line, "positions"));

    let doc = io::read_model(d.join("m.json")).unwrap();
    let data = io::read_csv(d.join("data.csv"), &Default::default())
        .unwrap()
        .data
        .recode(doc.model.tree().variables())
        .unwrap();
    let s = score(&doc.model, &count_paths(&data, &[0, 1, 2, 3]).unwrap()).unwrap();
    assert_eq!(field(&line, "bic"), format!("{:.9}", s.bic));
    assert_eq!(doc.meta.wall_ms, None);

    let scored = ok(d, &["score", "--model", "m.json", "--data", "data.csv"]);
    assert_eq!(
        scored.trim(),
        format!("logL={:.9} nparams={} N=400 bic={:.9}", s.log_likelihood, s.n_params, s.bic)
    );
}

#[test]
fn score_single_binary_variable() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("coin.csv"), "C\nh\nt\n").unwrap();
    ok(d, &["learn", "--data", "coin.csv", "--algorithm", "bhc", "--order", "C", "--out", "c.json"]);
    let line = ok(d, &["score", "--model", "c.json", "--data", "coin.csv"]);
    assert_eq!(line.trim(), "logL=-1.386294361 nparams=1 N=2 bic=3.465735903");
}

#[test]
fn simplified_bhc_stage_count_matches_bhc_positions() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    simulated(d);
    let base = ["learn", "--data", "data.csv", "--order", "X1,X2,X3,X4", "--algorithm"];
    let bhc = ok(d, &[&base[..], &["bhc", "--out", "b.json"]].concat());
    let simp = ok(d, &[&base[..], &["simplified-bhc", "--out", "s.json"]].concat());
    assert_eq!(field(&simp, "stages"), field(&bhc, "positions"));
    assert_eq!(field(&simp, "stages"), field(&simp, "positions"));
}

#[test]
fn simulate_q_zero_gives_full_staging() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let line = ok(d, &[
        "simulate", "--p", "3", "--q", "0", "--n", "10", "--seed", "1",
        "--out-model", "t.json", "--out-data", "t.csv",
    ]);
    assert_eq!(line.trim(), "stages=7 positions=7 N=10");
    let doc = io::read_model(d.join("t.json")).unwrap();
    assert_eq!(doc.model.staging().stages_per_depth(), vec![1, 2, 4]);
    assert_eq!(doc.meta.seed, Some(1));
}

#[test]
fn ceg_simplify_distance_export() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_fixture(d, "f4.json", eight_positions());
    let line = ok(d, &["ceg", "--model", "f4.json", "--out", "c.json"]);
    assert!(line.starts_with("vertices=8 sink=1 "));
    ok(d, &["ceg", "--model", "f4.json", "--format", "dot", "--out", "c.dot"]);
    assert!(fs::read_to_string(d.join("c.dot")).unwrap().starts_with("digraph"));

    ok(d, &["simplify", "--model", "f4.json", "--out", "s1.json"]);
    ok(d, &["simplify", "--model", "s1.json", "--out", "s2.json"]);
    assert_eq!(fs::read(d.join("s1.json")).unwrap(), fs::read(d.join("s2.json")).unwrap());

    assert_eq!(ok(d, &["distance", "--a", "f4.json", "--b", "f4.json"]).trim(), "0.000000");
    let dist: f64 = ok(d, &["distance", "--a", "f4.json", "--b", "s1.json"]).trim().parse().unwrap();
    assert!(dist > 0.0);

    let dot = ok(d, &["export", "--model", "f4.json", "--format", "dot"]);
    assert!(dot.starts_with("digraph stagedtree"));
    ok(d, &["export", "--model", "f4.json", "--ceg", "--out", "e.dot"]);
    assert!(fs::read_to_string(d.join("e.dot")).unwrap().contains("w_inf"));
}

#[test]
fn bn_subcommands() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(
        d.join("v.json"),
        r#"{"format":"dag/1","vertices":["X1","X2","X3"],"edges":[["X1","X3"],["X2","X3"]]}"#,
    )
    .unwrap();
    let line = ok(d, &["bn", "simplify", "--dag", "v.json", "--order", "X1,X2,X3", "--out", "s.json"]);
    assert_eq!(line.trim(), "added=1");
    let simplified = io::dag_from_json(&fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    assert_eq!(simplified.edges(), vec![(0, 1), (0, 2), (1, 2)]);

    fs::write(d.join("e.json"), r#"{"format":"dag/1","vertices":["A","B","C"],"edges":[]}"#).unwrap();
    let line = ok(d, &["bn", "totree", "--dag", "e.json", "--out", "t.json"]);
    assert_eq!(line.trim(), "stages=3 simple=true");

    fs::write(
        d.join("cyc.json"),
        r#"{"format":"dag/1","vertices":["A","B"],"edges":[["A","B"],["B","A"]]}"#,
    )
    .unwrap();
    assert_eq!(stagecraft(d, &["bn", "totree", "--dag", "cyc.json", "--out", "x.json"]).status.code(), Some(2));

    let mut csv = String::from("A,B\n");
    for i in 0..4000u32 {
        let a = i % 2;
        let b = (i / 2) % 2;
        csv.push_str(&format!("{a},{b}\n"));
    }
    fs::write(d.join("coins.csv"), csv).unwrap();
    let line = ok(d, &["bn", "learn", "--data", "coins.csv", "--out", "g.json"]);
    assert!(line.starts_with("edges=0 "));

    simulated(d);
    let line = ok(d, &["learn", "--data", "data.csv", "--algorithm", "marginal", "--order", "bn", "--out", "m.json"]);
    assert_eq!(field(&line, "stages"), field(&line, "positions"));
}

#[test]
fn subcommands_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let runs: Vec<Vec<&str>> = vec![
        vec!["simulate", "--p", "4", "--q", "0.4", "--n", "300", "--seed", "5", "--out-model", "t{}.json", "--out-data", "d{}.csv"],
        vec!["learn", "--data", "d0.csv", "--algorithm", "all-total", "--out", "l{}.json"],
        vec!["learn", "--data", "d0.csv", "--algorithm", "greedy-marginal", "--out", "g{}.json"],
        vec!["study", "--grid", "q=0.5;n=30,60;p=3", "--replicates", "3", "--seed", "2", "--out", "s{}.csv"],
        vec!["ceg", "--model", "t0.json", "--out", "c{}.json"],
        vec!["bn", "learn", "--data", "d0.csv", "--out", "b{}.json"],
    ];
    for run in &runs {
        for (i, threads) in ["1", "8"].iter().enumerate() {
            let args: Vec<String> = run.iter().map(|a| a.replace("{}", &i.to_string())).collect();
            let mut refs: Vec<&str> = vec!["--threads", threads];
            refs.extend(args.iter().map(String::as_str));
            ok(d, &refs);
        }
    }
    for stem in ["t{}.json", "d{}.csv", "l{}.json", "g{}.json", "s{}.csv", "c{}.json", "b{}.json"] {
        let a = fs::read(d.join(stem.replace("{}", "0"))).unwrap();
        let b = fs::read(d.join(stem.replace("{}", "1"))).unwrap();
        assert_eq!(a, b, "{stem} differs");
    }
}
