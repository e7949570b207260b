mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use common::*;
use eqmat::cli::{main_with, EXIT_CONTRADICTION, EXIT_ERROR, EXIT_OK};
use eqmat::ntriples;

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn eqmat(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("eqmat").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    Output {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

struct Pex {
    _dir: tempfile::TempDir,
    data: String,
    rules: String,
    q1: String,
    q2: String,
}

fn pex() -> Pex {
    let dir = tempfile::tempdir().unwrap();
    let p = |name, text| write(dir.path(), name, text).to_str().unwrap().to_string();
    Pex {
        data: p("pex.nt", PEX_DATA),
        rules: p("pex.dlog", PEX_RULES),
        q1: p("q1.rq", Q1),
        q2: p("q2.rq", Q2),
        _dir: dir,
    }
}

fn lines(text: &str) -> BTreeSet<&str> {
    text.lines().filter(|l| !l.is_empty()).collect()
}

#[test]
fn stats_json() {
    let f = pex();
    let o = eqmat(&["--data", &f.data, "--rules", &f.rules, "--stats"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let report: serde_json::Value = serde_json::from_str(o.out.trim()).unwrap();
    assert_eq!(report["mode"], "rew");
    assert_eq!(report["stats"]["derivations"], 6);
    assert_eq!(report["stats"]["merged_resources"], 3);
    assert_eq!(report["triples_after_unmarked"], 5);
    assert_eq!(report["outcome"], "consistent");
}

#[test]
fn table_goes_to_stderr() {
    let f = pex();
    let o = eqmat(&["--data", &f.data, "--rules", &f.rules, "--mode", "ax"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.is_empty());
    assert!(o.err.contains("derivations         193"), "{}", o.err);
}

#[test]
fn expanded_export_equals_axiomatic_export() {
    let f = pex();
    let rew = eqmat(&[
        "--data", &f.data, "--rules", &f.rules, "--stats", "--export", "expanded",
    ]);
    let ax = eqmat(&[
        "--data", &f.data, "--rules", &f.rules, "--mode", "ax", "--export", "plain",
    ]);
    assert_eq!(rew.code, EXIT_OK);
    assert_eq!(ax.code, EXIT_OK);
    let rew_triples: BTreeSet<&str> = rew.out.lines().skip(1).filter(|l| !l.is_empty()).collect();
    assert_eq!(rew_triples, lines(&ax.out));
    assert_eq!(rew_triples.len(), 21);
}

#[test]
fn export_to_file_round_trips() {
    let f = pex();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.nt");
    let o = eqmat(&[
        "--data",
        &f.data,
        "--rules",
        &f.rules,
        "--export",
        "plain",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    let dict = eqmat::Dictionary::with_builtins();
    assert_eq!(ntriples::parse(&text, &dict).unwrap().len(), 5);
}

#[test]
fn query_answers_are_tsv_rows() {
    let f = pex();
    let o = eqmat(&["--data", &f.data, "--rules", &f.rules, "--query", &f.q1]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let rows: Vec<&str> = o.out.lines().collect();
    assert_eq!(rows[0], "?x");
    assert_eq!(rows.iter().filter(|r| r.contains("Obama")).count(), 3);
    assert_eq!(rows.iter().filter(|r| r.contains("USPresident")).count(), 3);
    assert_eq!(rows.len(), 7);

    let o = eqmat(&["--data", &f.data, "--rules", &f.rules, "--query", &f.q2]);
    assert_eq!(o.code, EXIT_OK);
    let rows: BTreeSet<&str> = o.out.lines().skip(1).collect();
    assert_eq!(rows, BTreeSet::from(["\"Obama\"", "\"USPresident\""]));
}

#[test]
fn ax_and_rew_answer_queries_alike() {
    let f = pex();
    for q in [&f.q1, &f.q2] {
        let rew = eqmat(&["--data", &f.data, "--rules", &f.rules, "--query", q]);
        let ax = eqmat(&[
            "--data",
            &f.data,
            "--rules",
            &f.rules,
            "--query",
            q,
            "--mode",
            "ax",
            "--threads",
            "3",
        ]);
        let sorted = |s: &str| {
            let mut v: Vec<String> = s.lines().map(str::to_string).collect();
            v.sort();
            v
        };
        assert_eq!(sorted(&rew.out), sorted(&ax.out));
    }
}

#[test]
fn verify_passes_on_pex() {
    let f = pex();
    let o = eqmat(&["--data", &f.data, "--rules", &f.rules, "--verify", "--mode", "ax"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert!(o.err.contains("expansion matches reference  true"));
}

#[test]
fn verify_passes_on_random_inputs() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..50u64 {
        let inst = random_instance(&mut rng(70_000 + seed));
        let mut rules = String::new();
        for r in &inst.rules {
            rules.push_str(&format!("{}\n", r.display(&inst.dict)));
        }
        let data = ntriples::export_to_string(&inst.dict, inst.facts.iter().copied()).unwrap();
        let d = write(dir.path(), "d.nt", &data);
        let r = write(dir.path(), "r.dlog", &rules);
        let o = eqmat(&[
            "--data",
            d.to_str().unwrap(),
            "--rules",
            r.to_str().unwrap(),
            "--verify",
            "--threads",
            "2",
        ]);
        assert!(
            o.code == EXIT_OK || o.code == EXIT_CONTRADICTION,
            "seed {seed}: {}\n{rules}\n{data}",
            o.err
        );
        assert!(!o.err.contains("false"), "seed {seed}: {}", o.err);
    }
}

#[test]
fn contradiction_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "d.nt",
        "<http://example.org/a> <http://www.w3.org/2002/07/owl#sameAs> <http://example.org/b> .\n\
         <http://example.org/b> <http://www.w3.org/2002/07/owl#differentFrom> <http://example.org/a> .\n",
    );
    for mode in ["ax", "rew"] {
        let o = eqmat(&["--data", data.to_str().unwrap(), "--mode", mode]);
        assert_eq!(o.code, EXIT_CONTRADICTION, "{mode}");
        assert!(o.err.contains("contradiction"));
    }
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.nt");
    let o = eqmat(&["--data", missing.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_ERROR);
    assert!(o.err.contains("nope.nt"), "{}", o.err);

    let bad = write(
        dir.path(),
        "bad.nt",
        "<http://example.org/a> <http://example.org/p> <http://example.org/b> .\nnot a triple\n",
    );
    let o = eqmat(&["--data", bad.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_ERROR);
    assert!(o.err.contains("line 2"), "{}", o.err);

    let unsafe_rule = write(dir.path(), "r.dlog", "[?x, p, ?z] :- [?x, p, ?y] .\n");
    let o = eqmat(&["--rules", unsafe_rule.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_ERROR);
    assert!(o.err.contains('z'), "{}", o.err);

    let f = pex();
    let query = write(
        dir.path(),
        "q.rq",
        "SELECT ?nope WHERE { ?x <http://example.org/p> ?y }",
    );
    let o = eqmat(&["--data", &f.data, "--query", query.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_ERROR);

    assert_eq!(eqmat(&["--threads", "0"]).code, EXIT_ERROR);
    assert_eq!(eqmat(&["--mode", "fast"]).code, EXIT_ERROR);
}

#[test]
fn help_exits_cleanly() {
    let o = eqmat(&["--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.err.contains("--export"));
}

#[test]
fn no_input_is_an_empty_run() {
    let o = eqmat(&["--stats"]);
    assert_eq!(o.code, EXIT_OK);
    let report: serde_json::Value = serde_json::from_str(o.out.trim()).unwrap();
    assert_eq!(report["triples_after_total"], 0);
}
