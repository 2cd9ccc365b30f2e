use std::path::{Path, PathBuf};

use hfsmdec::cli::run;
use hfsmdec::fixtures::{flat_h1, h1, path};
use hfsmdec::io::{parse_hfsm, write_fsm, write_hfsm};

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn hfsmdec(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hfsmdec").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn file(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decompose_formats() {
    let dir = tempfile::tempdir().unwrap();
    let p4 = file(dir.path(), "p4.fsm", &write_fsm("P", &path(4)));

    let text = hfsmdec(&["decompose", s(&p4)]);
    assert_eq!(text.code, 0, "{}", text.err);
    assert!(text.out.contains("states 4\ndimension 3\n"));
    assert!(text.out.contains("{1,2} <- 1 2"));

    let json = hfsmdec(&["decompose", s(&p4), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json.out).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 7);

    let dot = hfsmdec(&["decompose", s(&p4), "--format", "dot", "--annotate"]);
    assert!(dot.out.starts_with("digraph tree {"));
    assert!(dot.out.contains("{2,3}"));
}

#[test]
fn check_module_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p4 = file(dir.path(), "p4.fsm", &write_fsm("P", &path(4)));

    let yes = hfsmdec(&["check-module", s(&p4), "--states", "2,3"]);
    assert_eq!(yes.code, 0);
    assert_eq!(yes.out, "module: yes, thin: yes, entrance: 2\n");

    let no = hfsmdec(&["check-module", s(&p4), "--states", "1,3"]);
    assert_eq!(no.code, 1);
    assert!(no.out.starts_with("module: no"));

    let unknown = hfsmdec(&["check-module", s(&p4), "--states", "9"]);
    assert_eq!(unknown.code, 2);
}

#[test]
fn eval_and_equiv() {
    let dir = tempfile::tempdir().unwrap();
    let nested = file(dir.path(), "h1.json", &write_hfsm(&h1()));
    let flat = file(dir.path(), "flat.fsm", &write_fsm("F", &flat_h1()));
    let p3 = file(dir.path(), "p3.fsm", &write_fsm("P", &path(3)));

    assert_eq!(hfsmdec(&["eval", s(&p3), "x", "x"]).out, "3\n");
    assert_eq!(hfsmdec(&["eval", s(&p3), "x", "x", "x"]).out, "undefined\n");
    assert_eq!(hfsmdec(&["eval", s(&p3), "q"]).code, 2);

    let same = hfsmdec(&["equiv", s(&nested), s(&flat)]);
    assert_eq!((same.code, same.out.as_str()), (0, "equivalent\n"));
    let differ = hfsmdec(&["equiv", s(&nested), s(&p3)]);
    assert_eq!((differ.code, differ.out.as_str()), (1, "not equivalent\n"));
}

#[test]
fn maximize_then_flatten() {
    let dir = tempfile::tempdir().unwrap();
    let flat = file(dir.path(), "flat.fsm", &write_fsm("F", &flat_h1()));

    let max = hfsmdec(&["maximize", s(&flat)]);
    assert_eq!(max.code, 0, "{}", max.err);
    let h = parse_hfsm(&max.out).unwrap();
    assert_eq!(h.order(), 2);
    assert_eq!(h.flatten(), flat_h1());

    let maxed = file(dir.path(), "max.json", &max.out);
    let back = hfsmdec(&["flatten", s(&maxed)]);
    assert_eq!(back.code, 0);
    let (_, z) = hfsmdec::io::parse_fsm(&back.out).unwrap();
    assert_eq!(z, flat_h1());

    let dot = hfsmdec(&["maximize", s(&flat), "--format", "dot", "--show-modules"]);
    assert!(dot.out.contains("subgraph \"cluster_"));
}

#[test]
fn core_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let nested = file(dir.path(), "h1.json", &write_hfsm(&h1()));

    let core = hfsmdec(&["core", s(&nested)]);
    assert_eq!(core.code, 0, "{}", core.err);
    assert!(!core.out.is_empty());

    let stats = hfsmdec(&["stats", s(&nested)]);
    assert_eq!(stats.code, 0);
    for line in [
        "machines 2",
        "depth 1",
        "states 3",
        "thin yes",
        "dimension 2",
    ] {
        assert!(
            stats.out.lines().any(|l| l == line),
            "{line}\n{}",
            stats.out
        );
    }
}

#[test]
fn verify_file_and_random() {
    let dir = tempfile::tempdir().unwrap();
    let p4 = file(dir.path(), "p4.fsm", &write_fsm("P", &path(4)));
    let dump = dir.path().join("cx");

    let one = hfsmdec(&["verify", s(&p4), "--dump-dir", s(&dump)]);
    assert_eq!(one.code, 0, "{}{}", one.out, one.err);
    assert!(one.out.contains("tree-vs-oracle"));

    let many = hfsmdec(&[
        "verify",
        "--random",
        "--seed",
        "3",
        "--count",
        "20",
        "--max-n",
        "5",
        "--dump-dir",
        s(&dump),
    ]);
    assert!(many.code == 0 || many.code == 1, "{}", many.err);
    assert_eq!(many.code == 1, dump.exists());

    let bad = hfsmdec(&["verify", "--random", "--max-n", "0"]);
    assert_eq!(bad.code, 2);
}

#[test]
fn bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let broken = file(dir.path(), "broken.fsm", "fsm Z\nstates a\nstart b\n");
    let missing = dir.path().join("missing.fsm");

    let parse = hfsmdec(&["stats", s(&broken)]);
    assert_eq!(parse.code, 2);
    assert!(parse.err.starts_with("error: "));
    assert_eq!(hfsmdec(&["stats", s(&missing)]).code, 2);
    assert_eq!(hfsmdec(&["frobnicate"]).code, 2);
    assert_eq!(hfsmdec(&["--help"]).code, 0);
}
