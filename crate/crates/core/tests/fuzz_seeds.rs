//! Runs the fuzz target bodies over the checked-in seed corpora.

use std::fs;
use std::path::PathBuf;

use branchcrawler::concolic::parse_test_file;
use branchcrawler::lang::{load, parse, parse_condition, pretty_cond, pretty_program, StripSpans};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(PathBuf, String)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn program_seeds() {
    for (path, src) in seeds("parse_program") {
        let program = parse(&src).unwrap_or_else(|d| panic!("{}: {d}", path.display()));
        let again = parse(&pretty_program(&program)).unwrap();
        assert_eq!(
            program.strip_spans(),
            again.strip_spans(),
            "{}",
            path.display()
        );
        load(&src, None).unwrap_or_else(|d| panic!("{}: {d}", path.display()));
    }
}

#[test]
fn condition_seeds() {
    for (path, src) in seeds("parse_condition") {
        let c = parse_condition(&src).unwrap_or_else(|d| panic!("{}: {d}", path.display()));
        let again = parse_condition(&pretty_cond(&c)).unwrap();
        assert_eq!(c.strip_spans(), again.strip_spans(), "{}", path.display());
    }
}

#[test]
fn test_file_seeds() {
    let program = load(
        "fun main(n: int[0..4], k: int[-3..3], a: int[-9..9][3]) requires n > 0; { skip; }",
        None,
    )
    .unwrap();
    let results: Vec<_> = seeds("parse_test_file")
        .into_iter()
        .map(|(p, text)| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                parse_test_file(&program, &text),
            )
        })
        .collect();
    for (name, r) in &results {
        match name.as_str() {
            "duplicate" => assert!(r.is_err()),
            _ => assert_eq!(r.as_ref().unwrap().len(), program.inputs().len(), "{name}"),
        }
    }
}
