#![no_main]

use std::sync::OnceLock;

use branchcrawler::concolic::parse_test_file;
use branchcrawler::lang::{load, CheckedProgram};
use libfuzzer_sys::fuzz_target;

const PROGRAM: &str = "fun main(n: int[0..4], k: int[-3..3], a: int[-9..9][3]) requires n > 0; { skip; }";

fn program() -> &'static CheckedProgram {
    static P: OnceLock<CheckedProgram> = OnceLock::new();
    P.get_or_init(|| load(PROGRAM, None).unwrap())
}

fuzz_target!(|text: &str| {
    if let Ok(values) = parse_test_file(program(), text) {
        assert_eq!(values.len(), program().inputs().len());
    }
});
