#![no_main]

use branchcrawler::lang::{load, parse, pretty_program, StripSpans};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|src: &str| {
    let Ok(program) = parse(src) else {
        return;
    };
    // printing and reparsing must give back the same tree
    let printed = pretty_program(&program);
    let again = parse(&printed).expect("pretty output failed to parse");
    assert_eq!(program.strip_spans(), again.strip_spans());
    let _ = load(src, None);
});
