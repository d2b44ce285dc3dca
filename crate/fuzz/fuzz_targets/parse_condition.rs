#![no_main]

use branchcrawler::lang::{parse_condition, pretty_cond, StripSpans};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|src: &str| {
    if let Ok(c) = parse_condition(src) {
        let again = parse_condition(&pretty_cond(&c)).expect("pretty output failed to parse");
        assert_eq!(c.strip_spans(), again.strip_spans());
    }
});
