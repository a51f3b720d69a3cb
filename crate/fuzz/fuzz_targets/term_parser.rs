#![no_main]

use dibi_core::synvar::{diag_equal, elaborate, graph_to_term, parse_term, TermEnv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let env = TermEnv::new();
    let Ok(t) = parse_term(text, &env) else { return };
    let Ok(g) = elaborate(&t) else { return };
    let back = parse_term(&graph_to_term(&g).to_string(), &env).expect("printed terms parse");
    assert!(diag_equal(&g, &elaborate(&back).expect("printed terms elaborate")));
});
