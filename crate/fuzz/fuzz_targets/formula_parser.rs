#![no_main]

use dibi_core::dibi::parse;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse(text) {
        let printed = p.to_string();
        assert_eq!(parse(&printed).expect("printed formulas parse"), p);
    }
});
