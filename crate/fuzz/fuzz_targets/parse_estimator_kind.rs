#![no_main]

use entropy_lab::sweep::parse_estimator_kind;
use entropy_lab::{estimate, Counts};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(kind) = parse_estimator_kind(text) {
        let counts = Counts::new(vec![3, 0, 1]).unwrap();
        assert!(estimate(kind, &counts).unwrap().is_finite());
    }
});
