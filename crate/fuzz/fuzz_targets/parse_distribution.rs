#![no_main]

use entropy_lab::sweep::parse_distribution;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_distribution(text) {
        let h = entropy_lab::entropy(&p);
        assert!(h >= 0.0 && h <= (p.support_size() as f64).ln() + 1e-9);
    }
});
