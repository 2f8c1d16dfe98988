#![no_main]

use entropy_lab::sweep::SweepConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = SweepConfig::from_json(text) {
        let _ = config.grid();
    }
});
