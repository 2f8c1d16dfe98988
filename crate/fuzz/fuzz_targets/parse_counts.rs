#![no_main]

use entropy_lab::sweep::parse_counts;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(counts) = parse_counts(text) {
        assert!(counts.n() >= 1);
        let round = to_json(&counts);
        assert_eq!(parse_counts(&round).unwrap(), counts);
        let h = entropy_lab::estimate(entropy_lab::EstimatorKind::Mle, &counts).unwrap();
        assert!(h >= 0.0 && h <= (counts.support_size() as f64).ln() + 1e-9);
    }
});

fn to_json(counts: &entropy_lab::Counts) -> String {
    let parts: Vec<String> = counts.counts().iter().map(u64::to_string).collect();
    format!("[{}]", parts.join(","))
}
