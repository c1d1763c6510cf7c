#![no_main]

use infheat_core::io::parse_snapshot_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(frames) = parse_snapshot_csv(data) {
        for w in frames.windows(2) {
            assert!(w[0].t < w[1].t);
        }
        for f in &frames {
            assert!(f.t.is_finite());
            assert!((1..=3).contains(&f.dim));
            assert_eq!(f.coords.len(), f.dim * f.values.len());
            assert!(f.values.iter().chain(&f.coords).all(|v| v.is_finite()));
        }
    }
});
