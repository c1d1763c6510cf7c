#![no_main]

use infheat_core::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        // an accepted config must survive its canonical form unchanged
        let canonical = cfg.to_canonical();
        let again = ExperimentConfig::parse(&canonical).expect("canonical form parses");
        assert_eq!(again.to_canonical(), canonical);
        assert_eq!(again.hash(), cfg.hash());
    }
});
