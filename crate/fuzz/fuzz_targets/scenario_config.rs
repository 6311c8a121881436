#![no_main]

use libfuzzer_sys::fuzz_target;
use splitbeam::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ScenarioConfig::parse(text, "fuzz", &[]) {
            // anything that parses must also have passed validation
            assert!(cfg.validate().is_ok());
        }
    }
});
