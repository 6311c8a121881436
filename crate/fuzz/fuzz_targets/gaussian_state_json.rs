#![no_main]

use libfuzzer_sys::fuzz_target;
use splitbeam_core::GaussianState;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(state) = GaussianState::from_json(text) {
            let back = GaussianState::from_json(&state.to_json()).expect("round trip");
            assert_eq!(back.n_modes(), state.n_modes());
        }
    }
});
