#![no_main]

use libfuzzer_sys::fuzz_target;
use splitbeam::config::apply_override;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = String::from_utf8(data.to_vec()) {
        let mut table = toml::Table::new();
        for line in s.lines() {
            let _ = apply_override(&mut table, line);
        }
        let _ = toml::to_string(&table);
    }
});
