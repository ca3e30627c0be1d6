#![no_main]

use hetbandit_cli::config::{parse_override, ExperimentConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut cfg = ExperimentConfig::default();
    for part in text.split('\n') {
        if let Ok((k, v)) = parse_override(part) {
            assert!(!k.is_empty());
            let _ = cfg.set(&k, &v);
        }
    }
});
