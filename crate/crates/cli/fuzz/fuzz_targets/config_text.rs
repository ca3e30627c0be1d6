#![no_main]

use hetbandit_cli::config::ExperimentConfig;
use hetbandit_cli::presets::build_preset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_text(text) {
        assert!(cfg.replications >= 1);
        assert!(cfg.delta > 0.0 && cfg.delta < 1.0);
        // Keep instance construction cheap; large arm counts only cost time.
        if cfg.params.n_unit.unwrap_or(0) + cfg.params.n_small.unwrap_or(0) <= 2000 {
            let _ = build_preset(&cfg);
        }
    }
});
