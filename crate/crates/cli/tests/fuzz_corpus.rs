//! Replays the fuzz corpus seeds through the same entry points as the fuzz
//! targets, so regressions on them show up under stable `cargo test`.

use std::path::PathBuf;

use hetbandit_cli::config::{parse_override, ExperimentConfig};
use hetbandit_cli::presets::build_preset;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn config_text_seeds() {
    let mut parsed = 0;
    for (path, text) in seeds("config_text") {
        if let Ok(cfg) = ExperimentConfig::from_text(&text) {
            parsed += 1;
            assert!(cfg.replications >= 1);
            build_preset(&cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
    assert!(parsed >= 4);
}

#[test]
fn override_seeds() {
    for (_, text) in seeds("override_kv") {
        let mut cfg = ExperimentConfig::default();
        for line in text.lines() {
            if let Ok((k, v)) = parse_override(line) {
                let _ = cfg.set(&k, &v);
            }
        }
    }
}
