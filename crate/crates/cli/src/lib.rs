//! Experiment presets, configuration and CSV output for the `hetbandit`
//! command-line driver.

pub mod config;
pub mod output;
pub mod presets;
pub mod suite;

pub use config::{parse_assignments, parse_override, ConfigError, ExperimentConfig};
pub use presets::{build_preset, Built, IdentPreset, PresetKind, VarEstPreset};
pub use suite::{run_suite, summarize, Row, SummaryLine};
