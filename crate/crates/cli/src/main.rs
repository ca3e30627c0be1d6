use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hetbandit_cli::config::{parse_override, ConfigError, ExperimentConfig};
use hetbandit_cli::output::{self, OutputError};
use hetbandit_cli::presets::{build_preset, Built, IdentPreset};
use hetbandit_cli::suite::{run_suite, summarize};

#[derive(Parser)]
#[command(name = "hetbandit", version, about = "Heteroskedastic linear bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated experiment and write per-run rows.
    Run(Common),
    /// Write oracle design weights per arm.
    Design(Common),
    /// Print psi*, rho*, their ratio and the sample lower bound.
    Complexity(Common),
}

#[derive(Args)]
struct Common {
    /// key = value config file, applied before any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Extra `key=value` assignment; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        Failure::Run(e.to_string())
    }
}

fn load(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    let flags = [
        ("preset", c.preset.clone()),
        ("reps", c.reps.map(|v| v.to_string())),
        ("seed", c.seed.map(|v| v.to_string())),
        ("delta", c.delta.map(|v| v.to_string())),
        ("kappa", c.kappa.map(|v| v.to_string())),
        ("jobs", c.jobs.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    for s in &c.set {
        let (k, v) = parse_override(s)?;
        cfg.set(&k, &v)?;
    }
    if let Some(out) = &c.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn ident(cfg: &ExperimentConfig) -> Result<IdentPreset, Failure> {
    match build_preset(cfg)? {
        Built::Ident(p) => Ok(p),
        Built::VarEst(_) => Err(Failure::Config(format!(
            "preset {} has no identification task",
            cfg.preset
        ))),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(c) => {
            let cfg = load(&c)?;
            let result = run_suite(&cfg)?;
            let summary = summarize(&result.rows);
            print!("{}", output::format_summary(&summary));
            if let Some(path) = &cfg.output {
                output::write_rows(path, &result.rows)?;
                output::write_summary(&output::summary_path(path), &summary)?;
            }
        }
        Command::Design(c) => {
            let cfg = load(&c)?;
            let preset = ident(&cfg)?;
            match &cfg.output {
                Some(path) => {
                    output::write_design_table(path, &preset)?;
                }
                None => {
                    let (_, records) = output::design_table(&preset)?;
                    println!("{}", output::DESIGN_HEADER.join(","));
                    for r in records {
                        println!("{}", r.join(","));
                    }
                }
            }
        }
        Command::Complexity(c) => {
            let cfg = load(&c)?;
            let preset = ident(&cfg)?;
            let report = hetbandit_core::ident::psi_star(&preset.task, &preset.design_variances)
                .map_err(|e| Failure::Run(e.to_string()))?;
            print!("{}", output::format_complexity(&report, cfg.delta));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("run failed: {msg}");
            ExitCode::from(3)
        }
    }
}
