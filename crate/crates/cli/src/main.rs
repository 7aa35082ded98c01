use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corrinfer::harness::{self, ExperimentConfig, ExperimentKind};
use corrinfer::Error;

/// Correlation-inference experiments against trained models.
#[derive(Parser)]
#[command(name = "corrinfer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for report.csv, summary.json and auxiliary tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Use the full shadow and target counts instead of desk-scale ones.
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Model-less accuracy over the (ρ(X1,Y), ρ(X2,Y)) grid, plus model-based cells.
    Grid,
    /// Both attacks for increasing numbers of variables.
    IncreasingN,
    /// Model-based accuracy as the number of queries varies.
    MitigationQueries,
    /// Model-based accuracy as the output precision is reduced.
    MitigationPrecision,
    /// Both attacks on data collections from a real or stand-in dataset.
    RealData,
    /// Attribute inference methods on synthetic targets.
    Aia,
    /// Recovery of input-label correlations from predicted labels.
    ExtractConstraints,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Grid => ExperimentKind::Grid,
            Command::IncreasingN => ExperimentKind::IncreasingN,
            Command::MitigationQueries => ExperimentKind::MitigationQueries,
            Command::MitigationPrecision => ExperimentKind::MitigationPrecision,
            Command::RealData => ExperimentKind::RealData,
            Command::Aia => ExperimentKind::Aia,
            Command::ExtractConstraints => ExperimentKind::ExtractConstraints,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let mut value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            // The subcommand decides the experiment.
            if let Some(obj) = value.as_object_mut() {
                obj.insert("experiment".into(), serde_json::to_value(cli.command.kind())?);
            }
            ExperimentConfig::from_json(&value.to_string())?
        }
        None => ExperimentConfig::new(cli.command.kind()),
    };
    cfg.experiment = cli.command.kind();
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.common.out {
        cfg.out = Some(out.clone());
    }
    if cli.common.workers.is_some() {
        cfg.workers = cli.common.workers;
    }
    cfg.paper_scale |= cli.common.paper_scale;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
    log::info!("running {} with seed {}", cfg.experiment.name(), cfg.seed);
    let report = harness::run(&cfg)?;
    report.write_dir(&out)?;
    println!("{:<28} {:<16} {:>7} {:>9} {:>8}", "setting", "method", "targets", "accuracy", "ci95");
    for g in report.summary() {
        println!(
            "{:<28} {:<16} {:>7} {:>9.4} {:>8.4}",
            g.setting, g.method, g.targets, g.accuracy, g.ci95
        );
    }
    for (k, v) in &report.extra {
        println!("{k} = {v:.6}");
    }
    println!("wrote {} ({:.1} s)", out.display(), report.wall_clock_secs);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
