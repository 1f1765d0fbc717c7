use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use kronlearn::harness::{
    detector_table, run_bounds_sweep, run_detector, run_figure1a, run_figure1b, run_packing, trial_table,
    ExperimentConfig, ExperimentKind, Preset, Table,
};
use kronlearn::Error;

#[derive(Parser, Debug)]
#[command(name = "kronlearn", about = "Kronecker-structured dictionary learning experiments")]
struct Cli {
    #[arg(value_enum)]
    experiment: ExperimentKind,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Small grid: p in {16, 64}, N in {500, 1000, 2000, 4000}, 25 trials.
    #[arg(long, conflicts_with = "full")]
    desk: bool,
    /// Large grid: p in {128, 256, 512}, 50 trials.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when neither this nor `output_path` is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Check(String),
    Runtime(String),
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Config(m) => Failure::Config(m),
        other => Failure::Runtime(other.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::from_path(&cli.config).map_err(classify)?;
    if cli.desk {
        cfg.apply_preset(Preset::Desk);
    } else if cli.full {
        cfg.apply_preset(Preset::Full);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_path = Some(out.display().to_string());
    }
    cfg.validate(cli.experiment).map_err(classify)?;
    let hash = cfg.hash();
    let mut failed_checks = Vec::new();
    let table: Table = match cli.experiment {
        ExperimentKind::Figure1a => trial_table(&run_figure1a(&cfg).map_err(classify)?, &hash),
        ExperimentKind::Figure1b => trial_table(&run_figure1b(&cfg).map_err(classify)?, &hash),
        ExperimentKind::Bounds => run_bounds_sweep(&cfg, &hash).map_err(classify)?,
        ExperimentKind::Packing => {
            let run = run_packing(&cfg, &hash).map_err(classify)?;
            failed_checks = run.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
            run.table
        }
        ExperimentKind::Detector => detector_table(&run_detector(&cfg).map_err(classify)?, &hash),
    };
    let written = match &cfg.output_path {
        Some(path) => File::create(path)
            .map_err(Error::from)
            .and_then(|f| table.write(BufWriter::new(f))),
        None => table.write(io::stdout().lock()),
    };
    written.map_err(|e| Failure::Runtime(e.to_string()))?;
    if !failed_checks.is_empty() {
        return Err(Failure::Check(format!("failed checks: {}", failed_checks.join(", "))));
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Check(m)) => {
            eprintln!("{m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
