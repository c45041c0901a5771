use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mibench::harness::checks::check_record;
use mibench::harness::{run, worker_count, Experiment, ExperimentConfig};
use mibench::Result;

/// Neural mutual-information estimator benchmarks.
#[derive(Parser, Debug)]
#[command(name = "mibench", version)]
struct Cli {
    /// awgn_estimators, bsc_estimators, autoencoder or lemma_check
    experiment: String,
    /// Experiment config file
    #[arg(long)]
    config: PathBuf,
    /// Run this seed only, replacing the configured list
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate the acceptance criteria for this experiment; exit 4 if any fails
    #[arg(long)]
    check: bool,
}

const EXIT_CHECK_FAILED: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mibench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<ExitCode> {
    let experiment: Experiment = cli.experiment.parse()?;
    let mut config = ExperimentConfig::from_path(&cli.config, Some(experiment))?;
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    config.validate()?;
    let workers = worker_count()?;
    eprintln!(
        "mibench: {} with {} seed(s), {} worker(s)",
        experiment.name(),
        config.seeds.len(),
        workers
    );
    let record = run(&config, workers)?;
    for path in record.write(&config.output_dir)? {
        println!("wrote {}", path.display());
    }
    if let Some(l) = &record.lemma {
        println!(
            "lemma check: {} combinations, {} violations",
            l.checked(),
            l.violations()
        );
    }
    for row in &record.summary {
        println!(
            "{:<6} bias {:+.4} bits, variance {:.4} bits^2 over {} seeds",
            row.estimator.name(),
            row.mean_bias_bits,
            row.variance_bits2,
            row.seeds
        );
    }
    if !cli.check {
        return Ok(ExitCode::SUCCESS);
    }
    let results = check_record(&record);
    for r in &results {
        println!("{r}");
    }
    Ok(if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    })
}
