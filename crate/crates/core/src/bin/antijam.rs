//! Command-line driver for the anti-jamming experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use antijam::harness::{self, config::parse_pairs, Check, ExperimentConfig};
use antijam::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "antijam", version, about = "Frequency-hopping radar against a Markov jammer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured chain and print its uncertainty report.
    Chain(Common),
    /// Solve for the decay that hits each target uncertainty.
    Calibrate(Common),
    /// Train one agent; writes the training log and a checkpoint.
    Train(Common),
    /// Evaluate strategies with a trained or checkpointed agent.
    Eval(Common),
    /// Policy-error curves over time.
    Fig1(Common),
    /// Jam probability against uncertainty.
    Fig2(Common),
    /// Finite-difference check of both networks.
    Gradcheck(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV and SVG files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full-scale defaults (more seeds, longer runs).
    #[arg(long)]
    full: bool,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut pairs = Vec::new();
        if self.full {
            pairs.push(("full".to_string(), "true".to_string()));
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            pairs.extend(parse_pairs(&text)?);
        }
        if let Some(seed) = self.seed {
            pairs.push(("seed".to_string(), seed.to_string()));
        }
        ExperimentConfig::from_pairs(&pairs)
    }
}

fn report(checks: &[Check]) -> Result<()> {
    for c in checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Error::CheckFailed(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

fn run(command: &Command) -> Result<()> {
    match command {
        Command::Chain(c) => print!("{}", harness::chain_report(&c.config()?)?),
        Command::Calibrate(c) => print!("{}", harness::calibrate_report(&c.config()?)?),
        Command::Train(c) => {
            let outcome = harness::run_train(&c.config()?, c.out.as_deref())?;
            if let Some(e) = outcome.log.final_errors() {
                println!("final policy errors: {e}");
            }
        }
        Command::Eval(c) => print!("{}", harness::run_eval(&c.config()?, c.out.as_deref())?.to_csv()),
        Command::Fig1(c) => {
            let result = harness::run_fig1(&c.config()?, c.out.as_deref(), c.jobs)?;
            report(&harness::fig1_checks(&result, harness::FIG1_H_RECURRENT, harness::FIG1_H_MLP))?;
        }
        Command::Fig2(c) => {
            let result = harness::run_fig2(&c.config()?, c.out.as_deref(), c.jobs)?;
            print!("{}", result.sweep.summary_csv());
            report(&harness::fig2_checks(&result))?;
        }
        Command::Gradcheck(c) => {
            let rep = harness::gradcheck_report(c.config()?.seed);
            print!("{}", rep.render());
            if !rep.passed() {
                return Err(Error::CheckFailed(format!("max relative error {:.3e}", rep.max_rel_error())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
