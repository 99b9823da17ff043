use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use moblend::oracle_check::{check_estimator, check_pareto, OracleReport, ORACLE_TOLERANCE};
use moblend::{run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "moblend", version, about = "Blend controllers with a multi-objective bandit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV/JSON results.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds overriding the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare closed forms against brute-force oracles on random cases.
    OracleCheck {
        #[arg(long, value_enum)]
        module: Module,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Module {
    Pareto,
    Estimator,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, seeds, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seeds) = seeds {
                cfg.experiment.seeds = seeds;
            }
            if let Some(out) = out {
                cfg.experiment.output_dir = out;
            }
            cfg.validate()?;
            let summaries = run_experiment(&cfg).with_context(|| format!("running {}", config.display()))?;
            for s in &summaries {
                println!(
                    "{:<18} reward {:>10.3} ± {:<8.3} cost {:>10.3} ± {:<8.3} correct {:.3}  PR {:.3}  CML {:.3}",
                    s.policy.as_str(),
                    s.episode_reward.mean,
                    s.episode_reward.std,
                    s.episode_cost.mean,
                    s.episode_cost.std,
                    s.correct_pick_rate.mean,
                    s.seeds.iter().map(|x| x.pr).sum::<f64>() / s.seeds.len() as f64,
                    s.seeds.iter().map(|x| x.cml).sum::<f64>() / s.seeds.len() as f64,
                );
            }
            println!("results in {}", cfg.experiment.output_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!(
                "ok: {:?} env, {} policies, {} seeds, {} steps per seed",
                cfg.experiment.env,
                cfg.policies().len(),
                cfg.experiment.seeds.len(),
                cfg.total_steps()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck { module, cases, seed } => {
            let (name, report): (&str, OracleReport) = match module {
                Module::Pareto => ("pareto", check_pareto(cases, 6, 4, seed)),
                Module::Estimator => ("estimator", check_estimator(cases, seed)),
            };
            println!(
                "{name}: {} cases, max deviation {:.3e}, set mismatches {}",
                report.cases, report.max_deviation, report.set_mismatches
            );
            Ok(if report.passed(ORACLE_TOLERANCE) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
