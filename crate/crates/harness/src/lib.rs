//! Experiment harness for the `moblend-core` blending bandit: TOML configs,
//! gridworld map files, multi-seed runs, CSV/JSON output and oracle checks.

pub mod config;
pub mod experiment;
pub mod map;
pub mod oracle_check;
pub mod output;
pub mod snapshot;
pub mod stats;

pub use config::{ConfigError, ExperimentConfig, PolicyName};
pub use experiment::{
    run_experiment, run_seed, simulate, AggregateSummary, BatchStats, HarnessError, SeedRun, SeedSummary,
    BATCH_EPISODES,
};
pub use map::{load_map, parse_map, MapError};
pub use output::{emit_plot_data, write_step_csv};
pub use stats::MeanStd;
