//! Multi-seed experiment runs and their aggregation.

use std::path::{Path, PathBuf};

use log::info;
use moblend_core::env::gridworld::{GridworldEnv, GridworldTask};
use moblend_core::env::synthetic::SyntheticLinearEnv;
use moblend_core::{metric_series, pr_theory_bound, Environment, MetricSeries, RunTrace, Runner, SelectionMode};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EnvKind, ExperimentConfig, PolicyName};
use crate::map::{load_map, MapError};
use crate::output::{emit_plot_data, write_seed_csv, write_step_csv, write_summary_json};
use crate::stats::MeanStd;

/// Episodes averaged into one reported batch.
pub const BATCH_EPISODES: usize = 30;
/// Points kept per seed for the regret curves.
pub const REGRET_POINTS: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("policy {policy}, seed {seed}: {source}")]
    Run {
        policy: PolicyName,
        seed: u64,
        #[source]
        source: moblend_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Totals of one episode: reward `Σ y₀`, cost `Σ (1 − y₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeStats {
    pub steps: usize,
    pub reward: f64,
    pub cost: f64,
    pub correct_pick_rate: f64,
}

/// Final values of one seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub steps: u64,
    pub pr: f64,
    pub cml: f64,
    pub cml_bound: f64,
    pub pr_theory: f64,
    pub correct_pick_rate: f64,
    pub mean_episode_reward: f64,
    pub mean_episode_cost: f64,
    #[serde(skip)]
    pub episodes: Vec<EpisodeStats>,
    /// Cumulative series at [`regret_grid`] steps.
    #[serde(skip)]
    pub curve: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchStats {
    pub batch: usize,
    pub reward: MeanStd,
    pub cost: MeanStd,
    pub correct_pick_rate: MeanStd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretPoint {
    pub t: u64,
    pub pr: MeanStd,
    pub pr_theory: f64,
    pub cml: MeanStd,
    pub cml_bound: MeanStd,
}

/// Everything reported for one policy across seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateSummary {
    pub policy: PolicyName,
    pub seeds: Vec<SeedSummary>,
    /// One entry per complete batch of [`BATCH_EPISODES`] episodes; stats are
    /// across seeds of each seed's batch average.
    pub batches: Vec<BatchStats>,
    pub regret: Vec<RegretPoint>,
    /// Across-seed statistics of each seed's mean episode values.
    pub episode_reward: MeanStd,
    pub episode_cost: MeanStd,
    pub correct_pick_rate: MeanStd,
}

/// Step indices (1-based) at which regret curves are sampled.
pub fn regret_grid(total: u64) -> Vec<u64> {
    let points = (REGRET_POINTS as u64).min(total);
    let mut grid: Vec<u64> = (1..=points).map(|k| (k * total).div_ceil(points)).collect();
    grid.dedup();
    grid
}

/// A fully simulated seed, before aggregation.
pub struct SeedRun {
    pub trace: RunTrace,
    pub series: MetricSeries,
    pub episodes: Vec<EpisodeStats>,
}

impl SeedRun {
    pub fn summary(&self, seed: u64) -> SeedSummary {
        let n = self.trace.len();
        let last = |v: &[f64]| v.last().copied().unwrap_or(0.0);
        let grid = regret_grid(n as u64);
        let curve = grid
            .iter()
            .map(|&t| {
                let i = t as usize - 1;
                [
                    self.series.pr_cum[i],
                    self.series.cml_cum[i],
                    self.series.cml_bound[i],
                    self.series.pr_theory[i],
                ]
            })
            .collect();
        let eps = self.episodes.len().max(1) as f64;
        let correct = self.series.correct_pick.iter().filter(|&&c| c).count();
        SeedSummary {
            seed,
            steps: n as u64,
            pr: last(&self.series.pr_cum),
            cml: last(&self.series.cml_cum),
            cml_bound: last(&self.series.cml_bound),
            pr_theory: pr_theory_bound(n.max(1) as u64, &self.trace.config),
            correct_pick_rate: correct as f64 / n.max(1) as f64,
            mean_episode_reward: self.episodes.iter().map(|e| e.reward).sum::<f64>() / eps,
            mean_episode_cost: self.episodes.iter().map(|e| e.cost).sum::<f64>() / eps,
            episodes: self.episodes.clone(),
            curve,
        }
    }
}

fn drive<E: Environment>(
    mut runner: Runner<E>,
    total: u64,
    episode_len: usize,
    objectives: usize,
) -> moblend_core::Result<SeedRun> {
    let mut trace = RunTrace::new(*runner.blender().estimator().config());
    let mut episodes = Vec::new();
    let mut remaining = total as usize;
    while remaining > 0 {
        runner.reset();
        let mut ep = EpisodeStats {
            steps: 0,
            reward: 0.0,
            cost: 0.0,
            correct_pick_rate: 0.0,
        };
        let mut correct = 0usize;
        let taken = runner.run_episode(episode_len.min(remaining), |o| {
            ep.reward += o.record.feedback[0];
            if objectives > 1 {
                ep.cost += 1.0 - o.record.feedback[1];
            }
            correct += usize::from(moblend_core::blender::nondominated_in(&o.true_means, o.record.arm));
            trace.push(o.record, o.true_means);
            Ok(())
        })?;
        ep.steps = taken;
        ep.correct_pick_rate = correct as f64 / taken.max(1) as f64;
        episodes.push(ep);
        remaining -= taken;
    }
    let series = metric_series(&trace)?;
    Ok(SeedRun {
        trace,
        series,
        episodes,
    })
}

/// Environment template shared by all seeds of an experiment.
#[derive(Clone)]
enum Prototype {
    Gridworld(Box<GridworldTask>),
    Synthetic,
}

fn prototype(cfg: &ExperimentConfig) -> Result<Prototype, HarnessError> {
    Ok(match cfg.experiment.env {
        EnvKind::Synthetic => Prototype::Synthetic,
        EnvKind::Gridworld => {
            let path = cfg.experiment.map.as_deref().expect("validated config has a map");
            let env: GridworldEnv = load_map(path, cfg.experiment.episode_len)?;
            Prototype::Gridworld(Box::new(GridworldTask::new(env)))
        }
    })
}

fn simulate_seed(
    cfg: &ExperimentConfig,
    proto: &Prototype,
    policy: PolicyName,
    seed: u64,
) -> moblend_core::Result<SeedRun> {
    let est = cfg.estimator_config();
    let mode = SelectionMode::from(cfg.experiment.mode);
    let total = cfg.total_steps();
    let len = cfg.experiment.episode_len;
    match proto {
        Prototype::Gridworld(task) => {
            let runner = Runner::new((**task).clone(), est, mode, policy.policy(), seed)?;
            drive(runner, total, len, est.objectives)
        }
        Prototype::Synthetic => {
            let env = SyntheticLinearEnv::random(cfg.synthetic.to_config(est.l_bound), seed)?;
            let runner = Runner::new(env, est, mode, policy.policy(), seed)?;
            drive(runner, total, len, est.objectives)
        }
    }
}

/// Simulates one seed of one policy.
pub fn run_seed(cfg: &ExperimentConfig, policy: PolicyName, seed: u64) -> Result<SeedRun, HarnessError> {
    let proto = prototype(cfg)?;
    simulate_seed(cfg, &proto, policy, seed).map_err(|source| HarnessError::Run { policy, seed, source })
}

fn aggregate(policy: PolicyName, seeds: Vec<SeedSummary>, cfg: &ExperimentConfig) -> AggregateSummary {
    let batch_count = seeds.iter().map(|s| s.episodes.len()).min().unwrap_or(0) / BATCH_EPISODES;
    let batches = (0..batch_count)
        .map(|b| {
            let per_seed = |f: fn(&EpisodeStats) -> f64| -> MeanStd {
                MeanStd::of(seeds.iter().map(|s| {
                    let eps = &s.episodes[b * BATCH_EPISODES..(b + 1) * BATCH_EPISODES];
                    eps.iter().map(f).sum::<f64>() / BATCH_EPISODES as f64
                }))
            };
            BatchStats {
                batch: b,
                reward: per_seed(|e| e.reward),
                cost: per_seed(|e| e.cost),
                correct_pick_rate: per_seed(|e| e.correct_pick_rate),
            }
        })
        .collect();
    let est = cfg.estimator_config();
    let grid = regret_grid(cfg.total_steps());
    let regret = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let col = |j: usize| MeanStd::of(seeds.iter().map(|s| s.curve[k][j]));
            RegretPoint {
                t,
                pr: col(0),
                pr_theory: pr_theory_bound(t, &est),
                cml: col(1),
                cml_bound: col(2),
            }
        })
        .collect();
    AggregateSummary {
        policy,
        episode_reward: MeanStd::of(seeds.iter().map(|s| s.mean_episode_reward)),
        episode_cost: MeanStd::of(seeds.iter().map(|s| s.mean_episode_cost)),
        correct_pick_rate: MeanStd::of(seeds.iter().map(|s| s.correct_pick_rate)),
        seeds,
        batches,
        regret,
    }
}

/// Runs every configured policy and seed. When `out` is given, step CSVs (if
/// enabled), per-seed summaries, plot data and `summary.json` are written
/// there.
pub fn simulate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<AggregateSummary>, HarnessError> {
    cfg.validate()?;
    let proto = prototype(cfg)?;
    let step_dir = out.filter(|_| cfg.experiment.write_steps).map(|o| o.join("steps"));
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    if let Some(dir) = &step_dir {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    let mut summaries = Vec::new();
    for policy in cfg.policies() {
        info!(
            "policy {policy}: {} seeds × {} steps",
            cfg.experiment.seeds.len(),
            cfg.total_steps()
        );
        let seeds = cfg
            .experiment
            .seeds
            .par_iter()
            .map(|&seed| {
                let run = simulate_seed(cfg, &proto, policy, seed).map_err(|source| HarnessError::Run {
                    policy,
                    seed,
                    source,
                })?;
                if let Some(dir) = &step_dir {
                    let path = dir.join(format!("{policy}_seed{seed}.csv"));
                    write_step_csv(&run.trace, &run.series, &path)?;
                }
                Ok(run.summary(seed))
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let summary = aggregate(policy, seeds, cfg);
        if let Some(dir) = out {
            write_seed_csv(&summary, &dir.join(format!("seeds_{policy}.csv")))?;
        }
        summaries.push(summary);
    }
    if let Some(dir) = out {
        emit_plot_data(&summaries, dir)?;
        write_summary_json(&summaries, &dir.join("summary.json"))?;
    }
    Ok(summaries)
}

/// [`simulate`] writing into the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<AggregateSummary>, HarnessError> {
    simulate(cfg, Some(&cfg.experiment.output_dir))
}
