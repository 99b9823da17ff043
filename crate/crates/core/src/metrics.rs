//! Ground-truth accounting of a run: Pareto regret, cumulative maximal loss,
//! correct-pick rate, and the computable regret and loss bounds.

use alloc::vec::Vec;

use crate::blender::{nondominated_in, StepRecord};
use crate::error::{Error, Result};
use crate::estimator::{confidence_radius, EstimatorConfig};
use crate::pareto::{gaps, validate_family};

/// Records of a run aligned with the true mean vectors of every arm.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
    /// `true_means[t][x]`: expected feedback of arm `x` at step `t`.
    pub true_means: Vec<Vec<Vec<f64>>>,
    pub config: EstimatorConfig,
}

impl RunTrace {
    pub fn new(config: EstimatorConfig) -> Self {
        Self {
            records: Vec::new(),
            true_means: Vec::new(),
            config,
        }
    }

    pub fn push(&mut self, record: StepRecord, true_means: Vec<Vec<f64>>) {
        self.records.push(record);
        self.true_means.push(true_means);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Horizon `T` as counted by the estimator (last record's step).
    pub fn horizon(&self) -> u64 {
        self.records.last().map_or(0, |r| r.step)
    }

    fn check(&self) -> Result<()> {
        if self.true_means.len() != self.records.len() {
            return Err(Error::IncompleteTrace("ground truth missing for some steps"));
        }
        Ok(())
    }
}

/// Per-step contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    /// `Δ_t(x_t)` under the true means.
    pub psg: f64,
    /// `ε_t(x_t)` under the true means.
    pub maximal_loss: f64,
    /// `ε̂_t(x_t) + 2β_T‖Ψ_t‖_{V_t⁻¹}`.
    pub bound_increment: f64,
    /// Pulled arm's true vector is not dominated by another arm's.
    pub correct_pick: bool,
}

/// Computes one step's metrics; `beta_horizon` is `β_T` for the run.
pub fn step_metrics(record: &StepRecord, true_means: &[Vec<f64>], beta_horizon: f64) -> Result<StepMetrics> {
    validate_family(true_means)?;
    let arm = record.arm.index();
    let g = gaps(true_means, arm)?;
    let est = *record
        .est_losses
        .get(arm)
        .ok_or(Error::IncompleteTrace("estimated losses missing"))?;
    if !record.inv_norm_pulled.is_finite() {
        return Err(Error::IncompleteTrace("inverse norm missing"));
    }
    Ok(StepMetrics {
        psg: g.psg,
        maximal_loss: g.maximal_loss,
        bound_increment: est + 2.0 * beta_horizon * record.inv_norm_pulled,
        correct_pick: nondominated_in(true_means, record.arm),
    })
}

/// Running cumulative sums, for runs too long to keep in memory.
#[derive(Debug, Clone)]
pub struct MetricAccumulator {
    beta_horizon: f64,
    pub pr: f64,
    pub cml: f64,
    pub cml_bound: f64,
    pub correct: u64,
    pub steps: u64,
}

impl MetricAccumulator {
    /// `horizon` is the final step count `T` of the run, known up front.
    pub fn new(config: &EstimatorConfig, horizon: u64) -> Self {
        Self {
            beta_horizon: confidence_radius(config, horizon),
            pr: 0.0,
            cml: 0.0,
            cml_bound: 0.0,
            correct: 0,
            steps: 0,
        }
    }

    pub fn beta_horizon(&self) -> f64 {
        self.beta_horizon
    }

    pub fn push(&mut self, record: &StepRecord, true_means: &[Vec<f64>]) -> Result<StepMetrics> {
        let m = step_metrics(record, true_means, self.beta_horizon)?;
        self.pr += m.psg;
        self.cml += m.maximal_loss;
        self.cml_bound += m.bound_increment;
        self.correct += u64::from(m.correct_pick);
        self.steps += 1;
        Ok(m)
    }

    pub fn correct_pick_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.correct as f64 / self.steps as f64
        }
    }
}

/// All per-step series of a trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricSeries {
    pub psg: Vec<f64>,
    pub maximal_loss: Vec<f64>,
    pub pr_cum: Vec<f64>,
    pub cml_cum: Vec<f64>,
    pub cml_bound: Vec<f64>,
    pub pr_theory: Vec<f64>,
    pub correct_pick: Vec<bool>,
}

pub fn metric_series(trace: &RunTrace) -> Result<MetricSeries> {
    trace.check()?;
    let mut acc = MetricAccumulator::new(&trace.config, trace.horizon());
    let mut out = MetricSeries::default();
    for (record, means) in trace.records.iter().zip(&trace.true_means) {
        let m = acc.push(record, means)?;
        out.psg.push(m.psg);
        out.maximal_loss.push(m.maximal_loss);
        out.pr_cum.push(acc.pr);
        out.cml_cum.push(acc.cml);
        out.cml_bound.push(acc.cml_bound);
        out.pr_theory.push(pr_theory_bound(record.step.max(1), &trace.config));
        out.correct_pick.push(m.correct_pick);
    }
    Ok(out)
}

/// Cumulative Pareto regret `Σ Δ_t(x_t)`.
pub fn pareto_regret(trace: &RunTrace) -> Result<Vec<f64>> {
    Ok(metric_series(trace)?.pr_cum)
}

/// Cumulative maximal loss `Σ ε_t(x_t)`.
pub fn cumulative_maximal_loss(trace: &RunTrace) -> Result<Vec<f64>> {
    Ok(metric_series(trace)?.cml_cum)
}

/// Cumulative `Σ (ε̂_t(x_t) + 2β_T‖Ψ_t‖_{V_t⁻¹})`, with `β_T` at the trace horizon.
pub fn cml_upper_bound(trace: &RunTrace) -> Result<Vec<f64>> {
    Ok(metric_series(trace)?.cml_bound)
}

/// High-probability Pareto-regret bound at horizon `T`:
/// `8 β_T² √(2 T d ln(λ + T L / d))`.
pub fn pr_theory_bound(horizon: u64, config: &EstimatorConfig) -> f64 {
    let t = horizon as f64;
    let d = config.dim as f64;
    let beta = confidence_radius(config, horizon);
    let log_term = libm::log(config.lambda + t * config.l_bound / d).max(0.0);
    8.0 * beta * beta * libm::sqrt(2.0 * t * d * log_term)
}

/// Fraction of steps whose pulled arm is not Pareto dominated under the truth.
pub fn correct_pick_rate(trace: &RunTrace) -> Result<f64> {
    trace.check()?;
    if trace.is_empty() {
        return Err(Error::IncompleteTrace("no steps"));
    }
    let mut hits = 0usize;
    for (record, means) in trace.records.iter().zip(&trace.true_means) {
        validate_family(means)?;
        hits += usize::from(nondominated_in(means, record.arm));
    }
    Ok(hits as f64 / trace.len() as f64)
}
