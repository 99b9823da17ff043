//! CSV and JSON writers. Floats are written in scientific notation with 16
//! significant digits so files are byte-stable and parse back exactly enough
//! for round-trip checks.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use moblend_core::{MetricSeries, RunTrace};

use crate::experiment::{AggregateSummary, BatchStats, HarnessError};
use crate::stats::MeanStd;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.15e}")
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, HarnessError> {
    let file = File::create(path).map_err(HarnessError::io(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Header of a step CSV for `arms` arms and `objectives` objectives.
pub fn step_header(arms: usize, objectives: usize) -> Vec<String> {
    let mut h = vec!["step".to_string(), "arm".to_string()];
    h.extend((0..objectives).map(|i| format!("feedback_{i}")));
    for x in 0..arms {
        h.extend((0..objectives).map(|i| format!("ucb_{x}_{i}")));
    }
    h.extend((0..arms).map(|x| format!("est_loss_{x}")));
    for name in [
        "psg_increment",
        "ml_increment",
        "pr_cum",
        "cml_cum",
        "cml_bound",
        "beta_t",
        "inv_norm",
    ] {
        h.push(name.to_string());
    }
    h
}

/// One row per step: feedback, every arm's UCB vector, estimated losses and
/// the metric series.
pub fn write_step_csv(trace: &RunTrace, series: &MetricSeries, path: &Path) -> Result<(), HarnessError> {
    let arms = trace.records.first().map_or(0, |r| r.ucb_indices.len());
    let mut w = writer(path)?;
    w.write_record(step_header(arms, trace.config.objectives))?;
    for (t, rec) in trace.records.iter().enumerate() {
        let mut row = vec![rec.step.to_string(), rec.arm.to_string()];
        row.extend(rec.feedback.iter().copied().map(fmt_f64));
        row.extend(rec.ucb_indices.iter().flatten().copied().map(fmt_f64));
        row.extend(rec.est_losses.iter().copied().map(fmt_f64));
        for v in [
            series.psg[t],
            series.maximal_loss[t],
            series.pr_cum[t],
            series.cml_cum[t],
            series.cml_bound[t],
            rec.beta_t,
            rec.inv_norm_pulled,
        ] {
            row.push(fmt_f64(v));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(HarnessError::io(path))?;
    Ok(())
}

/// Final per-seed values of one policy.
pub fn write_seed_csv(summary: &AggregateSummary, path: &Path) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    w.write_record([
        "seed",
        "steps",
        "pr",
        "cml",
        "cml_bound",
        "pr_theory",
        "correct_pick_rate",
        "mean_episode_reward",
        "mean_episode_cost",
    ])?;
    for s in &summary.seeds {
        let mut row = vec![s.seed.to_string(), s.steps.to_string()];
        row.extend(
            [
                s.pr,
                s.cml,
                s.cml_bound,
                s.pr_theory,
                s.correct_pick_rate,
                s.mean_episode_reward,
                s.mean_episode_cost,
            ]
            .map(fmt_f64),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(HarnessError::io(path))?;
    Ok(())
}

fn write_batch_file(
    summaries: &[AggregateSummary],
    path: &Path,
    pick: fn(&BatchStats) -> MeanStd,
) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    let mut header = vec!["batch".to_string()];
    for s in summaries {
        header.push(format!("{}_mean", s.policy));
        header.push(format!("{}_std", s.policy));
    }
    w.write_record(&header)?;
    let rows = summaries.iter().map(|s| s.batches.len()).min().unwrap_or(0);
    for b in 0..rows {
        let mut row = vec![b.to_string()];
        for s in summaries {
            let v = pick(&s.batches[b]);
            row.push(fmt_f64(v.mean));
            row.push(fmt_f64(v.std));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(HarnessError::io(path))?;
    Ok(())
}

/// Writes `reward.csv`, `cost.csv`, `correct_pick.csv` (per batch, mean and
/// std per policy) and `regret.csv` (empirical PR and CML with their bounds).
pub fn emit_plot_data(summaries: &[AggregateSummary], dir: &Path) -> Result<(), HarnessError> {
    write_batch_file(summaries, &dir.join("reward.csv"), |b| b.reward)?;
    write_batch_file(summaries, &dir.join("cost.csv"), |b| b.cost)?;
    write_batch_file(summaries, &dir.join("correct_pick.csv"), |b| b.correct_pick_rate)?;

    let path = dir.join("regret.csv");
    let mut w = writer(&path)?;
    let mut header = vec!["policy".to_string(), "t".to_string()];
    for col in [
        "pr_mean",
        "pr_std",
        "pr_theory",
        "cml_mean",
        "cml_std",
        "cml_bound_mean",
        "cml_bound_std",
    ] {
        header.push(col.to_string());
    }
    w.write_record(&header)?;
    for s in summaries {
        for p in &s.regret {
            let mut row = vec![s.policy.to_string(), p.t.to_string()];
            row.extend(
                [
                    p.pr.mean,
                    p.pr.std,
                    p.pr_theory,
                    p.cml.mean,
                    p.cml.std,
                    p.cml_bound.mean,
                    p.cml_bound.std,
                ]
                .map(fmt_f64),
            );
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(HarnessError::io(&path))?;
    Ok(())
}

pub fn write_summary_json(summaries: &[AggregateSummary], path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(HarnessError::io(path))?;
    serde_json::to_writer_pretty(BufWriter::new(file), summaries)?;
    Ok(())
}
