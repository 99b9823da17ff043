//! Randomized comparison of the closed forms against brute-force oracles.

use moblend_core::linalg::norm2;
use moblend_core::oracle;
use moblend_core::pareto::{maximal_losses, non_dominated_set, pareto_suboptimality_gap};
use moblend_core::rng::{stream, Stream};
use moblend_core::{batch_solve, EstimatorConfig, EstimatorState};
use rand::Rng;

/// Largest deviation tolerated by `oracle-check`.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub cases: usize,
    pub max_deviation: f64,
    /// Instances where a set-valued result differed from the oracle.
    pub set_mismatches: usize,
}

impl OracleReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.set_mismatches == 0 && self.max_deviation <= tolerance
    }
}

/// Random mean families with `K ≤ max_arms`, `m ≤ max_objectives`. Every
/// other family reuses coordinates from a small grid so ties and exact
/// dominance show up.
pub fn check_pareto(cases: usize, max_arms: usize, max_objectives: usize, seed: u64) -> OracleReport {
    let mut rng = stream(seed, Stream::Coefficients);
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for case in 0..cases {
        let k = rng.random_range(1..=max_arms);
        let m = rng.random_range(1..=max_objectives);
        let means: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        if case % 2 == 0 {
                            rng.random_range(-2.0..2.0)
                        } else {
                            f64::from(rng.random_range(-2i32..=2)) / 2.0
                        }
                    })
                    .collect()
            })
            .collect();
        let losses = maximal_losses(&means).expect("valid family");
        for (arm, loss) in losses.iter().enumerate() {
            let psg = pareto_suboptimality_gap(&means, arm).expect("valid family");
            worst = worst
                .max((psg - oracle::psg_bisection(&means, arm)).abs())
                .max((loss - oracle::maximal_loss_bisection(&means, arm)).abs());
        }
        if non_dominated_set(&means).expect("valid family") != oracle::non_dominated_pairwise(&means) {
            mismatches += 1;
        }
    }
    OracleReport {
        cases,
        max_deviation: worst,
        set_mismatches: mismatches,
    }
}

/// One incremental run of `updates` steps in dimension `dim`, compared with
/// the batch ridge solve and a dense inverse every `check_every` steps and at
/// the end. Returns the largest deviation of `θ̂` and of `‖ψ‖_{V⁻¹}`.
pub fn estimator_deviation(dim: usize, objectives: usize, updates: usize, check_every: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, Stream::Contexts);
    let cfg = EstimatorConfig::with_defaults(dim, objectives);
    let mut est = EstimatorState::new(cfg).expect("default config is valid");
    let theta: Vec<Vec<f64>> = (0..objectives)
        .map(|_| (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect();
    let mut contexts = Vec::with_capacity(updates);
    let mut ys: Vec<Vec<f64>> = vec![Vec::with_capacity(updates); objectives];
    let mut worst = 0.0f64;
    for step in 1..=updates {
        let mut psi: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = norm2(&psi);
        if n > 1.0 {
            psi.iter_mut().for_each(|x| *x /= n);
        }
        let noise = rng.random_range(-0.1..0.1);
        let y: Vec<f64> = theta
            .iter()
            .map(|th| th.iter().zip(&psi).map(|(a, b)| a * b).sum::<f64>() + noise)
            .collect();
        est.update(&psi, &y).expect("finite inputs");
        for (col, v) in ys.iter_mut().zip(&y) {
            col.push(*v);
        }
        contexts.push(psi);
        if step % check_every.max(1) == 0 || step == updates {
            for (i, col) in ys.iter().enumerate() {
                let batch = batch_solve(&contexts, col, dim, cfg.lambda).expect("regularized system");
                for (a, b) in batch.iter().zip(&est.theta_hat()[i]) {
                    worst = worst.max((a - b).abs());
                }
            }
            let probe = &contexts[step - 1];
            let dense = oracle::inv_norm_dense(est.gram(), probe).expect("positive definite");
            worst = worst.max((dense - est.inv_norm(probe).expect("matching dim")).abs());
        }
    }
    worst
}

/// `cases` random runs with `d ≤ 16`, each up to 200 updates.
pub fn check_estimator(cases: usize, seed: u64) -> OracleReport {
    let mut rng = stream(seed, Stream::Coefficients);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let d = rng.random_range(1..=16);
        let m = rng.random_range(1..=3);
        let n = rng.random_range(1..=200);
        worst = worst.max(estimator_deviation(d, m, n, 50, seed.wrapping_add(case as u64)));
    }
    OracleReport {
        cases,
        max_deviation: worst,
        set_mismatches: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(check_pareto(300, 6, 4, 1).passed(1e-9));
        assert!(check_estimator(20, 2).passed(ORACLE_TOLERANCE));
    }
}
