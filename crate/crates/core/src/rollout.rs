//! Drives a policy through an environment while a blender learns alongside.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::blender::{ArmId, Blender, SelectionMode, StepRecord};
use crate::env::Environment;
use crate::error::{check_len, Error, Result};
use crate::estimator::EstimatorConfig;
use crate::rng::{stream, Stream};

/// Who picks the arm at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// The blender's own choice.
    Blend,
    /// Always the given arm.
    Fixed(ArmId),
    /// Uniform over all arms.
    UniformRandom,
}

/// One step of a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub record: StepRecord,
    /// Expected feedback of every arm at the state acted in.
    pub true_means: Vec<Vec<f64>>,
    pub done: bool,
}

/// Couples an environment with a blender. Baseline policies still feed the
/// blender, so its estimates and bounds are available for every policy.
#[derive(Debug, Clone)]
pub struct Runner<E> {
    env: E,
    blender: Blender,
    policy: Policy,
    rng: ChaCha8Rng,
}

impl<E: Environment> Runner<E> {
    pub fn new(env: E, config: EstimatorConfig, mode: SelectionMode, policy: Policy, seed: u64) -> Result<Self> {
        check_len(env.dim(), config.dim)?;
        check_len(env.objectives(), config.objectives)?;
        if let Policy::Fixed(arm) = policy {
            if arm.0 >= env.arms() {
                return Err(Error::IndexOutOfRange {
                    index: arm.0,
                    len: env.arms(),
                });
            }
        }
        let blender = Blender::new(config, env.arms(), mode)?;
        Ok(Self {
            env,
            blender,
            policy,
            rng: stream(seed, Stream::Selection),
        })
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut E {
        &mut self.env
    }

    pub fn blender(&self) -> &Blender {
        &self.blender
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        let contexts = self.env.contexts();
        let true_means = self.env.true_means();
        self.blender.prepare(&contexts)?;
        let arm = match self.policy {
            Policy::Blend => self.blender.select_arm(&mut self.rng)?,
            Policy::Fixed(arm) => arm,
            Policy::UniformRandom => ArmId(self.rng.random_range(0..self.env.arms())),
        };
        let tr = self.env.step(arm)?;
        let record = self.blender.observe(arm, &tr.feedback, &tr.contexts)?;
        Ok(StepOutcome {
            record,
            true_means,
            done: tr.done,
        })
    }

    /// Runs until the episode ends or `max_steps` steps have been taken.
    pub fn run_episode(&mut self, max_steps: usize, mut sink: impl FnMut(StepOutcome) -> Result<()>) -> Result<usize> {
        let mut taken = 0;
        while taken < max_steps {
            let out = self.step()?;
            let done = out.done;
            sink(out)?;
            taken += 1;
            if done {
                break;
            }
        }
        Ok(taken)
    }

    pub fn reset(&mut self) {
        self.env.reset();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::gridworld::{GridworldEnv, GridworldTask};
    use crate::env::synthetic::{SyntheticConfig, SyntheticLinearEnv};
    use crate::metrics::{MetricAccumulator, RunTrace};

    fn synthetic(seed: u64) -> SyntheticLinearEnv {
        SyntheticLinearEnv::random(SyntheticConfig::default(), seed).unwrap()
    }

    #[test]
    fn true_means_match_acted_state() {
        let env = synthetic(1);
        let cfg = EstimatorConfig::with_defaults(4, 2);
        let mut r = Runner::new(env, cfg, SelectionMode::Faithful, Policy::Blend, 1).unwrap();
        for _ in 0..20 {
            let theta = r.env().theta_star().to_vec();
            let out = r.step().unwrap();
            let ctx = &out.record.context_pulled;
            let arm = out.record.arm.0;
            for (i, th) in theta.iter().enumerate() {
                let mean: f64 = th.iter().zip(ctx).map(|(a, b)| a * b).sum();
                assert!((out.true_means[arm][i] - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_policy_and_shadow_blender() {
        let task = GridworldTask::new(GridworldEnv::fixture(50));
        let cfg = EstimatorConfig::with_defaults(3, 2);
        let mut r = Runner::new(task, cfg, SelectionMode::Faithful, Policy::Fixed(ArmId(1)), 3).unwrap();
        let mut trace = RunTrace::new(cfg);
        let n = r
            .run_episode(1_000, |o| {
                trace.push(o.record, o.true_means);
                Ok(())
            })
            .unwrap();
        assert_eq!(n, 50);
        assert!(trace.records.iter().all(|rec| rec.arm == ArmId(1)));
        assert_eq!(r.blender().step(), 50);
        assert!(matches!(r.step(), Err(Error::EpisodeFinished)));
        r.reset();
        assert!(r.step().is_ok());
    }

    #[test]
    fn rejects_mismatched_config() {
        let cfg = EstimatorConfig::with_defaults(3, 2);
        assert!(Runner::new(synthetic(0), cfg, SelectionMode::Faithful, Policy::Blend, 0).is_err());
        let cfg = EstimatorConfig::with_defaults(4, 2);
        assert!(Runner::new(synthetic(0), cfg, SelectionMode::Faithful, Policy::Fixed(ArmId(3)), 0).is_err());
    }

    #[test]
    fn same_seed_same_run() {
        let cfg = EstimatorConfig::with_defaults(4, 2);
        let run = |seed| {
            let mut r = Runner::new(synthetic(seed), cfg, SelectionMode::FreshContext, Policy::Blend, seed).unwrap();
            let mut acc = MetricAccumulator::new(&cfg, 200);
            let mut arms = Vec::new();
            for _ in 0..200 {
                let o = r.step().unwrap();
                acc.push(&o.record, &o.true_means).unwrap();
                arms.push(o.record.arm);
            }
            (arms, acc.pr, acc.cml)
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7).0, run(8).0);
    }
}
