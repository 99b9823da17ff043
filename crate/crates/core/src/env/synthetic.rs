//! Linear environment with known coefficients: `(y_t)_i = θ_{*,i}·Ψ_t + η_t`.
//!
//! Contexts for every arm are drawn fresh and i.i.d. each step, uniformly from
//! the ball of radius `L`. By default a single noise draw is added to every
//! objective at a step.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{Environment, Transition};
use crate::blender::ArmId;
use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::{dot, norm2};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// `N(0, σ²)`.
    #[default]
    Gaussian,
    /// Uniform on `[−σ√3, σ√3]`; variance `σ²` and σ-sub-Gaussian.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseCoupling {
    /// One draw `η_t` shared by all objectives.
    #[default]
    Shared,
    /// Independent draw per objective.
    PerObjective,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub dim: usize,
    pub arms: usize,
    pub objectives: usize,
    pub sigma: f64,
    pub noise: NoiseModel,
    pub coupling: NoiseCoupling,
    /// Radius of the context ball.
    pub l_bound: f64,
    /// Norm of each random `θ_{*,i}`.
    pub theta_norm: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dim: 4,
            arms: 3,
            objectives: 2,
            sigma: 0.1,
            noise: NoiseModel::Gaussian,
            coupling: NoiseCoupling::Shared,
            l_bound: 1.0,
            theta_norm: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticLinearEnv {
    theta_star: Vec<Vec<f64>>,
    config: SyntheticConfig,
    current: Vec<Vec<f64>>,
    context_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
}

impl SyntheticLinearEnv {
    /// Environment with explicit coefficients (`config.theta_norm` is ignored).
    pub fn new(theta_star: Vec<Vec<f64>>, config: SyntheticConfig, seed: u64) -> Result<Self> {
        if config.arms == 0 || config.dim == 0 {
            return Err(Error::EmptyInput);
        }
        check_len(config.objectives, theta_star.len())?;
        for row in &theta_star {
            check_len(config.dim, row.len())?;
            check_finite(row, "theta_star")?;
        }
        if !(config.sigma.is_finite() && config.sigma >= 0.0) {
            return Err(Error::InvalidConfig {
                field: "sigma",
                reason: format!("must be finite and >= 0, got {}", config.sigma),
            });
        }
        if !(config.l_bound.is_finite() && config.l_bound > 0.0) {
            return Err(Error::InvalidConfig {
                field: "l_bound",
                reason: format!("must be finite and > 0, got {}", config.l_bound),
            });
        }
        let mut env = Self {
            theta_star,
            config,
            current: Vec::new(),
            context_rng: stream(seed, Stream::Contexts),
            noise_rng: stream(seed, Stream::Noise),
        };
        env.draw_contexts();
        Ok(env)
    }

    /// Environment whose `θ_{*,i}` are uniform on the sphere of radius
    /// `config.theta_norm`, drawn from the seed's coefficient stream.
    pub fn random(config: SyntheticConfig, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, Stream::Coefficients);
        let theta = (0..config.objectives)
            .map(|_| {
                let mut v = unit_direction(&mut rng, config.dim);
                v.iter_mut().for_each(|x| *x *= config.theta_norm);
                v
            })
            .collect();
        Self::new(theta, config, seed)
    }

    pub fn theta_star(&self) -> &[Vec<f64>] {
        &self.theta_star
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    /// Pins the current state's contexts (one per arm).
    pub fn set_contexts(&mut self, contexts: Vec<Vec<f64>>) -> Result<()> {
        check_len(self.config.arms, contexts.len())?;
        for c in &contexts {
            check_len(self.config.dim, c.len())?;
            check_finite(c, "context")?;
        }
        self.current = contexts;
        Ok(())
    }

    fn draw_contexts(&mut self) {
        let (d, l) = (self.config.dim, self.config.l_bound);
        self.current = (0..self.config.arms)
            .map(|_| {
                let mut v = unit_direction(&mut self.context_rng, d);
                let u: f64 = self.context_rng.random();
                let r = l * libm::pow(u, 1.0 / d as f64);
                v.iter_mut().for_each(|x| *x *= r);
                v
            })
            .collect();
    }

    fn noise(&mut self) -> f64 {
        let sigma = self.config.sigma;
        if sigma == 0.0 {
            return 0.0;
        }
        match self.config.noise {
            NoiseModel::Gaussian => Normal::new(0.0, sigma)
                .expect("sigma validated")
                .sample(&mut self.noise_rng),
            NoiseModel::Uniform => {
                let a = sigma * libm::sqrt(3.0);
                self.noise_rng.random_range(-a..=a)
            }
        }
    }

    /// Feedback for `arm` at the current contexts, then fresh contexts.
    /// Returns the contexts the pull was made under.
    pub fn synth_step(&mut self, arm: ArmId) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let psi = self.current.get(arm.0).ok_or(Error::IndexOutOfRange {
            index: arm.0,
            len: self.config.arms,
        })?;
        let clean: Vec<f64> = self.theta_star.iter().map(|th| dot(th, psi)).collect();
        let feedback = match self.config.coupling {
            NoiseCoupling::Shared => {
                let eta = self.noise();
                clean.iter().map(|c| c + eta).collect()
            }
            NoiseCoupling::PerObjective => clean.iter().map(|c| c + self.noise()).collect(),
        };
        let contexts = core::mem::take(&mut self.current);
        self.draw_contexts();
        Ok((contexts, feedback))
    }
}

/// `μ_x = θ_* ψ_x` for every arm.
pub fn true_means<C: AsRef<[f64]>>(theta_star: &[Vec<f64>], contexts: &[C]) -> Vec<Vec<f64>> {
    contexts
        .iter()
        .map(|c| theta_star.iter().map(|th| dot(th, c.as_ref())).collect())
        .collect()
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm2(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl Environment for SyntheticLinearEnv {
    fn arms(&self) -> usize {
        self.config.arms
    }

    fn objectives(&self) -> usize {
        self.config.objectives
    }

    fn dim(&self) -> usize {
        self.config.dim
    }

    fn contexts(&self) -> Vec<Vec<f64>> {
        self.current.clone()
    }

    fn true_means(&self) -> Vec<Vec<f64>> {
        true_means(&self.theta_star, &self.current)
    }

    fn step(&mut self, arm: ArmId) -> Result<Transition> {
        let (contexts, feedback) = self.synth_step(arm)?;
        Ok(Transition {
            contexts,
            feedback,
            done: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn noiseless(theta: Vec<Vec<f64>>, arms: usize) -> SyntheticLinearEnv {
        let cfg = SyntheticConfig {
            dim: theta[0].len(),
            arms,
            objectives: theta.len(),
            sigma: 0.0,
            ..SyntheticConfig::default()
        };
        SyntheticLinearEnv::new(theta, cfg, 1).unwrap()
    }

    #[test]
    fn noiseless_inner_product() {
        let mut env = noiseless(vec![vec![1.0, 0.0]], 2);
        env.set_contexts(vec![vec![0.3, 0.4], vec![0.0, 1.0]]).unwrap();
        let (ctx, y) = env.synth_step(ArmId(0)).unwrap();
        assert_eq!(y, vec![0.3]);
        assert_eq!(ctx[0], vec![0.3, 0.4]);
    }

    #[test]
    fn gaussian_noise_is_centred() {
        let cfg = SyntheticConfig::default();
        let mut env = SyntheticLinearEnv::random(cfg, 17).unwrap();
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let mu = env.true_means();
            let (_, y) = env.synth_step(ArmId(1)).unwrap();
            sum += y[0] - mu[1][0];
            // shared draw: the residual is identical across objectives
            assert!(((y[0] - mu[1][0]) - (y[1] - mu[1][1])).abs() < 1e-12);
        }
        let mean = sum / n as f64;
        assert!(mean.abs() < 4.0 * cfg.sigma / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn per_objective_and_uniform_noise() {
        let cfg = SyntheticConfig {
            coupling: NoiseCoupling::PerObjective,
            noise: NoiseModel::Uniform,
            ..SyntheticConfig::default()
        };
        let mut env = SyntheticLinearEnv::random(cfg, 4).unwrap();
        let bound = cfg.sigma * 3f64.sqrt();
        let mut differ = false;
        for _ in 0..200 {
            let mu = env.true_means();
            let (_, y) = env.synth_step(ArmId(0)).unwrap();
            let r0 = y[0] - mu[0][0];
            let r1 = y[1] - mu[0][1];
            assert!(r0.abs() <= bound + 1e-12 && r1.abs() <= bound + 1e-12);
            differ |= (r0 - r1).abs() > 1e-9;
        }
        assert!(differ);
    }

    #[test]
    fn contexts_are_fresh_and_bounded() {
        let mut env = SyntheticLinearEnv::random(SyntheticConfig::default(), 2).unwrap();
        let mut prev = env.contexts();
        for _ in 0..500 {
            let (ctx, _) = env.synth_step(ArmId(2)).unwrap();
            assert_eq!(ctx, prev);
            for c in &ctx {
                assert!(norm2(c) <= 1.0 + 1e-12);
            }
            prev = env.contexts();
            assert_ne!(prev, ctx);
            assert_ne!(prev[0], prev[1]);
        }
    }

    #[test]
    fn true_means_examples() {
        let theta = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let basis = [vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(true_means(&theta, &basis), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let zeros = vec![vec![0.0, 0.0]; 3];
        assert_eq!(true_means(&theta, &zeros), vec![vec![0.0, 0.0]; 3]);

        let env = SyntheticLinearEnv::random(SyntheticConfig::default(), 8).unwrap();
        let ctx = env.contexts();
        let mu = env.true_means();
        for (x, c) in ctx.iter().enumerate() {
            for (i, th) in env.theta_star().iter().enumerate() {
                let mut s = 0.0;
                for k in 0..c.len() {
                    s += th[k] * c[k];
                }
                assert!((mu[x][i] - s).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn theta_norm_is_respected() {
        let cfg = SyntheticConfig {
            theta_norm: 1.5,
            ..SyntheticConfig::default()
        };
        let env = SyntheticLinearEnv::random(cfg, 3).unwrap();
        for th in env.theta_star() {
            assert!((norm2(th) - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = SyntheticLinearEnv::random(SyntheticConfig::default(), 99).unwrap();
        let mut b = SyntheticLinearEnv::random(SyntheticConfig::default(), 99).unwrap();
        for _ in 0..50 {
            assert_eq!(a.synth_step(ArmId(0)).unwrap(), b.synth_step(ArmId(0)).unwrap());
        }
    }

    #[test]
    fn invalid_construction() {
        let cfg = SyntheticConfig::default();
        assert!(SyntheticLinearEnv::new(vec![vec![1.0; 4]], cfg, 0).is_err());
        let mut env = SyntheticLinearEnv::random(cfg, 0).unwrap();
        assert!(env.synth_step(ArmId(3)).is_err());
    }
}
