//! Feedback-generating environments.

pub mod gridworld;
pub mod synthetic;

use alloc::vec::Vec;

use crate::blender::ArmId;
use crate::error::Result;

/// Result of acting in an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// `ψ(z_t, x)` for every arm at the state the action was taken in.
    pub contexts: Vec<Vec<f64>>,
    /// Feedback of the pulled arm.
    pub feedback: Vec<f64>,
    /// Episode boundary reached.
    pub done: bool,
}

/// A contextual multi-objective environment with instrumented ground truth.
pub trait Environment {
    fn arms(&self) -> usize;
    fn objectives(&self) -> usize;
    fn dim(&self) -> usize;

    /// `ψ(z_t, x)` for every arm at the current state.
    fn contexts(&self) -> Vec<Vec<f64>>;

    /// Expected feedback of every arm at the current state.
    fn true_means(&self) -> Vec<Vec<f64>>;

    /// Acts with `arm` at the current state and advances to the next one.
    fn step(&mut self, arm: ArmId) -> Result<Transition>;

    /// Starts a new episode. Environments without episodes ignore this.
    fn reset(&mut self) {}
}
