//! Versioned JSON checkpoint of an estimator: flat `V`, `W` and `t`.

use moblend_core::linalg::Matrix;
use moblend_core::{EstimatorConfig, EstimatorState};
use serde::{Deserialize, Serialize};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    State(#[from] moblend_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSnapshot {
    pub version: u32,
    pub dim: usize,
    pub objectives: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub s_bound: f64,
    pub l_bound: f64,
    pub delta: f64,
    pub t: u64,
    /// Row-major `d × d` Gram matrix.
    pub gram: Vec<f64>,
    /// `m × d`.
    pub w: Vec<Vec<f64>>,
}

impl EstimatorSnapshot {
    pub fn capture(state: &EstimatorState) -> Self {
        let c = state.config();
        Self {
            version: SNAPSHOT_VERSION,
            dim: c.dim,
            objectives: c.objectives,
            lambda: c.lambda,
            sigma: c.sigma,
            s_bound: c.s_bound,
            l_bound: c.l_bound,
            delta: c.delta,
            t: state.steps(),
            gram: state.gram().as_slice().to_vec(),
            w: state.w().to_vec(),
        }
    }

    pub fn restore(&self) -> Result<EstimatorState, SnapshotError> {
        if self.version != SNAPSHOT_VERSION {
            return Err(SnapshotError::Version(self.version));
        }
        let config = EstimatorConfig {
            dim: self.dim,
            objectives: self.objectives,
            lambda: self.lambda,
            sigma: self.sigma,
            s_bound: self.s_bound,
            l_bound: self.l_bound,
            delta: self.delta,
        };
        let gram = Matrix::from_row_major(self.dim, self.gram.clone())?;
        Ok(EstimatorState::from_parts(config, gram, self.w.clone(), self.t)?)
    }

    pub fn to_json(&self) -> Result<String, SnapshotError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, SnapshotError> {
        Ok(serde_json::from_str(text)?)
    }
}
