//! The blending bandit: keeps the candidate arm set, draws uniformly from it,
//! and after each observation recomputes every arm's UCB vector and
//! estimated maximal loss.
//!
//! In [`SelectionMode::Faithful`] the candidate set used at step `t + 1` is the
//! argmin of the estimated losses computed from the contexts observed at step
//! `t`. [`SelectionMode::FreshContext`] additionally recomputes the candidate
//! set from the current state's contexts right before the pull (see
//! [`Blender::prepare`]).

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_finite, check_len, Error, Result};
use crate::estimator::{EstimatorConfig, EstimatorState};
use crate::pareto::{argmin_set, dominates_unchecked, maximal_losses};

/// Index of an arm (an input controller).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArmId(pub usize);

impl ArmId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl core::fmt::Display for ArmId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionMode {
    /// Candidate set for step `t + 1` comes from step `t`'s contexts.
    #[default]
    Faithful,
    /// Candidate set is recomputed from the current contexts before each pull.
    FreshContext,
}

/// Everything the blender saw and computed at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: u64,
    pub arm: ArmId,
    /// `Ψ_t`, the pulled arm's context.
    pub context_pulled: Vec<f64>,
    pub feedback: Vec<f64>,
    /// Post-update UCB vectors, `K × m`, at this step's contexts.
    pub ucb_indices: Vec<Vec<f64>>,
    /// Estimated maximal loss of each arm from `ucb_indices`.
    pub est_losses: Vec<f64>,
    /// `‖Ψ_t‖_{V_t⁻¹}` with `V_t` including `Ψ_t`.
    pub inv_norm_pulled: f64,
    pub beta_t: f64,
    /// Candidate set in force when this step's arm was chosen.
    pub candidates: Vec<ArmId>,
    /// UCB vectors that produced `candidates`; `None` when the candidate set
    /// was the initial full arm set.
    pub selection_ucb: Option<Vec<Vec<f64>>>,
}

/// Estimated maximal losses of UCB rows and their full argmin set.
pub fn candidate_set(ucb_rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<ArmId>)> {
    let losses = maximal_losses(ucb_rows)?;
    let arms = argmin_set(&losses).into_iter().map(ArmId).collect();
    Ok((losses, arms))
}

/// `true` iff no row of the UCB vectors that produced the record's candidate
/// set dominates the pulled arm's row. Vacuously true for the initial pull.
pub fn assert_nondominated_pick(record: &StepRecord) -> bool {
    match &record.selection_ucb {
        None => true,
        Some(rows) => nondominated_in(rows, record.arm),
    }
}

/// `true` iff no row dominates `rows[arm]`.
pub fn nondominated_in(rows: &[Vec<f64>], arm: ArmId) -> bool {
    match rows.get(arm.0) {
        None => false,
        Some(pulled) => !rows.iter().any(|r| dominates_unchecked(r, pulled)),
    }
}

#[derive(Debug, Clone)]
pub struct Blender {
    estimator: EstimatorState,
    arms: usize,
    mode: SelectionMode,
    candidates: Vec<ArmId>,
    selection_ucb: Option<Vec<Vec<f64>>>,
    step: u64,
}

impl Blender {
    pub fn new(config: EstimatorConfig, arms: usize, mode: SelectionMode) -> Result<Self> {
        if arms == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            estimator: EstimatorState::new(config)?,
            arms,
            mode,
            candidates: (0..arms).map(ArmId).collect(),
            selection_ucb: None,
            step: 0,
        })
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }

    pub fn candidates(&self) -> &[ArmId] {
        &self.candidates
    }

    /// Steps observed so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Uniform draw from the candidate set.
    pub fn select_arm<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ArmId> {
        match self.candidates.len() {
            0 => Err(Error::EmptyCandidateSet),
            1 => Ok(self.candidates[0]),
            n => Ok(self.candidates[rng.random_range(0..n)]),
        }
    }

    /// In fresh-context mode, rebuilds the candidate set from the contexts of
    /// the state about to be acted in. No-op in faithful mode.
    pub fn prepare<C: AsRef<[f64]>>(&mut self, contexts_all_arms: &[C]) -> Result<()> {
        if self.mode == SelectionMode::Faithful {
            return Ok(());
        }
        let rows = self.ucb_rows(contexts_all_arms)?;
        let (_, arms) = candidate_set(&rows)?;
        self.candidates = arms;
        self.selection_ucb = Some(rows);
        Ok(())
    }

    fn ucb_rows<C: AsRef<[f64]>>(&self, contexts_all_arms: &[C]) -> Result<Vec<Vec<f64>>> {
        check_len(self.arms, contexts_all_arms.len())?;
        contexts_all_arms
            .iter()
            .map(|c| self.estimator.ucb_vector(c.as_ref()))
            .collect()
    }

    /// Ingests the pulled arm's feedback together with every arm's context at
    /// the state the pull happened in, then forms the next candidate set.
    pub fn observe<C: AsRef<[f64]>>(
        &mut self,
        arm: ArmId,
        feedback: &[f64],
        contexts_all_arms: &[C],
    ) -> Result<StepRecord> {
        check_len(self.arms, contexts_all_arms.len())?;
        if arm.0 >= self.arms {
            return Err(Error::IndexOutOfRange {
                index: arm.0,
                len: self.arms,
            });
        }
        let cfg = *self.estimator.config();
        check_len(cfg.objectives, feedback.len())?;
        check_finite(feedback, "feedback")?;
        for c in contexts_all_arms {
            check_len(cfg.dim, c.as_ref().len())?;
        }

        let psi = contexts_all_arms[arm.0].as_ref();
        self.estimator.update(psi, feedback)?;
        self.step += 1;

        let beta_t = self.estimator.beta();
        let inv_norm_pulled = self.estimator.inv_norm(psi)?;
        let ucb_indices = self.ucb_rows(contexts_all_arms)?;
        let (est_losses, next) = candidate_set(&ucb_indices)?;

        let used = core::mem::replace(&mut self.candidates, next);
        let selection_ucb = self.selection_ucb.replace(ucb_indices.clone());

        Ok(StepRecord {
            step: self.step,
            arm,
            context_pulled: psi.to_vec(),
            feedback: feedback.to_vec(),
            ucb_indices,
            est_losses,
            inv_norm_pulled,
            beta_t,
            candidates: used,
            selection_ucb,
        })
    }
}
