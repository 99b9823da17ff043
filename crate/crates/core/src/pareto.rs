//! Pareto dominance over objective vectors (all objectives maximized).
//!
//! The gap measures use a uniform shift: a scalar `ε` is added to every
//! coordinate of an arm's mean vector.
//!
//! * Pareto suboptimality gap: the smallest `ε ≥ 0` such that `μ_x + ε·1` is
//!   not dominated by any arm. Closed form
//!   `Δ(x) = max(0, max_{x'} min_i (μ_{x'}^i − μ_x^i))`.
//! * Maximal loss: the infimum of `ε ≥ 0` such that `μ_x + ε·1` dominates every
//!   arm. Closed form `ε(x) = max(0, max_{x'} max_i (μ_{x'}^i − μ_x^i))`.
//!
//! Both are infima, so identical or partially tied vectors yield the closure
//! value (e.g. `0` for identical means) rather than an unattainable minimum.

use alloc::vec::Vec;

use crate::error::{check_finite, Error, Result};

/// A validated objective vector: non-empty, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        check_finite(&values, "objective vector")?;
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ObjectiveVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Both gap measures of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    pub psg: f64,
    pub maximal_loss: f64,
}

/// `true` iff `u` Pareto dominates `v`.
pub fn dominates(u: &[f64], v: &[f64]) -> Result<bool> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(dominates_unchecked(u, v))
}

#[inline]
pub(crate) fn dominates_unchecked(u: &[f64], v: &[f64]) -> bool {
    let mut strict = false;
    for (a, b) in u.iter().zip(v) {
        if a < b {
            return false;
        }
        if a > b {
            strict = true;
        }
    }
    strict
}

/// Checks a family of vectors is non-empty, of one common non-zero length,
/// and finite. Returns that length.
pub(crate) fn validate_family<V: AsRef<[f64]>>(vectors: &[V]) -> Result<usize> {
    let first = vectors.first().ok_or(Error::EmptyInput)?.as_ref().len();
    if first == 0 {
        return Err(Error::EmptyInput);
    }
    for v in vectors {
        let v = v.as_ref();
        if v.len() != first {
            return Err(Error::DimensionMismatch {
                expected: first,
                found: v.len(),
            });
        }
        check_finite(v, "objective vector")?;
    }
    Ok(first)
}

/// Indices of the vectors not dominated by any other, in ascending order.
pub fn non_dominated_set<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<usize>> {
    validate_family(vectors)?;
    Ok((0..vectors.len())
        .filter(|&i| {
            !vectors
                .iter()
                .any(|other| dominates_unchecked(other.as_ref(), vectors[i].as_ref()))
        })
        .collect())
}

fn check_arm<V>(means: &[V], arm: usize) -> Result<()> {
    if arm < means.len() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index: arm,
            len: means.len(),
        })
    }
}

/// Pareto suboptimality gap Δ of `arm`.
pub fn pareto_suboptimality_gap<V: AsRef<[f64]>>(means: &[V], arm: usize) -> Result<f64> {
    validate_family(means)?;
    check_arm(means, arm)?;
    Ok(psg_unchecked(means, arm))
}

pub(crate) fn psg_unchecked<V: AsRef<[f64]>>(means: &[V], arm: usize) -> f64 {
    let target = means[arm].as_ref();
    means
        .iter()
        .map(|other| {
            other
                .as_ref()
                .iter()
                .zip(target)
                .map(|(o, t)| o - t)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Maximal loss ε of `arm`.
pub fn maximal_loss<V: AsRef<[f64]>>(means: &[V], arm: usize) -> Result<f64> {
    validate_family(means)?;
    check_arm(means, arm)?;
    Ok(maximal_loss_unchecked(means, arm))
}

pub(crate) fn maximal_loss_unchecked<V: AsRef<[f64]>>(means: &[V], arm: usize) -> f64 {
    let target = means[arm].as_ref();
    means
        .iter()
        .flat_map(|other| other.as_ref().iter().zip(target).map(|(o, t)| o - t))
        .fold(0.0, f64::max)
}

/// Maximal loss of every arm at once. `O(K·m)`: the loss is the largest
/// shortfall against the per-objective maximum.
pub fn maximal_losses<V: AsRef<[f64]>>(means: &[V]) -> Result<Vec<f64>> {
    let m = validate_family(means)?;
    let mut best = alloc::vec![f64::NEG_INFINITY; m];
    for v in means {
        for (b, &x) in best.iter_mut().zip(v.as_ref()) {
            *b = b.max(x);
        }
    }
    Ok(means
        .iter()
        .map(|v| best.iter().zip(v.as_ref()).map(|(b, x)| b - x).fold(0.0, f64::max))
        .collect())
}

/// Both gaps for `arm`.
pub fn gaps<V: AsRef<[f64]>>(means: &[V], arm: usize) -> Result<GapResult> {
    validate_family(means)?;
    check_arm(means, arm)?;
    Ok(GapResult {
        psg: psg_unchecked(means, arm),
        maximal_loss: maximal_loss_unchecked(means, arm),
    })
}

/// Indices attaining the minimum value, compared exactly.
pub fn argmin_set(values: &[f64]) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == min)
        .map(|(i, _)| i)
        .collect()
}
