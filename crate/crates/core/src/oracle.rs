//! Brute-force reference implementations used to cross-check the closed forms.
//!
//! Nothing here shares code with [`crate::pareto`] or [`crate::estimator`]:
//! the gap oracles bisect directly on the defining predicates, the
//! non-dominated oracle enumerates every ordered pair, and the inverse oracle
//! runs Gauss–Jordan elimination.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Number of bisection halvings.
pub const BISECTION_STEPS: usize = 60;

fn strictly_dominates(u: &[f64], v: &[f64]) -> bool {
    u.iter().zip(v).all(|(a, b)| a >= b) && u.iter().zip(v).any(|(a, b)| a > b)
}

fn shifted(v: &[f64], eps: f64) -> Vec<f64> {
    v.iter().map(|x| x + eps).collect()
}

fn bracket<V: AsRef<[f64]>>(means: &[V]) -> f64 {
    let (lo, hi) = means
        .iter()
        .flat_map(|v| v.as_ref().iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    2.0 * (hi - lo) + 1.0
}

/// Smallest `ε ≥ 0` in `[0, hi]` where a monotone predicate turns true.
fn bisect(hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, hi);
    debug_assert!(pred(hi));
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Pareto suboptimality gap by bisection on "`μ_arm + ε·1` is not dominated".
pub fn psg_bisection<V: AsRef<[f64]>>(means: &[V], arm: usize) -> f64 {
    let target = means[arm].as_ref();
    bisect(bracket(means), |eps| {
        let lifted = shifted(target, eps);
        means.iter().all(|other| !strictly_dominates(other.as_ref(), &lifted))
    })
}

/// Maximal loss by bisection on "`μ_arm + ε·1` dominates every arm".
pub fn maximal_loss_bisection<V: AsRef<[f64]>>(means: &[V], arm: usize) -> f64 {
    let target = means[arm].as_ref();
    bisect(bracket(means), |eps| {
        let lifted = shifted(target, eps);
        means.iter().all(|other| strictly_dominates(&lifted, other.as_ref()))
    })
}

/// Non-dominated indices from the full `n × n` dominance table.
pub fn non_dominated_pairwise<V: AsRef<[f64]>>(vectors: &[V]) -> Vec<usize> {
    let n = vectors.len();
    let mut dominated = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && strictly_dominates(vectors[j].as_ref(), vectors[i].as_ref()) {
                dominated[i] = true;
            }
        }
    }
    (0..n).filter(|&i| !dominated[i]).collect()
}

/// Dense inverse by Gauss–Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &Matrix) -> Result<Matrix> {
    let n = a.dim();
    let w = 2 * n;
    let mut aug = vec![0.0; n * w];
    for i in 0..n {
        for j in 0..n {
            aug[i * w + j] = a.get(i, j);
        }
        aug[i * w + n + i] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if libm::fabs(aug[r * w + col]) > libm::fabs(aug[pivot * w + col]) {
                pivot = r;
            }
        }
        if aug[pivot * w + col] == 0.0 {
            return Err(Error::Singular);
        }
        for k in 0..w {
            aug.swap(col * w + k, pivot * w + k);
        }
        let p = aug[col * w + col];
        for k in 0..w {
            aug[col * w + k] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = aug[r * w + col];
            if f != 0.0 {
                for k in 0..w {
                    aug[r * w + k] -= f * aug[col * w + k];
                }
            }
        }
    }
    let data = (0..n).flat_map(|i| aug[i * w + n..i * w + w].to_vec()).collect();
    Matrix::from_row_major(n, data)
}

/// `√(ψᵀ V⁻¹ ψ)` through an explicit Gauss–Jordan inverse of `v`.
pub fn inv_norm_dense(v: &Matrix, psi: &[f64]) -> Result<f64> {
    let inv = gauss_jordan_inverse(v)?;
    let mut q = 0.0;
    for i in 0..psi.len() {
        for j in 0..psi.len() {
            q += psi[i] * inv.get(i, j) * psi[j];
        }
    }
    Ok(libm::sqrt(q.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_reproduces_two_arm_example() {
        let means = [[0.0, 1.0], [2.0, 0.0]];
        assert!(psg_bisection(&means, 0) < 1e-15);
        assert!((maximal_loss_bisection(&means, 0) - 2.0).abs() < 1e-12);
        assert!((maximal_loss_bisection(&means, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_jordan_inverts() {
        let a = Matrix::from_row_major(2, alloc::vec![0.0, 2.0, 1.0, 1.0]).unwrap();
        let inv = gauss_jordan_inverse(&a).unwrap();
        assert!(a.mul(&inv).identity_deviation() < 1e-15);
    }
}
