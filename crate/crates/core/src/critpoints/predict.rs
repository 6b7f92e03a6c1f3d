use serde::{Deserialize, Serialize};

use super::{dedup_pairs, CriticalPoint};
use crate::spectrum::EigenGroup;

/// How the pair set was certified complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    /// Multistart and the grid oracle agree (k ≤ 3).
    OracleCertified,
    /// Multistart saturated; no independent check.
    Conjectured,
    /// Multistart did not saturate or disagreed with the oracle.
    Unverified,
}

/// `u_λ ≈ (λⱼ − λ)^{exponent} · Σ coefficientsᵢ eᵢ` as `λ → λⱼ⁻`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticProfile {
    pub exponent: f64,
    pub coefficients: Vec<f64>,
    pub modes: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedPair {
    pub a: Vec<f64>,
    pub value: f64,
    pub hess_eigs: Vec<f64>,
    pub morse_index: usize,
    pub solution_morse_index: usize,
    pub nondegenerate: bool,
    pub profile: AsymptoticProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPrediction {
    pub lambda_j: f64,
    pub eigenvalue_num: i128,
    pub eigenvalue_den: i128,
    pub j: usize,
    pub k: usize,
    pub p: f64,
    pub pair_count: usize,
    pub pairs: Vec<PredictedPair>,
    /// All points nondegenerate: the count is exact rather than a lower bound.
    pub exact: bool,
    pub completeness: Completeness,
}

impl BranchPrediction {
    pub fn solution_morse_indices(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.solution_morse_index).collect()
    }

    /// Index of the pair whose class `{±a}` is nearest to `a`, with the distance.
    pub fn nearest_pair(&self, a: &[f64]) -> Option<(usize, f64)> {
        self.pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (i, super::pair_distance(&p.a, a)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
    }
}

/// Turns critical points into predicted solution branches.
///
/// Each sign pair gives one pair of branches with solution Morse index `m + j − 1`.
/// With a degenerate point present the count is only a lower bound and `exact` is cleared.
pub fn predict_branches(
    group: &EigenGroup,
    p: f64,
    points: &[CriticalPoint],
    completeness: Completeness,
    dedup_radius: f64,
) -> BranchPrediction {
    let reps = dedup_pairs(points.iter().cloned(), dedup_radius);
    let exponent = 1.0 / (p - 1.0);
    let modes: Vec<Vec<u32>> = group.modes.iter().map(|m| m.indices.clone()).collect();
    let pairs: Vec<PredictedPair> = reps
        .into_iter()
        .map(|c| PredictedPair {
            solution_morse_index: c.morse_index + group.index_j - 1,
            profile: AsymptoticProfile {
                exponent,
                coefficients: c.a.clone(),
                modes: modes.clone(),
            },
            a: c.a,
            value: c.value,
            hess_eigs: c.hess_eigs,
            morse_index: c.morse_index,
            nondegenerate: c.nondegenerate,
        })
        .collect();
    BranchPrediction {
        lambda_j: group.lambda,
        eigenvalue_num: *group.eigenvalue_exact.numer(),
        eigenvalue_den: *group.eigenvalue_exact.denom(),
        j: group.index_j,
        k: group.multiplicity,
        p,
        pair_count: pairs.len(),
        exact: pairs.iter().all(|p| p.nondegenerate),
        pairs,
        completeness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critpoints::GammaFamily;
    use crate::spectrum::{locate_group, DomainSpec, GroupTarget};

    #[test]
    fn sign_flips_do_not_change_prediction() {
        let d = DomainSpec::square_pi();
        let g = locate_group(&d, &GroupTarget::Index(2)).unwrap().group;
        let pts = GammaFamily::new(9.0, 4.0, 2).solutions(1e-8);
        let base = predict_branches(&g, 3.0, &pts, Completeness::Conjectured, 1e-6);
        let flipped: Vec<_> = pts.iter().rev().map(|p| p.negated()).collect();
        let other = predict_branches(&g, 3.0, &flipped, Completeness::Conjectured, 1e-6);
        assert_eq!(base, other);
        assert_eq!(base.pair_count, 4);
        let mut idx = base.solution_morse_indices();
        idx.sort_unstable();
        assert_eq!(idx, vec![2, 2, 3, 3]);
        assert!(base.exact);
    }

    #[test]
    fn degenerate_clears_exactness() {
        let d = DomainSpec::square_pi();
        let g = locate_group(&d, &GroupTarget::Index(2)).unwrap().group;
        let pts = GammaFamily::new(3.0, 1.0, 2).solutions(1e-8);
        let pred = predict_branches(&g, 3.0, &pts, Completeness::Conjectured, 1e-6);
        assert!(!pred.exact);
    }

    #[test]
    fn signed_zeros_do_not_change_order() {
        let d = DomainSpec::cube_pi();
        let g = locate_group(&d, &GroupTarget::Index(2)).unwrap().group;
        let pts = GammaFamily::new(9.0, 4.0, 3).solutions(1e-8);
        let base = predict_branches(&g, 3.0, &pts, Completeness::Conjectured, 1e-6);
        let negated: Vec<_> = pts.iter().map(|p| p.negated()).collect();
        let other = predict_branches(&g, 3.0, &negated, Completeness::Conjectured, 1e-6);
        assert_eq!(base, other);
        assert!(base.pairs.iter().flat_map(|p| &p.a).all(|x| !(x.is_sign_negative() && *x == 0.0)));
    }
}
