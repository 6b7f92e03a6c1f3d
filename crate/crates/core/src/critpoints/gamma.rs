//! Closed-form critical points of the `(α, β)` quartic
//! `½|a|² − ¼α Σaᵢ⁴ − (3/2)β Σ_{i<l} aᵢ²a_l²`.
//!
//! On a support of size `i` the gradient equations force equal magnitudes
//! `γᵢ = [α + 3(i−1)β]^{−1/2}`, so there are exactly `3^k − 1` nontrivial points.
//! The Hessian there splits into an `i×i` block with diagonal `d` and off-diagonal `±o`,
//! whose eigenvalues are `d + (i−1)o = −2` and `d − o = 2(3β − α)γᵢ²` (multiplicity `i−1`),
//! and a diagonal block `(α − 3β)γᵢ²` on the `k − i` zero coordinates.

use serde::{Deserialize, Serialize};

use super::{CritError, CriticalPoint};
use crate::reduced::{QuarticTensor, RectCoefficients};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFamily {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    /// `gammas[i−1] = γᵢ`.
    pub gammas: Vec<f64>,
}

impl GammaFamily {
    pub fn new(alpha: f64, beta: f64, k: usize) -> Self {
        let gammas = (1..=k)
            .map(|i| (alpha + 3.0 * (i as f64 - 1.0) * beta).powf(-0.5))
            .collect();
        Self { alpha, beta, k, gammas }
    }

    /// Hessian spectrum at any point with support size `i`, ascending.
    pub fn hessian_eigenvalues(&self, i: usize) -> Vec<f64> {
        let g2 = self.gammas[i - 1].powi(2);
        let mut e = vec![-2.0];
        e.extend(std::iter::repeat_n(2.0 * (3.0 * self.beta - self.alpha) * g2, i - 1));
        e.extend(std::iter::repeat_n((self.alpha - 3.0 * self.beta) * g2, self.k - i));
        e.sort_by(f64::total_cmp);
        e
    }

    /// All `3^k − 1` sign/support patterns, both members of every pair.
    pub fn solutions(&self, degeneracy_rel: f64) -> Vec<CriticalPoint> {
        let k = self.k;
        let mut out = Vec::new();
        for code in 1..3usize.pow(k as u32) {
            let mut c = code;
            let signs: Vec<f64> = (0..k)
                .map(|_| {
                    let d = c % 3;
                    c /= 3;
                    [0.0, 1.0, -1.0][d]
                })
                .collect();
            let i = signs.iter().filter(|s| **s != 0.0).count();
            let g = self.gammas[i - 1];
            let a: Vec<f64> = signs.iter().map(|s| s * g).collect();
            let value = 0.25 * i as f64 * g * g;
            out.push(CriticalPoint::from_parts(a, value, 0.0, self.hessian_eigenvalues(i), degeneracy_rel));
        }
        out
    }
}

/// The γ-family of a tensor, provided it has the `(α, β)` sparsity pattern.
pub fn gamma_family_for(tensor: &QuarticTensor, tol: f64) -> Result<GammaFamily, CritError> {
    let rc = RectCoefficients::from_tensor(tensor, tol)?;
    Ok(GammaFamily::new(rc.alpha, rc.beta, tensor.k()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critpoints::{dedup_pairs, morse_partition};

    #[test]
    fn counts_for_ratio_nine_quarters() {
        let fam = GammaFamily::new(9.0, 4.0, 2);
        let pts = fam.solutions(1e-8);
        assert_eq!(pts.len(), 8);
        assert_eq!(morse_partition(&pts, 2), vec![0, 4, 4]);
        let fam = GammaFamily::new(9.0, 4.0, 3);
        let pts = fam.solutions(1e-8);
        assert_eq!(pts.len(), 26);
        assert_eq!(morse_partition(&pts, 3), vec![0, 8, 12, 6]);
        assert_eq!(morse_partition(&dedup_pairs(pts, 1e-6), 3), vec![0, 4, 6, 3]);
    }

    #[test]
    fn total_is_three_to_the_k_minus_one() {
        for k in 1..=5 {
            assert_eq!(GammaFamily::new(2.0, 0.7, k).solutions(1e-8).len(), 3usize.pow(k as u32) - 1);
        }
    }

    #[test]
    fn gammas_decrease() {
        let fam = GammaFamily::new(9.0, 4.0, 4);
        assert!(fam.gammas.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn pattern_mismatch_propagates() {
        let mut file = QuarticTensor::rect_pattern(2, 1.0, 0.5).to_file(3.0);
        // perturb T[0,0,0,1] and its permutations
        for idx in [1usize, 2, 4, 8] {
            file.entries[idx] = 0.1;
        }
        let t = QuarticTensor::from_file(&file).unwrap();
        assert!(matches!(gamma_family_for(&t, 1e-10), Err(CritError::Pattern(_))));
    }
}
