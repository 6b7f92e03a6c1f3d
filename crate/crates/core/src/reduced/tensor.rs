//! Fourth moments `∫ e_i e_h e_l e_m` of a sine eigenbasis.

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::quadrature::BasisSampler;
use crate::spectrum::{to_f64, DomainSpec, EigenGroup, Rational};

/// `(1/L) ∫₀^L Π sin(fᵢπx/L) dx` as an exact rational.
///
/// Writing each sine as `(e^{iθ} − e^{−iθ})/2i`, the product is
/// `(1/16) Σ_s (Π sᵢ) cos(Σ sᵢfᵢ πx/L)`, and only sign patterns with `Σ sᵢfᵢ = 0` survive.
pub fn sine_product_coefficient(freqs: [u32; 4]) -> Rational {
    let mut total: i128 = 0;
    for mask in 0..16u32 {
        let mut sum: i64 = 0;
        let mut sign: i128 = 1;
        for (b, &f) in freqs.iter().enumerate() {
            if mask & (1 << b) != 0 {
                sum -= f as i64;
                sign = -sign;
            } else {
                sum += f as i64;
            }
        }
        if sum == 0 {
            total += sign;
        }
    }
    Rational::new(total, 16)
}

pub fn sine_product_integral(freqs: [u32; 4], length: f64) -> f64 {
    assert!(freqs.iter().all(|&f| f >= 1), "frequencies start at 1");
    length * to_f64(&sine_product_coefficient(freqs))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensor file has {got} entries, expected {expected} for k = {k}")]
    EntryCount { k: usize, expected: usize, got: usize },
    #[error("tensor file is not fully symmetric at {0:?}")]
    NotSymmetric([usize; 4]),
    #[error("tensor is not of the (alpha, beta) form: {0}")]
    PatternMismatch(String),
    #[error("invalid tensor JSON: {0}")]
    Json(String),
}

/// Fully symmetric `k⁴` array of fourth moments.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticTensor {
    k: usize,
    entries: Vec<f64>,
}

impl QuarticTensor {
    /// Builds a symmetric tensor by evaluating `entry` once per sorted multi-index.
    pub fn from_fn(k: usize, mut entry: impl FnMut([usize; 4]) -> f64) -> Self {
        let mut entries = vec![0.0; k.pow(4)];
        for i in 0..k {
            for h in i..k {
                for l in h..k {
                    for m in l..k {
                        let v = entry([i, h, l, m]);
                        for p in permutations([i, h, l, m]) {
                            entries[((p[0] * k + p[1]) * k + p[2]) * k + p[3]] = v;
                        }
                    }
                }
            }
        }
        Self { k, entries }
    }

    /// Exact moments: each entry is a product over axes of closed-form sine integrals.
    pub fn exact(group: &EigenGroup, domain: &DomainSpec) -> Self {
        let lengths = domain.lengths();
        let modes = &group.modes;
        Self::from_fn(group.multiplicity, |idx| {
            lengths
                .iter()
                .enumerate()
                .map(|(a, &len)| {
                    let f = idx.map(|i| modes[i].indices[a]);
                    let c = sine_product_coefficient(f);
                    if c.is_zero() {
                        0.0
                    } else {
                        // (2/L)² from four normalization factors, times L·c
                        4.0 * to_f64(&c) / len
                    }
                })
                .product()
        })
    }

    /// Moments computed on a quadrature rule.
    pub fn from_sampler(sampler: &BasisSampler) -> Self {
        Self::from_fn(sampler.k, |idx| sampler.moment(&idx))
    }

    /// The `(α, β)` pattern tensor: `T_iiii = α`, `T_iill = β`, zero otherwise.
    pub fn rect_pattern(k: usize, alpha: f64, beta: f64) -> Self {
        Self::from_fn(k, |[i, h, l, m]| {
            if i == m {
                alpha
            } else if i == h && l == m {
                beta
            } else {
                0.0
            }
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, h: usize, l: usize, m: usize) -> f64 {
        let k = self.k;
        self.entries[((i * k + h) * k + l) * k + m]
    }

    /// Entries in lexicographic multi-index order.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.k, other.k);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_file(&self, p: f64) -> TensorFile {
        TensorFile {
            k: self.k,
            p,
            entries: self.entries.clone(),
        }
    }

    pub fn from_file(file: &TensorFile) -> Result<Self, TensorError> {
        let k = file.k;
        let expected = k.pow(4);
        if file.entries.len() != expected {
            return Err(TensorError::EntryCount { k, expected, got: file.entries.len() });
        }
        let t = Self { k, entries: file.entries.clone() };
        for i in 0..k {
            for h in 0..k {
                for l in 0..k {
                    for m in 0..k {
                        let v = t.get(i, h, l, m);
                        for p in permutations([i, h, l, m]) {
                            let w = t.get(p[0], p[1], p[2], p[3]);
                            if (v - w).abs() > 1e-12 * v.abs().max(1e-300) + 1e-300 {
                                return Err(TensorError::NotSymmetric([i, h, l, m]));
                            }
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn to_json(&self, p: f64) -> String {
        serde_json::to_string_pretty(&self.to_file(p)).expect("tensor serializes")
    }

    pub fn from_json(text: &str) -> Result<(Self, f64), TensorError> {
        let file: TensorFile = serde_json::from_str(text).map_err(|e| TensorError::Json(e.to_string()))?;
        Ok((Self::from_file(&file)?, file.p))
    }
}

/// On-disk tensor layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorFile {
    pub k: usize,
    pub p: f64,
    pub entries: Vec<f64>,
}

fn permutations(x: [usize; 4]) -> impl Iterator<Item = [usize; 4]> {
    const PERMS: [[usize; 4]; 24] = [
        [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
        [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
        [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
        [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
    ];
    PERMS.into_iter().map(move |p| p.map(|i| x[i]))
}

/// `α = ∫e_i⁴` and `β = ∫e_i²e_l²` for tensors whose only nonzero entries are of those two kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectCoefficients {
    pub alpha: f64,
    pub beta: f64,
}

impl RectCoefficients {
    /// Extracts `(α, β)`; entries must match the pattern to `tol` relative to `α`.
    pub fn from_tensor(t: &QuarticTensor, tol: f64) -> Result<Self, TensorError> {
        let k = t.k();
        let alpha = t.get(0, 0, 0, 0);
        let beta = if k > 1 { t.get(0, 0, 1, 1) } else { 0.0 };
        if alpha <= 0.0 {
            return Err(TensorError::PatternMismatch("non-positive diagonal".into()));
        }
        let scale = alpha.abs();
        for i in 0..k {
            for h in 0..k {
                for l in 0..k {
                    for m in 0..k {
                        let mut s = [i, h, l, m];
                        s.sort_unstable();
                        let expected = if s[0] == s[3] {
                            alpha
                        } else if s[0] == s[1] && s[2] == s[3] {
                            beta
                        } else {
                            0.0
                        };
                        let v = t.get(i, h, l, m);
                        if (v - expected).abs() > tol * scale {
                            return Err(TensorError::PatternMismatch(format!(
                                "entry {s:?} = {v:e}, pattern expects {expected:e}"
                            )));
                        }
                    }
                }
            }
        }
        if k > 1 && beta <= 0.0 {
            return Err(TensorError::PatternMismatch("non-positive beta".into()));
        }
        Ok(Self { alpha, beta })
    }

    pub fn ratio(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// `9/(4LM)`, the fourth moment of any normalized rectangle sine mode.
pub fn rectangle_alpha(lx: f64, ly: f64) -> f64 {
    9.0 / (4.0 * lx * ly)
}

/// `1/(LM)`, the mixed moment of two rectangle modes with distinct indices on both axes.
pub fn rectangle_beta(lx: f64, ly: f64) -> f64 {
    1.0 / (lx * ly)
}

/// `3L/8 = ∫₀^L sin⁴(nπx/L)`, handy for closed-form checks.
pub fn sin4_integral(length: f64) -> f64 {
    3.0 * length / 8.0
}
