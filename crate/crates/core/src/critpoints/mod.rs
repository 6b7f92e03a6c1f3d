//! Critical points of the reduced functional and the branch predictions they imply.

mod gamma;
mod oracle;
mod predict;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduced::ReducedFunctional;
pub use gamma::{gamma_family_for, GammaFamily};
pub use oracle::brute_force_oracle;
pub use predict::{predict_branches, AsymptoticProfile, BranchPrediction, Completeness, PredictedPair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CritError {
    #[error("the grid oracle supports k <= 3, got k = {0}")]
    DimensionTooLarge(usize),
    #[error(transparent)]
    Pattern(#[from] crate::reduced::TensorError),
}

/// Per-seed Newton outcome that did not produce a critical point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SeedFailure {
    NoConvergence { seed: usize, grad_norm: f64 },
    SingularHessian { seed: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub seed: u64,
    /// Radii (in units of the functional's natural scale) for structured seeds.
    pub radii: Vec<f64>,
    /// Random seeds drawn uniformly on spheres, in addition to the structured ones.
    pub random_seeds: usize,
    /// Cap on structured sign/support patterns; `3^k − 1` grows fast.
    pub max_patterns: usize,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// ∞-norm radius for identifying canonical representatives.
    pub dedup_radius: f64,
    /// Relative threshold on `min |Hessian eigenvalue|`.
    pub degeneracy_rel: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            radii: vec![0.25, 0.5, 1.0, 2.0],
            random_seeds: 200,
            max_patterns: 6560,
            newton_tol: 1e-12,
            max_iter: 100,
            dedup_radius: 1e-6,
            degeneracy_rel: 1e-8,
        }
    }
}

/// A classified nontrivial critical point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub a: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Ascending.
    pub hess_eigs: Vec<f64>,
    pub morse_index: usize,
    pub nondegenerate: bool,
    /// `min |hess_eigs|`.
    pub margin: f64,
}

impl CriticalPoint {
    /// Evaluates value, gradient and Hessian spectrum of `f` at `a`.
    pub fn classify(f: &ReducedFunctional, a: &DVector<f64>, degeneracy_rel: f64) -> Self {
        let hess = f.hessian(a);
        let mut eigs: Vec<f64> = hess.symmetric_eigenvalues().iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        Self::from_parts(a.as_slice().to_vec(), f.value(a), f.gradient(a).norm(), eigs, degeneracy_rel)
    }

    pub(crate) fn from_parts(a: Vec<f64>, value: f64, grad_norm: f64, hess_eigs: Vec<f64>, degeneracy_rel: f64) -> Self {
        let margin = hess_eigs.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        let largest = hess_eigs.iter().map(|e| e.abs()).fold(0.0, f64::max);
        Self {
            morse_index: hess_eigs.iter().filter(|&&e| e < 0.0).count(),
            nondegenerate: margin > degeneracy_rel * largest.max(1.0),
            margin,
            a,
            value,
            grad_norm,
            hess_eigs,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            a: self.a.iter().map(|x| -x).collect(),
            ..self.clone()
        }
    }
}

/// Flips the sign so that the first coordinate with `|x| > zero_tol` is positive.
pub fn canonicalize(a: &[f64], zero_tol: f64) -> Vec<f64> {
    match a.iter().find(|x| x.abs() > zero_tol) {
        Some(&x) if x < 0.0 => a.iter().map(|v| -v + 0.0).collect(),
        _ => a.iter().map(|v| v + 0.0).collect(),
    }
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Distance between the sign classes `{±a}` and `{±b}`.
pub fn pair_distance(a: &[f64], b: &[f64]) -> f64 {
    let neg: Vec<f64> = b.iter().map(|x| -x).collect();
    inf_dist(a, b).min(inf_dist(a, &neg))
}

/// Keeps one canonical representative per `{a, −a}` class, sorted lexicographically.
pub fn dedup_pairs(points: impl IntoIterator<Item = CriticalPoint>, radius: f64) -> Vec<CriticalPoint> {
    let mut reps: Vec<CriticalPoint> = Vec::new();
    for mut p in points {
        p.a = canonicalize(&p.a, radius);
        if !reps.iter().any(|r| pair_distance(&r.a, &p.a) <= radius) {
            reps.push(p);
        }
    }
    reps.sort_by(|x, y| {
        x.a.iter()
            .zip(&y.a)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    reps
}

/// Damped Newton on `∇J = 0` with backtracking on `‖∇J‖`.
pub(crate) fn newton_refine(
    f: &ReducedFunctional,
    start: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>, (f64, bool)> {
    let mut a = start.clone();
    let mut g = f.gradient(&a);
    let mut gn = g.norm();
    for _ in 0..max_iter {
        if gn <= tol {
            return Ok(a);
        }
        let h: DMatrix<f64> = f.hessian(&a);
        let step = match h.lu().solve(&(-&g)) {
            Some(s) if s.iter().all(|x| x.is_finite()) => s,
            _ => return Err((gn, true)),
        };
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-6 {
            let trial = &a + &step * t;
            let tg = f.gradient(&trial);
            let tn = tg.norm();
            if tn < (1.0 - 1e-4 * t) * gn {
                accepted = Some((trial, tg, tn));
                break;
            }
            t *= 0.5;
        }
        // at the rounding floor no step decreases the residual; take the full step
        let (na, ng, nn) = accepted.unwrap_or_else(|| {
            let trial = &a + &step;
            let tg = f.gradient(&trial);
            let tn = tg.norm();
            (trial, tg, tn)
        });
        a = na;
        g = ng;
        gn = nn;
        if !gn.is_finite() {
            return Err((gn, false));
        }
    }
    if gn <= tol {
        Ok(a)
    } else {
        Err((gn, false))
    }
}

/// Natural amplitude `(mean ∫|eᵢ|^{p+1})^{−1/(p−1)}`; the k = 1 critical point sits exactly there.
pub fn natural_scale(f: &ReducedFunctional) -> f64 {
    let m = f.diagonal_moments();
    let mean = m.iter().sum::<f64>() / m.len() as f64;
    mean.powf(-1.0 / (f.p() - 1.0))
}

/// Every nonzero vector in `{−1, 0, 1}^k` with first nonzero entry positive.
fn sign_patterns(k: usize, cap: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let total = 3usize.saturating_pow(k as u32);
    for code in 1..total {
        let mut c = code;
        let v: Vec<f64> = (0..k)
            .map(|_| {
                let d = c % 3;
                c /= 3;
                [0.0, 1.0, -1.0][d]
            })
            .collect();
        if v.iter().find(|x| **x != 0.0).copied() == Some(1.0) {
            out.push(v);
            if out.len() >= cap {
                break;
            }
        }
    }
    out
}

/// Outcome of the multistart search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalSearch {
    /// One canonical representative per sign pair, sorted.
    pub points: Vec<CriticalPoint>,
    pub seeds_total: usize,
    pub failures: Vec<SeedFailure>,
    /// Canonical representatives that failed the nondegeneracy margin.
    pub suspected_degenerate: Vec<Vec<f64>>,
    /// No new pair appeared in the second half of the seed sequence.
    pub saturated: bool,
}

/// Multistart damped Newton over structured sign/support seeds and random sphere seeds.
pub fn find_critical_points(f: &ReducedFunctional, cfg: &SearchConfig) -> CriticalSearch {
    let k = f.k();
    let scale = natural_scale(f);
    let mut seeds: Vec<DVector<f64>> = Vec::new();
    for pattern in sign_patterns(k, cfg.max_patterns) {
        let norm = pattern.iter().map(|x| x * x).sum::<f64>().sqrt();
        for r in &cfg.radii {
            seeds.push(DVector::from_iterator(k, pattern.iter().map(|x| x * r * scale / norm)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for s in 0..cfg.random_seeds {
        let r = cfg.radii[s % cfg.radii.len()] * scale;
        let dir = loop {
            let v = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                break v / n;
            }
        };
        seeds.push(dir * r);
    }

    // seed order is preserved by the indexed collect, so output does not depend on thread count
    let outcomes: Vec<Result<DVector<f64>, SeedFailure>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            newton_refine(f, s, cfg.newton_tol, cfg.max_iter).map_err(|(gn, singular)| {
                if singular {
                    SeedFailure::SingularHessian { seed: i }
                } else {
                    SeedFailure::NoConvergence { seed: i, grad_norm: gn }
                }
            })
        })
        .collect();

    let origin_tol = 1e-6 * scale.max(1.0);
    let mut reps: Vec<Vec<f64>> = Vec::new();
    let mut accepted: Vec<CriticalPoint> = Vec::new();
    let mut failures = Vec::new();
    let mut last_new = 0usize;
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(a) => {
                if a.norm() <= origin_tol {
                    continue;
                }
                let c = canonicalize(a.as_slice(), cfg.dedup_radius);
                if reps.iter().any(|r| pair_distance(r, &c) <= cfg.dedup_radius) {
                    continue;
                }
                reps.push(c);
                last_new = i;
                accepted.push(CriticalPoint::classify(f, &a, cfg.degeneracy_rel));
            }
            Err(e) => failures.push(e),
        }
    }
    let points = dedup_pairs(accepted, cfg.dedup_radius);
    let suspected_degenerate = points.iter().filter(|p| !p.nondegenerate).map(|p| p.a.clone()).collect();
    CriticalSearch {
        saturated: last_new < seeds.len() / 2,
        seeds_total: seeds.len(),
        points,
        failures,
        suspected_degenerate,
    }
}

/// Largest Hausdorff distance between two sets of sign classes, `∞` if the counts differ.
pub fn pair_set_distance(a: &[CriticalPoint], b: &[CriticalPoint]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let one_way = |x: &[CriticalPoint], y: &[CriticalPoint]| {
        x.iter()
            .map(|p| y.iter().map(|q| pair_distance(&p.a, &q.a)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Histogram of Morse indices, index `m` at position `m`.
pub fn morse_partition(points: &[CriticalPoint], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k + 1];
    for p in points {
        counts[p.morse_index] += 1;
    }
    counts
}
