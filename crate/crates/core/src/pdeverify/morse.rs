//! Morse index of a discrete solution.
//!
//! The linearization is `A − λ − εF` with `A = −Δ_h` and `F = diag(p|v|^{p−1})`.
//! Its weighted eigenvalues solve `(A − λ − εF)x = μAx`. Since `A` is positive definite,
//! Sylvester's law of inertia makes the number of negative `μ` equal to the number of negative
//! eigenvalues of `A − λ − εF`. Writing `x = A^{−1/2}y` turns the pencil into the symmetric
//! problem `Cy = θy` with `C = A^{−1/2}(λ + εF)A^{−1/2}` and `μ = 1 − θ`, so the index is the
//! number of `θ > 1`. Only the top of the spectrum of `C` matters and it is computed by
//! subspace iteration with Rayleigh–Ritz, starting from the lowest sine modes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ContinuationRecord, DiscreteProblem, VerifyError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorseSettings {
    /// Extra block vectors beyond those that can carry `θ ≥ 1`.
    pub guard: usize,
    /// Residual bound `‖Cy − θy‖` for accepted Ritz pairs.
    pub tol: f64,
    pub max_iter: usize,
    /// `|μ|` below this is treated as unresolved.
    pub zero_tol: f64,
}

impl Default for MorseSettings {
    fn default() -> Self {
        Self {
            guard: 3,
            tol: 1e-11,
            max_iter: 5000,
            zero_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseResult {
    pub index: usize,
    /// The `k` weighted eigenvalues of smallest modulus, ascending.
    pub near_zero_mu: Vec<f64>,
    /// All resolved `μ`, ascending.
    pub mu: Vec<f64>,
    pub iterations: usize,
}

/// Index and near-zero spectrum for the solution `record.v` at `(λ, ε)` of the record.
pub fn discrete_morse_index(
    dp: &DiscreteProblem,
    p: f64,
    record: &ContinuationRecord,
    settings: &MorseSettings,
) -> Result<MorseResult, VerifyError> {
    let (lambda, eps) = (record.lambda, record.epsilon);
    let weight: Vec<f64> = record
        .v
        .iter()
        .map(|&x| lambda + eps * p * x.abs().powf(p - 1.0))
        .collect();
    let wmax = weight.iter().copied().fold(lambda, f64::max);
    let spectrum = dp.sorted_spectrum();
    let top = dp.group_eigs.iter().copied().fold(f64::MIN, f64::max);
    let live = spectrum.iter().take_while(|(s, _)| *s < wmax || *s <= top).count();
    let b = (live + settings.guard).min(dp.len());
    let wanted = live.min(b);

    let apply = |x: &[f64]| {
        let mut y = dp.spectral_apply(x, |s| s.powf(-0.5));
        for (yi, w) in y.iter_mut().zip(&weight) {
            *yi *= w;
        }
        dp.spectral_apply(&y, |s| s.powf(-0.5))
    };

    let n = dp.len();
    let mut q = DMatrix::<f64>::zeros(n, b);
    for (c, (_, flat)) in spectrum.iter().take(b).enumerate() {
        let e = dp.sine_vector(*flat);
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.set_column(c, &(DVector::from_vec(e) / norm));
    }

    for it in 1..=settings.max_iter {
        let mut z = DMatrix::<f64>::zeros(n, b);
        for c in 0..b {
            z.set_column(c, &DVector::from_vec(apply(q.column(c).as_slice())));
        }
        let g = q.transpose() * &z;
        let g = (&g + g.transpose()) * 0.5;
        let eig = g.symmetric_eigen();
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
        let y = DMatrix::from_fn(b, b, |r, c| eig.eigenvectors[(r, order[c])]);
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let qr = &q * &y;
        let zr = &z * &y;
        let converged = (0..wanted).all(|c| (zr.column(c) - qr.column(c) * theta[c]).norm() <= settings.tol);
        if converged {
            let mut mu: Vec<f64> = theta[..wanted].iter().map(|t| 1.0 - t).collect();
            mu.sort_by(f64::total_cmp);
            if let Some(m) = mu.iter().find(|m| m.abs() < settings.zero_tol) {
                return Err(VerifyError::SpectrumTooClose { mu: *m });
            }
            let index = mu.iter().filter(|m| **m < 0.0).count();
            let mut near: Vec<f64> = mu.clone();
            near.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
            near.truncate(dp.k());
            near.sort_by(f64::total_cmp);
            return Ok(MorseResult {
                index,
                near_zero_mu: near,
                mu,
                iterations: it,
            });
        }
        q = zr.qr().q();
    }
    Err(VerifyError::EigenNotConverged {
        iterations: settings.max_iter,
    })
}
