//! Newton solves of the rescaled discrete problem
//! `−Δ_h v − λv − ε|v|^{p−1}v = 0`, `λ = λⱼʰ − ε`.

use serde::{Deserialize, Serialize};

use super::minres::minres;
use super::{DiscreteProblem, VerifyError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonSettings {
    /// Absolute tolerance on the discrete `L²` residual.
    pub tol: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            linear_tol: 1e-12,
            linear_max_iter: 4000,
        }
    }
}

/// Diagnostics of one converged solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRecord {
    pub lambda: f64,
    pub epsilon: f64,
    /// `⟨v, eᵢ⟩_h`.
    pub a_lambda: Vec<f64>,
    /// Discrete `H¹` norm of `φ = v − Σ aᵢeᵢ`.
    pub phi_norm: f64,
    pub v_l2: f64,
    pub newton_residual: f64,
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
    pub discrete_morse_index: Option<usize>,
    pub near_zero_mu: Vec<f64>,
    #[serde(skip)]
    pub v: Vec<f64>,
}

impl ContinuationRecord {
    /// `‖u_λ‖_{L²} = ε^{1/(p−1)}‖v‖`.
    pub fn u_l2(&self, p: f64) -> f64 {
        self.epsilon.powf(1.0 / (p - 1.0)) * self.v_l2
    }
}

/// Critical exponent `(N+2)/(N−2)`; infinite in two dimensions.
pub fn critical_exponent(dimension: usize) -> f64 {
    if dimension <= 2 {
        f64::INFINITY
    } else {
        (dimension as f64 + 2.0) / (dimension as f64 - 2.0)
    }
}

pub(crate) fn check_subcritical(dp: &DiscreteProblem, p: f64) -> Result<(), VerifyError> {
    let crit = critical_exponent(dp.dimension());
    if !(p > 1.0 && p < crit) {
        return Err(VerifyError::SupercriticalP { p, critical: crit });
    }
    Ok(())
}

#[inline]
fn nonlinearity(v: f64, p: f64) -> f64 {
    if p == 3.0 {
        v * v * v
    } else {
        v.abs().powf(p - 1.0) * v
    }
}

#[inline]
fn nonlinearity_derivative(v: f64, p: f64) -> f64 {
    if p == 3.0 {
        3.0 * v * v
    } else {
        p * v.abs().powf(p - 1.0)
    }
}

fn residual(dp: &DiscreteProblem, p: f64, lambda: f64, epsilon: f64, v: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; v.len()];
    dp.apply_laplacian(v, &mut r);
    for (ri, &vi) in r.iter_mut().zip(v) {
        *ri -= lambda * vi + epsilon * nonlinearity(vi, p);
    }
    r
}

/// Damped Newton from `warm` (or `Σ aᵢeᵢ`) at `λ = λⱼʰ − ε`.
///
/// Linear steps use MINRES preconditioned by `|−Δ_h − λ|⁻¹`, applied exactly through the sine transform.
pub fn solve_branch(
    dp: &DiscreteProblem,
    p: f64,
    a: &[f64],
    epsilon: f64,
    warm: Option<&[f64]>,
    settings: &NewtonSettings,
) -> Result<ContinuationRecord, VerifyError> {
    check_subcritical(dp, p)?;
    assert_eq!(a.len(), dp.k(), "coefficient vector length");
    assert!(epsilon > 0.0, "epsilon must be positive");
    let lambda = dp.lambda_h - epsilon;
    let mut v = match warm {
        Some(w) => w.to_vec(),
        None => dp.combine(a),
    };
    let floor = 1e-3 * epsilon;
    let mut r = residual(dp, p, lambda, epsilon, &v);
    let mut rn = dp.norm(&r);
    let mut history = vec![rn];
    let mut iterations = 0;
    while rn > settings.tol {
        if iterations == settings.max_iter || !rn.is_finite() {
            return Err(VerifyError::NewtonDiverged { history });
        }
        iterations += 1;
        let diag: Vec<f64> = v.iter().map(|&x| -lambda - epsilon * nonlinearity_derivative(x, p)).collect();
        let apply = |x: &[f64]| {
            let mut y = vec![0.0; x.len()];
            dp.apply_laplacian(x, &mut y);
            for ((yi, xi), di) in y.iter_mut().zip(x).zip(&diag) {
                *yi += di * xi;
            }
            y
        };
        let precond = |x: &[f64]| dp.spectral_apply(x, |s| 1.0 / (s - lambda).abs().max(floor));
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let step = minres(apply, precond, &rhs, settings.linear_tol, settings.linear_max_iter).x;

        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = v.iter().zip(&step).map(|(x, s)| x + t * s).collect();
            let tr = residual(dp, p, lambda, epsilon, &trial);
            let tn = dp.norm(&tr);
            if tn < (1.0 - 1e-4 * t) * rn || t < 1.0 / 1024.0 {
                v = trial;
                r = tr;
                rn = tn;
                break;
            }
            t *= 0.5;
        }
        history.push(rn);
    }

    let a_lambda = dp.project(&v);
    let reconstructed = dp.combine(&a_lambda);
    let phi: Vec<f64> = v.iter().zip(&reconstructed).map(|(x, y)| x - y).collect();
    let mut lap_phi = vec![0.0; phi.len()];
    dp.apply_laplacian(&phi, &mut lap_phi);
    let phi_norm = (dp.dot(&lap_phi, &phi) + dp.dot(&phi, &phi)).sqrt();
    Ok(ContinuationRecord {
        lambda,
        epsilon,
        a_lambda,
        phi_norm,
        v_l2: dp.norm(&v),
        newton_residual: rn,
        newton_iterations: iterations,
        residual_history: history,
        discrete_morse_index: None,
        near_zero_mu: Vec::new(),
        v,
    })
}
