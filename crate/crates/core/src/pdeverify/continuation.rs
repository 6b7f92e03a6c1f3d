//! Continuation toward `λⱼʰ` along every predicted branch, with the per-branch verdicts.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::morse::{discrete_morse_index, MorseSettings};
use super::solve::{check_subcritical, solve_branch, ContinuationRecord, NewtonSettings};
use super::{DiscreteProblem, VerifyError};
use crate::critpoints::{canonicalize, BranchPrediction};
use crate::reduced::{BasisSampler, ReducedFunctional};

/// `ε₀·2^{−t}`, `t = 0..count`.
pub fn geometric_schedule(eps0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|t| eps0 * 0.5f64.powi(t as i32)).collect()
}

/// Least-squares slope of `log y` against `log x`. `None` with fewer than two usable points.
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub epsilons: Vec<f64>,
    pub newton: NewtonSettings,
    pub morse: MorseSettings,
    /// Skip the eigenvalue computations entirely.
    pub compute_morse: bool,
    /// Relative `|a_λ − a|` allowed at the smallest ε.
    pub a_tol: f64,
    pub min_order: f64,
    /// Relative error allowed between scaled near-zero `μ` and the reduced Hessian spectrum.
    pub transfer_tol: f64,
    /// Discrete `L²` distance below which two solutions count as the same.
    pub distinct_radius: f64,
}

impl VerifyConfig {
    /// Four halvings from `min(0.1, 0.1·gap)`.
    pub fn for_gap(gap: f64) -> Self {
        Self {
            epsilons: geometric_schedule(0.1f64.min(0.1 * gap), 4),
            newton: NewtonSettings::default(),
            morse: MorseSettings::default(),
            compute_morse: true,
            a_tol: 0.1,
            min_order: 0.9,
            transfer_tol: 0.05,
            distinct_radius: 1e-6,
        }
    }

    fn check(&self) -> Result<(), VerifyError> {
        if self.epsilons.is_empty() {
            return Err(VerifyError::BadSchedule("empty".into()));
        }
        if self.epsilons.iter().any(|e| e.is_nan() || *e <= 0.0) {
            return Err(VerifyError::BadSchedule("epsilons must be positive".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(VerifyError::BadSchedule("epsilons must decrease".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFailure {
    pub epsilon: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchVerdict {
    /// Index into the prediction's pair list.
    pub pair: usize,
    pub predicted_a: Vec<f64>,
    pub reduced_morse_index: usize,
    pub predicted_morse_index: usize,
    pub records: Vec<ContinuationRecord>,
    pub failures: Vec<StepFailure>,
    /// Critical point of the grid version of the reduced functional, per record.
    pub discrete_a: Vec<Vec<f64>>,
    /// `|a_λ − a|/|a|` against the continuum prediction at the smallest ε.
    pub a_relative_error: Option<f64>,
    /// Fitted order of `|a_λ − a_h|` in ε.
    pub a_order: Option<f64>,
    pub phi_order: Option<f64>,
    pub morse_indices: Vec<Option<usize>>,
    /// Largest ε of the schedule below which every index equals the prediction.
    pub morse_threshold: Option<f64>,
    pub morse_match: bool,
    /// Reduced Hessian spectrum at the smallest ε.
    pub hessian_eigs: Vec<f64>,
    /// `μ·λⱼʰ/ε` for the near-zero eigenvalues at the smallest ε, ascending.
    pub transfer_scaled: Vec<f64>,
    /// `μ·λⱼʰ/(λ − λⱼʰ)`, the same numbers with the opposite sign.
    pub transfer_literal: Vec<f64>,
    pub transfer_rel_error: Option<f64>,
    pub unique: bool,
    pub inconclusive: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub domain: String,
    pub j: usize,
    pub k: usize,
    pub p: f64,
    pub intervals: Vec<usize>,
    pub lambda_j: f64,
    pub lambda_h: f64,
    pub gap: f64,
    pub epsilons: Vec<f64>,
    pub branches: Vec<BranchVerdict>,
    /// Pairwise distinct nontrivial solutions at the smallest ε.
    pub distinct_solutions: usize,
    pub all_distinct: bool,
    pub passed: bool,
}

fn grid_functional(dp: &DiscreteProblem, p: f64) -> Result<ReducedFunctional, VerifyError> {
    let k = dp.k();
    let mut values = vec![0.0; dp.len() * k];
    for (i, e) in dp.group_vectors.iter().enumerate() {
        for (node, x) in e.iter().enumerate() {
            values[node * k + i] = *x;
        }
    }
    let sampler = BasisSampler {
        k,
        weights: vec![dp.cell_volume; dp.len()],
        values,
    };
    ReducedFunctional::from_sampler(sampler, p).map_err(|e| VerifyError::Reduced(e.to_string()))
}

/// Critical point near `start` of `½Σ(1 + dᵢ/ε)aᵢ² − (p+1)⁻¹Σ_h|a·e|^{p+1}`, `dᵢ = Λᵢ − λⱼʰ`,
/// together with its Hessian spectrum. This is the grid counterpart of the reduced problem;
/// the splitting term vanishes on symmetric grids.
pub fn discrete_critical_point(
    dp: &DiscreteProblem,
    f: &ReducedFunctional,
    start: &[f64],
    epsilon: f64,
) -> Result<(Vec<f64>, Vec<f64>), VerifyError> {
    let shift = DVector::from_iterator(dp.k(), dp.group_eigs.iter().map(|l| (l - dp.lambda_h) / epsilon));
    let grad = |a: &DVector<f64>| f.gradient(a) + shift.component_mul(a);
    let hess = |a: &DVector<f64>| f.hessian(a) + DMatrix::from_diagonal(&shift);
    let mut a = DVector::from_column_slice(start);
    let mut ok = false;
    for _ in 0..100 {
        let g = grad(&a);
        if g.norm() <= 1e-13 * (1.0 + a.norm()) {
            ok = true;
            break;
        }
        let Some(step) = hess(&a).lu().solve(&(-g)) else { break };
        a += step;
    }
    if !ok {
        return Err(VerifyError::Reduced(format!("no discrete critical point near {start:?}")));
    }
    let mut eigs: Vec<f64> = hess(&a).symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    Ok((a.as_slice().to_vec(), eigs))
}

fn run_pair(
    dp: &DiscreteProblem,
    f: &ReducedFunctional,
    prediction: &BranchPrediction,
    pair: usize,
    cfg: &VerifyConfig,
) -> BranchVerdict {
    let pred = &prediction.pairs[pair];
    let p = prediction.p;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut discrete_a = Vec::new();
    let mut hessians = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut a_guess = pred.a.clone();
    for &eps in &cfg.epsilons {
        let step = (|| {
            let (ah, eigs) = discrete_critical_point(dp, f, &a_guess, eps)?;
            let mut rec = solve_branch(dp, p, &ah, eps, warm.as_deref(), &cfg.newton)?;
            if let Some((found, _)) = prediction.nearest_pair(&rec.a_lambda) {
                if found != pair {
                    return Err(VerifyError::ConvergedToWrongBranch { expected: pair, found });
                }
            }
            if cfg.compute_morse {
                match discrete_morse_index(dp, p, &rec, &cfg.morse) {
                    Ok(m) => {
                        rec.discrete_morse_index = Some(m.index);
                        rec.near_zero_mu = m.near_zero_mu;
                    }
                    Err(e @ VerifyError::SpectrumTooClose { .. }) => log::warn!("pair {pair}, ε = {eps}: {e}"),
                    Err(e) => return Err(e),
                }
            }
            Ok((rec, ah, eigs))
        })();
        match step {
            Ok((rec, ah, eigs)) => {
                warm = Some(rec.v.clone());
                a_guess = ah.clone();
                records.push(rec);
                discrete_a.push(ah);
                hessians.push(eigs);
            }
            Err(e) => {
                log::warn!("pair {pair}, ε = {eps}: {e}");
                let fatal = matches!(e, VerifyError::ConvergedToWrongBranch { .. });
                failures.push(StepFailure {
                    epsilon: eps,
                    error: e.to_string(),
                });
                if fatal {
                    break;
                }
            }
        }
    }

    let eps: Vec<f64> = records.iter().map(|r| r.epsilon).collect();
    let a_err: Vec<f64> = records
        .iter()
        .zip(&discrete_a)
        .map(|(r, ah)| r.a_lambda.iter().zip(ah).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        .collect();
    let phi: Vec<f64> = records.iter().map(|r| r.phi_norm).collect();
    let enough = records.len() >= 4;
    let a_order = if enough { fit_order(&eps, &a_err) } else { None };
    let phi_order = if enough { fit_order(&eps, &phi) } else { None };
    let pred_norm = pred.a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let last = records.last();
    let a_relative_error = last.map(|r| {
        let canon = canonicalize(&r.a_lambda, 1e-9);
        let d: f64 = canon
            .iter()
            .zip(canonicalize(&pred.a, 1e-9))
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        d / pred_norm
    });

    let morse_indices: Vec<Option<usize>> = records.iter().map(|r| r.discrete_morse_index).collect();
    let mut morse_threshold = None;
    for (r, m) in records.iter().zip(&morse_indices).rev() {
        if *m == Some(pred.solution_morse_index) {
            morse_threshold = Some(r.epsilon);
        } else {
            break;
        }
    }
    let morse_match = morse_threshold.is_some() && failures.iter().all(|f| f.epsilon > morse_threshold.unwrap());

    let mut hessian_eigs = Vec::new();
    let mut transfer_scaled = Vec::new();
    let mut transfer_literal = Vec::new();
    let mut transfer_rel_error = None;
    if let (Some(r), Some(h)) = (last, hessians.last()) {
        hessian_eigs = h.clone();
        if r.near_zero_mu.len() == dp.k() {
            transfer_scaled = r.near_zero_mu.iter().map(|m| m * dp.lambda_h / r.epsilon).collect();
            transfer_scaled.sort_by(f64::total_cmp);
            transfer_literal = r.near_zero_mu.iter().map(|m| m * dp.lambda_h / (r.lambda - dp.lambda_h)).collect();
            transfer_literal.sort_by(f64::total_cmp);
            transfer_rel_error = Some(
                transfer_scaled
                    .iter()
                    .zip(h)
                    .map(|(s, l)| (s - l).abs() / l.abs())
                    .fold(0.0, f64::max),
            );
        }
    }

    let complete = records.len() == cfg.epsilons.len();
    let inconclusive = !complete
        || (cfg.compute_morse && (morse_indices.last().copied().flatten().is_none() || transfer_rel_error.is_none()));
    let converging = a_err.len() < 2 || a_err.last() <= a_err.first();
    let order_ok = |o: Option<f64>| cfg.epsilons.len() < 4 || o.is_some_and(|o| o >= cfg.min_order);
    let passed = complete
        && a_relative_error.is_some_and(|e| e <= cfg.a_tol)
        && converging
        && order_ok(phi_order)
        && (!cfg.compute_morse || (morse_match && transfer_rel_error.is_some_and(|e| e <= cfg.transfer_tol)));
    BranchVerdict {
        pair,
        predicted_a: pred.a.clone(),
        reduced_morse_index: pred.morse_index,
        predicted_morse_index: pred.solution_morse_index,
        records,
        failures,
        discrete_a,
        a_relative_error,
        a_order,
        phi_order,
        morse_indices,
        morse_threshold,
        morse_match,
        hessian_eigs,
        transfer_scaled,
        transfer_literal,
        transfer_rel_error,
        unique: true,
        inconclusive,
        passed,
    }
}

/// Continues every predicted pair along the ε schedule, in parallel over pairs.
///
/// Per-step solver failures are recorded in the verdicts; only configuration errors abort the run.
pub fn continuation_run(
    dp: &DiscreteProblem,
    prediction: &BranchPrediction,
    cfg: &VerifyConfig,
) -> Result<VerificationReport, VerifyError> {
    cfg.check()?;
    check_subcritical(dp, prediction.p)?;
    let f = grid_functional(dp, prediction.p)?;
    let mut branches: Vec<BranchVerdict> = (0..prediction.pairs.len())
        .into_par_iter()
        .map(|i| run_pair(dp, &f, prediction, i, cfg))
        .collect();

    // uniqueness at the smallest ε
    let eps_min = *cfg.epsilons.last().unwrap();
    let finals: Vec<Option<&Vec<f64>>> = branches
        .iter()
        .map(|b| b.records.last().filter(|r| r.epsilon == eps_min).map(|r| &r.v))
        .collect();
    let mut unique = vec![true; branches.len()];
    for (i, vi) in finals.iter().enumerate() {
        let Some(vi) = vi else {
            unique[i] = false;
            continue;
        };
        if dp.norm(vi) <= cfg.distinct_radius {
            unique[i] = false;
        }
        for (j, vj) in finals.iter().enumerate().skip(i + 1) {
            let Some(vj) = vj else { continue };
            let minus: Vec<f64> = vi.iter().zip(vj.iter()).map(|(x, y)| x - y).collect();
            let plus: Vec<f64> = vi.iter().zip(vj.iter()).map(|(x, y)| x + y).collect();
            if dp.norm(&minus).min(dp.norm(&plus)) <= cfg.distinct_radius {
                unique[i] = false;
                unique[j] = false;
            }
        }
    }
    for (b, u) in branches.iter_mut().zip(&unique) {
        b.unique = *u;
        b.passed &= *u;
    }
    let distinct_solutions = unique.iter().filter(|u| **u).count();
    let all_distinct = distinct_solutions == branches.len();
    let passed = all_distinct && branches.iter().all(|b| b.passed);
    Ok(VerificationReport {
        domain: dp.domain.to_string(),
        j: prediction.j,
        k: prediction.k,
        p: prediction.p,
        intervals: dp.intervals.clone(),
        lambda_j: prediction.lambda_j,
        lambda_h: dp.lambda_h,
        gap: dp.gap,
        epsilons: cfg.epsilons.clone(),
        branches,
        distinct_solutions,
        all_distinct,
        passed,
    })
}

/// Whitespace-delimited bifurcation-diagram rows for one branch:
/// `lambda  u_l2  a_1 … a_k  phi_norm  morse_index` (`-1` when the index is unknown).
pub fn diagram_data(branch: &BranchVerdict, p: f64) -> String {
    let k = branch.predicted_a.len();
    let mut out = String::from("# lambda u_l2");
    for i in 1..=k {
        out.push_str(&format!(" a_{i}"));
    }
    out.push_str(" phi_norm morse_index\n");
    for r in &branch.records {
        out.push_str(&format!("{:.12e} {:.12e}", r.lambda, r.u_l2(p)));
        for a in &r.a_lambda {
            out.push_str(&format!(" {a:.12e}"));
        }
        let m = r.discrete_morse_index.map_or(-1, |m| m as i64);
        out.push_str(&format!(" {:.12e} {m}\n", r.phi_norm));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_halves() {
        assert_eq!(geometric_schedule(0.1, 4), vec![0.1, 0.05, 0.025, 0.0125]);
    }

    #[test]
    fn order_of_power_law() {
        let x = geometric_schedule(0.1, 4);
        let y: Vec<f64> = x.iter().map(|e| 3.0 * e * e).collect();
        assert!((fit_order(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_order(&[0.1], &[1.0]), None);
    }

    #[test]
    fn rejects_increasing_schedule() {
        let mut cfg = VerifyConfig::for_gap(3.0);
        cfg.epsilons = vec![0.01, 0.02];
        assert!(cfg.check().is_err());
    }
}
