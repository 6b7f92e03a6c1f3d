//! Preconditioned MINRES for symmetric, possibly indefinite systems.

#[derive(Debug, Clone)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final estimate of `‖r‖_{M⁻¹} / ‖b‖_{M⁻¹}`.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` with a symmetric positive definite preconditioner `M⁻¹`, starting from zero.
///
/// Paige–Saunders recurrences; stops when the preconditioned residual estimate drops below `tol·‖b‖_{M⁻¹}`.
pub fn minres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precondition: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> MinresOutcome {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = precondition(&r1);
    let beta1 = dot(&r1, &y);
    if beta1 <= 0.0 {
        return MinresOutcome {
            x,
            iterations: 0,
            converged: beta1 == 0.0,
            relative_residual: 0.0,
        };
    }
    let beta1 = beta1.sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0, 0.0);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        let mut ay = apply(&v);
        if itn >= 2 {
            let c = beta / oldb;
            for (a, r) in ay.iter_mut().zip(&r1) {
                *a -= c * r;
            }
        }
        let alfa = dot(&v, &ay);
        let c = alfa / beta;
        for (a, r) in ay.iter_mut().zip(&r2) {
            *a -= c * r;
        }
        r1 = std::mem::replace(&mut r2, ay);
        y = precondition(&r2);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            // preconditioner lost definiteness
            break;
        }
        beta = bb.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, a), b)| (vi - oldeps * a - delta * b) * denom)
            .collect();
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += phi * wi;
        }
        let rel = phibar / beta1;
        if rel <= tol || beta == 0.0 {
            return MinresOutcome {
                x,
                iterations: itn,
                converged: true,
                relative_residual: rel,
            };
        }
        if itn == max_iter {
            return MinresOutcome {
                x,
                iterations: itn,
                converged: false,
                relative_residual: rel,
            };
        }
    }
    let rel = phibar / beta1;
    MinresOutcome {
        x,
        iterations: max_iter,
        converged: rel <= tol,
        relative_residual: rel,
    }
}
