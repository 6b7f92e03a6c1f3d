//! Dense-grid critical point search, independent of the multistart seeding.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{canonicalize, dedup_pairs, newton_refine, sign_patterns, CritError, CriticalPoint, SearchConfig};
use crate::reduced::ReducedFunctional;

const POINTS_PER_AXIS: usize = 101;

/// Radius of a box certain to contain every nontrivial critical point.
///
/// At a critical point `|a|² = ∫|a·e|^{p+1} ≥ c_min |a|^{p+1}`, so `|a| ≤ c_min^{−1/(p−1)}`
/// with `c_min` the minimum of `∫|d·e|^{p+1}` over unit `d`; the minimum is sampled and padded.
fn enclosing_radius(f: &ReducedFunctional, seed: u64) -> f64 {
    let k = f.k();
    let mut dirs: Vec<DVector<f64>> = sign_patterns(k, 10_000)
        .into_iter()
        .map(|v| DVector::from_vec(v).normalize())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0a11);
    while dirs.len() < 4000 {
        let v = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            dirs.push(v / n);
        }
    }
    let cmin = dirs.iter().map(|d| f.integral_term(d)).fold(f64::INFINITY, f64::min);
    1.25 * cmin.powf(-1.0 / (f.p() - 1.0))
}

/// Local minima of `‖∇J‖²` on a uniform grid over `[−R, R]^k`, polished by Newton.
pub fn brute_force_oracle(f: &ReducedFunctional, cfg: &SearchConfig) -> Result<Vec<CriticalPoint>, CritError> {
    let k = f.k();
    if k > 3 {
        return Err(CritError::DimensionTooLarge(k));
    }
    let radius = enclosing_radius(f, cfg.seed);
    let n = POINTS_PER_AXIS;
    let step = 2.0 * radius / (n - 1) as f64;
    let coord = |i: usize| -radius + i as f64 * step;
    let total = n.pow(k as u32);
    let unflatten = |mut idx: usize| {
        let mut out = [0usize; 3];
        for a in (0..k).rev() {
            out[a] = idx % n;
            idx /= n;
        }
        out
    };
    let point = |idx: &[usize; 3]| DVector::from_fn(k, |a, _| coord(idx[a]));

    let g2: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| f.gradient(&point(&unflatten(flat))).norm_squared())
        .collect();

    let offsets: Vec<[isize; 3]> = {
        let mut v = Vec::new();
        for code in 0..3usize.pow(k as u32) {
            let mut c = code;
            let mut o = [0isize; 3];
            for slot in o.iter_mut().take(k) {
                *slot = (c % 3) as isize - 1;
                c /= 3;
            }
            if o.iter().any(|&x| x != 0) {
                v.push(o);
            }
        }
        v
    };
    let candidates: Vec<DVector<f64>> = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let idx = unflatten(flat);
            if idx[..k].iter().any(|&i| i == 0 || i == n - 1) {
                return None;
            }
            let here = g2[flat];
            let is_min = offsets.iter().all(|o| {
                let mut nb = 0usize;
                for a in 0..k {
                    nb = nb * n + (idx[a] as isize + o[a]) as usize;
                }
                here <= g2[nb]
            });
            is_min.then(|| point(&idx))
        })
        .collect();

    let origin_tol = 1e-6 * radius.max(1.0);
    let polished: Vec<CriticalPoint> = candidates
        .par_iter()
        .filter_map(|c| newton_refine(f, c, cfg.newton_tol, cfg.max_iter).ok())
        .filter(|a| a.norm() > origin_tol && a.norm() <= radius * 1.5)
        .map(|a| {
            let canon = DVector::from_vec(canonicalize(a.as_slice(), cfg.dedup_radius));
            CriticalPoint::classify(f, &canon, cfg.degeneracy_rel)
        })
        .collect();
    Ok(dedup_pairs(polished, cfg.dedup_radius))
}
