//! Second-order finite differences on a box with homogeneous Dirichlet data.
//!
//! Grid functions live on interior nodes, flattened row-major (last axis fastest).
//! The stencil is diagonalized exactly by the discrete sine transform, which the
//! solvers use for preconditioning and for `A^{±1/2}`.

use std::f64::consts::PI;

use super::VerifyError;
use crate::spectrum::{DomainSpec, EigenGroup};

/// One axis of the discrete sine basis.
#[derive(Debug, Clone)]
struct SineAxis {
    interior: usize,
    /// `S[m][t] = sin((m+1)(t+1)π/N)`, symmetric, `S² = (N/2)·I`.
    matrix: Vec<f64>,
    /// Eigenvalues `(4/h²) sin²(mπ/2N)` of the 1D stencil, `m = 1..N−1`.
    eigs: Vec<f64>,
}

impl SineAxis {
    fn new(intervals: usize, h: f64) -> Self {
        let n = intervals - 1;
        let mut matrix = vec![0.0; n * n];
        for m in 0..n {
            for t in 0..n {
                matrix[m * n + t] = (((m + 1) * (t + 1)) as f64 * PI / intervals as f64).sin();
            }
        }
        let eigs = (1..=n)
            .map(|m| 4.0 / (h * h) * (m as f64 * PI / (2.0 * intervals as f64)).sin().powi(2))
            .collect();
        Self { interior: n, matrix, eigs }
    }
}

/// Discretized box, eigenvalue group and the sine machinery tied to them.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub domain: DomainSpec,
    pub group: EigenGroup,
    pub intervals: Vec<usize>,
    pub h: Vec<f64>,
    pub shape: Vec<usize>,
    /// `Π hₐ`, the weight of the discrete inner product.
    pub cell_volume: f64,
    axes: Vec<SineAxis>,
    /// Discrete eigenvalue of every sine mode, same flattening as grid functions.
    spectrum: Vec<f64>,
    /// Sampled group eigenfunctions, orthonormal in the discrete inner product.
    pub group_vectors: Vec<Vec<f64>>,
    /// Discrete eigenvalues of the group modes.
    pub group_eigs: Vec<f64>,
    /// Mean of `group_eigs`; the discrete bifurcation point.
    pub lambda_h: f64,
    /// Distance from the group's discrete eigenvalues to the rest of the discrete spectrum.
    pub gap: f64,
}

/// Minimum interior points per axis.
pub fn min_interior(dimension: usize) -> usize {
    if dimension == 2 {
        17
    } else {
        11
    }
}

/// Builds the 5-point (2D) or 7-point (3D) Laplacian on a grid with `intervals[a]` cells per axis.
pub fn build_laplacian(
    domain: &DomainSpec,
    group: &EigenGroup,
    intervals: &[usize],
) -> Result<DiscreteProblem, VerifyError> {
    let d = domain.dimension();
    if intervals.len() != d {
        return Err(VerifyError::GridTooCoarse(format!(
            "{} grid sizes given for a {d}-dimensional domain",
            intervals.len()
        )));
    }
    let need = min_interior(d);
    if let Some(&n) = intervals.iter().find(|&&n| n < need + 1) {
        return Err(VerifyError::GridTooCoarse(format!(
            "{n} intervals leave fewer than {need} interior points"
        )));
    }
    for m in &group.modes {
        for (a, (&idx, &n)) in m.indices.iter().zip(intervals).enumerate() {
            if idx as usize >= n {
                return Err(VerifyError::GridTooCoarse(format!(
                    "mode {:?} is not resolved on axis {a} with {n} intervals",
                    m.indices
                )));
            }
        }
    }
    let lengths = domain.lengths();
    let h: Vec<f64> = lengths.iter().zip(intervals).map(|(l, &n)| l / n as f64).collect();
    let shape: Vec<usize> = intervals.iter().map(|n| n - 1).collect();
    let axes: Vec<SineAxis> = intervals.iter().zip(&h).map(|(&n, &hh)| SineAxis::new(n, hh)).collect();
    let total: usize = shape.iter().product();

    let mut spectrum = vec![0.0; total];
    let mut idx = vec![0usize; d];
    for s in spectrum.iter_mut() {
        *s = (0..d).map(|a| axes[a].eigs[idx[a]]).sum();
        advance(&mut idx, &shape);
    }

    let flat_of = |mode: &[u32]| {
        mode.iter()
            .zip(&shape)
            .fold(0usize, |acc, (&m, &n)| acc * n + (m as usize - 1))
    };
    let group_eigs: Vec<f64> = group.modes.iter().map(|m| spectrum[flat_of(&m.indices)]).collect();
    let lo = group_eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = group_eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let group_flat: Vec<usize> = group.modes.iter().map(|m| flat_of(&m.indices)).collect();
    let gap = spectrum
        .iter()
        .enumerate()
        .filter(|(i, _)| !group_flat.contains(i))
        .map(|(_, &s)| if s < lo { lo - s } else if s > hi { s - hi } else { 0.0 })
        .fold(f64::INFINITY, f64::min);
    if hi - lo > 0.5 * gap {
        return Err(VerifyError::GridTooCoarse(format!(
            "discrete splitting {:e} of the eigenvalue group exceeds half the gap {:e}",
            hi - lo,
            gap
        )));
    }

    let cell_volume: f64 = h.iter().product();
    let mut dp = DiscreteProblem {
        domain: domain.clone(),
        group: group.clone(),
        intervals: intervals.to_vec(),
        h,
        shape,
        cell_volume,
        axes,
        spectrum,
        group_vectors: Vec::new(),
        lambda_h: group_eigs.iter().sum::<f64>() / group_eigs.len() as f64,
        group_eigs,
        gap,
    };
    let mut basis: Vec<Vec<f64>> = group.modes.iter().map(|m| dp.sampled_mode(&m.indices)).collect();
    // Gram–Schmidt in the discrete inner product
    for i in 0..basis.len() {
        for j in 0..i {
            let c = dp.dot(&basis[i], &basis[j]);
            let (head, tail) = basis.split_at_mut(i);
            for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                *x -= c * y;
            }
        }
        let n = dp.norm(&basis[i]);
        basis[i].iter_mut().for_each(|x| *x /= n);
    }
    dp.group_vectors = basis;
    Ok(dp)
}

fn advance(idx: &mut [usize], shape: &[usize]) {
    for a in (0..shape.len()).rev() {
        idx[a] += 1;
        if idx[a] < shape[a] {
            return;
        }
        idx[a] = 0;
    }
}

impl DiscreteProblem {
    pub fn len(&self) -> usize {
        self.spectrum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectrum.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.shape.len()
    }

    pub fn k(&self) -> usize {
        self.group.multiplicity
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.cell_volume * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Discrete `L²` norm.
    pub fn norm(&self, u: &[f64]) -> f64 {
        self.dot(u, u).sqrt()
    }

    /// Grid coordinates of the flattened node `flat`.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut out = vec![0.0; self.dimension()];
        for a in (0..self.dimension()).rev() {
            out[a] = (rem % self.shape[a] + 1) as f64 * self.h[a];
            rem /= self.shape[a];
        }
        out
    }

    /// `Π √(2/Lₐ) sin(nₐπxₐ/Lₐ)` sampled on the interior nodes.
    pub fn sampled_mode(&self, indices: &[u32]) -> Vec<f64> {
        let lengths = self.domain.lengths();
        let per_axis: Vec<Vec<f64>> = (0..self.dimension())
            .map(|a| {
                let norm = (2.0 / lengths[a]).sqrt();
                (1..=self.shape[a])
                    .map(|t| norm * (indices[a] as f64 * PI * t as f64 / self.intervals[a] as f64).sin())
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; self.len()];
        let mut idx = vec![0usize; self.dimension()];
        for o in out.iter_mut() {
            *o = (0..self.dimension()).map(|a| per_axis[a][idx[a]]).product();
            advance(&mut idx, &self.shape);
        }
        out
    }

    /// `y = −Δ_h x` with the standard stencil.
    pub fn apply_laplacian(&self, x: &[f64], y: &mut [f64]) {
        let d = self.dimension();
        let inv_h2: Vec<f64> = self.h.iter().map(|h| 1.0 / (h * h)).collect();
        let mut stride = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            stride[a] = stride[a + 1] * self.shape[a + 1];
        }
        let mut idx = vec![0usize; d];
        for (i, yi) in y.iter_mut().enumerate() {
            let xi = x[i];
            let mut acc = 0.0;
            for a in 0..d {
                let lo = if idx[a] > 0 { x[i - stride[a]] } else { 0.0 };
                let hi = if idx[a] + 1 < self.shape[a] { x[i + stride[a]] } else { 0.0 };
                acc += (2.0 * xi - lo - hi) * inv_h2[a];
            }
            *yi = acc;
            advance(&mut idx, &self.shape);
        }
    }

    /// The stencil as `(row, col, value)` triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        let mut e = vec![0.0; self.len()];
        let mut col = vec![0.0; self.len()];
        for j in 0..self.len() {
            e[j] = 1.0;
            self.apply_laplacian(&e, &mut col);
            e[j] = 0.0;
            for (i, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    fn transform(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = vec![0.0; x.len()];
        for (a, axis) in self.axes.iter().enumerate() {
            let n = axis.interior;
            let outer: usize = self.shape[..a].iter().product();
            let inner: usize = self.shape[a + 1..].iter().product();
            next.iter_mut().for_each(|v| *v = 0.0);
            for o in 0..outer {
                for m in 0..n {
                    let dst = (o * n + m) * inner;
                    for t in 0..n {
                        let c = axis.matrix[m * n + t];
                        let src = (o * n + t) * inner;
                        let (dst_row, src_row) = (&mut next[dst..dst + inner], &cur[src..src + inner]);
                        for (yv, xv) in dst_row.iter_mut().zip(src_row) {
                            *yv += c * xv;
                        }
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Applies `g(−Δ_h)` through the sine transform.
    pub fn spectral_apply(&self, x: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
        let scale: f64 = self.intervals.iter().map(|&n| 2.0 / n as f64).product();
        let mut c = self.transform(x);
        for (ci, &s) in c.iter_mut().zip(&self.spectrum) {
            *ci *= g(s) * scale;
        }
        self.transform(&c)
    }

    /// Discrete eigenvalues of all sine modes, ascending, with their flattened mode index.
    pub fn sorted_spectrum(&self) -> Vec<(f64, usize)> {
        let mut v: Vec<(f64, usize)> = self.spectrum.iter().copied().zip(0..).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v
    }

    /// Grid vector of the sine mode with flattened (0-based) mode index `flat`, unit discrete norm.
    pub fn sine_vector(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut indices = vec![0u32; self.dimension()];
        for a in (0..self.dimension()).rev() {
            indices[a] = (rem % self.shape[a] + 1) as u32;
            rem /= self.shape[a];
        }
        self.sampled_mode(&indices)
    }

    /// Orthogonal projection coefficients `⟨v, eᵢ⟩_h` onto the group.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.group_vectors.iter().map(|e| self.dot(v, e)).collect()
    }

    /// `Σ aᵢ eᵢ` on the grid.
    pub fn combine(&self, a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (ai, e) in a.iter().zip(&self.group_vectors) {
            for (o, x) in out.iter_mut().zip(e) {
                *o += ai * x;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{locate_group, GroupTarget};

    fn square_group(j: usize) -> (DomainSpec, EigenGroup) {
        let d = DomainSpec::square_pi();
        let g = locate_group(&d, &GroupTarget::Index(j)).unwrap().group;
        (d, g)
    }

    #[test]
    fn discrete_first_eigenvalue() {
        let (d, g) = square_group(1);
        let dp = build_laplacian(&d, &g, &[64, 64]).unwrap();
        let h = PI / 64.0;
        let expected = 4.0 / (h * h) * 2.0 * (h / 2.0).sin().powi(2);
        assert!((dp.lambda_h - expected).abs() < 1e-12);
        assert!((dp.lambda_h - 2.0).abs() < 2e-3);
        // λ_h = λ − h²Σn⁴/12 + O(h⁴)
        let predicted = 2.0 - h * h * 2.0 / 12.0;
        assert!((dp.lambda_h - predicted).abs() < h.powi(4));
    }

    #[test]
    fn stencil_is_exactly_symmetric() {
        let (d, g) = square_group(2);
        let dp = build_laplacian(&d, &g, &[20, 20]).unwrap();
        let mut t = dp.triplets();
        let mut tt: Vec<_> = t.iter().map(|&(i, j, v)| (j, i, v)).collect();
        t.sort_by_key(|a| (a.0, a.1));
        tt.sort_by_key(|a| (a.0, a.1));
        assert_eq!(t, tt);
    }

    #[test]
    fn symmetric_grid_has_no_splitting() {
        let (d, g) = square_group(2);
        let dp = build_laplacian(&d, &g, &[64, 64]).unwrap();
        assert_eq!(dp.group_eigs[0], dp.group_eigs[1]);
        assert!(dp.gap > 2.5);
    }

    #[test]
    fn sampled_modes_are_eigenvectors() {
        let d = DomainSpec::cube_pi();
        let g = locate_group(&d, &GroupTarget::Index(2)).unwrap().group;
        let dp = build_laplacian(&d, &g, &[16, 16, 16]).unwrap();
        let mut y = vec![0.0; dp.len()];
        for (e, &lam) in dp.group_vectors.iter().zip(&dp.group_eigs) {
            dp.apply_laplacian(e, &mut y);
            let err = y.iter().zip(e).map(|(a, b)| (a - lam * b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-11);
            assert!((dp.norm(e) - 1.0).abs() < 1e-14);
        }
        assert!(dp.dot(&dp.group_vectors[0], &dp.group_vectors[1]).abs() < 1e-14);
    }

    #[test]
    fn spectral_apply_inverts_the_stencil() {
        let d = DomainSpec::parse(&["pi^2", "2*pi^2"]).unwrap();
        let g = locate_group(&d, &GroupTarget::Index(1)).unwrap().group;
        let dp = build_laplacian(&d, &g, &[20, 28]).unwrap();
        let x: Vec<f64> = (0..dp.len()).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let mut ax = vec![0.0; dp.len()];
        dp.apply_laplacian(&x, &mut ax);
        let back = dp.spectral_apply(&ax, |s| 1.0 / s);
        let err = back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
        let same = dp.spectral_apply(&x, |s| s);
        let err = same.iter().zip(&ax).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn coarse_and_split_grids_rejected() {
        let (d, g) = square_group(2);
        assert!(matches!(build_laplacian(&d, &g, &[16, 16]), Err(VerifyError::GridTooCoarse(_))));
        // unequal resolutions split the (1,2)/(2,1) pair by O(h²); fine grids keep it small
        assert!(build_laplacian(&d, &g, &[40, 48]).is_ok());
        let c = DomainSpec::cube_pi();
        let g = locate_group(&c, &GroupTarget::Index(2)).unwrap().group;
        assert!(matches!(build_laplacian(&c, &g, &[10, 12, 12]), Err(VerifyError::GridTooCoarse(_))));
    }
}
