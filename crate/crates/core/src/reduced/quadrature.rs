//! Composite Gauss–Legendre rules on boxes with panels aligned to nodal lines.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::spectrum::{DomainSpec, EigenGroup};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Panel layout for the composite rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes_per_panel: usize,
    /// Each nodal-line panel is split into this many equal subpanels.
    pub subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_panel: 8,
            subdivisions: 3,
        }
    }
}

/// One-dimensional composite rule on `[0, L]`.
#[derive(Debug, Clone)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisRule {
    /// Breakpoints at every nodal line `iL/n` of the given frequencies.
    pub fn aligned(length: f64, freqs: &[u32], spec: QuadratureSpec) -> Self {
        let mut breaks = vec![0.0, length];
        for &n in freqs {
            for i in 1..n {
                breaks.push(length * i as f64 / n as f64);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * length);
        let (gx, gw) = gauss_legendre(spec.nodes_per_panel);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in breaks.windows(2) {
            let sub = spec.subdivisions.max(1);
            let width = (w[1] - w[0]) / sub as f64;
            for s in 0..sub {
                let a = w[0] + s as f64 * width;
                let half = 0.5 * width;
                for (x, wt) in gx.iter().zip(&gw) {
                    nodes.push(a + half * (x + 1.0));
                    weights.push(half * wt);
                }
            }
        }
        Self { nodes, weights }
    }
}

/// Normalized group eigenfunctions sampled on a tensor-product rule.
///
/// `values` is node-major: entry `node * k + i` is `e_i` at that node.
#[derive(Debug, Clone)]
pub struct BasisSampler {
    pub k: usize,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl BasisSampler {
    pub fn new(group: &EigenGroup, domain: &DomainSpec, spec: QuadratureSpec) -> Self {
        let lengths = domain.lengths();
        let d = lengths.len();
        let k = group.multiplicity;
        let rules: Vec<AxisRule> = (0..d)
            .map(|a| {
                let mut freqs: Vec<u32> = group.modes.iter().map(|m| m.indices[a]).collect();
                freqs.sort_unstable();
                freqs.dedup();
                AxisRule::aligned(lengths[a], &freqs, spec)
            })
            .collect();
        // per-axis sine tables: axis -> mode -> node
        let tables: Vec<Vec<Vec<f64>>> = (0..d)
            .map(|a| {
                let norm = (2.0 / lengths[a]).sqrt();
                group
                    .modes
                    .iter()
                    .map(|m| {
                        let w = m.indices[a] as f64 * PI / lengths[a];
                        rules[a].nodes.iter().map(|x| norm * (w * x).sin()).collect()
                    })
                    .collect()
            })
            .collect();
        let counts: Vec<usize> = rules.iter().map(|r| r.nodes.len()).collect();
        let total: usize = counts.iter().product();
        let mut weights = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total * k);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            weights.push((0..d).map(|a| rules[a].weights[idx[a]]).product());
            for i in 0..k {
                values.push((0..d).map(|a| tables[a][i][idx[a]]).product());
            }
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < counts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Self { k, weights, values }
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// `Σ_nodes w · Π e_{idx}` for an arbitrary multi-index.
    pub fn moment(&self, idx: &[usize]) -> f64 {
        self.weights
            .iter()
            .zip(self.values.chunks_exact(self.k))
            .map(|(w, e)| w * idx.iter().map(|&i| e[i]).product::<f64>())
            .sum()
    }
}
