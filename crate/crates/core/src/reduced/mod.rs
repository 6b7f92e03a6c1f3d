//! The reduced functional `J(a) = ½|a|² − (p+1)⁻¹ ∫ |a·e|^{p+1}` on the span of one eigenvalue group.

pub mod quadrature;
pub mod tensor;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::spectrum::{DomainSpec, EigenGroup};
pub use quadrature::{BasisSampler, QuadratureSpec};
pub use tensor::{
    sine_product_coefficient, sine_product_integral, QuarticTensor, RectCoefficients, TensorError, TensorFile,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReducedError {
    #[error("exponent p must exceed 1, got {0}")]
    BadExponent(f64),
    #[error("the exact quartic backend needs p = 3, got {0}")]
    NotCubic(f64),
}

/// Where the integral term comes from.
#[derive(Debug, Clone)]
pub enum Backend {
    /// Closed-form fourth moments; only valid for `p = 3`.
    ExactQuartic(QuarticTensor),
    /// Weighted point samples of the basis; any `p > 1`.
    Quadrature(BasisSampler),
}

#[derive(Debug, Clone)]
pub struct ReducedFunctional {
    k: usize,
    p: f64,
    backend: Backend,
    group: Option<EigenGroup>,
}

impl ReducedFunctional {
    /// Exact backend for `p = 3` on a box eigenvalue group.
    pub fn exact_quartic(group: &EigenGroup, domain: &DomainSpec) -> Self {
        Self {
            k: group.multiplicity,
            p: 3.0,
            backend: Backend::ExactQuartic(QuarticTensor::exact(group, domain)),
            group: Some(group.clone()),
        }
    }

    /// Quadrature backend for general `p`.
    pub fn quadrature(
        group: &EigenGroup,
        domain: &DomainSpec,
        p: f64,
        spec: QuadratureSpec,
    ) -> Result<Self, ReducedError> {
        check_exponent(p)?;
        let n = domain.dimension() as f64;
        if n > 2.0 && p >= (n + 2.0) / (n - 2.0) {
            log::warn!(
                "p = {p} is at or above the critical exponent {} in dimension {n}; \
                 the reduced functional is still defined but the PDE verifier will refuse it",
                (n + 2.0) / (n - 2.0)
            );
        }
        Ok(Self {
            k: group.multiplicity,
            p,
            backend: Backend::Quadrature(BasisSampler::new(group, domain, spec)),
            group: Some(group.clone()),
        })
    }

    /// Exact backend when `p = 3`, quadrature otherwise.
    pub fn for_group(group: &EigenGroup, domain: &DomainSpec, p: f64) -> Result<Self, ReducedError> {
        if p == 3.0 {
            Ok(Self::exact_quartic(group, domain))
        } else {
            Self::quadrature(group, domain, p, QuadratureSpec::default())
        }
    }

    /// Quartic functional from an explicit tensor (synthetic or imported).
    pub fn from_tensor(tensor: QuarticTensor) -> Self {
        Self {
            k: tensor.k(),
            p: 3.0,
            backend: Backend::ExactQuartic(tensor),
            group: None,
        }
    }

    /// Functional over an arbitrary weighted sampling of `k` functions.
    pub fn from_sampler(sampler: BasisSampler, p: f64) -> Result<Self, ReducedError> {
        check_exponent(p)?;
        Ok(Self {
            k: sampler.k,
            p,
            backend: Backend::Quadrature(sampler),
            group: None,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn group(&self) -> Option<&EigenGroup> {
        self.group.as_ref()
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// The fourth-moment tensor, computed by quadrature if the backend has no closed form.
    pub fn quartic_tensor(&self) -> QuarticTensor {
        match &self.backend {
            Backend::ExactQuartic(t) => t.clone(),
            Backend::Quadrature(s) => QuarticTensor::from_sampler(s),
        }
    }

    /// `∫ |eᵢ|^{p+1}` for each basis function.
    pub fn diagonal_moments(&self) -> Vec<f64> {
        (0..self.k)
            .map(|i| {
                let mut unit = DVector::zeros(self.k);
                unit[i] = 1.0;
                self.integral_term(&unit)
            })
            .collect()
    }

    /// `∫ |a·e|^{p+1}`.
    pub fn integral_term(&self, a: &DVector<f64>) -> f64 {
        assert_eq!(a.len(), self.k);
        match &self.backend {
            Backend::ExactQuartic(t) => {
                let k = self.k;
                let mut s = 0.0;
                for i in 0..k {
                    for h in 0..k {
                        for l in 0..k {
                            let c = a[i] * a[h] * a[l];
                            for m in 0..k {
                                s += t.get(i, h, l, m) * c * a[m];
                            }
                        }
                    }
                }
                s
            }
            Backend::Quadrature(smp) => {
                let q = self.p + 1.0;
                smp.weights
                    .iter()
                    .zip(smp.values.chunks_exact(self.k))
                    .map(|(w, e)| {
                        let u: f64 = e.iter().zip(a.iter()).map(|(x, y)| x * y).sum();
                        w * pow_abs(u, q)
                    })
                    .sum()
            }
        }
    }

    pub fn value(&self, a: &DVector<f64>) -> f64 {
        0.5 * a.norm_squared() - self.integral_term(a) / (self.p + 1.0)
    }

    /// `aᵢ − ∫ |a·e|^{p−1}(a·e) eᵢ`.
    pub fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        assert_eq!(a.len(), self.k);
        let k = self.k;
        let mut g = a.clone();
        match &self.backend {
            Backend::ExactQuartic(t) => {
                for i in 0..k {
                    let mut s = 0.0;
                    for h in 0..k {
                        for l in 0..k {
                            let c = a[h] * a[l];
                            for m in 0..k {
                                s += t.get(i, h, l, m) * c * a[m];
                            }
                        }
                    }
                    g[i] -= s;
                }
            }
            Backend::Quadrature(smp) => {
                let pm1 = self.p - 1.0;
                for (w, e) in smp.weights.iter().zip(smp.values.chunks_exact(k)) {
                    let u: f64 = e.iter().zip(a.iter()).map(|(x, y)| x * y).sum();
                    let f = w * pow_abs(u, pm1) * u;
                    for i in 0..k {
                        g[i] -= f * e[i];
                    }
                }
            }
        }
        g
    }

    /// `δᵢₕ − p ∫ |a·e|^{p−1} eᵢ eₕ`.
    pub fn hessian(&self, a: &DVector<f64>) -> DMatrix<f64> {
        assert_eq!(a.len(), self.k);
        let k = self.k;
        let mut hm = DMatrix::identity(k, k);
        match &self.backend {
            Backend::ExactQuartic(t) => {
                for i in 0..k {
                    for h in i..k {
                        let mut s = 0.0;
                        for l in 0..k {
                            for m in 0..k {
                                s += t.get(i, h, l, m) * a[l] * a[m];
                            }
                        }
                        hm[(i, h)] -= 3.0 * s;
                    }
                }
            }
            Backend::Quadrature(smp) => {
                let pm1 = self.p - 1.0;
                for (w, e) in smp.weights.iter().zip(smp.values.chunks_exact(k)) {
                    let u: f64 = e.iter().zip(a.iter()).map(|(x, y)| x * y).sum();
                    let f = self.p * w * pow_abs(u, pm1);
                    for i in 0..k {
                        for h in i..k {
                            hm[(i, h)] -= f * e[i] * e[h];
                        }
                    }
                }
            }
        }
        for i in 0..k {
            for h in 0..i {
                hm[(i, h)] = hm[(h, i)];
            }
        }
        hm
    }
}

fn check_exponent(p: f64) -> Result<(), ReducedError> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(ReducedError::BadExponent(p))
    }
}

#[inline]
fn pow_abs(u: f64, q: f64) -> f64 {
    if q == 2.0 {
        u * u
    } else if q == 4.0 {
        let s = u * u;
        s * s
    } else {
        u.abs().powf(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{locate_group, GroupTarget};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn square_five() -> (EigenGroup, DomainSpec) {
        let d = DomainSpec::square_pi();
        (locate_group(&d, &GroupTarget::Index(2)).unwrap().group, d)
    }

    fn fd_gradient(f: &ReducedFunctional, a: &DVector<f64>) -> DVector<f64> {
        let h = 1e-5;
        DVector::from_fn(a.len(), |i, _| {
            let mut up = a.clone();
            let mut dn = a.clone();
            up[i] += h;
            dn[i] -= h;
            (f.value(&up) - f.value(&dn)) / (2.0 * h)
        })
    }

    fn fd_hessian(f: &ReducedFunctional, a: &DVector<f64>) -> DMatrix<f64> {
        let h = 1e-5;
        let k = a.len();
        let mut m = DMatrix::zeros(k, k);
        for h_idx in 0..k {
            let mut up = a.clone();
            let mut dn = a.clone();
            up[h_idx] += h;
            dn[h_idx] -= h;
            let col = (f.gradient(&up) - f.gradient(&dn)) / (2.0 * h);
            m.set_column(h_idx, &col);
        }
        m
    }

    #[test]
    fn origin_is_trivial() {
        let (g, d) = square_five();
        let f = ReducedFunctional::exact_quartic(&g, &d);
        let z = DVector::zeros(2);
        assert_eq!(f.value(&z), 0.0);
        assert_eq!(f.gradient(&z), z);
        assert_eq!(f.hessian(&z), DMatrix::identity(2, 2));
    }

    #[test]
    fn simple_eigenvalue_closed_form() {
        let d = DomainSpec::square_pi();
        let g = locate_group(&d, &GroupTarget::Index(1)).unwrap().group;
        let f = ReducedFunctional::exact_quartic(&g, &d);
        let m4 = f.diagonal_moments()[0];
        assert_relative_eq!(m4, 9.0 / (4.0 * std::f64::consts::PI.powi(2)), max_relative = 1e-14);
        for x in [-1.3, 0.2, 2.0] {
            let a = DVector::from_element(1, x);
            assert_relative_eq!(f.value(&a), x * x / 2.0 - x.powi(4) / 4.0 * m4, max_relative = 1e-14);
        }
        let a0 = DVector::from_element(1, m4.powf(-0.5));
        assert!(f.gradient(&a0).norm() < 1e-14);
    }

    #[test]
    fn square_five_axis_value() {
        let (g, d) = square_five();
        let f = ReducedFunctional::exact_quartic(&g, &d);
        let alpha = f.quartic_tensor().get(0, 0, 0, 0);
        let a = DVector::from_vec(vec![1.0, 0.0]);
        assert_relative_eq!(f.value(&a), 0.5 - alpha / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn hessian_at_gamma_points() {
        let (g, d) = square_five();
        let f = ReducedFunctional::exact_quartic(&g, &d);
        let t = f.quartic_tensor();
        let (alpha, beta) = (t.get(0, 0, 0, 0), t.get(0, 0, 1, 1));
        let g1 = alpha.powf(-0.5);
        let g2 = (alpha + 3.0 * beta).powf(-0.5);
        let eigs = |a: Vec<f64>| {
            let mut e: Vec<f64> = f.hessian(&DVector::from_vec(a)).symmetric_eigenvalues().iter().copied().collect();
            e.sort_by(f64::total_cmp);
            e
        };
        let e1 = eigs(vec![g1, 0.0]);
        assert!((e1[0] + 2.0).abs() < 1e-12 && (e1[1] + 1.0 / 3.0).abs() < 1e-12, "{e1:?}");
        let e2 = eigs(vec![g2, g2]);
        assert!((e2[0] + 2.0).abs() < 1e-12 && (e2[1] - 2.0 / 7.0).abs() < 1e-12, "{e2:?}");
    }

    #[test]
    fn exponent_validation() {
        let (g, d) = square_five();
        assert_eq!(
            ReducedFunctional::quadrature(&g, &d, 1.0, QuadratureSpec::default()).unwrap_err(),
            ReducedError::BadExponent(1.0)
        );
        assert!(ReducedFunctional::quadrature(&g, &d, 2.5, QuadratureSpec::default()).is_ok());
    }

    #[test]
    fn mountain_pass_geometry() {
        let (g, d) = square_five();
        for f in [
            ReducedFunctional::exact_quartic(&g, &d),
            ReducedFunctional::quadrature(&g, &d, 2.0, QuadratureSpec::default()).unwrap(),
        ] {
            let (r, big_r) = (0.2, 6.0);
            for t in 0..360 {
                let th = t as f64 * std::f64::consts::PI / 180.0;
                let dir = DVector::from_vec(vec![th.cos(), th.sin()]);
                assert!(f.value(&(&dir * r)) > 0.0);
                assert!(f.value(&(&dir * big_r)) < 0.0);
            }
        }
    }

    fn vec_strategy(k: usize) -> impl Strategy<Value = DVector<f64>> {
        proptest::collection::vec(-3.0f64..3.0, k)
            .prop_filter("inside the ball", |v| v.iter().map(|x| x * x).sum::<f64>() <= 9.0)
            .prop_map(DVector::from_vec)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn evenness(a in vec_strategy(2)) {
            let (g, d) = square_five();
            for f in [
                ReducedFunctional::exact_quartic(&g, &d),
                ReducedFunctional::quadrature(&g, &d, 2.5, QuadratureSpec::default()).unwrap(),
            ] {
                let neg = -&a;
                prop_assert_eq!(f.value(&a), f.value(&neg));
                prop_assert!((f.gradient(&a) + f.gradient(&neg)).norm() <= 1e-14 * (1.0 + f.gradient(&a).norm()));
                prop_assert!((f.hessian(&a) - f.hessian(&neg)).norm() <= 1e-14 * (1.0 + f.hessian(&a).norm()));
            }
        }

        #[test]
        fn gradient_matches_finite_differences(a in vec_strategy(2), p in 1.5f64..4.0) {
            let (g, d) = square_five();
            let f = ReducedFunctional::quadrature(&g, &d, p, QuadratureSpec::default()).unwrap();
            let grad = f.gradient(&a);
            prop_assert!((&grad - fd_gradient(&f, &a)).norm() <= 1e-6 * (1.0 + grad.norm()));
            let f = ReducedFunctional::exact_quartic(&g, &d);
            let grad = f.gradient(&a);
            prop_assert!((&grad - fd_gradient(&f, &a)).norm() <= 1e-6 * (1.0 + grad.norm()));
        }

        #[test]
        fn hessian_is_symmetric_and_matches_fd(a in vec_strategy(2), p in 1.5f64..4.0) {
            let (g, d) = square_five();
            for f in [
                ReducedFunctional::exact_quartic(&g, &d),
                ReducedFunctional::quadrature(&g, &d, p, QuadratureSpec::default()).unwrap(),
            ] {
                let hm = f.hessian(&a);
                prop_assert_eq!(&hm, &hm.transpose());
                prop_assert!((&hm - fd_hessian(&f, &a)).norm() <= 1e-5 * (1.0 + hm.norm()));
            }
        }

        #[test]
        fn backends_agree_for_cubic(a in vec_strategy(2)) {
            let (g, d) = square_five();
            let exact = ReducedFunctional::exact_quartic(&g, &d);
            let quad = ReducedFunctional::quadrature(&g, &d, 3.0, QuadratureSpec::default()).unwrap();
            prop_assert!((exact.value(&a) - quad.value(&a)).abs() <= 1e-9);
            prop_assert!((exact.gradient(&a) - quad.gradient(&a)).norm() <= 1e-9);
            prop_assert!((exact.hessian(&a) - quad.hessian(&a)).norm() <= 1e-9);
        }
    }
}
