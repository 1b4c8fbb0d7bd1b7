//! Finite truncations of the Hilbert scale `H^γ` generated by an eigen-system:
//! `‖f‖_γ² = Σ λ_k^{2γ} f_k²`.

use std::sync::Arc;

use crate::basis::EigenBasis;
use crate::error::{Error, Result};

/// Coefficients `f_k = (f, h_k)₀`, `k = 1..K`, relative to a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    basis: Arc<EigenBasis>,
    coeffs: Vec<f64>,
}

impl CoefficientField {
    pub fn new(basis: Arc<EigenBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: coeffs.len() });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: Arc<EigenBasis>) -> Self {
        let coeffs = vec![0.0; basis.len()];
        Self { basis, coeffs }
    }

    /// The basis vector `e_k` (1-based).
    pub fn unit(basis: Arc<EigenBasis>, k: usize) -> Result<Self> {
        basis.lambda(k)?;
        let mut f = Self::zeros(basis);
        f.coeffs[k - 1] = 1.0;
        Ok(f)
    }

    /// `f_k = g(k, λ_k)`.
    pub fn from_fn(basis: Arc<EigenBasis>, g: impl Fn(usize, f64) -> f64) -> Self {
        let coeffs = basis.lambdas().iter().enumerate().map(|(i, &l)| g(i + 1, l)).collect();
        Self { basis, coeffs }
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `√(Σ λ_k^{2γ} f_k²)`.
    pub fn norm_gamma(&self, gamma: f64) -> Result<f64> {
        let w = weights(&self.basis, 2.0 * gamma)?;
        Ok(self.coeffs.iter().zip(&w).map(|(f, w)| w * f * f).sum::<f64>().sqrt())
    }

    /// `Λ^p f`, i.e. coefficients `λ_k^p f_k`.
    pub fn apply_lambda_power(&self, p: f64) -> Result<CoefficientField> {
        let w = weights(&self.basis, p)?;
        Ok(Self {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().zip(&w).map(|(f, w)| w * f).collect(),
        })
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &CoefficientField, b: f64) -> Result<CoefficientField> {
        same_basis(self, other)?;
        Ok(Self {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect(),
        })
    }
}

/// `λ_k^p` for every mode; `p = 0` is allowed with zero eigenvalues.
pub(crate) fn weights(basis: &EigenBasis, p: f64) -> Result<Vec<f64>> {
    if p == 0.0 {
        return Ok(vec![1.0; basis.len()]);
    }
    if basis.lambdas().iter().any(|&l| l <= 0.0) {
        return Err(Error::ZeroEigenvalue);
    }
    Ok(basis.lambdas().iter().map(|l| l.powf(p)).collect())
}

pub(crate) fn same_basis(f: &CoefficientField, g: &CoefficientField) -> Result<()> {
    if Arc::ptr_eq(&f.basis, &g.basis) || f.basis == g.basis {
        Ok(())
    } else {
        Err(Error::BasisMismatch)
    }
}

/// `Σ λ_k^{2γ₀} f_k g_k`: the pairing of `f ∈ H^{γ₀+γ}` with `g ∈ H^{γ₀-γ}`
/// through the `H^{γ₀}` inner product. `γ` only fixes the spaces involved and
/// does not change the value for finite truncations.
pub fn duality_pairing(f: &CoefficientField, g: &CoefficientField, gamma0: f64, gamma: f64) -> Result<f64> {
    same_basis(f, g)?;
    if !gamma.is_finite() {
        return Err(Error::Invalid(format!("gamma must be finite, got {gamma}")));
    }
    let w = weights(&f.basis, 2.0 * gamma0)?;
    Ok(f.coeffs.iter().zip(&g.coeffs).zip(&w).map(|((a, b), w)| w * (a * b)).sum())
}

/// Partial Hilbert–Schmidt sum `Σ_{k≤K} λ_k^{2(γ₂-γ₁)}` of the embedding
/// `H^{γ₁} ⊂ H^{γ₂}`. Modes with `λ_k = 0` are skipped.
pub fn hs_embedding_defect(basis: &EigenBasis, gamma1: f64, gamma2: f64) -> f64 {
    let p = 2.0 * (gamma2 - gamma1);
    basis.lambdas().iter().filter(|&&l| l > 0.0).map(|l| l.powf(p)).sum()
}

/// Whether the embedding is expected to be Hilbert–Schmidt: `γ₁-γ₂ > 1/(2α)`.
pub fn is_hilbert_schmidt(basis: &EigenBasis, gamma1: f64, gamma2: f64) -> bool {
    gamma1 - gamma2 > 1.0 / (2.0 * basis.alpha())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_hermite_basis, build_interval_basis, BoundaryCondition};
    use approx::assert_relative_eq;
    use num::{BigInt, BigRational, ToPrimitive};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn dirichlet(k: usize) -> Arc<EigenBasis> {
        Arc::new(build_interval_basis(BoundaryCondition::Dirichlet, 0.0, 1.0, k).unwrap())
    }

    #[test]
    fn unit_vector_norms() {
        let b = dirichlet(5);
        let e1 = CoefficientField::unit(b.clone(), 1).unwrap();
        assert_relative_eq!(e1.norm_gamma(1.0).unwrap(), PI, max_relative = 1e-15);
        let f = CoefficientField::new(b, vec![3.0, 4.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.norm_gamma(0.0).unwrap(), 5.0);
    }

    #[test]
    fn negative_order_norm_matches_exact_sum() {
        let k = 1000;
        let f = CoefficientField::from_fn(dirichlet(k), |k, _| 1.0 / k as f64);
        // ‖f‖²_{-1} = π^{-2} Σ k^{-4}, the sum in exact rationals
        let mut s = BigRational::from_integer(BigInt::from(0));
        for j in 1..=k {
            let j4 = BigInt::from(j).pow(4);
            s += BigRational::new(BigInt::from(1), j4);
        }
        let want = (s.to_f64().unwrap() / (PI * PI)).sqrt();
        assert_relative_eq!(f.norm_gamma(-1.0).unwrap(), want, max_relative = 1e-14);
    }

    #[test]
    fn zero_eigenvalue_rejected() {
        let b = Arc::new(build_interval_basis(BoundaryCondition::Neumann, 0.0, 1.0, 4).unwrap());
        let f = CoefficientField::from_fn(b, |k, _| k as f64);
        assert!(f.norm_gamma(0.0).is_ok());
        assert_eq!(f.norm_gamma(0.5), Err(Error::ZeroEigenvalue));
        assert_eq!(f.apply_lambda_power(-1.0), Err(Error::ZeroEigenvalue));
        assert!(f.apply_lambda_power(0.0).is_ok());
    }

    #[test]
    fn poisson_solution_is_inverse_square() {
        // Λ² v = g per mode, solved independently by dividing by λ²
        let b = dirichlet(30);
        let g = CoefficientField::from_fn(b.clone(), |k, _| (k as f64).sin());
        let v = g.apply_lambda_power(-2.0).unwrap();
        for (k, (&vk, &gk)) in v.coeffs().iter().zip(g.coeffs()).enumerate() {
            let lam = (k + 1) as f64 * PI;
            assert_relative_eq!(vk * lam * lam, gk, max_relative = 1e-14);
        }
    }

    #[test]
    fn pairing_examples() {
        let b = dirichlet(6);
        for j in 1..=6 {
            for k in 1..=6 {
                let p = duality_pairing(
                    &CoefficientField::unit(b.clone(), j).unwrap(),
                    &CoefficientField::unit(b.clone(), k).unwrap(),
                    0.0,
                    1.0,
                )
                .unwrap();
                assert_eq!(p, if j == k { 1.0 } else { 0.0 });
            }
        }
        let other = dirichlet(7);
        let f = CoefficientField::zeros(b);
        let g = CoefficientField::zeros(other);
        assert_eq!(duality_pairing(&f, &g, 0.0, 0.0), Err(Error::BasisMismatch));
    }

    #[test]
    fn embedding_sums() {
        let b = dirichlet(100_000);
        let s = hs_embedding_defect(&b, 1.0, 0.0);
        // Basel tail Σ_{k>K} k^{-2} ≈ 1/K
        assert!((s - 1.0 / 6.0).abs() < 1.01 / (PI * PI * 100_000.0));
        assert_eq!(hs_embedding_defect(&dirichlet(17), 0.3, 0.3), 17.0);
        let h = build_hermite_basis(1, 10).unwrap();
        assert!(!is_hilbert_schmidt(&h, 1.0, 0.0));
        assert!(is_hilbert_schmidt(&h, 1.0 + 1e-9, 0.0));
        assert!(is_hilbert_schmidt(&b, 1.0, 0.0));
        assert!(!is_hilbert_schmidt(&b, 0.5, 0.0));
    }

    fn field(k: usize) -> impl Strategy<Value = CoefficientField> {
        prop::collection::vec(-10.0f64..10.0, k).prop_map(move |c| CoefficientField::new(dirichlet(k), c).unwrap())
    }

    proptest! {
        #[test]
        fn power_round_trip(f in field(40), p in -3.0f64..3.0) {
            let back = f.apply_lambda_power(p).unwrap().apply_lambda_power(-p).unwrap();
            for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
                prop_assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-300) * 4.0);
            }
        }

        #[test]
        fn power_shifts_order(f in field(40), p in -2.0f64..2.0, g in -2.0f64..2.0) {
            let lhs = f.apply_lambda_power(p).unwrap().norm_gamma(g).unwrap();
            let rhs = f.norm_gamma(g + p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn pairing_bounded_and_symmetric(f in field(25), g in field(25), g0 in -1.5f64..1.5, gm in -1.5f64..1.5) {
            let p = duality_pairing(&f, &g, g0, gm).unwrap();
            let q = duality_pairing(&g, &f, g0, gm).unwrap();
            prop_assert_eq!(p, q);
            let bound = f.norm_gamma(g0 + gm).unwrap() * g.norm_gamma(g0 - gm).unwrap();
            prop_assert!(p.abs() <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn pairing_at_zero_ignores_gamma(f in field(25), g in field(25), gm in -3.0f64..3.0) {
            let plain: f64 = f.coeffs().iter().zip(g.coeffs()).map(|(a, b)| a * b).sum();
            prop_assert_eq!(duality_pairing(&f, &g, 0.0, gm).unwrap(), plain);
        }

        #[test]
        fn norm_monotone_in_truncation(c in prop::collection::vec(-10.0f64..10.0, 2..60), gm in -2.0f64..2.0) {
            let mut prev = 0.0;
            for k in 1..=c.len() {
                let f = CoefficientField::new(dirichlet(k), c[..k].to_vec()).unwrap();
                let n = f.norm_gamma(gm).unwrap();
                prop_assert!(n >= prev);
                prev = n;
            }
        }

        #[test]
        fn defect_nondecreasing(g1 in -2.0f64..2.0, g2 in -2.0f64..2.0, k in 1usize..200) {
            let b = dirichlet(k + 1);
            let small = b.truncated(k).unwrap();
            prop_assert!(hs_embedding_defect(&b, g1, g2) >= hs_embedding_defect(&small, g1, g2));
        }
    }
}
