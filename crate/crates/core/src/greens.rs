//! Heat kernels, potentials and Green's function series for `ν(Δ - ε)`.
//!
//! On `R^d`:
//! `G_{ε,d}(t, x) = (4πνt)^{-d/2} exp(-εt - |x|²/(4νt))` and
//! `Φ_{ε,d}(x) = ∫₀^∞ G_{ε,d}(t, x) dt`.
//! On a bounded domain the kernels are eigen-series in an [`EigenBasis`].

use std::f64::consts::PI;
use std::sync::Arc;

use crate::basis::EigenBasis;
use crate::error::{ensure_positive, Error, Result};
use crate::hilbert_scale::CoefficientField;
use crate::quadrature::adaptive;
pub use crate::special::{bessel_k, bessel_k0, gamma, EULER_GAMMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    HeatKernel,
    MassivePotential,
    ZeroMassPotential,
    SeriesGreen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub d: usize,
    pub nu: f64,
    pub eps: f64,
    pub basis: Option<Arc<EigenBasis>>,
    pub series_terms: Option<usize>,
}

impl KernelSpec {
    fn free(kind: KernelKind, d: usize, nu: f64, eps: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::UnsupportedDimension(d));
        }
        ensure_positive("nu", nu)?;
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::NonPositive { name: "eps", value: eps });
        }
        Ok(Self { kind, d, nu, eps, basis: None, series_terms: None })
    }

    pub fn heat(d: usize, nu: f64, eps: f64) -> Result<Self> {
        Self::free(KernelKind::HeatKernel, d, nu, eps)
    }

    pub fn massive(d: usize, nu: f64, eps: f64) -> Result<Self> {
        ensure_positive("eps", eps)?;
        Self::free(KernelKind::MassivePotential, d, nu, eps)
    }

    pub fn zero_mass(d: usize, nu: f64) -> Result<Self> {
        Self::free(KernelKind::ZeroMassPotential, d, nu, 0.0)
    }

    /// Eigen-series kernel on the domain of `basis`, using its first `terms` modes.
    pub fn series(basis: Arc<EigenBasis>, nu: f64, terms: usize) -> Result<Self> {
        ensure_positive("nu", nu)?;
        basis.require_positive()?;
        if terms == 0 {
            return Err(Error::EmptyBasis);
        }
        if terms > basis.len() {
            return Err(Error::IndexOutOfRange { index: terms, count: basis.len() });
        }
        Ok(Self {
            kind: KernelKind::SeriesGreen,
            d: basis.dim(),
            nu,
            eps: 0.0,
            basis: Some(basis),
            series_terms: Some(terms),
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            Err(Error::DimensionMismatch { expected: self.d, got: x.len() })
        } else {
            Ok(())
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `G_{ε,d}(t, x)`.
pub fn heat_kernel(spec: &KernelSpec, t: f64, x: &[f64]) -> Result<f64> {
    ensure_positive("t", t)?;
    spec.check_point(x)?;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let d = spec.d as f64;
    Ok((4.0 * PI * spec.nu * t).powf(-d / 2.0) * (-spec.eps * t - r2 / (4.0 * spec.nu * t)).exp())
}

/// `Φ_{ε,d}(x)` in closed form, `d ∈ {1, 2, 3}`, `ε > 0`.
pub fn potential_massive(spec: &KernelSpec, x: &[f64]) -> Result<f64> {
    spec.check_point(x)?;
    ensure_positive("eps", spec.eps)?;
    let (nu, eps) = (spec.nu, spec.eps);
    let r = norm(x);
    let m = (eps / nu).sqrt();
    match spec.d {
        1 => Ok((-m * r).exp() / (2.0 * (eps * nu).sqrt())),
        2 if r > 0.0 => Ok(bessel_k0(m * r)? / (2.0 * PI * nu)),
        3 if r > 0.0 => Ok((-m * r).exp() / (4.0 * PI * nu * r)),
        2 | 3 => Err(Error::SingularPoint),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// `Φ_{ε,d}(x)` through the Bessel representation
/// `Φ = 2(4πν)^{-d/2} (r/(2√(νε)))^{1-d/2} K_{d/2-1}(r√(ε/ν))`,
/// available where [`bessel_k`] supports the order.
pub fn potential_massive_bessel(spec: &KernelSpec, x: &[f64]) -> Result<f64> {
    spec.check_point(x)?;
    ensure_positive("eps", spec.eps)?;
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    let d = spec.d as f64;
    let p = d / 2.0 - 1.0;
    let (nu, eps) = (spec.nu, spec.eps);
    Ok(2.0 * (4.0 * PI * nu).powf(-d / 2.0) * (r / (2.0 * (nu * eps).sqrt())).powf(-p)
        * bessel_k(p, r * (eps / nu).sqrt())?)
}

/// `Φ_{0,d}(x)`: `-(2πν)^{-1} ln(|x|/√ν)` for `d = 2`,
/// `Γ(d/2-1)/(4π^{d/2} ν |x|^{d-2})` for `d ≥ 3`.
pub fn potential_zero_mass(spec: &KernelSpec, x: &[f64]) -> Result<f64> {
    spec.check_point(x)?;
    let r = norm(x);
    let nu = spec.nu;
    match spec.d {
        1 => Err(Error::NoZeroMassPotential),
        _ if r == 0.0 => Err(Error::SingularPoint),
        2 => Ok(-(r / nu.sqrt()).ln() / (2.0 * PI * nu)),
        d => {
            let d = d as f64;
            Ok(gamma(d / 2.0 - 1.0) / (4.0 * PI.powf(d / 2.0) * nu * r.powf(d - 2.0)))
        }
    }
}

/// `∫₀^∞ G_{ε,d}(t, x) dt` by adaptive quadrature in `τ = ln t`.
///
/// Works for any `d` and also for `ε = 0` when `d ≥ 3`, where the tail beyond
/// the quadrature window is added analytically.
pub fn potential_by_time_quadrature(spec: &KernelSpec, x: &[f64]) -> Result<f64> {
    spec.check_point(x)?;
    let (nu, eps) = (spec.nu, spec.eps);
    let d = spec.d as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 == 0.0 && spec.d >= 2 {
        return Err(Error::SingularPoint);
    }
    if eps == 0.0 && spec.d <= 2 {
        return Err(Error::Divergent(format!("zero-mass time integral in d = {}", spec.d)));
    }
    // below t_lo the Gaussian factor underflows; above t_hi the mass does
    let t_lo = if r2 > 0.0 { r2 / (4.0 * nu * 745.0) } else { 1e-40 };
    let t_hi = if eps > 0.0 { 745.0 / eps } else { 1e8 * (r2 / nu).max(1.0) };
    if !(t_hi > t_lo) {
        return Err(Error::Quadrature(format!("empty time window [{t_lo:e}, {t_hi:e}]")));
    }
    let log_pref = -(d / 2.0) * (4.0 * PI * nu).ln();
    let integrand = |tau: f64| {
        let t = tau.exp();
        (log_pref + (1.0 - d / 2.0) * tau - eps * t - r2 / (4.0 * nu * t)).exp()
    };
    let est = adaptive(integrand, t_lo.ln(), t_hi.ln(), 0.0, 1e-13)?;
    let tail = if eps == 0.0 {
        (4.0 * PI * nu).powf(-d / 2.0) * t_hi.powf(1.0 - d / 2.0) / (d / 2.0 - 1.0)
    } else {
        0.0
    };
    Ok(est.value + tail)
}

/// How the massive potential is computed in [`log_divergence_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialMethod {
    ClosedForm,
    TimeQuadrature,
}

/// Residuals `r(ε) = Φ_{ε,2}(x) - Φ_{0,2}(x) + ln(ε)/(4πν)` at `|x| = radius`.
///
/// As `ε → 0`, `r(ε)` approaches `(ln 2 - γ_E)/(2πν)`.
pub fn log_divergence_check(nu: f64, radius: f64, eps_list: &[f64], method: PotentialMethod) -> Result<Vec<f64>> {
    ensure_positive("radius", radius)?;
    let x = [radius, 0.0];
    let zero = potential_zero_mass(&KernelSpec::zero_mass(2, nu)?, &x)?;
    eps_list
        .iter()
        .map(|&eps| {
            let spec = KernelSpec::massive(2, nu, eps)?;
            let phi = match method {
                PotentialMethod::ClosedForm => potential_massive(&spec, &x)?,
                PotentialMethod::TimeQuadrature => potential_by_time_quadrature(&spec, &x)?,
            };
            Ok(phi - zero + eps.ln() / (4.0 * PI * nu))
        })
        .collect()
}

/// Least-squares slope of `Φ_{ε,2}(x)` against `ln ε`.
pub fn log_divergence_slope(nu: f64, radius: f64, eps_list: &[f64]) -> Result<f64> {
    if eps_list.len() < 2 {
        return Err(Error::Invalid("slope needs at least two eps values".into()));
    }
    let x = [radius, 0.0];
    let pts: Vec<(f64, f64)> = eps_list
        .iter()
        .map(|&e| Ok((e.ln(), potential_massive(&KernelSpec::massive(2, nu, e)?, &x)?)))
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// `h_k(x) h_k(y)` for the first `terms` modes.
fn mode_products(basis: &EigenBasis, x: &[f64], y: &[f64], terms: usize) -> Result<Vec<f64>> {
    if terms == 0 {
        return Err(Error::EmptyBasis);
    }
    if terms > basis.len() {
        return Err(Error::IndexOutOfRange { index: terms, count: basis.len() });
    }
    let hx = basis.evaluate_all(x)?;
    let hy = basis.evaluate_all(y)?;
    Ok(hx.iter().zip(&hy).take(terms).map(|(a, b)| a * b).collect())
}

/// `Σ_{k≤K} h_k(x)h_k(y)/(λ_k²ν)`.
pub fn series_green(basis: &EigenBasis, nu: f64, x: &[f64], y: &[f64], terms: usize) -> Result<f64> {
    ensure_positive("nu", nu)?;
    basis.require_positive()?;
    let prods = mode_products(basis, x, y, terms)?;
    Ok(prods.iter().zip(basis.lambdas()).map(|(p, l)| p / (l * l * nu)).sum())
}

/// `Σ_{k≤K} e^{-λ_k²νt} h_k(x)h_k(y)`.
pub fn series_heat_kernel(basis: &EigenBasis, nu: f64, t: f64, x: &[f64], y: &[f64], terms: usize) -> Result<f64> {
    ensure_positive("nu", nu)?;
    ensure_positive("t", t)?;
    let prods = mode_products(basis, x, y, terms)?;
    Ok(prods.iter().zip(basis.lambdas()).map(|(p, l)| p * (-l * l * nu * t).exp()).sum())
}

/// Time-truncation bound `e^{-λ₁²νT}/(λ₁²ν)·Σ|h_k(x)h_k(y)|` for
/// `∫_T^∞` of the series heat kernel.
pub fn series_time_tail_bound(basis: &EigenBasis, nu: f64, x: &[f64], y: &[f64], horizon: f64, terms: usize) -> Result<f64> {
    basis.require_positive()?;
    let prods = mode_products(basis, x, y, terms)?;
    let a = basis.lambdas()[0].powi(2) * nu;
    Ok((-a * horizon).exp() / a * prods.iter().map(|p| p.abs()).sum::<f64>())
}

/// Both sides of `∫₀^T G dt = Φ`.
///
/// For free-space kernels the time integral runs to `T = ∞` (`horizon` must be
/// `None`) and `Φ` is the closed-form potential at `x - y`. For series kernels
/// the truncated series heat kernel is integrated over `[0, T]` and compared
/// with [`series_green`]; the gap is controlled by [`series_time_tail_bound`].
pub fn heat_poisson_identity(spec: &KernelSpec, x: &[f64], y: &[f64], horizon: Option<f64>) -> Result<(f64, f64)> {
    spec.check_point(x)?;
    spec.check_point(y)?;
    match spec.kind {
        KernelKind::SeriesGreen => {
            let basis = spec.basis.as_ref().ok_or(Error::BasisMismatch)?;
            let terms = spec.series_terms.unwrap_or(basis.len());
            let horizon = horizon.ok_or_else(|| Error::Invalid("series identity needs a finite horizon".into()))?;
            ensure_positive("horizon", horizon)?;
            let prods = mode_products(basis, x, y, terms)?;
            let rates: Vec<f64> = basis.lambdas()[..terms].iter().map(|l| l * l * spec.nu).collect();
            let t_lo = 1e-12 / rates[terms - 1];
            let lhs = adaptive(
                |tau| {
                    let t = tau.exp();
                    t * prods.iter().zip(&rates).map(|(p, a)| p * (-a * t).exp()).sum::<f64>()
                },
                t_lo.ln(),
                horizon.ln(),
                1e-15,
                1e-12,
            )?
            .value
                + t_lo * prods.iter().sum::<f64>();
            let rhs = series_green(basis, spec.nu, x, y, terms)?;
            Ok((lhs, rhs))
        }
        _ => {
            if horizon.is_some() {
                return Err(Error::Invalid("free-space identity integrates to infinity".into()));
            }
            let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            let lhs = potential_by_time_quadrature(spec, &diff)?;
            let rhs = if spec.eps > 0.0 {
                potential_massive(&KernelSpec::massive(spec.d, spec.nu, spec.eps)?, &diff)?
            } else {
                potential_zero_mass(&KernelSpec::zero_mass(spec.d, spec.nu)?, &diff)?
            };
            Ok((lhs, rhs))
        }
    }
}

/// Heat semigroup `S_t` on coefficients: `f_k ↦ e^{-λ_k²νt} f_k`.
pub fn heat_semigroup(f: &CoefficientField, nu: f64, t: f64) -> Result<CoefficientField> {
    ensure_positive("nu", nu)?;
    if !(t >= 0.0) {
        return Err(Error::NonPositive { name: "t", value: t });
    }
    let coeffs = f
        .coeffs()
        .iter()
        .zip(f.basis().lambdas())
        .map(|(c, l)| c * (-l * l * nu * t).exp())
        .collect();
    CoefficientField::new(f.basis().clone(), coeffs)
}
