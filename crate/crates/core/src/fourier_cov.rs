//! Fourier-domain covariance functionals on `R^d`.
//!
//! Transforms are unitary: `f̂(ξ) = (2π)^{-d/2} ∫ e^{-ix·ξ} f(x) dx`. All
//! covariances are integrals `∫ f̂(ξ) conj(ĝ(ξ)) w(|ξ|) dξ` against a radial
//! weight `w`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};
use crate::quadrature::{adaptive, adaptive_panels, composite_points, GaussLegendre};
use crate::special::{gamma, hermite_functions};

/// Initial panel count for adaptive spectral integrals (70 × 15 ≥ 1024 nodes).
const SPECTRAL_PANELS: usize = 70;
const SPECTRAL_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunctionKind {
    /// Normalized Gaussian density `(2πw²)^{-d/2} e^{-|x-c|²/(2w²)}`.
    GaussianBump { center: Vec<f64>, width: f64 },
    /// Radial `f̂(ξ) = e^{-(|ξ|-freq)²/(2w²)}`, smoothly cut to zero on
    /// `|ξ| ≤ freq/2`.
    ModulatedGaussian { frequency: f64, width: f64 },
    /// Tensor Hermite function `Π h_{n_i}(x_i)`.
    HermiteFn(Vec<u32>),
    /// Real radial profile of `f̂`, linearly interpolated on `xi`, zero beyond.
    Custom { xi: Vec<f64>, values: Vec<f64> },
    /// Linear combination `Σ a_i f_i`.
    Sum(Vec<(f64, TestFunction)>),
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    kind: TestFunctionKind,
    d: usize,
    /// `(ξ, weight·f̂(ξ))` for the cosine transform of 1-D radial kinds.
    inverse_nodes: OnceLock<Vec<(f64, f64)>>,
}

/// `C^∞` step: 0 for `s ≤ 0`, 1 for `s ≥ 1`.
impl PartialEq for TestFunction {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.kind == other.kind
    }
}

fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// S₀ function with radial transform `e^{-(|ξ|-freq)²/(2w²)}` and a smooth
/// cutoff rising over `[freq/2, 3freq/4]`.
pub fn make_s0_function(freq: f64, width: f64, d: usize) -> Result<TestFunction> {
    ensure_positive("freq", freq)?;
    ensure_positive("width", width)?;
    check_dim(d)?;
    if freq < 8.0 * width {
        return Err(Error::FloorViolated(format!(
            "freq {freq} must be at least 8·width = {}",
            8.0 * width
        )));
    }
    Ok(TestFunction::from_kind(TestFunctionKind::ModulatedGaussian { frequency: freq, width }, d))
}

impl TestFunction {
    fn from_kind(kind: TestFunctionKind, d: usize) -> Self {
        Self { kind, d, inverse_nodes: OnceLock::new() }
    }

    pub fn gaussian(center: Vec<f64>, width: f64) -> Result<Self> {
        check_dim(center.len())?;
        ensure_positive("width", width)?;
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite center".into()));
        }
        let d = center.len();
        Ok(Self::from_kind(TestFunctionKind::GaussianBump { center, width }, d))
    }

    pub fn hermite(n: Vec<u32>) -> Result<Self> {
        check_dim(n.len())?;
        let d = n.len();
        Ok(Self::from_kind(TestFunctionKind::HermiteFn(n), d))
    }

    pub fn custom(d: usize, xi: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_dim(d)?;
        if xi.len() < 2 || xi.len() != values.len() {
            return Err(Error::Invalid("custom profile needs matching xi/values of length ≥ 2".into()));
        }
        if xi[0] != 0.0 || xi.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("custom xi must start at 0 and increase strictly".into()));
        }
        if values.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("custom profile must be finite".into()));
        }
        Ok(Self::from_kind(TestFunctionKind::Custom { xi, values }, d))
    }

    /// `Σ a_i f_i`; all terms must share the dimension.
    pub fn sum(terms: Vec<(f64, TestFunction)>) -> Result<Self> {
        let d = terms.first().ok_or_else(|| Error::Invalid("empty sum".into()))?.1.d;
        if let Some((_, t)) = terms.iter().find(|(_, t)| t.d != d) {
            return Err(Error::DimensionMismatch { expected: d, got: t.d });
        }
        Ok(Self::from_kind(TestFunctionKind::Sum(terms), d))
    }

    pub fn kind(&self) -> &TestFunctionKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Whether `f̂` is a real function of `|ξ|` alone.
    pub fn is_radial(&self) -> bool {
        match &self.kind {
            TestFunctionKind::GaussianBump { center, .. } => center.iter().all(|&c| c == 0.0),
            TestFunctionKind::HermiteFn(n) => n.iter().all(|&k| k == 0),
            TestFunctionKind::Sum(terms) => terms.iter().all(|(_, t)| t.is_radial()),
            _ => true,
        }
    }

    /// Radial profile `f̂(r)` for radial kinds.
    pub fn radial_hat(&self, r: f64) -> Option<f64> {
        if !self.is_radial() {
            return None;
        }
        Some(match &self.kind {
            TestFunctionKind::GaussianBump { width, .. } => {
                (2.0 * PI).powf(-(self.d as f64) / 2.0) * (-0.5 * width * width * r * r).exp()
            }
            TestFunctionKind::HermiteFn(_) => PI.powf(-(self.d as f64) / 4.0) * (-0.5 * r * r).exp(),
            TestFunctionKind::ModulatedGaussian { frequency, width } => {
                let cut = smooth_step((r - 0.5 * frequency) / (0.25 * frequency));
                if cut == 0.0 {
                    0.0
                } else {
                    cut * (-(r - frequency).powi(2) / (2.0 * width * width)).exp()
                }
            }
            TestFunctionKind::Custom { xi, values } => interpolate(xi, values, r),
            TestFunctionKind::Sum(terms) => terms.iter().map(|(a, t)| a * t.radial_hat(r).unwrap_or(0.0)).sum(),
        })
    }

    /// `f̂(ξ)`.
    pub fn fhat(&self, xi: &[f64]) -> Result<Complex64> {
        if xi.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: xi.len() });
        }
        Ok(self.fhat_unchecked(xi))
    }

    fn fhat_unchecked(&self, xi: &[f64]) -> Complex64 {
        match &self.kind {
            TestFunctionKind::GaussianBump { center, width } => {
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                let phase: f64 = center.iter().zip(xi).map(|(c, x)| c * x).sum();
                let mag = (2.0 * PI).powf(-(self.d as f64) / 2.0) * (-0.5 * width * width * r2).exp();
                Complex64::from_polar(mag, -phase)
            }
            TestFunctionKind::HermiteFn(n) => {
                let mut v = Complex64::new(1.0, 0.0);
                for (&k, &x) in n.iter().zip(xi) {
                    let h = hermite_functions(k as usize, x)[k as usize];
                    // (-i)^k
                    let rot = match k % 4 {
                        0 => Complex64::new(1.0, 0.0),
                        1 => Complex64::new(0.0, -1.0),
                        2 => Complex64::new(-1.0, 0.0),
                        _ => Complex64::new(0.0, 1.0),
                    };
                    v *= rot * h;
                }
                v
            }
            TestFunctionKind::Sum(terms) => terms.iter().map(|(a, t)| t.fhat_unchecked(xi) * *a).sum(),
            _ => {
                let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                Complex64::new(self.radial_hat(r).unwrap_or(0.0), 0.0)
            }
        }
    }

    pub fn hat_at_zero(&self) -> Complex64 {
        self.fhat_unchecked(&vec![0.0; self.d])
    }

    /// `ξ₀` with `f̂ = 0` on `|ξ| ≤ ξ₀`, if there is one.
    pub fn floor(&self) -> Option<f64> {
        match &self.kind {
            TestFunctionKind::ModulatedGaussian { frequency, .. } => Some(0.5 * frequency),
            TestFunctionKind::Custom { xi, values } => {
                let zeros = values.iter().take_while(|&&v| v == 0.0).count();
                (zeros >= 2).then(|| xi[zeros - 1])
            }
            TestFunctionKind::Sum(terms) => terms
                .iter()
                .map(|(_, t)| t.floor())
                .try_fold(f64::INFINITY, |acc, fl| fl.map(|v| acc.min(v))),
            _ => None,
        }
    }

    /// Radial range `[lo, hi]` outside of which `f̂` is negligible.
    pub fn spectral_window(&self) -> (f64, f64) {
        match &self.kind {
            TestFunctionKind::GaussianBump { width, .. } => (0.0, 9.0 / width),
            TestFunctionKind::ModulatedGaussian { frequency, width } => (0.5 * frequency, frequency + 12.0 * width),
            TestFunctionKind::HermiteFn(n) => {
                let e: f64 = n.iter().map(|&k| 2.0 * k as f64 + 1.0).sum();
                (0.0, e.sqrt() + 10.0)
            }
            TestFunctionKind::Custom { xi, .. } => (self.floor().unwrap_or(0.0), *xi.last().expect("len ≥ 2")),
            TestFunctionKind::Sum(terms) => terms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, t)| {
                let (a, b) = t.spectral_window();
                (lo.min(a), hi.max(b))
            }),
        }
    }

    /// Radius beyond which the physical-space function is treated as zero.
    pub fn physical_radius(&self) -> f64 {
        match &self.kind {
            TestFunctionKind::GaussianBump { center, width } => {
                center.iter().map(|c| c * c).sum::<f64>().sqrt() + 10.0 * width
            }
            TestFunctionKind::HermiteFn(n) => {
                let e: f64 = n.iter().map(|&k| 2.0 * k as f64 + 1.0).sum();
                e.sqrt() + 10.0
            }
            TestFunctionKind::ModulatedGaussian { frequency, width } => 12.0 / width + 1200.0 / frequency,
            TestFunctionKind::Custom { xi, .. } => 400.0 / xi[1],
            TestFunctionKind::Sum(terms) => terms.iter().map(|(_, t)| t.physical_radius()).fold(0.0, f64::max),
        }
    }

    /// Physical-space value `f(x)`. Radial spectral kinds are only
    /// transformed back in one dimension.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        match &self.kind {
            TestFunctionKind::GaussianBump { center, width } => {
                let r2: f64 = center.iter().zip(x).map(|(c, v)| (v - c).powi(2)).sum();
                Ok((2.0 * PI * width * width).powf(-(self.d as f64) / 2.0) * (-r2 / (2.0 * width * width)).exp())
            }
            TestFunctionKind::HermiteFn(n) => Ok(n
                .iter()
                .zip(x)
                .map(|(&k, &v)| hermite_functions(k as usize, v)[k as usize])
                .product()),
            TestFunctionKind::Sum(terms) => terms.iter().map(|(a, t)| Ok(a * t.value(x)?)).sum(),
            _ if self.d == 1 => {
                // f(x) = √(2/π) ∫₀^∞ f̂(ξ) cos(xξ) dξ for a real even f̂
                let nodes = self.inverse_nodes.get_or_init(|| self.cosine_nodes());
                let s: f64 = nodes.iter().map(|&(xi, wf)| wf * (xi * x[0]).cos()).sum();
                Ok((2.0 / PI).sqrt() * s)
            }
            _ => Err(Error::UnsupportedDimension(self.d)),
        }
    }

    fn cosine_nodes(&self) -> Vec<(f64, f64)> {
        let (lo, hi) = self.spectral_window();
        let radius = self.physical_radius();
        // at most ~4 oscillations of cos(Rξ) per 64-node panel
        let panels = ((radius * (hi - lo) / (8.0 * PI)).ceil() as usize).max(32);
        let rule = GaussLegendre::new(64);
        let mut out = Vec::with_capacity(64 * panels);
        match &self.kind {
            TestFunctionKind::Custom { xi, .. } => {
                // integrate each linear piece separately so kinks sit on panel ends
                let pieces = xi.len() - 1;
                let per = (panels / pieces).max(1);
                for w in xi.windows(2) {
                    for (x, wt) in composite_points(&rule, w[0], w[1], per) {
                        out.push((x, wt * self.radial_hat(x).unwrap_or(0.0)));
                    }
                }
            }
            _ => {
                for (x, wt) in composite_points(&rule, lo, hi, panels) {
                    out.push((x, wt * self.radial_hat(x).unwrap_or(0.0)));
                }
            }
        }
        out
    }
}

fn interpolate(xi: &[f64], values: &[f64], r: f64) -> f64 {
    let last = xi.len() - 1;
    if r >= xi[last] {
        return if r == xi[last] { values[last] } else { 0.0 };
    }
    let j = xi.partition_point(|&v| v <= r).saturating_sub(1);
    let t = (r - xi[j]) / (xi[j + 1] - xi[j]);
    values[j] + t * (values[j + 1] - values[j])
}

/// Integration strategy for `∫ f̂ conj(ĝ) w(|ξ|) dξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralRoute {
    /// Half-line for `d = 1`, radial for radial pairs, polar/spherical grid otherwise.
    Auto,
    /// 1-D radial integral with the sphere-area factor; both functions radial.
    Radial,
    /// Cartesian tensor Gauss–Legendre grid on `[-hi, hi]^d`, `d ≤ 2`.
    Tensor,
}

fn check_pair(f: &TestFunction, g: &TestFunction) -> Result<usize> {
    if f.d != g.d {
        return Err(Error::DimensionMismatch { expected: f.d, got: g.d });
    }
    Ok(f.d)
}

fn joint_window(f: &TestFunction, g: &TestFunction) -> (f64, f64) {
    let (a, b) = f.spectral_window();
    let (c, e) = g.spectral_window();
    (a.max(c), b.min(e))
}

/// `∫_{R^d} f̂(ξ) conj(ĝ(ξ)) w(|ξ|) dξ`.
pub fn spectral_pairing(
    f: &TestFunction,
    g: &TestFunction,
    weight: &dyn Fn(f64) -> f64,
    route: SpectralRoute,
) -> Result<Complex64> {
    let d = check_pair(f, g)?;
    let (lo, hi) = joint_window(f, g);
    if !(hi > lo) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    match route {
        SpectralRoute::Auto if d == 1 => {
            // real f, g: the integrand at -ξ is the conjugate of that at ξ
            let v = adaptive_panels(
                |r| (f.fhat_unchecked(&[r]) * g.fhat_unchecked(&[r]).conj()).re * weight(r),
                lo,
                hi,
                SPECTRAL_PANELS,
                SPECTRAL_REL_TOL,
            )?;
            Ok(Complex64::new(2.0 * v.value, 0.0))
        }
        SpectralRoute::Auto if f.is_radial() && g.is_radial() => radial_pairing(f, g, weight, lo, hi),
        SpectralRoute::Radial => {
            if !(f.is_radial() && g.is_radial()) {
                return Err(Error::Invalid("radial route needs radial test functions".into()));
            }
            radial_pairing(f, g, weight, lo, hi)
        }
        SpectralRoute::Auto => Ok(angular_grid_pairing(f, g, weight, lo, hi, d)),
        SpectralRoute::Tensor => {
            if d > 2 {
                return Err(Error::UnsupportedDimension(d));
            }
            Ok(tensor_pairing(f, g, weight, hi, d))
        }
    }
}

fn radial_pairing(f: &TestFunction, g: &TestFunction, weight: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Complex64> {
    let d = f.d;
    let v = adaptive_panels(
        |r| {
            let a = f.radial_hat(r).unwrap_or(0.0);
            let b = g.radial_hat(r).unwrap_or(0.0);
            a * b * weight(r) * r.powi(d as i32 - 1)
        },
        lo,
        hi,
        SPECTRAL_PANELS,
        SPECTRAL_REL_TOL,
    )?;
    Ok(Complex64::new(sphere_area(d) * v.value, 0.0))
}

/// Gauss–Legendre in `r` times a periodic trapezoid rule in angle (d = 2) or
/// Gauss–Legendre in `cos θ` and trapezoid in `φ` (d = 3).
fn angular_grid_pairing(
    f: &TestFunction,
    g: &TestFunction,
    weight: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    d: usize,
) -> Complex64 {
    let radial = composite_points(&GaussLegendre::new(64), lo, hi, if d == 2 { 16 } else { 8 });
    let mut total = Complex64::new(0.0, 0.0);
    if d == 2 {
        let nt = 256;
        let dt = 2.0 * PI / nt as f64;
        for &(r, wr) in &radial {
            let mut ring = Complex64::new(0.0, 0.0);
            for j in 0..nt {
                let th = dt * j as f64;
                let xi = [r * th.cos(), r * th.sin()];
                ring += f.fhat_unchecked(&xi) * g.fhat_unchecked(&xi).conj();
            }
            total += ring * (dt * wr * r * weight(r));
        }
    } else {
        let polar = GaussLegendre::new(64);
        let np = 128;
        let dp = 2.0 * PI / np as f64;
        for &(r, wr) in &radial {
            let mut shell = Complex64::new(0.0, 0.0);
            for (&c, &wc) in polar.nodes().iter().zip(polar.weights()) {
                let s = (1.0 - c * c).sqrt();
                for j in 0..np {
                    let ph = dp * j as f64;
                    let xi = [r * s * ph.cos(), r * s * ph.sin(), r * c];
                    shell += f.fhat_unchecked(&xi) * g.fhat_unchecked(&xi).conj() * wc;
                }
            }
            total += shell * (dp * wr * r * r * weight(r));
        }
    }
    total
}

fn tensor_pairing(f: &TestFunction, g: &TestFunction, weight: &dyn Fn(f64) -> f64, hi: f64, d: usize) -> Complex64 {
    let axis = composite_points(&GaussLegendre::new(64), -hi, hi, 16);
    let mut total = Complex64::new(0.0, 0.0);
    if d == 1 {
        for &(x, w) in &axis {
            total += f.fhat_unchecked(&[x]) * g.fhat_unchecked(&[x]).conj() * (w * weight(x.abs()));
        }
        return total;
    }
    for &(x, wx) in &axis {
        for &(y, wy) in &axis {
            let r = (x * x + y * y).sqrt();
            if r > hi {
                continue;
            }
            let xi = [x, y];
            total += f.fhat_unchecked(&xi) * g.fhat_unchecked(&xi).conj() * (wx * wy * weight(r));
        }
    }
    total
}

/// `2 Re ∫₀^∞ (f̂-a) conj(ĝ-b) / ξ² dξ` in one dimension, where `a = f̂(0)`,
/// `b = ĝ(0)` when `subtract_origin` is set and zero otherwise. Beyond the
/// window the transforms are negligible and the `a·conj(b)/ξ²` tail is added
/// in closed form.
pub(crate) fn inverse_square_1d(f: &TestFunction, g: &TestFunction, subtract_origin: bool) -> Result<f64> {
    let zero = Complex64::new(0.0, 0.0);
    let (a, b) = if subtract_origin { (f.hat_at_zero(), g.hat_at_zero()) } else { (zero, zero) };
    let (fl, fh) = f.spectral_window();
    let (gl, gh) = g.spectral_window();
    // where a or b vanishes the integrand lives on that function's window
    let (mut lo, mut hi) = (0.0f64, fh.max(gh));
    if a == zero {
        lo = lo.max(fl);
        hi = hi.min(fh);
    }
    if b == zero {
        lo = lo.max(gl);
        hi = hi.min(gh);
    }
    if !(hi > lo) {
        return Ok(0.0);
    }
    if lo == 0.0 && !subtract_origin {
        return Err(Error::FloorViolated("1/|ξ|² is not integrable at the origin in d = 1".into()));
    }
    let v = adaptive_panels(
        |r| ((f.fhat_unchecked(&[r]) - a) * (g.fhat_unchecked(&[r]) - b).conj()).re / (r * r),
        lo,
        hi,
        SPECTRAL_PANELS,
        SPECTRAL_REL_TOL,
    )?;
    let tail = (a * b.conj()).re / hi;
    Ok(2.0 * (v.value + tail))
}

/// `nu_scale · ∫ f̂ conj(ĝ)/|ξ|² dξ`.
///
/// For `d ≤ 2` at least one of `f`, `g` must have a spectral floor; otherwise
/// the integral diverges at the origin. With `nu_scale = 1/ν` the value equals
/// `∬ f(x) Φ_{0,d}(x-y) g(y) dx dy`; use `σ²/(2ν)` for the stationary limit.
pub fn gff_covariance(f: &TestFunction, g: &TestFunction, nu_scale: f64) -> Result<f64> {
    let d = check_pair(f, g)?;
    if d <= 2 && f.floor().is_none() && g.floor().is_none() {
        return Err(Error::FloorViolated(format!(
            "neither test function vanishes near the origin (d = {d})"
        )));
    }
    let v = if d == 1 {
        inverse_square_1d(f, g, false)?
    } else {
        spectral_pairing(f, g, &|r| 1.0 / (r * r), SpectralRoute::Auto)?.re
    };
    Ok(nu_scale * v)
}

/// Both parts of `E(u[t,f] u[t,g])` for the zero-mass equation on `R^d` with a
/// deterministic initial condition `φ`: `(A_f A_g, noise)` where
/// `A_f = ∫ φ̂ e^{-tν|ξ|²} conj(f̂)` and
/// `noise = σ² ∫ f̂ conj(ĝ) (1 - e^{-2tν|ξ|²})/(2ν|ξ|²)`.
pub fn transient_covariance_parts(
    f: &TestFunction,
    g: &TestFunction,
    phi: Option<&TestFunction>,
    t: f64,
    nu: f64,
    sigma: f64,
) -> Result<(f64, f64)> {
    check_pair(f, g)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NonPositive { name: "t", value: t });
    }
    ensure_positive("nu", nu)?;
    if !(sigma >= 0.0) {
        return Err(Error::NonPositive { name: "sigma", value: sigma });
    }
    let phi_term = match phi {
        None => 0.0,
        Some(p) => {
            check_pair(p, f)?;
            let decay = |r: f64| (-t * nu * r * r).exp();
            let af = spectral_pairing(p, f, &decay, SpectralRoute::Auto)?.re;
            let ag = spectral_pairing(p, g, &decay, SpectralRoute::Auto)?.re;
            af * ag
        }
    };
    let noise = if t == 0.0 {
        0.0
    } else {
        let w = |r: f64| {
            let x = 2.0 * t * nu * r * r;
            if x == 0.0 {
                t
            } else {
                -(-x).exp_m1() / (2.0 * nu * r * r)
            }
        };
        sigma * sigma * spectral_pairing(f, g, &w, SpectralRoute::Auto)?.re
    };
    Ok((phi_term, noise))
}

/// `E(u[t,f] u[t,g])`, the sum of [`transient_covariance_parts`].
pub fn transient_covariance(
    f: &TestFunction,
    g: &TestFunction,
    phi: Option<&TestFunction>,
    t: f64,
    nu: f64,
    sigma: f64,
) -> Result<f64> {
    let (a, b) = transient_covariance_parts(f, g, phi, t, nu, sigma)?;
    Ok(a + b)
}

/// `σ² ∫ f̂ conj(ĝ) / (2ν(|ξ|² + ε)) dξ`, which equals
/// `(σ²/2) ∬ f(x) Φ_{νε,d}(x-y) g(y) dx dy`.
pub fn massive_limit_covariance(f: &TestFunction, g: &TestFunction, nu: f64, eps: f64, sigma: f64) -> Result<f64> {
    ensure_positive("eps", eps)?;
    ensure_positive("nu", nu)?;
    let w = |r: f64| 1.0 / (2.0 * nu * (r * r + eps));
    Ok(sigma * sigma * spectral_pairing(f, g, &w, SpectralRoute::Auto)?.re)
}

/// `∬ f(x) k(x - y) g(y) dx dy` in one dimension by nested adaptive
/// quadrature, splitting the inner integral at the kink `y = x`. A
/// physical-space cross-check for the spectral covariances.
pub fn physical_covariance_1d(f: &TestFunction, g: &TestFunction, kernel: &dyn Fn(f64) -> f64) -> Result<f64> {
    check_pair(f, g)?;
    if f.dim() != 1 {
        return Err(Error::UnsupportedDimension(f.dim()));
    }
    let (rf, rg) = (f.physical_radius(), g.physical_radius());
    let gv = |y: f64| g.value(&[y]).unwrap_or(f64::NAN);
    let inner = |x: f64| -> Result<f64> {
        let integrand = |y: f64| kernel(x - y) * gv(y);
        let lo = (-rg).min(x);
        let hi = rg.max(x);
        Ok(adaptive(integrand, lo, x, 0.0, 1e-13)?.value + adaptive(integrand, x, hi, 0.0, 1e-13)?.value)
    };
    let mut err = None;
    let outer = adaptive(
        |x| {
            let fx = f.value(&[x]).unwrap_or(f64::NAN);
            if fx == 0.0 {
                return 0.0;
            }
            match inner(x) {
                Ok(v) => fx * v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        -rf,
        rf,
        0.0,
        1e-12,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(outer?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormVariant {
    /// `|ξ|^{2γ}`
    Homogeneous,
    /// `(ε + |ξ|²)^γ`
    Bessel(f64),
}

/// `∫ w(ξ) |f̂(ξ)|² dξ` for the weight selected by `variant`.
pub fn hhat_norms(f: &TestFunction, gamma: f64, variant: NormVariant) -> Result<f64> {
    let d = f.d as f64;
    match variant {
        NormVariant::Homogeneous => {
            if gamma <= -d / 2.0 && f.floor().is_none() && f.hat_at_zero().norm() != 0.0 {
                return Err(Error::Divergent(format!(
                    "homogeneous norm with gamma = {gamma} ≤ -d/2 and f̂(0) ≠ 0"
                )));
            }
            if gamma == 0.0 {
                return Ok(spectral_pairing(f, f, &|_| 1.0, SpectralRoute::Auto)?.re);
            }
            Ok(spectral_pairing(f, f, &|r| r.powf(2.0 * gamma), SpectralRoute::Auto)?.re)
        }
        NormVariant::Bessel(eps) => {
            ensure_positive("eps", eps)?;
            Ok(spectral_pairing(f, f, &|r| (eps + r * r).powf(gamma), SpectralRoute::Auto)?.re)
        }
    }
}
