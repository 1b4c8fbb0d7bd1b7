//! Samplers for Gaussian free fields, cylindrical Brownian motion, the
//! Brownian bridge and two-sided Brownian motion, and the analytic
//! covariance of the two-sided Brownian motion tested against functions.

use std::sync::Arc;

use rand::Rng;

use crate::basis::{build_interval_basis, BoundaryCondition, EigenBasis};
use crate::error::{Error, Result};
use crate::fourier_cov::{inverse_square_1d, TestFunction};
use crate::hilbert_scale::{duality_pairing, weights, CoefficientField};
use crate::quadrature::{adaptive, composite_points, GaussLegendre};
use crate::rng::{fill_standard_normal, standard_normal};

/// Default number of Karhunen–Loève modes for bridge and half-line samplers.
pub const DEFAULT_KL_MODES: usize = 2000;

/// Random coefficients of a field relative to `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    basis: Arc<EigenBasis>,
    coeffs: Vec<f64>,
    scale: f64,
}

impl FieldSample {
    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Multiply every coefficient by `s`.
    pub fn scaled(mut self, s: f64) -> Self {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
        self.scale *= s;
        self
    }

    /// `Σ c_k h_k(x)`.
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let h = self.basis.evaluate_all(x)?;
        Ok(h.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn to_field(&self) -> CoefficientField {
        CoefficientField::new(self.basis.clone(), self.coeffs.clone()).expect("lengths agree")
    }
}

/// `W = Σ λ_k^{-r} ζ_k h_k` with iid standard normal `ζ_k`.
pub fn sample_gff<R: Rng + ?Sized>(basis: &Arc<EigenBasis>, r: f64, rng: &mut R) -> Result<FieldSample> {
    basis.require_positive()?;
    let w = weights(basis, -r)?;
    let mut coeffs = vec![0.0; basis.len()];
    fill_standard_normal(rng, &mut coeffs);
    coeffs.iter_mut().zip(&w).for_each(|(c, w)| *c *= w);
    Ok(FieldSample { basis: basis.clone(), coeffs, scale: 1.0 })
}

/// `Σ_k λ_k^{-2r} h_k(x)²`, the variance of the truncated field at `x`.
pub fn pointwise_variance(basis: &EigenBasis, r: f64, x: &[f64]) -> Result<f64> {
    let w = weights(basis, -2.0 * r)?;
    let h = basis.evaluate_all(x)?;
    Ok(h.iter().zip(&w).map(|(h, w)| w * h * h).sum())
}

/// `⟨W, f⟩ = Σ λ_k^{2γ₀} f_k c_k`.
pub fn pair_field(sample: &FieldSample, f: &CoefficientField, gamma0: f64, gamma: f64) -> Result<f64> {
    duality_pairing(&sample.to_field(), f, gamma0, gamma)
}

/// Per-mode Brownian increments on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    times: Vec<f64>,
    /// `increments[k][i] = w_k(t_i) - w_k(t_{i-1})`, with `t_{-1} = 0`.
    increments: Vec<Vec<f64>>,
}

impl PathSample {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn increments(&self) -> &[Vec<f64>] {
        &self.increments
    }

    pub fn modes(&self) -> usize {
        self.increments.len()
    }

    /// `w_k(t_i)` for every `i` (1-based `k`).
    pub fn path(&self, k: usize) -> Result<Vec<f64>> {
        let inc = self
            .increments
            .get(k.wrapping_sub(1))
            .ok_or(Error::IndexOutOfRange { index: k, count: self.modes() })?;
        Ok(inc
            .iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Invalid("empty time grid".into()));
    }
    if !(times[0] >= 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonIncreasingTimes);
    }
    Ok(())
}

/// Independent standard Brownian motions `w_k`, one per mode, on `times`.
pub fn sample_cylindrical_bm<R: Rng + ?Sized>(basis: &EigenBasis, times: &[f64], rng: &mut R) -> Result<PathSample> {
    check_times(times)?;
    let sd: Vec<f64> = std::iter::once(times[0])
        .chain(times.windows(2).map(|w| w[1] - w[0]))
        .map(f64::sqrt)
        .collect();
    let increments = (0..basis.len())
        .map(|_| sd.iter().map(|s| s * standard_normal(rng)).collect())
        .collect();
    Ok(PathSample { times: times.to_vec(), increments })
}

/// Truncated series `Σ_k ζ_k λ_k^{-r} h_k(x_j)` on a fixed grid, with the
/// basis values tabulated once.
#[derive(Debug, Clone)]
pub struct KarhunenLoeve {
    /// Row-major `grid × modes`.
    table: Vec<f64>,
    modes: usize,
}

impl KarhunenLoeve {
    pub fn new(basis: &EigenBasis, r: f64, grid: &[Vec<f64>]) -> Result<Self> {
        basis.require_positive()?;
        let w = weights(basis, -r)?;
        let mut table = Vec::with_capacity(grid.len() * basis.len());
        for x in grid {
            let h = basis.evaluate_all(x)?;
            table.extend(h.iter().zip(&w).map(|(h, w)| h * w));
        }
        Ok(Self { table, modes: basis.len() })
    }

    pub fn grid_len(&self) -> usize {
        self.table.len() / self.modes
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z = vec![0.0; self.modes];
        fill_standard_normal(rng, &mut z);
        self.table
            .chunks_exact(self.modes)
            .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn unit_grid(grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    grid.iter()
        .map(|&x| if (0.0..=1.0).contains(&x) { Ok(vec![x]) } else { Err(Error::OutsideDomain(vec![x])) })
        .collect()
}

/// Brownian bridge on `[0, 1]`: `Σ_{k≤K} ζ_k √2 sin(kπx)/(kπ)`.
pub fn bridge_sampler(grid: &[f64], modes: usize) -> Result<KarhunenLoeve> {
    let basis = build_interval_basis(BoundaryCondition::Dirichlet, 0.0, 1.0, modes)?;
    KarhunenLoeve::new(&basis, 1.0, &unit_grid(grid)?)
}

/// Standard Brownian motion on `[0, 1]` from the series with `h(0) = 0`,
/// `h'(1) = 0`: `Σ ζ_k √2 sin((k-½)πx)/((k-½)π)`.
pub fn half_line_bm_sampler(grid: &[f64], modes: usize) -> Result<KarhunenLoeve> {
    let basis = build_interval_basis(BoundaryCondition::Mixed, 0.0, 1.0, modes)?;
    KarhunenLoeve::new(&basis, 1.0, &unit_grid(grid)?)
}

/// One Brownian bridge draw on `grid ⊂ [0, 1]` with `modes` terms.
pub fn sample_brownian_bridge<R: Rng + ?Sized>(grid: &[f64], modes: usize, rng: &mut R) -> Result<Vec<f64>> {
    Ok(bridge_sampler(grid, modes)?.sample(rng))
}

/// Exact two-sided Brownian motion on an arbitrary grid: `W(x)` for `x > 0`,
/// `V(-x)` for `x < 0`, with `W`, `V` independent. Increments along each
/// half-line are drawn in order of `|x|`, `W` first.
pub fn sample_two_sided_bm<R: Rng + ?Sized>(grid: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::OutsideDomain(grid.to_vec()));
    }
    let mut out = vec![0.0; grid.len()];
    for positive in [true, false] {
        let mut idx: Vec<usize> = (0..grid.len())
            .filter(|&i| if positive { grid[i] > 0.0 } else { grid[i] < 0.0 })
            .collect();
        idx.sort_by(|&a, &b| grid[a].abs().total_cmp(&grid[b].abs()).then(a.cmp(&b)));
        let (mut pos, mut val) = (0.0, 0.0);
        for i in idx {
            let x = grid[i].abs();
            val += (x - pos).sqrt() * standard_normal(rng);
            pos = x;
            out[i] = val;
        }
    }
    Ok(out)
}

/// `ρ(x, y) = E(W̆(x) W̆(y))`: `min(|x|, |y|)` for `xy > 0`, else 0.
pub fn two_sided_kernel(x: f64, y: f64) -> f64 {
    if x * y > 0.0 {
        x.abs().min(y.abs())
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoSidedMode {
    /// `∬ f(x) g(y) ρ(x, y) dx dy`
    Direct,
    /// `∫ F(x) G(x) dx`
    Antiderivative,
    /// `∫ (f̂ - f̂(0)) conj(ĝ - ĝ(0)) / ξ² dξ`
    Fourier,
}

const PANEL_NODES: usize = 64;
const MIN_PANELS: usize = 32;

/// Function values on a composite rule over `[0, R]`, for `x ↦ f(sign·x)`,
/// with cumulative integrals at every node.
struct HalfLine {
    nodes: Vec<(f64, f64)>,
    values: Vec<f64>,
    /// `∫_x^R f(sign·y) dy`
    tail: Vec<f64>,
    /// `∫_0^x y f(sign·y) dy`
    moment: Vec<f64>,
}

fn half_line_grid(radius: f64, panels: usize) -> (Vec<(f64, f64)>, GaussLegendre) {
    let rule = GaussLegendre::new(PANEL_NODES);
    (composite_points(&rule, 0.0, radius, panels), rule)
}

impl HalfLine {
    fn new(f: &TestFunction, sign: f64, radius: f64, panels: usize, cumulative: bool) -> Result<Self> {
        let (nodes, rule) = half_line_grid(radius, panels);
        let values: Vec<f64> = nodes.iter().map(|&(x, _)| f.value(&[sign * x])).collect::<Result<_>>()?;
        if !cumulative {
            return Ok(Self { nodes, values, tail: Vec::new(), moment: Vec::new() });
        }
        let width = radius / panels as f64;
        let panel_int: Vec<f64> = (0..panels)
            .map(|p| {
                let r = p * PANEL_NODES..(p + 1) * PANEL_NODES;
                nodes[r.clone()].iter().zip(&values[r]).map(|(n, v)| n.1 * v).sum()
            })
            .collect();
        let panel_mom: Vec<f64> = (0..panels)
            .map(|p| {
                let r = p * PANEL_NODES..(p + 1) * PANEL_NODES;
                nodes[r.clone()].iter().zip(&values[r]).map(|(n, v)| n.1 * n.0 * v).sum()
            })
            .collect();
        let mut after = vec![0.0; panels];
        for p in (0..panels.saturating_sub(1)).rev() {
            after[p] = after[p + 1] + panel_int[p + 1];
        }
        let mut before = vec![0.0; panels];
        for p in 1..panels {
            before[p] = before[p - 1] + panel_mom[p - 1];
        }
        let cum = rule.cumulative_matrix();
        let half = 0.5 * width;
        let mut tail = Vec::with_capacity(nodes.len());
        let mut moment = Vec::with_capacity(nodes.len());
        for p in 0..panels {
            let r = p * PANEL_NODES..(p + 1) * PANEL_NODES;
            let (pn, pv) = (&nodes[r.clone()], &values[r]);
            for row in cum.chunks_exact(PANEL_NODES) {
                // ∫ from the panel start to this node
                let part: f64 = half * row.iter().zip(pv).map(|(s, v)| s * v).sum::<f64>();
                let part_mom: f64 = half * row.iter().zip(pv).zip(pn).map(|((s, v), n)| s * v * n.0).sum::<f64>();
                tail.push(after[p] + panel_int[p] - part);
                moment.push(before[p] + part_mom);
            }
        }
        Ok(Self { nodes, values, tail, moment })
    }
}

fn two_sided_extent(f: &TestFunction, g: &TestFunction) -> Result<(f64, usize)> {
    if f.dim() != 1 || g.dim() != 1 {
        return Err(Error::UnsupportedDimension(f.dim().max(g.dim())));
    }
    let radius = f.physical_radius().max(g.physical_radius());
    let freq = f.spectral_window().1.max(g.spectral_window().1);
    let panels = ((radius * freq / (8.0 * std::f64::consts::PI)).ceil() as usize).max(MIN_PANELS);
    Ok((radius, panels))
}

/// Fails when `∫|x f(x)| dx` visibly has not converged inside the truncation
/// radius: the outer shell `[0.8R, R]` must carry a negligible share.
pub fn check_integrability(f: &TestFunction) -> Result<()> {
    let (radius, panels) = two_sided_extent(f, f)?;
    for sign in [1.0, -1.0] {
        let h = HalfLine::new(f, sign, radius, panels, false)?;
        let (mut total, mut outer) = (0.0, 0.0);
        for (&(x, w), v) in h.nodes.iter().zip(&h.values) {
            let c = w * (x * v).abs();
            total += c;
            if x > 0.8 * radius {
                outer += c;
            }
        }
        if !total.is_finite() || outer > 1e-7 * total {
            return Err(Error::IntegrabilityViolated(format!(
                "∫|x f| over |x| ∈ [{}, {radius}] is {outer:e} of {total:e}",
                0.8 * radius
            )));
        }
    }
    Ok(())
}

/// `E(W̆[f] W̆[g])` for the two-sided Brownian motion, where
/// `W̆[f] = ∫ f(x) W̆(x) dx`, computed in the requested way.
///
/// Direct and antiderivative modes truncate to `|x| ≤ R` and use composite
/// 64-point Gauss–Legendre panels (at least 2048 nodes per half-line).
pub fn covariance_two_sided(f: &TestFunction, g: &TestFunction, mode: TwoSidedMode) -> Result<f64> {
    let (radius, panels) = two_sided_extent(f, g)?;
    check_integrability(f)?;
    check_integrability(g)?;
    match mode {
        TwoSidedMode::Fourier => inverse_square_1d(f, g, true),
        TwoSidedMode::Direct => {
            let mut total = 0.0;
            for sign in [1.0, -1.0] {
                let hf = HalfLine::new(f, sign, radius, panels, false)?;
                let hg = HalfLine::new(g, sign, radius, panels, true)?;
                // ∫₀^R f(x) [∫₀^x y g(y) dy + x ∫_x^R g(y) dy] dx
                total += hf
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(j, &(x, w))| w * hf.values[j] * (hg.moment[j] + x * hg.tail[j]))
                    .sum::<f64>();
            }
            Ok(total)
        }
        TwoSidedMode::Antiderivative => {
            let mut total = 0.0;
            for sign in [1.0, -1.0] {
                let hf = HalfLine::new(f, sign, radius, panels, true)?;
                let hg = HalfLine::new(g, sign, radius, panels, true)?;
                total += hf
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(j, &(_, w))| w * hf.tail[j] * hg.tail[j])
                    .sum::<f64>();
            }
            Ok(total)
        }
    }
}

/// `F(x) = -∫_x^∞ f` for `x ≥ 0` and `∫_{-∞}^x f` for `x < 0`, so that
/// `W̆[f] = ∫ F dW̆` and `F̂(ξ) = (f̂(ξ) - f̂(0))/(iξ)`.
pub fn antiderivative(f: &TestFunction, x: f64) -> Result<f64> {
    if f.dim() != 1 {
        return Err(Error::UnsupportedDimension(f.dim()));
    }
    let radius = f.physical_radius();
    let value = |y: f64| f.value(&[y]).unwrap_or(f64::NAN);
    if x >= 0.0 {
        if x >= radius {
            return Ok(0.0);
        }
        Ok(-adaptive(value, x, radius, 1e-300, 1e-13)?.value)
    } else {
        if x <= -radius {
            return Ok(0.0);
        }
        Ok(adaptive(value, -radius, x, 1e-300, 1e-13)?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;
    use crate::fourier_cov::{gff_covariance, make_s0_function};

    #[test]
    fn gff_coefficients() {
        let basis = Arc::new(build_interval_basis(BoundaryCondition::Dirichlet, 0.0, 1.0, 8).unwrap());
        let mut rng = RngStream::new(3, 0).rng();
        let s = sample_gff(&basis, 1.0, &mut rng).unwrap();
        let mut rng2 = RngStream::new(3, 0).rng();
        let z: Vec<f64> = (0..8).map(|_| standard_normal(&mut rng2)).collect();
        for (k, (&c, &zk)) in s.coeffs().iter().zip(&z).enumerate() {
            assert_eq!(c, zk * basis.lambdas()[k].powf(-1.0));
        }
        let e3 = CoefficientField::unit(basis.clone(), 3).unwrap();
        assert_eq!(pair_field(&s, &e3, 0.0, 0.5).unwrap(), s.coeffs()[2]);
        let n = Arc::new(build_interval_basis(BoundaryCondition::Neumann, 0.0, 1.0, 8).unwrap());
        assert_eq!(sample_gff(&n, 1.0, &mut rng), Err(Error::ZeroEigenvalue));
    }

    #[test]
    fn pointwise_variance_grows_with_truncation() {
        let full = build_interval_basis(BoundaryCondition::Dirichlet, 0.0, 1.0, 300).unwrap();
        let mut prev = 0.0;
        for k in [1, 2, 5, 20, 100, 300] {
            let v = pointwise_variance(&full.truncated(k).unwrap(), 1.0, &[0.37]).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert!((prev - 0.37 * 0.63).abs() < 1e-3);
    }

    #[test]
    fn cylindrical_paths() {
        let basis = build_interval_basis(BoundaryCondition::Dirichlet, 0.0, 1.0, 3).unwrap();
        let mut rng = RngStream::new(1, 1).rng();
        assert_eq!(
            sample_cylindrical_bm(&basis, &[0.5, 0.5], &mut rng),
            Err(Error::NonIncreasingTimes)
        );
        let p = sample_cylindrical_bm(&basis, &[0.0, 0.25, 1.0], &mut rng).unwrap();
        assert_eq!(p.modes(), 3);
        assert_eq!(p.path(2).unwrap()[0], 0.0);
        // quadratic variation of one path
        let one = build_interval_basis(BoundaryCondition::Dirichlet, 0.0, 1.0, 1).unwrap();
        let times: Vec<f64> = (1..=10_000).map(|i| i as f64 / 10_000.0).collect();
        let p = sample_cylindrical_bm(&one, &times, &mut rng).unwrap();
        let qv: f64 = p.increments()[0].iter().map(|d| d * d).sum();
        assert!((qv - 1.0).abs() < 0.05, "{qv}");
    }

    #[test]
    fn bridge_boundary_is_zero() {
        let mut rng = RngStream::new(5, 2).rng();
        let v = sample_brownian_bridge(&[0.0, 0.5, 1.0], 500, &mut rng).unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(v[2], 0.0);
        assert!(matches!(sample_brownian_bridge(&[1.2], 10, &mut rng), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn two_sided_structure() {
        let mut rng = RngStream::new(9, 0).rng();
        let v = sample_two_sided_bm(&[0.0, 1.0, -2.0, 0.5], &mut rng).unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(two_sided_kernel(1.0, -2.0), 0.0);
        assert_eq!(two_sided_kernel(1.0, 2.0), 1.0);
        assert_eq!(two_sided_kernel(-1.5, -0.5), 0.5);
    }

    #[test]
    fn two_sided_modes_agree() {
        let f = TestFunction::gaussian(vec![0.0], 1.0).unwrap();
        let g = TestFunction::gaussian(vec![0.8], 0.6).unwrap();
        let d = covariance_two_sided(&f, &g, TwoSidedMode::Direct).unwrap();
        let a = covariance_two_sided(&f, &g, TwoSidedMode::Antiderivative).unwrap();
        let s = covariance_two_sided(&f, &g, TwoSidedMode::Fourier).unwrap();
        assert!((d - a).abs() < 1e-9 && (d - s).abs() < 1e-9, "{d} {a} {s}");
    }

    #[test]
    fn s0_pairs_and_the_free_field() {
        let f = make_s0_function(4.0, 0.25, 1).unwrap();
        let g = make_s0_function(5.0, 0.4, 1).unwrap();
        check_integrability(&f).unwrap();
        let two = covariance_two_sided(&f, &g, TwoSidedMode::Fourier).unwrap();
        assert_eq!(two, gff_covariance(&f, &g, 1.0).unwrap());
        let d = covariance_two_sided(&f, &g, TwoSidedMode::Direct).unwrap();
        assert!((d - two).abs() < 1e-6 * two.abs().max(1e-3), "{d} vs {two}");
        // f̂(0) ≠ 0: the subtraction changes the value
        let h = TestFunction::gaussian(vec![0.0], 1.0).unwrap();
        let with = covariance_two_sided(&h, &f, TwoSidedMode::Fourier).unwrap();
        let without = gff_covariance(&h, &f, 1.0).unwrap();
        assert!((with - without).abs() > 1e-3, "{with} vs {without}");
    }

    #[test]
    fn odd_function_has_even_antiderivative() {
        let f = TestFunction::hermite(vec![1]).unwrap();
        for x in [0.3, 1.1, 2.5] {
            assert_relative_eq!(antiderivative(&f, x).unwrap(), antiderivative(&f, -x).unwrap(), max_relative = 1e-10);
        }
        let v = covariance_two_sided(&f, &f, TwoSidedMode::Antiderivative).unwrap();
        assert!(v > 0.0);
    }

    #[test]
    fn kinked_profile_fails_integrability() {
        // f̂ = max(0, 1 - |ξ|) has f(x) ~ x⁻², so ∫|x f| diverges
        let f = TestFunction::custom(1, vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 0.0]).unwrap();
        let g = TestFunction::gaussian(vec![0.0], 1.0).unwrap();
        assert!(matches!(
            covariance_two_sided(&f, &g, TwoSidedMode::Fourier),
            Err(Error::IntegrabilityViolated(_))
        ));
    }
}
