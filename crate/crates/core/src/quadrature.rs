//! Gauss–Legendre and Gauss–Hermite rules plus adaptive Gauss–Kronrod.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::special::hermite_function_pair;

/// n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Row-major `n × n` matrix `S` with `Σ_i S[j][i] f(x_i) = ∫_{-1}^{x_j} f`
    /// whenever `f` is a polynomial of degree below `n`; multiply by
    /// `(b - a)/2` on a mapped panel.
    pub fn cumulative_matrix(&self) -> Vec<f64> {
        let n = self.len();
        // Legendre values P_0..P_n at every node
        let legendre = |x: f64| {
            let mut p = vec![1.0, x];
            for k in 1..n {
                p.push(((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64);
            }
            p
        };
        let table: Vec<Vec<f64>> = self.nodes.iter().map(|&x| legendre(x)).collect();
        let mut s = vec![0.0; n * n];
        for j in 0..n {
            // ∫_{-1}^{x_j} P_m = (P_{m+1} - P_{m-1})(x_j)/(2m+1), and x_j + 1 for m = 0
            let pj = &table[j];
            for i in 0..n {
                let pi = &table[i];
                let mut acc = 0.5 * (self.nodes[j] + 1.0);
                for m in 1..n {
                    acc += 0.5 * pi[m] * (pj[m + 1] - pj[m - 1]);
                }
                s[j * n + i] = self.weights[i] * acc;
            }
        }
        s
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule: `panels` equal sub-intervals of [a, b].
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        composite_points(self, a, b, panels)
            .into_iter()
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

/// Node/weight list of a composite Gauss–Legendre rule.
pub fn composite_points(rule: &GaussLegendre, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let lo = a + h * p as f64;
        let hi = if p + 1 == panels { b } else { lo + h };
        out.extend(rule.mapped(lo, hi));
    }
    out
}

/// n-point Gauss–Hermite rule for the weight `e^{-x²}` on R.
///
/// Besides the classical weights the rule stores "function weights"
/// `W_i = w_i e^{x_i²} = 1/(n h_{n-1}(x_i)²)` so that `Σ W_i g(x_i)`
/// approximates `∫ g(x) dx` directly when `g` already carries its Gaussian
/// decay (products of Hermite functions). These never overflow.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    function_weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Hermite rule needs at least one node");
        // Golub–Welsch for starting values, then Newton on h_n.
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k, k - 1)] = b;
            jacobi[(k - 1, k)] = b;
        }
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(|a, b| a.total_cmp(b));
        let nf = n as f64;
        let mut function_weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..4 {
                let (hn, hm1) = hermite_function_pair(n, *x);
                let deriv = (2.0 * nf).sqrt() * hm1 - *x * hn;
                if deriv == 0.0 {
                    break;
                }
                let step = hn / deriv;
                *x -= step;
                if step.abs() < 1e-15 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, hm1) = hermite_function_pair(n, *x);
            function_weights.push(1.0 / (nf * hm1 * hm1));
        }
        // symmetrize
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (function_weights[i] + function_weights[j]);
            function_weights[i] = w;
            function_weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let weights = nodes
            .iter()
            .zip(&function_weights)
            .map(|(&x, &w)| w * (-x * x).exp())
            .collect();
        Self {
            nodes,
            weights,
            function_weights,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for `∫ e^{-x²} g(x) dx`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights for `∫ g(x) dx`.
    pub fn function_weights(&self) -> &[f64] {
        &self.function_weights
    }

    /// `∫ e^{-x²} g(x) dx`.
    pub fn integrate_weighted<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }

    /// `∫ g(x) dx` for Gaussian-decaying `g`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.function_weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(mid - dx), f(mid + dx));
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs(), resabs * half.abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive G7–K15 on a finite interval.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    refine(f, a, b, 1, |value, _| abs_tol.max(rel_tol * value.abs()))
}

/// Adaptive G7–K15 started from `panels` equal sub-intervals.
///
/// The tolerance is `rel_tol·max(|I|, 10⁻²∫|f|)`, so integrals that nearly
/// cancel, or vanish, still terminate.
pub fn adaptive_panels<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, rel_tol: f64) -> Result<Estimate> {
    refine(f, a, b, panels.max(1), |value, resabs| {
        (rel_tol * value.abs().max(1e-2 * resabs)).max(f64::MIN_POSITIVE)
    })
}

fn refine<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    tolerance: impl Fn(f64, f64) -> f64,
) -> Result<Estimate> {
    const MAX_INTERVALS: usize = 4000;
    let h = (b - a) / panels as f64;
    let mut intervals: Vec<(f64, f64, f64, f64, f64)> = (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { a + h * (i + 1) as f64 };
            let (v, e, r) = gk15(&mut f, lo, hi);
            (lo, hi, v, e, r)
        })
        .collect();
    let limit = MAX_INTERVALS.max(4 * panels);
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        let resabs: f64 = intervals.iter().map(|iv| iv.4).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if error <= tolerance(value, resabs) {
            return Ok(Estimate { value, error });
        }
        if intervals.len() >= limit {
            return Err(Error::Quadrature(format!(
                "adaptive rule on [{a}, {b}]: error {error:e} after {limit} intervals"
            )));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _, _) = intervals.swap_remove(idx);
        let m = 0.5 * (lo + hi);
        if !(m > lo && m < hi) {
            return Err(Error::Quadrature(format!("interval [{lo}, {hi}] cannot be bisected")));
        }
        let (v1, e1, r1) = gk15(&mut f, lo, m);
        let (v2, e2, r2) = gk15(&mut f, m, hi);
        intervals.push((lo, m, v1, e1, r1));
        intervals.push((m, hi, v2, e2, r2));
    }
}

/// `∫_a^∞ f` by the substitution `x = a + s/(1-s)` followed by [`adaptive`].
pub fn adaptive_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    adaptive(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let om = 1.0 - s;
            let x = a + s / om;
            let v = f(x) / (om * om);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}
