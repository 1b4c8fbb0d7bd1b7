//! Ordered eigen-systems `Λ h_k = λ_k h_k` with point-evaluable eigenfunctions.
//!
//! For the Laplacian on an interval or box, `λ_k² ` is the eigenvalue of `-Δ`;
//! for the Hermite operator it is the eigenvalue of `-Δ + |x|²`. Modes are
//! indexed from 1 in the public API, matching the usual `k ≥ 1` convention.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::special::{gamma, hermite_functions};

/// Refuse Hermite bases beyond this many modes.
pub const MAX_HERMITE_MODES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// `h(a) = h(b) = 0`
    Dirichlet,
    /// `h'(a) = h'(b) = 0`; includes the constant mode with `λ = 0`.
    Neumann,
    /// `h(a) = 0`, `h'(b) = 0`
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    IntervalDirichlet,
    IntervalNeumann,
    IntervalMixed,
    BoxDirichlet(usize),
    Hermite(usize),
}

impl BasisKind {
    pub fn dim(&self) -> usize {
        match *self {
            BasisKind::IntervalDirichlet | BasisKind::IntervalNeumann | BasisKind::IntervalMixed => 1,
            BasisKind::BoxDirichlet(d) | BasisKind::Hermite(d) => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    kind: BasisKind,
    /// Per-axis `(a, b)`; empty for Hermite.
    domain: Vec<(f64, f64)>,
    lambdas: Vec<f64>,
    /// Flattened multi-indices, `dim` entries per mode.
    indices: Vec<u32>,
    alpha: f64,
    c_weyl: f64,
}

impl EigenBasis {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `λ_1 ≤ λ_2 ≤ …` (0-based slice).
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `λ_k`, 1-based.
    pub fn lambda(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.lambdas[k - 1])
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// Weyl exponent: `λ_k ~ c_weyl · k^alpha`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_weyl(&self) -> f64 {
        self.c_weyl
    }

    /// Multi-index of mode `k` (1-based). Interval modes report their
    /// frequency number; the Neumann constant mode is `[0]`.
    pub fn multi_index(&self, k: usize) -> Result<&[u32]> {
        self.check_index(k)?;
        let d = self.dim();
        Ok(&self.indices[(k - 1) * d..k * d])
    }

    /// Fails with [`Error::ZeroEigenvalue`] when `λ_1 = 0`.
    pub fn require_positive(&self) -> Result<()> {
        match self.lambdas.first() {
            Some(&l) if l > 0.0 => Ok(()),
            _ => Err(Error::ZeroEigenvalue),
        }
    }

    /// A copy restricted to the first `k` modes.
    pub fn truncated(&self, k: usize) -> Result<EigenBasis> {
        if k == 0 {
            return Err(Error::EmptyBasis);
        }
        self.check_index(k)?;
        let d = self.dim();
        Ok(EigenBasis {
            kind: self.kind,
            domain: self.domain.clone(),
            lambdas: self.lambdas[..k].to_vec(),
            indices: self.indices[..k * d].to_vec(),
            alpha: self.alpha,
            c_weyl: self.c_weyl,
        })
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.len() {
            Err(Error::IndexOutOfRange { index: k, count: self.len() })
        } else {
            Ok(())
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        for (xi, &(a, b)) in x.iter().zip(&self.domain) {
            let slack = 1e-12 * (b - a);
            if !(*xi >= a - slack && *xi <= b + slack) {
                return Err(Error::OutsideDomain(x.to_vec()));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    /// `h_k(x)`, 1-based `k`.
    pub fn evaluate(&self, k: usize, x: &[f64]) -> Result<f64> {
        self.check_index(k)?;
        self.check_point(x)?;
        let d = self.dim();
        let idx = &self.indices[(k - 1) * d..k * d];
        Ok(match self.kind {
            BasisKind::Hermite(_) => idx
                .iter()
                .zip(x)
                .map(|(&n, &xi)| hermite_functions(n as usize, xi)[n as usize])
                .product(),
            _ => idx
                .iter()
                .zip(x)
                .zip(&self.domain)
                .map(|((&n, &xi), &(a, b))| interval_mode(self.kind, n, a, b, xi))
                .product(),
        })
    }

    /// All `h_1(x), …, h_K(x)` at once.
    pub fn evaluate_all(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let d = self.dim();
        let max_n = self.indices.iter().copied().max().unwrap_or(0) as usize;
        // per-axis tables of the 1-D factors, indexed by mode number
        let tables: Vec<Vec<f64>> = (0..d)
            .map(|j| match self.kind {
                BasisKind::Hermite(_) => hermite_functions(max_n, x[j]),
                _ => {
                    let (a, b) = self.domain[j];
                    (0..=max_n as u32)
                        .map(|n| interval_mode(self.kind, n, a, b, x[j]))
                        .collect()
                }
            })
            .collect();
        Ok(self
            .indices
            .chunks_exact(d)
            .map(|idx| idx.iter().enumerate().map(|(j, &n)| tables[j][n as usize]).product())
            .collect())
    }

    /// Compact textual descriptor, e.g. `dirichlet:0:1:64`, `box:2:1:100`,
    /// `hermite:1:64`; parsed back by [`FromStr`].
    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

/// One-dimensional factor of an interval/box eigenfunction.
fn interval_mode(kind: BasisKind, n: u32, a: f64, b: f64, x: f64) -> f64 {
    let len = b - a;
    let s = x - a;
    let nf = n as f64;
    match kind {
        // sin(kπ) is not exactly zero in floating point
        BasisKind::IntervalDirichlet | BasisKind::BoxDirichlet(_) if s <= 0.0 || s >= len => 0.0,
        BasisKind::IntervalMixed if s <= 0.0 => 0.0,
        BasisKind::IntervalDirichlet | BasisKind::BoxDirichlet(_) => {
            (2.0 / len).sqrt() * (nf * PI * s / len).sin()
        }
        BasisKind::IntervalNeumann => {
            if n == 0 {
                1.0 / len.sqrt()
            } else {
                (2.0 / len).sqrt() * (nf * PI * s / len).cos()
            }
        }
        BasisKind::IntervalMixed => (2.0 / len).sqrt() * ((nf - 0.5) * PI * s / len).sin(),
        BasisKind::Hermite(_) => unreachable!("Hermite modes are not interval modes"),
    }
}

/// Closed-form sine/cosine eigen-system of `-d²/dx²` on `(a, b)`.
pub fn build_interval_basis(bc: BoundaryCondition, a: f64, b: f64, count: usize) -> Result<EigenBasis> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b });
    }
    if count == 0 {
        return Err(Error::EmptyBasis);
    }
    let len = b - a;
    let (kind, indices, lambdas): (BasisKind, Vec<u32>, Vec<f64>) = match bc {
        BoundaryCondition::Dirichlet => (
            BasisKind::IntervalDirichlet,
            (1..=count as u32).collect(),
            (1..=count).map(|k| k as f64 * PI / len).collect(),
        ),
        BoundaryCondition::Neumann => (
            BasisKind::IntervalNeumann,
            (0..count as u32).collect(),
            (0..count).map(|k| k as f64 * PI / len).collect(),
        ),
        BoundaryCondition::Mixed => (
            BasisKind::IntervalMixed,
            (1..=count as u32).collect(),
            (1..=count).map(|k| (k as f64 - 0.5) * PI / len).collect(),
        ),
    };
    Ok(EigenBasis {
        kind,
        domain: vec![(a, b)],
        lambdas,
        indices,
        alpha: 1.0,
        c_weyl: PI / len,
    })
}

/// Volume of the unit ball in R^d.
fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// All multi-indices in `[lo, ∞)^d` whose `weight` is at most `bound`.
fn enumerate_indices(d: usize, lo: u32, bound: u64, weight: &dyn Fn(u32) -> u64) -> Vec<(u64, Vec<u32>)> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(d);
    fn rec(
        d: usize,
        lo: u32,
        bound: u64,
        acc: u64,
        weight: &dyn Fn(u32) -> u64,
        current: &mut Vec<u32>,
        out: &mut Vec<(u64, Vec<u32>)>,
    ) {
        if current.len() == d {
            out.push((acc, current.clone()));
            return;
        }
        let mut n = lo;
        loop {
            let w = acc + weight(n);
            if w > bound {
                break;
            }
            current.push(n);
            rec(d, lo, bound, w, weight, current, out);
            current.pop();
            n += 1;
        }
    }
    rec(d, lo, bound, 0, weight, &mut current, &mut out);
    out
}

/// The `count` smallest multi-indices by `weight`, ties broken
/// lexicographically.
fn smallest_indices(d: usize, lo: u32, count: usize, weight: &dyn Fn(u32) -> u64) -> Vec<(u64, Vec<u32>)> {
    let base = d as u64 * weight(lo);
    let mut bound = base + 4;
    loop {
        let mut all = enumerate_indices(d, lo, bound, weight);
        if all.len() >= count {
            all.sort();
            all.truncate(count);
            return all;
        }
        bound = base + (bound - base) * 2;
    }
}

/// Tensor-product Dirichlet eigen-system on the cube `(0, side)^d`.
pub fn build_box_basis(d: usize, side: f64, count: usize) -> Result<EigenBasis> {
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::InvalidInterval { a: 0.0, b: side });
    }
    if count == 0 {
        return Err(Error::EmptyBasis);
    }
    let modes = smallest_indices(d, 1, count, &|n| (n as u64) * (n as u64));
    let lambdas = modes.iter().map(|(s, _)| PI * (*s as f64).sqrt() / side).collect();
    let indices = modes.into_iter().flat_map(|(_, idx)| idx).collect();
    Ok(EigenBasis {
        kind: BasisKind::BoxDirichlet(d),
        domain: vec![(0.0, side); d],
        lambdas,
        indices,
        alpha: 1.0 / d as f64,
        c_weyl: 2.0 * PI / (side * unit_ball_volume(d).powf(1.0 / d as f64)),
    })
}

/// Hermite-function eigen-system of `-Δ + |x|²` on R^d, `λ² = 2|n| + d`.
pub fn build_hermite_basis(d: usize, count: usize) -> Result<EigenBasis> {
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if count == 0 {
        return Err(Error::EmptyBasis);
    }
    if count > MAX_HERMITE_MODES {
        return Err(Error::TooManyModes(count));
    }
    let modes = if d == 1 {
        (0..count as u32).map(|n| (n as u64, vec![n])).collect()
    } else {
        smallest_indices(d, 0, count, &|n| n as u64)
    };
    let lambdas = modes
        .iter()
        .map(|(s, _)| (2.0 * *s as f64 + d as f64).sqrt())
        .collect();
    let indices = modes.into_iter().flat_map(|(_, idx)| idx).collect();
    let df = d as f64;
    // #{n : |n| ≤ m} ~ m^d / d!, hence λ_k² ~ (2^d d!)^{1/d} k^{1/d}.
    let c_sq = (2f64.powi(d as i32) * gamma(df + 1.0)).powf(1.0 / df);
    Ok(EigenBasis {
        kind: BasisKind::Hermite(d),
        domain: Vec::new(),
        lambdas,
        indices,
        alpha: 1.0 / (2.0 * df),
        c_weyl: c_sq.sqrt(),
    })
}

impl fmt::Display for EigenBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.len();
        match self.kind {
            BasisKind::IntervalDirichlet | BasisKind::IntervalNeumann | BasisKind::IntervalMixed => {
                let name = match self.kind {
                    BasisKind::IntervalDirichlet => "dirichlet",
                    BasisKind::IntervalNeumann => "neumann",
                    _ => "mixed",
                };
                let (a, b) = self.domain[0];
                write!(f, "{name}:{a:e}:{b:e}:{k}")
            }
            BasisKind::BoxDirichlet(d) => write!(f, "box:{d}:{:e}:{k}", self.domain[0].1),
            BasisKind::Hermite(d) => write!(f, "hermite:{d}:{k}"),
        }
    }
}

impl FromStr for EigenBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::Parse(format!("basis descriptor '{s}' too short")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("basis descriptor '{s}': {e}")))
        };
        let int = |i: usize| -> Result<usize> {
            parts
                .get(i)
                .ok_or_else(|| Error::Parse(format!("basis descriptor '{s}' too short")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("basis descriptor '{s}': {e}")))
        };
        match parts[0] {
            "dirichlet" => build_interval_basis(BoundaryCondition::Dirichlet, num(1)?, num(2)?, int(3)?),
            "neumann" => build_interval_basis(BoundaryCondition::Neumann, num(1)?, num(2)?, int(3)?),
            "mixed" => build_interval_basis(BoundaryCondition::Mixed, num(1)?, num(2)?, int(3)?),
            "box" => build_box_basis(int(1)?, num(2)?, int(3)?),
            "hermite" => build_hermite_basis(int(1)?, int(2)?),
            other => Err(Error::Parse(format!("unknown basis kind '{other}'"))),
        }
    }
}
