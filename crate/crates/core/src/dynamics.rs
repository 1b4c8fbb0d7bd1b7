//! Exact per-mode Ornstein–Uhlenbeck evolution of the spectral stochastic
//! heat equation `du = νΔu dt + σ dW` (or its Hermite analogue), with an
//! Euler–Maruyama scheme kept only as an independent oracle.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::basis::EigenBasis;
use crate::error::{ensure_positive, Error, Result};
use crate::fields::sample_gff;
use crate::hilbert_scale::CoefficientField;
use crate::rng::{fill_standard_normal, RngStream};
use crate::stats::{report_from_samples, Centering, CovarianceReport, ReportMeta};

/// Largest `νλ_K² dt` accepted by [`em_oracle_step`].
pub const EM_STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    basis: Arc<EigenBasis>,
    t: f64,
    coeffs: Vec<f64>,
    nu: f64,
    sigma: f64,
}

impl SpectralState {
    pub fn new(basis: Arc<EigenBasis>, coeffs: Vec<f64>, nu: f64, sigma: f64, t: f64) -> Result<Self> {
        ensure_positive("nu", nu)?;
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::NonPositive { name: "sigma", value: sigma });
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::NonPositive { name: "t", value: t });
        }
        if coeffs.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: coeffs.len() });
        }
        Ok(Self { basis, t, coeffs, nu, sigma })
    }

    pub fn zero(basis: Arc<EigenBasis>, nu: f64, sigma: f64) -> Result<Self> {
        let n = basis.len();
        Self::new(basis, vec![0.0; n], nu, sigma, 0.0)
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn to_field(&self) -> CoefficientField {
        CoefficientField::new(self.basis.clone(), self.coeffs.clone()).expect("lengths checked at construction")
    }

    /// `u[t, f] = Σ f_k u_k`.
    pub fn pair(&self, f: &CoefficientField) -> Result<f64> {
        if f.len() != self.coeffs.len() {
            return Err(Error::DimensionMismatch { expected: self.coeffs.len(), got: f.len() });
        }
        Ok(f.coeffs().iter().zip(&self.coeffs).map(|(a, b)| a * b).sum())
    }
}

/// Mean factor `e^{-νλ²dt}` and noise variance `σ²(1 - e^{-2νλ²dt})/(2νλ²)`
/// of one exact transition.
pub fn step_moments(lambda: f64, nu: f64, sigma: f64, dt: f64) -> (f64, f64) {
    let a = nu * lambda * lambda;
    let decay = (-a * dt).exp();
    let var = -sigma * sigma * (-2.0 * a * dt).exp_m1() / (2.0 * a);
    (decay, var)
}

/// Stationary variance `σ²/(2νλ²)`.
pub fn stationary_variance(lambda: f64, nu: f64, sigma: f64) -> f64 {
    sigma * sigma / (2.0 * nu * lambda * lambda)
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositive { name: "dt", value: dt });
    }
    Ok(())
}

/// Exact OU transition over `dt`, independent across modes.
pub fn exact_step<R: Rng + ?Sized>(state: &SpectralState, dt: f64, rng: &mut R) -> Result<SpectralState> {
    check_dt(dt)?;
    state.basis.require_positive()?;
    let mut z = vec![0.0; state.coeffs.len()];
    fill_standard_normal(rng, &mut z);
    let coeffs = state
        .coeffs
        .iter()
        .zip(state.basis.lambdas())
        .zip(&z)
        .map(|((u, &l), z)| {
            let (decay, var) = step_moments(l, state.nu, state.sigma, dt);
            u * decay + var.sqrt() * z
        })
        .collect();
    Ok(SpectralState { coeffs, t: state.t + dt, ..state.clone() })
}

/// Euler–Maruyama step `u ← u - νλ²u dt + σ√dt ξ`. Test oracle only.
pub fn em_oracle_step<R: Rng + ?Sized>(state: &SpectralState, dt: f64, rng: &mut R) -> Result<SpectralState> {
    check_dt(dt)?;
    let lmax = state.basis.lambdas().iter().copied().fold(0.0, f64::max);
    let stiff = state.nu * lmax * lmax * dt;
    if stiff > EM_STABILITY_LIMIT {
        return Err(Error::UnstableStep(stiff));
    }
    let mut z = vec![0.0; state.coeffs.len()];
    fill_standard_normal(rng, &mut z);
    let sdt = state.sigma * dt.sqrt();
    let coeffs = state
        .coeffs
        .iter()
        .zip(state.basis.lambdas())
        .zip(&z)
        .map(|((u, l), z)| u - state.nu * l * l * u * dt + sdt * z)
        .collect();
    Ok(SpectralState { coeffs, t: state.t + dt, ..state.clone() })
}

/// States at each time of `t_grid` (strictly increasing, not before the
/// start time). A grid point equal to the start time returns the start state.
pub fn evolve<R: Rng + ?Sized>(state0: &SpectralState, t_grid: &[f64], rng: &mut R) -> Result<Vec<SpectralState>> {
    state0.basis.require_positive()?;
    let mut prev = state0.t;
    for (i, &t) in t_grid.iter().enumerate() {
        let ok = if i == 0 { t >= prev } else { t > prev };
        if !ok || !t.is_finite() {
            return Err(Error::NonIncreasingTimes);
        }
        prev = t;
    }
    let mut out = Vec::with_capacity(t_grid.len());
    let mut cur = state0.clone();
    for &t in t_grid {
        if t > cur.t {
            cur = exact_step(&cur, t - cur.t, rng)?;
            cur.t = t;
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Draw from the invariant law `u_k = σ(2ν)^{-1/2} ζ_k/λ_k`.
pub fn stationary_sample<R: Rng + ?Sized>(basis: &Arc<EigenBasis>, nu: f64, sigma: f64, rng: &mut R) -> Result<SpectralState> {
    ensure_positive("nu", nu)?;
    let field = sample_gff(basis, 1.0, rng)?.scaled(sigma / (2.0 * nu).sqrt());
    SpectralState::new(basis.clone(), field.coeffs().to_vec(), nu, sigma, 0.0)
}

fn kakutani_term(lambda: f64, nu: f64, t: f64) -> f64 {
    // ((1-q)^{1/2} - 1)² rewritten to avoid cancellation for small q
    let q = (-2.0 * nu * lambda * lambda * t).exp();
    let r = q / (1.0 + (1.0 - q).sqrt());
    r * r
}

fn kakutani_check(basis: &EigenBasis, nu: f64, t: f64) -> Result<()> {
    ensure_positive("t", t)?;
    ensure_positive("nu", nu)?;
    basis.require_positive()
}

/// `Σ_{k≤K} ((1 - e^{-2νλ_k²t})^{1/2} - 1)²`, comparing the law at time `t`
/// from zero initial data with the stationary law.
pub fn kakutani_statistic(basis: &EigenBasis, nu: f64, t: f64, k: usize) -> Result<f64> {
    kakutani_tail(basis, nu, t, 0, k)
}

/// Terms `k_from < k ≤ k_to` of [`kakutani_statistic`], summed directly.
pub fn kakutani_tail(basis: &EigenBasis, nu: f64, t: f64, k_from: usize, k_to: usize) -> Result<f64> {
    kakutani_check(basis, nu, t)?;
    if k_to > basis.len() {
        return Err(Error::IndexOutOfRange { index: k_to, count: basis.len() });
    }
    if k_from > k_to {
        return Err(Error::Invalid(format!("empty range {k_from}..{k_to}")));
    }
    // smallest terms first
    Ok(basis.lambdas()[k_from..k_to].iter().rev().map(|&l| kakutani_term(l, nu, t)).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    Fixed(Vec<f64>),
    /// `scale · Σ λ_k^{-r} ζ_k h_k`, independent of the noise.
    Gff { r: f64, scale: f64 },
    /// Coefficients from a checkpoint written by [`write_checkpoint`].
    File(PathBuf),
}

/// Initial coefficients, resolved against a basis. Random data draws from
/// the supplied RNG, which callers keep separate from the noise stream.
#[derive(Debug, Clone, PartialEq)]
enum ResolvedInitial {
    Fixed(Vec<f64>),
    Gff { r: f64, scale: f64 },
}

impl InitialCondition {
    fn resolve(&self, basis: &EigenBasis) -> Result<ResolvedInitial> {
        let k = basis.len();
        match self {
            InitialCondition::Zero => Ok(ResolvedInitial::Fixed(vec![0.0; k])),
            InitialCondition::Fixed(c) => {
                if c.len() != k {
                    return Err(Error::DimensionMismatch { expected: k, got: c.len() });
                }
                Ok(ResolvedInitial::Fixed(c.clone()))
            }
            InitialCondition::Gff { r, scale } => Ok(ResolvedInitial::Gff { r: *r, scale: *scale }),
            InitialCondition::File(p) => {
                let (state, _) = read_checkpoint(p)?;
                if state.basis.descriptor() != basis.descriptor() {
                    return Err(Error::BasisMismatch);
                }
                Ok(ResolvedInitial::Fixed(state.coeffs))
            }
        }
    }
}

/// Build the starting state at `t = 0`.
pub fn initial_state<R: Rng + ?Sized>(
    ic: &InitialCondition,
    basis: &Arc<EigenBasis>,
    nu: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<SpectralState> {
    let coeffs = match ic.resolve(basis)? {
        ResolvedInitial::Fixed(c) => c,
        ResolvedInitial::Gff { r, scale } => sample_gff(basis, r, rng)?.scaled(scale).coeffs().to_vec(),
    };
    SpectralState::new(basis.clone(), coeffs, nu, sigma, 0.0)
}

/// Exact `E(u[t,f_i] u[t,f_j])` for the given initial condition.
pub fn exact_second_moments(
    basis: &EigenBasis,
    nu: f64,
    sigma: f64,
    ic: &InitialCondition,
    t: f64,
    functionals: &[CoefficientField],
) -> Result<Vec<Vec<f64>>> {
    basis.require_positive()?;
    let lam = basis.lambdas();
    let resolved = ic.resolve(basis)?;
    // per-mode noise variance plus random initial variance
    let diag: Vec<f64> = lam
        .iter()
        .map(|&l| {
            let (decay, var) = if t > 0.0 { step_moments(l, nu, sigma, t) } else { (1.0, 0.0) };
            let init = match resolved {
                ResolvedInitial::Gff { r, scale } => scale * scale * l.powf(-2.0 * r) * decay * decay,
                ResolvedInitial::Fixed(_) => 0.0,
            };
            var + init
        })
        .collect();
    let means: Vec<f64> = match &resolved {
        ResolvedInitial::Fixed(c) => functionals
            .iter()
            .map(|f| {
                f.coeffs()
                    .iter()
                    .zip(c)
                    .zip(lam)
                    .map(|((fk, ck), &l)| fk * ck * (-nu * l * l * t).exp())
                    .sum()
            })
            .collect(),
        ResolvedInitial::Gff { .. } => vec![0.0; functionals.len()],
    };
    let n = functionals.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let noise: f64 = functionals[i].coeffs().iter().zip(functionals[j].coeffs()).zip(&diag).map(|((a, b), d)| a * b * d).sum();
            out[i][j] = means[i] * means[j] + noise;
        }
    }
    Ok(out)
}

/// `(σ²/(2ν)) Σ f_k g_k/λ_k²` for every pair of functionals.
pub fn stationary_target(basis: &EigenBasis, nu: f64, sigma: f64, functionals: &[CoefficientField]) -> Result<Vec<Vec<f64>>> {
    basis.require_positive()?;
    let w: Vec<f64> = basis.lambdas().iter().map(|&l| stationary_variance(l, nu, sigma)).collect();
    let n = functionals.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = functionals[i].coeffs().iter().zip(functionals[j].coeffs()).zip(&w).map(|((a, b), w)| a * b * w).sum();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint {
    pub t: f64,
    /// Monte Carlo second moments against the stationary target.
    pub report: CovarianceReport,
    /// Exact second moments at time `t`.
    pub exact: Vec<Vec<f64>>,
    /// `max |z|` of the Monte Carlo moments against `exact`.
    pub exact_zmax: f64,
}

impl ConvergencePoint {
    /// `max |exact - stationary|`, the deterministic transient.
    pub fn transient(&self) -> f64 {
        self.exact
            .iter()
            .flatten()
            .zip(self.report.target.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Monte Carlo second moments of `u[t, f_i]` over `t_list` from `samples`
/// independent paths. Path `m` draws its noise from `stream.substream(m)`
/// and random initial data from `stream.fork(1).substream(m)`; paths run on
/// the current rayon pool and results do not depend on the worker count.
#[allow(clippy::too_many_arguments)]
pub fn convergence_curve(
    basis: &Arc<EigenBasis>,
    nu: f64,
    sigma: f64,
    phi: &InitialCondition,
    t_list: &[f64],
    samples: usize,
    functionals: &[CoefficientField],
    labels: Vec<String>,
    stream: &RngStream,
    threshold: f64,
) -> Result<Vec<ConvergencePoint>> {
    if samples < crate::stats::MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: samples, min: crate::stats::MIN_SAMPLES });
    }
    if labels.len() != functionals.len() {
        return Err(Error::DimensionMismatch { expected: functionals.len(), got: labels.len() });
    }
    if let Some(f) = functionals.iter().find(|f| f.len() != basis.len()) {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: f.len() });
    }
    basis.require_positive()?;
    let resolved = InitialCondition::Fixed(match phi.resolve(basis)? {
        ResolvedInitial::Fixed(c) => c,
        ResolvedInitial::Gff { .. } => Vec::new(),
    });
    let start = if matches!(phi, InitialCondition::Gff { .. }) { phi } else { &resolved };
    let init_stream = stream.fork(1);
    // paths[m][ti][i]
    let paths: Vec<Vec<Vec<f64>>> = (0..samples as u64)
        .into_par_iter()
        .map(|m| {
            let mut init_rng = init_stream.substream(m);
            let mut rng = stream.substream(m);
            let s0 = initial_state(start, basis, nu, sigma, &mut init_rng)?;
            evolve(&s0, t_list, &mut rng)?
                .iter()
                .map(|s| functionals.iter().map(|f| s.pair(f)).collect::<Result<Vec<f64>>>())
                .collect()
        })
        .collect::<Result<_>>()?;
    let target = stationary_target(basis, nu, sigma, functionals)?;
    let meta = ReportMeta { samples, seed: stream.seed, stream_id: stream.stream_id, threshold };
    t_list
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let rows: Vec<Vec<f64>> = paths.iter().map(|p| p[ti].clone()).collect();
            let report = report_from_samples(&rows, labels.clone(), target.clone(), Centering::None, meta)?;
            let exact = exact_second_moments(basis, nu, sigma, start, t, functionals)?;
            let check = CovarianceReport::new(labels.clone(), report.empirical.clone(), exact.clone(), report.stderr.clone(), meta)?;
            Ok(ConvergencePoint { t, report, exact, exact_zmax: check.zmax })
        })
        .collect()
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Write `k,lambda,u_k` rows to `path` and `nu`, `sigma`, `t`, `seed` and the
/// basis descriptor to `path.meta`.
pub fn write_checkpoint(state: &SpectralState, seed: u64, path: &Path) -> Result<()> {
    let mut csv = String::from("k,lambda,u_k\n");
    for (k, (l, u)) in state.basis.lambdas().iter().zip(&state.coeffs).enumerate() {
        csv.push_str(&format!("{},{l:e},{u:e}\n", k + 1));
    }
    let meta = format!(
        "nu={:e}\nsigma={:e}\nt={:e}\nseed={seed}\nbasis={}\n",
        state.nu,
        state.sigma,
        state.t,
        state.basis.descriptor()
    );
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    fs::write(path, csv).map_err(io)?;
    fs::write(meta_path(path), meta).map_err(io)
}

/// Inverse of [`write_checkpoint`]; also returns the recorded seed.
pub fn read_checkpoint(path: &Path) -> Result<(SpectralState, u64)> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let csv = fs::read_to_string(path).map_err(io)?;
    let meta = fs::read_to_string(meta_path(path)).map_err(io)?;
    let mut fields = std::collections::BTreeMap::new();
    for line in meta.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("bad meta line {line:?}")))?;
        fields.insert(k.trim(), v.trim());
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Parse(format!("missing meta key {k}")));
    let num = |k: &str| get(k)?.parse::<f64>().map_err(|_| Error::Parse(format!("bad value for {k}")));
    let basis: EigenBasis = get("basis")?.parse()?;
    let seed = get("seed")?.parse::<u64>().map_err(|_| Error::Parse("bad seed".into()))?;
    let mut lines = csv.lines();
    if lines.next().map(str::trim) != Some("k,lambda,u_k") {
        return Err(Error::Parse("checkpoint header must be k,lambda,u_k".into()));
    }
    let mut coeffs = Vec::with_capacity(basis.len());
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse(format!("bad checkpoint row {line:?}"));
        if cols.len() != 3 || cols[0].parse::<usize>().map_err(|_| bad())? != i + 1 {
            return Err(bad());
        }
        let lambda: f64 = cols[1].parse().map_err(|_| bad())?;
        if basis.lambdas().get(i) != Some(&lambda) {
            return Err(Error::BasisMismatch);
        }
        coeffs.push(cols[2].parse().map_err(|_| bad())?);
    }
    let state = SpectralState::new(Arc::new(basis), coeffs, num("nu")?, num("sigma")?, num("t")?)?;
    Ok((state, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_hermite_basis, build_interval_basis, BoundaryCondition};
    use crate::rng::standard_normal;
    use crate::stats::ks_gaussian;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dirichlet(k: usize) -> Arc<EigenBasis> {
        Arc::new(build_interval_basis(BoundaryCondition::Dirichlet, 0.0, 1.0, k).unwrap())
    }

    /// One mode with λ = 1 on an interval of length π.
    fn unit_mode() -> Arc<EigenBasis> {
        Arc::new(build_interval_basis(BoundaryCondition::Dirichlet, 0.0, std::f64::consts::PI, 1).unwrap())
    }

    #[test]
    fn step_variance_examples() {
        let (_, v) = step_moments(1.0, 1.0, 1.0, std::f64::consts::LN_2 / 2.0);
        assert_relative_eq!(v, 0.25, max_relative = 1e-15);
        for l in [1.0, 3.0, 40.0] {
            let (_, v) = step_moments(l, 0.7, 1.3, 60.0 / (0.7 * l * l));
            assert_relative_eq!(v, stationary_variance(l, 0.7, 1.3), max_relative = 1e-14);
        }
    }

    #[test]
    fn deterministic_decay_and_grid_errors() {
        let b = dirichlet(4);
        let s0 = SpectralState::new(b.clone(), vec![1.0, 0.0, 0.0, 0.0], 0.5, 0.0, 0.0).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let ts = [0.0, 0.1, 0.4, 1.0];
        let path = evolve(&s0, &ts, &mut rng).unwrap();
        let l1 = b.lambdas()[0];
        for (s, t) in path.iter().zip(ts) {
            assert_relative_eq!(s.coeffs()[0], (-0.5 * l1 * l1 * t).exp(), max_relative = 1e-13);
            assert_eq!(s.t(), t);
        }
        assert_eq!(evolve(&s0, &[0.5, 0.5], &mut rng).unwrap_err(), Error::NonIncreasingTimes);
        assert!(exact_step(&s0, 0.0, &mut rng).is_err());
        let neumann = Arc::new(build_interval_basis(BoundaryCondition::Neumann, 0.0, 1.0, 3).unwrap());
        let s = SpectralState::zero(neumann.clone(), 1.0, 1.0).unwrap();
        assert!(exact_step(&s, 0.1, &mut rng).is_err());
        assert!(stationary_sample(&neumann, 1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn em_rejects_stiff_steps_and_tracks_decay() {
        let b = dirichlet(10);
        let s0 = SpectralState::new(b.clone(), vec![1.0; 10], 1.0, 0.0, 0.0).unwrap();
        let mut rng = RngStream::new(2, 0).rng();
        let lk = b.lambdas()[9];
        assert!(matches!(em_oracle_step(&s0, 0.2 / (lk * lk), &mut rng), Err(Error::UnstableStep(_))));
        let dt = 0.01 / (lk * lk);
        let steps = 2000;
        let mut s = s0.clone();
        for _ in 0..steps {
            s = em_oracle_step(&s, dt, &mut rng).unwrap();
        }
        let t = dt * steps as f64;
        for (u, &l) in s.coeffs().iter().zip(b.lambdas()) {
            let exact = (-l * l * t).exp();
            // first-order error ≈ a²t·dt/2 relative
            let bound = (l * l) * (l * l) * t * dt;
            assert!(((u - exact) / exact).abs() <= bound, "λ={l}");
        }
    }

    #[test]
    fn stationary_marginals_survive_exact_steps() {
        let b = dirichlet(32);
        let stream = RngStream::new(17, 4);
        let (nu, sigma) = (0.8, 1.5);
        let m = 4000;
        let finals: Vec<SpectralState> = (0..m)
            .map(|i| {
                let mut rng = stream.substream(i);
                let mut s = stationary_sample(&b, nu, sigma, &mut rng).unwrap();
                for _ in 0..5 {
                    s = exact_step(&s, 0.01, &mut rng).unwrap();
                }
                s
            })
            .collect();
        for k in [0, 15, 31] {
            let xs: Vec<f64> = finals.iter().map(|s| s.coeffs()[k]).collect();
            let var = stationary_variance(b.lambdas()[k], nu, sigma);
            let (_, p) = ks_gaussian(&xs, 0.0, var).unwrap();
            assert!(p > 1e-3, "mode {k}: p = {p}");
        }
        // cross-mode correlations
        let corr = |a: usize, c: usize| {
            let x: Vec<f64> = finals.iter().map(|s| s.coeffs()[a]).collect();
            let y: Vec<f64> = finals.iter().map(|s| s.coeffs()[c]).collect();
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let sxx: f64 = x.iter().map(|a| a * a).sum();
            let syy: f64 = y.iter().map(|a| a * a).sum();
            sxy / (sxx * syy).sqrt()
        };
        for (a, c) in [(0, 1), (0, 31), (10, 20)] {
            assert!(corr(a, c).abs() < 4.0 / (m as f64).sqrt());
        }
    }

    #[test]
    fn stationary_sample_is_scaled_gff() {
        let b = dirichlet(8);
        let s = stationary_sample(&b, 2.0, 3.0, &mut RngStream::new(3, 3).rng()).unwrap();
        let g = sample_gff(&b, 1.0, &mut RngStream::new(3, 3).rng()).unwrap();
        for (u, c) in s.coeffs().iter().zip(g.coeffs()) {
            assert_relative_eq!(*u, c * 3.0 / 2.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn one_step_equals_two_half_steps_in_distribution() {
        let b = unit_mode();
        let s0 = SpectralState::new(b, vec![2.0], 1.0, 1.0, 0.0).unwrap();
        let stream = RngStream::new(5, 0);
        let m = 40_000;
        let (mut a, mut c) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for i in 0..m as u64 {
            let mut rng = stream.substream(i);
            a.push(exact_step(&s0, 1.0, &mut rng).unwrap().coeffs()[0]);
            let h = exact_step(&s0, 0.5, &mut rng).unwrap();
            c.push(exact_step(&h, 0.5, &mut rng).unwrap().coeffs()[0]);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let mu = mean(v);
            v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (v.len() - 1) as f64
        };
        let (ma, mc, va, vc) = (mean(&a), mean(&c), var(&a), var(&c));
        let se_mean = ((va + vc) / m as f64).sqrt();
        assert!((ma - mc).abs() < 3.0 * se_mean);
        let se_var = (2.0 * (va * va + vc * vc) / m as f64).sqrt();
        assert!((va - vc).abs() < 3.0 * se_var);
    }

    #[test]
    fn kakutani_examples() {
        let b = dirichlet(10_000);
        let s3 = kakutani_statistic(&b, 1.0, 0.1, 1000).unwrap();
        let s4 = kakutani_statistic(&b, 1.0, 0.1, 10_000).unwrap();
        assert!(s3.is_finite() && (s4 - s3).abs() < 1e-12);
        assert!(kakutani_tail(&b, 1.0, 0.1, 1000, 10_000).unwrap() < 1e-12);
        // t → ∞: every ratio tends to one
        assert!(kakutani_statistic(&b, 1.0, 50.0, 10_000).unwrap() < 1e-200);
        assert!(kakutani_statistic(&b, 1.0, 0.0, 10).is_err());
        let h = build_hermite_basis(1, 10_000).unwrap();
        assert!(kakutani_tail(&h, 1.0, 0.1, 1000, 10_000).unwrap() < 1e-6);
        // leading terms against the tail-bound form e^{-2x}/4 for large x
        let x = 2.0 * b.lambdas()[4].powi(2) * 0.1;
        assert_relative_eq!(kakutani_term(b.lambdas()[4], 1.0, 0.1), (-2.0 * x).exp() / 4.0, max_relative = 1e-3);
    }

    #[test]
    fn exact_moments_for_fixed_start() {
        let b = dirichlet(3);
        let f = CoefficientField::unit(b.clone(), 1).unwrap();
        let phi = InitialCondition::Fixed(vec![1.5, 0.0, 0.0]);
        let t = 0.05;
        let m = exact_second_moments(&b, 1.0, 1.0, &phi, t, std::slice::from_ref(&f)).unwrap();
        let l1 = b.lambdas()[0];
        let stat = stationary_target(&b, 1.0, 1.0, std::slice::from_ref(&f)).unwrap();
        let (_, v) = step_moments(l1, 1.0, 1.0, t);
        assert_relative_eq!(m[0][0] - v, (-2.0 * l1 * l1 * t).exp() * 2.25, max_relative = 1e-12);
        assert!(m[0][0] > stat[0][0]);
    }

    #[test]
    fn convergence_curve_end_to_end() {
        let b = dirichlet(16);
        let functionals: Vec<CoefficientField> = (0..3)
            .map(|i| CoefficientField::from_fn(b.clone(), |k, _| ((k + 1 + i) as f64).recip()))
            .collect();
        let labels = vec!["f0".to_string(), "f1".into(), "f2".into()];
        let stream = RngStream::new(9, 1);
        let pts = convergence_curve(
            &b,
            1.0,
            1.0,
            &InitialCondition::Fixed(vec![1.0; 16]),
            &[0.01, 0.1, 0.5, 1.0, 2.0],
            4000,
            &functionals,
            labels.clone(),
            &stream,
            4.0,
        )
        .unwrap();
        assert!(!pts[0].report.passed);
        assert!(pts.last().unwrap().report.passed);
        assert!(pts.iter().all(|p| p.exact_zmax < 4.5));
        let tr: Vec<f64> = pts.iter().map(ConvergencePoint::transient).collect();
        assert!(tr.windows(2).all(|w| w[1] <= w[0]));
        let gff = convergence_curve(&b, 1.0, 1.0, &InitialCondition::Gff { r: 1.0, scale: 1.0 }, &[0.1], 100, &functionals, labels.clone(), &stream, 4.0);
        assert!(gff.is_ok());
        assert!(convergence_curve(&b, 1.0, 1.0, &InitialCondition::Zero, &[1.0], 99, &functionals, labels, &stream, 4.0).is_err());
    }

    #[test]
    fn em_matches_exact_moments() {
        let b = unit_mode();
        let s0 = SpectralState::new(b, vec![1.0], 1.0, 1.0, 0.0).unwrap();
        let stream = RngStream::new(31, 0);
        let m = 2000;
        let dt = 1e-3;
        let vals: Vec<f64> = (0..m as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.substream(i);
                let mut s = s0.clone();
                for _ in 0..1000 {
                    s = em_oracle_step(&s, dt, &mut rng).unwrap();
                }
                s.coeffs()[0]
            })
            .collect();
        let (decay, var) = step_moments(1.0, 1.0, 1.0, 1.0);
        let mean = vals.iter().sum::<f64>() / m as f64;
        assert!((mean - decay).abs() < 4.0 * (var / m as f64).sqrt());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let b = Arc::new(build_hermite_basis(1, 12).unwrap());
        let mut rng = RngStream::new(4, 4).rng();
        let s = stationary_sample(&b, 0.3, 2.0, &mut rng).unwrap();
        let s = exact_step(&s, 0.125, &mut rng).unwrap();
        let p = dir.path().join("state.csv");
        write_checkpoint(&s, 4, &p).unwrap();
        let (back, seed) = read_checkpoint(&p).unwrap();
        assert_eq!(seed, 4);
        assert_eq!(back.coeffs(), s.coeffs());
        assert_eq!((back.nu(), back.sigma(), back.t()), (s.nu(), s.sigma(), s.t()));
        let loaded = initial_state(&InitialCondition::File(p.clone()), &b, 0.3, 2.0, &mut rng).unwrap();
        assert_eq!(loaded.coeffs(), s.coeffs());
        let other = Arc::new(build_hermite_basis(1, 11).unwrap());
        assert!(initial_state(&InitialCondition::File(p), &other, 0.3, 2.0, &mut rng).is_err());
        let _ = standard_normal(&mut rng);
    }

    proptest! {
        #[test]
        fn composed_decay_is_exact(parts in prop::collection::vec(0.01f64..1.0, 1..12), nu in 0.1f64..3.0) {
            let b = dirichlet(5);
            let s0 = SpectralState::new(b.clone(), vec![1.0; 5], nu, 0.0, 0.0).unwrap();
            let mut rng = RngStream::new(0, 0).rng();
            let mut s = s0;
            for dt in &parts {
                s = exact_step(&s, *dt, &mut rng).unwrap();
            }
            let t: f64 = parts.iter().sum();
            for (u, &l) in s.coeffs().iter().zip(b.lambdas()) {
                // rounding of the exponent alone costs |νλ²t|·ε, so stay where that is below 1e-13
                let x = nu * l * l * t;
                if x <= 200.0 {
                    let e = (-x).exp();
                    prop_assert!(((u - e) / e).abs() < 1e-13, "x = {}", x);
                }
            }
        }

        #[test]
        fn kakutani_partial_sums_bounded(t in 0.01f64..2.0) {
            let d = dirichlet(2000);
            let h = build_hermite_basis(1, 2000).unwrap();
            for b in [&*d, &h] {
                let s = kakutani_statistic(b, 1.0, t, 2000).unwrap();
                prop_assert!(s.is_finite() && s >= 0.0);
                prop_assert!(s <= kakutani_statistic(b, 1.0, t, 1000).unwrap() + kakutani_tail(b, 1.0, t, 1000, 2000).unwrap() * (1.0 + 1e-12));
            }
        }
    }
}
