//! Monte Carlo experiments.

use rayon::prelude::*;

use gfflab_core::basis::BasisKind;
use gfflab_core::dynamics::{
    convergence_curve, exact_step, kakutani_statistic, kakutani_tail, stationary_sample, stationary_variance,
    ConvergencePoint,
};
use gfflab_core::fields::{bridge_sampler, half_line_bm_sampler};
use gfflab_core::rng::RngStream;
use gfflab_core::stats::{estimate_covariance, ks_gaussian, summarize_convergence, Centering};

use super::{standard_functionals, Context, RunError};
use crate::config::{BasisConfig, BasisFamily, ConfigError, InitialConfig};
use crate::output::{Check, Outcome, Table};
use crate::row;

fn interval_default() -> BasisConfig {
    BasisConfig::interval(BasisFamily::Dirichlet, 0.0, 1.0)
}

fn hermite_default() -> BasisConfig {
    BasisConfig { family: BasisFamily::Hermite, a: 0.0, b: 1.0, d: 1, side: 1.0 }
}

/// Shared body of the two stationary experiments: evolve from the configured
/// initial condition and compare the final time with the invariant law.
fn stationary(ctx: &Context, default: BasisConfig) -> Result<(Outcome, std::sync::Arc<gfflab_core::EigenBasis>), RunError> {
    let basis = ctx.basis(default, 64)?;
    let t_list = ctx.cfg.t_list.clone().unwrap_or_else(|| vec![5.0]);
    let phi = ctx.cfg.initial.clone().unwrap_or(InitialConfig::Zero).resolve(basis.len())?;
    let (fs, labels) = standard_functionals(&basis);
    let stream = RngStream::new(ctx.seed, 0);
    let pts = convergence_curve(
        &basis,
        ctx.nu(),
        ctx.sigma(),
        &phi,
        &t_list,
        ctx.samples(20_000),
        &fs,
        labels,
        &stream,
        ctx.threshold(),
    )?;
    let last = pts.last().expect("t_list is non-empty");
    let mut out = Outcome { tables: vec![Table::from_csv(&last.report.to_csv())], checks: Vec::new() };
    out.checks.push(Check::below(format!("zmax_at_t={}", last.t), last.report.zmax, ctx.threshold()));
    Ok((out, basis))
}

pub fn stationary_bd(ctx: &Context) -> Result<Outcome, RunError> {
    Ok(stationary(ctx, interval_default())?.0)
}

pub fn stationary_hermite(ctx: &Context) -> Result<Outcome, RunError> {
    let (mut out, basis) = stationary(ctx, hermite_default())?;
    let (nu, sigma) = (ctx.nu(), ctx.sigma());
    let dt = ctx.cfg.extra_step.unwrap_or(1.0);
    let m = ctx.samples(20_000);
    // invariance: stationary draw, one exact step, Gaussian marginals
    let stream = RngStream::new(ctx.seed, 1);
    let states: Vec<Vec<f64>> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream(i);
            let s = stationary_sample(&basis, nu, sigma, &mut rng)?;
            Ok(exact_step(&s, dt, &mut rng)?.coeffs().to_vec())
        })
        .collect::<Result<_, gfflab_core::Error>>()?;
    let k = basis.len();
    let mut modes = vec![1, (k / 2).max(1), k];
    modes.dedup();
    let mut table = Table::new(&["mode", "lambda", "variance", "statistic", "p_value"]).with_suffix("ks");
    let floor = ctx.tolerance("ks_p");
    for mode in modes {
        let lambda = basis.lambdas()[mode - 1];
        let var = stationary_variance(lambda, nu, sigma);
        let xs: Vec<f64> = states.iter().map(|s| s[mode - 1]).collect();
        let (stat, p) = ks_gaussian(&xs, 0.0, var)?;
        table.push(row![mode, lambda, var, stat, p]);
        out.checks.push(Check::above(format!("ks_p_mode_{mode}"), p, floor));
    }
    out.tables.push(table);
    Ok(out)
}

pub fn convergence(ctx: &Context) -> Result<Outcome, RunError> {
    let basis = ctx.basis(interval_default(), 64)?;
    let t_list = ctx.cfg.t_list.clone().unwrap_or_else(|| vec![0.1, 0.5, 1.0, 2.0]);
    let phi = ctx.cfg.initial.clone().unwrap_or(InitialConfig::Fixed(vec![1.0])).resolve(basis.len())?;
    let (fs, labels) = standard_functionals(&basis);
    let stream = RngStream::new(ctx.seed, 0);
    let threshold = ctx.threshold();
    let pts = convergence_curve(&basis, ctx.nu(), ctx.sigma(), &phi, &t_list, ctx.samples(20_000), &fs, labels, &stream, threshold)?;
    let reports: Vec<(f64, _)> = pts.iter().map(|p| (p.t, p.report.clone())).collect();
    let summary = summarize_convergence(&reports)?;
    let mut table = Table::new(&["t", "zmax", "transient_mc", "transient_exact", "exact_zmax", "passed"]);
    for (p, r) in pts.iter().zip(&summary.rows) {
        table.push(row![p.t, r.zmax, r.transient, ConvergencePoint::transient(p), p.exact_zmax, r.passed]);
    }
    let last = summary.rows.last().expect("non-empty");
    let worst_exact = pts.iter().map(|p| p.exact_zmax).fold(0.0, f64::max);
    Ok(Outcome {
        tables: vec![table],
        checks: vec![
            Check::below("final_zmax", last.zmax, threshold),
            Check::holds("transient_monotone", summary.monotone),
            Check::below("max_exact_zmax", worst_exact, threshold),
        ],
    })
}

pub fn kakutani(ctx: &Context) -> Result<Outcome, RunError> {
    let basis = ctx.basis(interval_default(), 10_000)?;
    let k = basis.len();
    let k_from = ctx.cfg.k_from.unwrap_or(1000);
    if k_from >= k {
        return Err(ConfigError::Invalid { field: "kakutani.k_from".into(), message: format!("must be below basis.modes = {k}") }.into());
    }
    // Hermite eigenvalues grow like √k, so the tail is far heavier
    let default_tol = if matches!(basis.kind(), BasisKind::Hermite(_)) { 1e-6 } else { 1e-12 };
    let tol = ctx.cfg.tolerance("tail", default_tol);
    let nu = ctx.nu();
    let mut table = Table::new(&["t", "k", "partial_sum", "tail_to_K"]);
    let mut checks = Vec::new();
    for &t in ctx.cfg.t_list.as_deref().unwrap_or(&[0.1]) {
        let mut ks: Vec<usize> = std::iter::successors(Some(1usize), |x| Some(x * 10)).take_while(|&x| x < k).collect();
        ks.extend([k_from, k]);
        ks.sort_unstable();
        ks.dedup();
        for &kk in &ks {
            table.push(row![t, kk, kakutani_statistic(&basis, nu, t, kk)?, kakutani_tail(&basis, nu, t, kk, k)?]);
        }
        let total = kakutani_statistic(&basis, nu, t, k)?;
        checks.push(Check::holds(format!("finite_at_t={t}"), total.is_finite()));
        checks.push(Check::below(format!("tail_{k_from}_{k}_at_t={t}"), kakutani_tail(&basis, nu, t, k_from, k)?, tol));
    }
    Ok(Outcome { tables: vec![table], checks })
}

pub fn bridge_cov(ctx: &Context) -> Result<Outcome, RunError> {
    let grid = ctx.cfg.grid.clone().unwrap_or_else(|| vec![0.1, 0.3, 0.5, 0.7, 0.9]);
    let modes = ctx.modes(2000);
    let family = ctx.cfg.basis.as_ref().map(|b| b.family).unwrap_or(BasisFamily::Dirichlet);
    if let Some(b) = &ctx.cfg.basis {
        if (b.a, b.b) != (0.0, 1.0) {
            return Err(ConfigError::Invalid { field: "basis.a".into(), message: "bridge_cov runs on [0, 1]".into() }.into());
        }
    }
    let (sampler, kernel): (_, fn(f64, f64) -> f64) = match family {
        BasisFamily::Dirichlet => (bridge_sampler(&grid, modes), |x, y| x.min(y) - x * y),
        BasisFamily::Mixed => (half_line_bm_sampler(&grid, modes), f64::min),
        _ => {
            return Err(ConfigError::Invalid { field: "basis.kind".into(), message: "bridge_cov needs dirichlet or mixed".into() }.into())
        }
    };
    let sampler = sampler.map_err(|e| ConfigError::Invalid { field: "grid.points".into(), message: e.to_string() })?;
    let target: Vec<Vec<f64>> = grid.iter().map(|&x| grid.iter().map(|&y| kernel(x, y)).collect()).collect();
    let labels: Vec<String> = grid.iter().map(|x| format!("x={x}")).collect();
    let stream = RngStream::new(ctx.seed, 0);
    let report = estimate_covariance(
        |rng| Ok(sampler.sample(rng)),
        labels,
        target,
        ctx.samples(50_000),
        &stream,
        Centering::SampleMean,
        ctx.threshold(),
    )?;
    let mut checks = vec![Check::below("zmax", report.zmax, ctx.threshold())];
    // pinned ends: x = 0 always, x = 1 for the bridge
    let ends: Vec<f64> = if family == BasisFamily::Dirichlet { vec![0.0, 1.0] } else { vec![0.0] };
    let pinned = if family == BasisFamily::Dirichlet { bridge_sampler(&ends, modes) } else { half_line_bm_sampler(&ends, modes) }?;
    let end_stream = RngStream::new(ctx.seed, 1);
    let worst = (0..100u64)
        .flat_map(|i| pinned.sample(&mut end_stream.substream(i)))
        .map(f64::abs)
        .fold(0.0, f64::max);
    checks.push(Check::new("max_abs_at_pinned_ends", worst, crate::output::Comparison::Equal, 0.0));
    Ok(Outcome { tables: vec![Table::from_csv(&report.to_csv())], checks })
}

