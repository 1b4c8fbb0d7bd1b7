//! Quadrature and closed-form cross-checks.

use std::f64::consts::PI;

use gfflab_core::basis::{build_box_basis, build_hermite_basis, build_interval_basis};
use gfflab_core::fields::{covariance_two_sided, sample_two_sided_bm, two_sided_kernel, TwoSidedMode};
use gfflab_core::fourier_cov::{
    gff_covariance, make_s0_function, massive_limit_covariance, physical_covariance_1d, transient_covariance_parts,
    TestFunction,
};
use gfflab_core::greens::{
    bessel_k, bessel_k0, heat_kernel, heat_poisson_identity, log_divergence_check, log_divergence_slope,
    potential_by_time_quadrature, potential_massive, potential_zero_mass, series_green, KernelSpec, PotentialMethod,
    EULER_GAMMA,
};
use gfflab_core::quadrature::{adaptive, adaptive_to_infinity};
use gfflab_core::rng::RngStream;
use gfflab_core::stats::{estimate_covariance, Centering};
use gfflab_core::BoundaryCondition;

use super::{Context, RunError};
use crate::output::{Check, Comparison, Outcome, Table};
use crate::row;

fn relerr(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `K_p(x) = ∫₀^∞ e^{-x cosh u} cosh(pu) du`.
fn bessel_integral(p: f64, x: f64) -> Result<f64, RunError> {
    Ok(adaptive_to_infinity(|u| (-x * u.cosh()).exp() * (p * u).cosh(), 0.0, 1e-300, 1e-13)?.value)
}

pub fn greens_checks(ctx: &Context) -> Result<Outcome, RunError> {
    let mut table = Table::new(&["kernel", "x", "lhs", "rhs", "relerr"]);
    let mut checks = Vec::new();
    let record = |table: &mut Table, name: &str, x: f64, lhs: f64, rhs: f64, tol: f64| {
        let e = relerr(lhs, rhs);
        table.push(row![name, x, lhs, rhs, e]);
        Check::below(format!("{name}(x={x})"), e, tol)
    };
    let tb = ctx.tolerance("bessel");
    for x in [0.1, 1.0, 10.0] {
        checks.push(record(&mut table, "bessel_k_half", x, bessel_k(0.5, x)?, bessel_integral(0.5, x)?, tb));
        checks.push(record(&mut table, "bessel_k_half_closed", x, bessel_k(0.5, x)?, (PI / (2.0 * x)).sqrt() * (-x).exp(), tb));
        checks.push(record(&mut table, "bessel_k0", x, bessel_k0(x)?, bessel_integral(0.0, x)?, tb));
    }
    // K₀(x) + ln x → ln 2 - γ_E; an absolute check
    let x = 1e-6;
    let lhs = bessel_k0(x)? + x.ln();
    let rhs = 2f64.ln() - EULER_GAMMA;
    table.push(row!["k0_log_limit", x, lhs, rhs, relerr(lhs, rhs)]);
    checks.push(Check::below("k0_log_limit_abs", (lhs - rhs).abs(), ctx.tolerance("k0_limit")));

    let nu = ctx.nu();
    let eps = ctx.cfg.eps.unwrap_or(1.0);
    let tp = ctx.tolerance("potential");
    for d in 1..=3 {
        let spec = KernelSpec::massive(d, nu, eps)?;
        let mut x = vec![0.0; d];
        x[0] = 1.0;
        let name = format!("massive_d{d}");
        checks.push(record(&mut table, &name, 1.0, potential_by_time_quadrature(&spec, &x)?, potential_massive(&spec, &x)?, tp));
    }
    let spec = KernelSpec::zero_mass(3, nu)?;
    checks.push(record(&mut table, "zero_mass_d3", 1.0, potential_by_time_quadrature(&spec, &[1.0, 0.0, 0.0])?, potential_zero_mass(&spec, &[1.0, 0.0, 0.0])?, tp));

    // ∫ G_t dx = e^{-tε}
    let t = 0.7;
    let heat = KernelSpec::heat(1, nu, eps)?;
    let reach = 40.0 * (nu * t).sqrt();
    let mass = adaptive(|y| heat_kernel(&heat, t, &[y]).unwrap_or(f64::NAN), -reach, reach, 0.0, 1e-14)?.value;
    checks.push(record(&mut table, "heat_mass_d1", t, mass, (-t * eps).exp(), ctx.tolerance("mass")));
    Ok(Outcome { tables: vec![table], checks })
}

pub fn heat_poisson(ctx: &Context) -> Result<Outcome, RunError> {
    let nu = ctx.nu();
    let eps = ctx.cfg.eps.unwrap_or(1.0);
    let tol = ctx.tolerance("identity");
    let mut table = Table::new(&["case", "d", "eps", "nu", "lhs", "rhs", "error", "error_kind"]);
    let mut checks = Vec::new();
    for d in 1..=3 {
        let spec = KernelSpec::heat(d, nu, eps)?;
        let mut x = vec![0.0; d];
        x[0] = 1.0;
        let (lhs, rhs) = heat_poisson_identity(&spec, &x, &vec![0.0; d], None)?;
        let e = relerr(lhs, rhs);
        table.push(row![format!("free_space_d{d}"), d, eps, nu, lhs, rhs, e, "relative"]);
        checks.push(Check::below(format!("heat_poisson_d{d}"), e, tol));
    }
    // bounded interval: Σ h_k(x)h_k(y)/(νλ_k²) → min(x,y)(1 - max(x,y))/ν
    let k = ctx.modes(10_000);
    let basis = build_interval_basis(BoundaryCondition::Dirichlet, 0.0, 1.0, k)?;
    let (x, y) = (0.3, 0.7);
    let g = series_green(&basis, nu, &[x], &[y], k)?;
    let exact = x.min(y) * (1.0 - x.max(y)) / nu;
    table.push(row!["series_green_0.3_0.7", 1usize, 0.0, nu, g, exact, (g - exact).abs(), "absolute"]);
    checks.push(Check::below("series_green_abs", (g - exact).abs(), ctx.tolerance("series")));
    Ok(Outcome { tables: vec![table], checks })
}

pub fn log_divergence(ctx: &Context) -> Result<Outcome, RunError> {
    let nu = ctx.nu();
    let radius = ctx.cfg.radius.unwrap_or(1.0);
    let eps_list = ctx.cfg.eps_list.clone().unwrap_or_else(|| vec![1e-3, 1e-4, 1e-5, 1e-6]);
    let closed = log_divergence_check(nu, radius, &eps_list, PotentialMethod::ClosedForm)?;
    let quad = log_divergence_check(nu, radius, &eps_list, PotentialMethod::TimeQuadrature)?;
    let mut table = Table::new(&["eps", "phi", "residual_closed", "residual_quadrature"]);
    let mut worst: f64 = 0.0;
    for ((&e, c), q) in eps_list.iter().zip(&closed).zip(&quad) {
        let phi = potential_massive(&KernelSpec::massive(2, nu, e)?, &[radius, 0.0])?;
        table.push(row![e, phi, *c, *q]);
        worst = worst.max((c - q).abs());
    }
    let slope = log_divergence_slope(nu, radius, &eps_list)?;
    let want = -1.0 / (4.0 * PI * nu);
    let mut fit = Table::new(&["slope", "expected", "relerr"]).with_suffix("slope");
    fit.push(row![slope, want, relerr(slope, want)]);
    Ok(Outcome {
        tables: vec![table, fit],
        checks: vec![
            Check::below("slope_relerr", relerr(slope, want), ctx.tolerance("slope")),
            Check::below("residual_methods_abs", worst, ctx.tolerance("agreement")),
        ],
    })
}

pub fn two_sided_cov(ctx: &Context) -> Result<Outcome, RunError> {
    let mut table = Table::new(&["pair", "mode", "value"]);
    let mut checks = Vec::new();
    let agree = ctx.tolerance("agreement");
    let pairs = [
        ("std_gauss", TestFunction::gaussian(vec![0.0], 1.0)?, TestFunction::gaussian(vec![0.0], 1.0)?),
        ("shifted_gauss", TestFunction::gaussian(vec![0.5], 0.7)?, TestFunction::gaussian(vec![-1.0], 1.2)?),
    ];
    let modes = [("direct", TwoSidedMode::Direct), ("antiderivative", TwoSidedMode::Antiderivative), ("fourier", TwoSidedMode::Fourier)];
    for (name, f, g) in &pairs {
        let vals: Vec<f64> = modes.iter().map(|(_, m)| covariance_two_sided(f, g, *m)).collect::<Result<_, _>>()?;
        for ((mode, _), v) in modes.iter().zip(&vals) {
            table.push(row![*name, *mode, *v]);
        }
        let spread = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - vals.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check::below(format!("{name}_mode_spread"), spread, agree));
    }
    // S₀ pair: subtraction of f̂(0) is void, so the two-sided and free-field values coincide
    let f = make_s0_function(4.0, 0.25, 1)?;
    let g = make_s0_function(5.0, 0.4, 1)?;
    let two = covariance_two_sided(&f, &g, TwoSidedMode::Fourier)?;
    let free = gff_covariance(&f, &g, 1.0)?;
    table.push(row!["s0_pair", "fourier", two]);
    table.push(row!["s0_pair", "gff", free]);
    checks.push(Check::new("s0_pair_exact_gap", (two - free).abs(), Comparison::Equal, 0.0));
    // f̂(0) ≠ 0 for the Gaussian: the two-sided field is not the free field
    let h = TestFunction::gaussian(vec![0.0], 1.0)?;
    let two = covariance_two_sided(&h, &f, TwoSidedMode::Fourier)?;
    let free = gff_covariance(&h, &f, 1.0)?;
    table.push(row!["gauss_s0", "fourier", two]);
    table.push(row!["gauss_s0", "gff", free]);
    checks.push(Check::above("gauss_s0_gap", (two - free).abs(), ctx.tolerance("separation")));

    // sampler moments
    let grid = ctx.cfg.grid.clone().unwrap_or_else(|| vec![-2.0, -0.5, 1.0, 2.0]);
    let target: Vec<Vec<f64>> = grid.iter().map(|&x| grid.iter().map(|&y| two_sided_kernel(x, y)).collect()).collect();
    let stream = RngStream::new(ctx.seed, 0);
    let report = estimate_covariance(
        |rng| sample_two_sided_bm(&grid, rng),
        grid.iter().map(|x| format!("x={x}")).collect(),
        target,
        ctx.samples(20_000),
        &stream,
        Centering::None,
        ctx.threshold(),
    )?;
    checks.push(Check::below("sampler_zmax", report.zmax, ctx.threshold()));
    let mut sampler = Table::from_csv(&report.to_csv());
    sampler.suffix = Some("sampler".into());
    Ok(Outcome { tables: vec![table, sampler], checks })
}

pub fn fourier_limits(ctx: &Context) -> Result<Outcome, RunError> {
    let (nu, sigma) = (ctx.nu(), ctx.sigma());
    let mut table = Table::new(&["check", "d", "param", "value", "reference", "relerr"]);
    let mut checks = Vec::new();
    let (freq_f, freq_g) = (4.0, 4.5);
    let t_list = ctx.cfg.t_list.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0 / nu]);
    // converged once tν(freq/2)² ≥ 40 for the lower frequency
    let t_conv = 40.0 / (nu * (freq_f / 2.0f64).powi(2));
    if !t_list.iter().any(|&t| t >= t_conv) {
        return Err(crate::config::ConfigError::Invalid {
            field: "time.t_list".into(),
            message: format!("needs a time ≥ {t_conv} for the limit check"),
        }
        .into());
    }
    for d in 1..=3 {
        let f = make_s0_function(freq_f, 0.25, d)?;
        let g = make_s0_function(freq_g, 0.3, d)?;
        let phi = TestFunction::gaussian(vec![0.0; d], 1.0)?;
        let limit = gff_covariance(&f, &g, sigma * sigma / (2.0 * nu))?;
        let (mut prev_phi, mut prev_noise) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut phi_monotone, mut noise_monotone) = (true, true);
        let mut worst: f64 = 0.0;
        for &t in &t_list {
            let (_, noise) = transient_covariance_parts(&f, &g, None, t, nu, sigma)?;
            let (p, n_ff) = transient_covariance_parts(&f, &f, Some(&phi), t, nu, sigma)?;
            table.push(row!["transient_noise", d, t, noise, limit, relerr(noise, limit)]);
            table.push(row!["transient_phi", d, t, p, 0.0, f64::NAN]);
            phi_monotone &= p < prev_phi || p == 0.0;
            noise_monotone &= n_ff >= prev_noise;
            prev_phi = p;
            prev_noise = n_ff;
            if t >= t_conv {
                worst = worst.max(relerr(noise, limit));
            }
        }
        checks.push(Check::below(format!("transient_limit_d{d}"), worst, ctx.tolerance("transient")));
        checks.push(Check::holds(format!("phi_transient_decreasing_d{d}"), phi_monotone));
        checks.push(Check::holds(format!("noise_term_nondecreasing_d{d}"), noise_monotone));
    }

    // massive limit vs the physical-space double integral, d = 1
    let eps = ctx.cfg.eps.unwrap_or(1.0);
    let f = TestFunction::gaussian(vec![0.0], 1.0)?;
    let g = TestFunction::gaussian(vec![0.5], 0.7)?;
    let spec = KernelSpec::massive(1, nu, nu * eps)?;
    let kern = |z: f64| potential_massive(&spec, &[z]).unwrap_or(f64::NAN);
    let physical = 0.5 * sigma * sigma * physical_covariance_1d(&f, &g, &kern)?;
    let spectral = massive_limit_covariance(&f, &g, nu, eps, sigma)?;
    table.push(row!["massive_physical", 1usize, eps, spectral, physical, relerr(spectral, physical)]);
    checks.push(Check::below("massive_vs_physical_d1", relerr(spectral, physical), ctx.tolerance("massive")));

    // ε → 0 on S₀
    let small = ctx.cfg.eps_small.unwrap_or(1e-8);
    for d in 1..=3 {
        let f = make_s0_function(freq_f, 0.25, d)?;
        let g = make_s0_function(freq_g, 0.3, d)?;
        let zero = gff_covariance(&f, &g, sigma * sigma / (2.0 * nu))?;
        let m = massive_limit_covariance(&f, &g, nu, small, sigma)?;
        table.push(row!["massive_to_zero_mass", d, small, m, zero, relerr(m, zero)]);
        checks.push(Check::below(format!("zero_mass_limit_d{d}"), relerr(m, zero), ctx.tolerance("zero_mass")));
    }
    Ok(Outcome { tables: vec![table], checks })
}

pub fn weyl(ctx: &Context) -> Result<Outcome, RunError> {
    let k = ctx.modes(10_000);
    let tol = ctx.tolerance("ratio");
    let mut table = Table::new(&["basis", "k", "lambda_k", "ratio", "reference", "relerr"]);
    let mut checks = Vec::new();
    let checkpoints = |k: usize| -> Vec<usize> {
        let mut v: Vec<usize> = std::iter::successors(Some(10usize), |x| Some(x * 10)).take_while(|&x| x < k).collect();
        v.push(k);
        v
    };

    let interval = build_interval_basis(BoundaryCondition::Dirichlet, 0.0, 1.0, k)?;
    let worst = interval
        .lambdas()
        .iter()
        .enumerate()
        .map(|(i, l)| (l / (i + 1) as f64 - PI).abs())
        .fold(0.0, f64::max);
    for &kk in &checkpoints(k) {
        let l = interval.lambdas()[kk - 1];
        table.push(row!["dirichlet:0:1", kk, l, l / kk as f64, PI, relerr(l / kk as f64, PI)]);
    }
    checks.push(Check::below("interval_max_abs_dev", worst, ctx.tolerance("interval")));

    // λ_k k^{-1/2} → 2√π for the unit square
    let square = build_box_basis(2, 1.0, k)?;
    let want = 2.0 * PI.sqrt();
    for &kk in &checkpoints(k) {
        let l = square.lambdas()[kk - 1];
        let r = l / (kk as f64).sqrt();
        table.push(row!["box:2:1", kk, l, r, want, relerr(r, want)]);
    }
    let r = square.lambdas()[k - 1] / (k as f64).sqrt();
    checks.push(Check::below("box_d2_ratio_relerr", relerr(r, want), tol));
    checks.push(Check::below("box_d2_c_weyl_relerr", relerr(square.c_weyl(), want), 1e-12));

    // λ_k² / k → 2 for Hermite functions on the line
    let herm = build_hermite_basis(1, k)?;
    for &kk in &checkpoints(k) {
        let l = herm.lambdas()[kk - 1];
        let r = l * l / kk as f64;
        table.push(row!["hermite:1", kk, l, r, 2.0, relerr(r, 2.0)]);
    }
    let l = herm.lambdas()[k - 1];
    checks.push(Check::below("hermite_d1_ratio_relerr", relerr(l * l / k as f64, 2.0), tol));
    Ok(Outcome { tables: vec![table], checks })
}
