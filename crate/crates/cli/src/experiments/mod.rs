//! Named experiments. Each one reads its parameters from an
//! [`ExperimentConfig`], falls back to documented defaults, and returns CSV
//! tables plus pass/fail checks.

mod deterministic;
mod stochastic;

use std::sync::Arc;

use gfflab_core::hilbert_scale::CoefficientField;
use gfflab_core::EigenBasis;

use crate::config::{BasisConfig, ConfigError, ExperimentConfig};
use crate::output::Outcome;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numeric(#[from] gfflab_core::Error),
}

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    /// Tolerance names accepted as `tolerance.<name>`, with defaults.
    pub tolerances: &'static [(&'static str, f64)],
    pub run: fn(&Context) -> Result<Outcome, RunError>,
}

/// Registry in display order.
pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "stationary_bd",
        summary: "dynamics::convergence_curve on a bounded-domain basis → stats report vs (σ²/2ν)Σf g/λ²",
        tolerances: &[],
        run: stochastic::stationary_bd,
    },
    Experiment {
        name: "stationary_hermite",
        summary: "same chain on the Hermite basis, plus stationary_sample → exact_step → ks_gaussian",
        tolerances: &[("ks_p", 1e-3)],
        run: stochastic::stationary_hermite,
    },
    Experiment {
        name: "convergence_curve",
        summary: "dynamics::convergence_curve over time.t_list → stats::summarize_convergence",
        tolerances: &[],
        run: stochastic::convergence,
    },
    Experiment {
        name: "kakutani",
        summary: "dynamics::kakutani_statistic partial sums and kakutani_tail",
        tolerances: &[("tail", 1e-12)],
        run: stochastic::kakutani,
    },
    Experiment {
        name: "greens_checks",
        summary: "greens Bessel functions and potentials vs integral representations and time quadrature",
        tolerances: &[("bessel", 1e-8), ("potential", 1e-6), ("k0_limit", 1e-5), ("mass", 1e-10)],
        run: deterministic::greens_checks,
    },
    Experiment {
        name: "heat_poisson",
        summary: "greens::heat_poisson_identity on R^d and greens::series_green on an interval",
        tolerances: &[("identity", 1e-6), ("series", 1e-4)],
        run: deterministic::heat_poisson,
    },
    Experiment {
        name: "log_divergence_2d",
        summary: "greens::log_divergence_check (both methods) and log_divergence_slope",
        tolerances: &[("slope", 0.01), ("agreement", 1e-6)],
        run: deterministic::log_divergence,
    },
    Experiment {
        name: "bridge_cov",
        summary: "fields::bridge_sampler (or half_line_bm_sampler) → stats report vs the analytic covariance",
        tolerances: &[],
        run: stochastic::bridge_cov,
    },
    Experiment {
        name: "two_sided_cov",
        summary: "fields::covariance_two_sided in all modes vs fourier_cov::gff_covariance, plus sampler moments",
        tolerances: &[("agreement", 1e-6), ("separation", 1e-3)],
        run: deterministic::two_sided_cov,
    },
    Experiment {
        name: "fourier_limits",
        summary: "fourier_cov transient, massive and zero-mass covariance limits",
        tolerances: &[("transient", 1e-8), ("massive", 1e-6), ("zero_mass", 1e-4)],
        run: deterministic::fourier_limits,
    },
    Experiment {
        name: "weyl",
        summary: "basis eigenvalue growth λ_k ~ c k^α for interval, box and Hermite bases",
        tolerances: &[("interval", 1e-10), ("ratio", 0.05)],
        run: deterministic::weyl,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Configuration plus the effective seed.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
}

impl Context<'_> {
    pub fn nu(&self) -> f64 {
        self.cfg.nu.unwrap_or(1.0)
    }

    pub fn sigma(&self) -> f64 {
        self.cfg.sigma.unwrap_or(1.0)
    }

    pub fn threshold(&self) -> f64 {
        self.cfg.threshold.unwrap_or(gfflab_core::stats::DEFAULT_Z_THRESHOLD)
    }

    pub fn samples(&self, default: usize) -> usize {
        self.cfg.samples.unwrap_or(default)
    }

    pub fn modes(&self, default: usize) -> usize {
        self.cfg.modes.unwrap_or(default)
    }

    pub fn basis(&self, default: BasisConfig, modes: usize) -> Result<Arc<EigenBasis>, RunError> {
        Ok(self.cfg.basis.clone().unwrap_or(default).build(self.modes(modes))?)
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        let default = find(&self.cfg.experiment)
            .and_then(|e| e.tolerances.iter().find(|(n, _)| *n == name))
            .map(|(_, v)| *v)
            .expect("tolerance declared in the registry");
        self.cfg.tolerance(name, default)
    }
}

/// Six fixed coefficient functionals: two low modes, a middle mode and three
/// spread-out profiles.
pub fn standard_functionals(basis: &Arc<EigenBasis>) -> (Vec<CoefficientField>, Vec<String>) {
    // from_fn hands out 1-based k
    let n = basis.len();
    let unit = |i: usize| CoefficientField::from_fn(basis.clone(), move |k, _| if k == i { 1.0 } else { 0.0 });
    let (second, middle) = (2.min(n), (n / 2).max(1));
    let mut fs = vec![unit(1), unit(second), unit(middle)];
    let mut labels = vec!["e1".to_string(), format!("e{second}"), format!("e{middle}")];
    fs.push(CoefficientField::from_fn(basis.clone(), |k, _| 1.0 / k as f64));
    labels.push("inv_k".into());
    fs.push(CoefficientField::from_fn(basis.clone(), |k, _| {
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        s / (k as f64).sqrt()
    }));
    labels.push("alt_inv_sqrt_k".into());
    fs.push(CoefficientField::from_fn(basis.clone(), |k, _| (-(k as f64) / 8.0).exp()));
    labels.push("exp_k_over_8".into());
    (fs, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_unique() {
        let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
        assert_eq!(
            names,
            [
                "stationary_bd",
                "stationary_hermite",
                "convergence_curve",
                "kakutani",
                "greens_checks",
                "heat_poisson",
                "log_divergence_2d",
                "bridge_cov",
                "two_sided_cov",
                "fourier_limits",
                "weyl"
            ]
        );
        assert!(find("weyl").is_some() && find("nope").is_none());
    }

    #[test]
    fn standard_functionals_hit_the_named_modes() {
        let basis = BasisConfig::interval(crate::config::BasisFamily::Dirichlet, 0.0, 1.0).build(8).unwrap();
        let (fs, labels) = standard_functionals(&basis);
        assert_eq!(labels, ["e1", "e2", "e4", "inv_k", "alt_inv_sqrt_k", "exp_k_over_8"]);
        assert_eq!(&fs[0].coeffs()[..2], &[1.0, 0.0]);
        assert_eq!(fs[1].coeffs()[1], 1.0);
        assert_eq!(fs[2].coeffs()[3], 1.0);
        assert_eq!(fs[3].coeffs()[0], 1.0);
        assert_eq!(fs[3].coeffs()[1], 0.5);
        assert_eq!(fs[4].coeffs()[0], -1.0);
        assert_eq!(fs[5].coeffs()[0], (-1.0f64 / 8.0).exp());
    }
}
