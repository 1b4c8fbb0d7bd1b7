//! `gff-lab`: named numerical experiments on top of `gfflab-core`.
//!
//! A run parses a `key = value` config file, executes one experiment inside
//! a rayon pool of the requested size, writes CSV tables and a JSON summary,
//! and maps the outcome to an exit code (0 pass, 1 fail, 2 config error).

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

use config::{ConfigError, ExperimentConfig};
use experiments::{Context, RunError};
use output::Summary;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const DEFAULT_PREFIX: &str = "gfflab";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config_path: PathBuf,
    pub jobs: usize,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)
}

fn config_failure(e: &ConfigError) -> i32 {
    eprintln!("gff-lab: {e}");
    EXIT_CONFIG
}

/// Execute one experiment end to end and return the process exit code.
pub fn run(opts: &RunOptions) -> i32 {
    let cfg = match ExperimentConfig::from_path(&opts.config_path) {
        Ok(c) => c,
        Err(e) => return config_failure(&e),
    };
    let Some(exp) = experiments::find(&cfg.experiment) else {
        return config_failure(&ConfigError::Invalid {
            field: "experiment.name".into(),
            message: format!("unknown experiment `{}` (see `gff-lab list`)", cfg.experiment),
        });
    };
    if let Err(e) = cfg.check_tolerances(exp.tolerances) {
        return config_failure(&e);
    }
    if opts.jobs == 0 {
        return config_failure(&ConfigError::Invalid { field: "--jobs".into(), message: "must be at least 1".into() });
    }
    let seed = opts.seed.or(cfg.seed).unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("gff-lab: cannot start worker pool: {e}");
            return EXIT_FAIL;
        }
    };
    let ctx = Context { cfg: &cfg, seed };
    let outcome = match pool.install(|| (exp.run)(&ctx)) {
        Ok(o) => o,
        Err(RunError::Config(e)) => return config_failure(&e),
        Err(e) => {
            eprintln!("gff-lab: {}: {e}", exp.name);
            return EXIT_FAIL;
        }
    };

    let prefix = opts.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| DEFAULT_PREFIX.to_string());
    let mut files = Vec::new();
    for table in &outcome.tables {
        let path = match &table.suffix {
            None => format!("{prefix}_{}.csv", exp.name),
            Some(s) => format!("{prefix}_{}_{s}.csv", exp.name),
        };
        if let Err(e) = write_file(Path::new(&path), &table.to_csv()) {
            eprintln!("gff-lab: writing {path}: {e}");
            return EXIT_FAIL;
        }
        files.push(path);
    }
    let passed = outcome.passed();
    let summary = Summary {
        experiment: exp.name.to_string(),
        passed,
        seed,
        jobs: opts.jobs,
        files,
        checks: outcome.checks.clone(),
    };
    let summary_path = format!("{prefix}_summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary is plain data");
    if let Err(e) = write_file(Path::new(&summary_path), &json) {
        eprintln!("gff-lab: writing {summary_path}: {e}");
        return EXIT_FAIL;
    }

    for c in &outcome.checks {
        println!("{}", c.line());
    }
    println!("{} {} (seed {seed}, jobs {})", if passed { "PASS" } else { "FAIL" }, exp.name, opts.jobs);
    if passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

pub fn list_experiments() -> String {
    let width = experiments::EXPERIMENTS.iter().map(|e| e.name.len()).max().unwrap_or(0);
    experiments::EXPERIMENTS.iter().map(|e| format!("{:width$}  {}\n", e.name, e.summary)).collect()
}
