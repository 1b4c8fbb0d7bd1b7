//! Monte Carlo covariance estimation, z-score reports and Kolmogorov–Smirnov
//! tests against Gaussian marginals.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};

/// Smallest Monte Carlo sample accepted by the estimators.
pub const MIN_SAMPLES: usize = 100;
pub const DEFAULT_Z_THRESHOLD: f64 = 4.0;
pub const P_VALUE_FLOOR: f64 = 1e-12;

/// Sum in a fixed binary tree so results do not depend on how samples were
/// produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// Unbiased covariance around the sample mean.
    SampleMean,
    /// Raw second moments `E(XY)`, for quantities known to be centered or
    /// when the mean is part of the target.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportMeta {
    pub samples: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub labels: Vec<String>,
    pub empirical: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub zmax: f64,
    pub passed: bool,
    /// Indices of functionals with zero empirical variance.
    pub degenerate: Vec<usize>,
    pub meta: ReportMeta,
}

fn check_square(name: &str, m: &[Vec<f64>], n: usize) -> Result<()> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid(format!("{name} must be {n}×{n}")));
    }
    Ok(())
}

impl CovarianceReport {
    /// Assemble a report; z-scores, `zmax` and `passed` are derived.
    pub fn new(
        labels: Vec<String>,
        empirical: Vec<Vec<f64>>,
        target: Vec<Vec<f64>>,
        stderr: Vec<Vec<f64>>,
        meta: ReportMeta,
    ) -> Result<Self> {
        let n = labels.len();
        check_square("empirical", &empirical, n)?;
        check_square("target", &target, n)?;
        check_square("stderr", &stderr, n)?;
        if let Some(l) = labels.iter().find(|l| l.contains([',', '\n', '"'])) {
            return Err(Error::Invalid(format!("label {l:?} contains a CSV delimiter")));
        }
        let degenerate = (0..n).filter(|&i| empirical[i][i] == 0.0).collect();
        let mut report = Self { labels, empirical, target, stderr, zmax: 0.0, passed: false, degenerate, meta };
        report.zmax = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| report.z(i, j).abs())
            .fold(0.0, f64::max);
        report.passed = report.zmax < meta.threshold;
        Ok(report)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(empirical - target)/stderr`; a zero standard error gives 0 on exact
    /// agreement and ±∞ otherwise.
    pub fn z(&self, i: usize, j: usize) -> f64 {
        let diff = self.empirical[i][j] - self.target[i][j];
        let se = self.stderr[i][j];
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }

    /// `max |empirical - target|` over all entries.
    pub fn max_abs_deviation(&self) -> f64 {
        self.empirical
            .iter()
            .flatten()
            .zip(self.target.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Upper-triangle rows `i,j,label_i,label_j,empirical,target,stderr,z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,label_i,label_j,empirical,target,stderr,z\n");
        for i in 0..self.len() {
            for j in i..self.len() {
                out.push_str(&format!(
                    "{i},{j},{},{},{:e},{:e},{:e},{:e}\n",
                    self.labels[i],
                    self.labels[j],
                    self.empirical[i][j],
                    self.target[i][j],
                    self.stderr[i][j],
                    self.z(i, j)
                ));
            }
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv); metadata is not part of the CSV.
    pub fn from_csv(text: &str, meta: ReportMeta) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty report".into()))?;
        if header.trim() != "i,j,label_i,label_j,empirical,target,stderr,z" {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let rows: Vec<Vec<&str>> = lines.filter(|l| !l.trim().is_empty()).map(|l| l.split(',').collect()).collect();
        let bad = |l: &Vec<&str>| Error::Parse(format!("bad report row {:?}", l.join(",")));
        let mut n = 0;
        for r in &rows {
            if r.len() != 8 {
                return Err(bad(r));
            }
            let j: usize = r[1].parse().map_err(|_| bad(r))?;
            n = n.max(j + 1);
        }
        let mut labels = vec![String::new(); n];
        let mut e = vec![vec![0.0; n]; n];
        let mut t = vec![vec![0.0; n]; n];
        let mut s = vec![vec![0.0; n]; n];
        for r in &rows {
            let i: usize = r[0].parse().map_err(|_| bad(r))?;
            let j: usize = r[1].parse().map_err(|_| bad(r))?;
            if i > j {
                return Err(bad(r));
            }
            let num = |k: usize| r[k].parse::<f64>().map_err(|_| bad(r));
            labels[i] = r[2].to_string();
            labels[j] = r[3].to_string();
            for (m, k) in [(&mut e, 4), (&mut t, 5), (&mut s, 6)] {
                m[i][j] = num(k)?;
                m[j][i] = m[i][j];
            }
        }
        Self::new(labels, e, t, s, meta)
    }
}

/// Build a report from a sample matrix (`rows[m][i]` = functional `i` on draw `m`).
pub fn report_from_samples(
    rows: &[Vec<f64>],
    labels: Vec<String>,
    target: Vec<Vec<f64>>,
    centering: Centering,
    meta: ReportMeta,
) -> Result<CovarianceReport> {
    let m = rows.len();
    if m < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: m, min: MIN_SAMPLES });
    }
    let n = labels.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: rows.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0) });
    }
    let column = |i: usize| -> Vec<f64> { rows.iter().map(|r| r[i]).collect() };
    let means: Vec<f64> = match centering {
        Centering::SampleMean => (0..n).map(|i| pairwise_sum(&column(i)) / m as f64).collect(),
        Centering::None => vec![0.0; n],
    };
    let mut emp = vec![vec![0.0; n]; n];
    let mut se = vec![vec![0.0; n]; n];
    let mut buf = vec![0.0; m];
    for i in 0..n {
        for j in i..n {
            for (b, r) in buf.iter_mut().zip(rows) {
                *b = (r[i] - means[i]) * (r[j] - means[j]);
            }
            let c = match centering {
                Centering::SampleMean => pairwise_sum(&buf) / (m - 1) as f64,
                Centering::None => pairwise_sum(&buf) / m as f64,
            };
            emp[i][j] = c;
            emp[j][i] = c;
            if centering == Centering::None {
                // empirical variance of the products
                for b in buf.iter_mut() {
                    *b = (*b - c) * (*b - c);
                }
                let v = pairwise_sum(&buf) / (m - 1) as f64;
                se[i][j] = (v / m as f64).sqrt();
                se[j][i] = se[i][j];
            }
        }
    }
    if centering == Centering::SampleMean {
        // Gaussian fourth-moment formula Var(ĉ_ij) ≈ (c_ii c_jj + c_ij²)/M
        for i in 0..n {
            for j in 0..n {
                se[i][j] = ((emp[i][i] * emp[j][j] + emp[i][j] * emp[i][j]) / m as f64).sqrt();
            }
        }
    }
    CovarianceReport::new(labels, emp, target, se, meta)
}

/// Draw `samples` vectors of functionals, draw `m` from `stream.substream(m)`,
/// and compare their covariance with `target`. Draws run on the current rayon
/// pool; the result does not depend on the number of workers.
pub fn estimate_covariance<S>(
    sampler: S,
    labels: Vec<String>,
    target: Vec<Vec<f64>>,
    samples: usize,
    stream: &RngStream,
    centering: Centering,
    threshold: f64,
) -> Result<CovarianceReport>
where
    S: Fn(&mut StreamRng) -> Result<Vec<f64>> + Sync,
{
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: samples, min: MIN_SAMPLES });
    }
    let rows: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|m| sampler(&mut stream.substream(m)))
        .collect::<Result<_>>()?;
    let meta = ReportMeta { samples, seed: stream.seed, stream_id: stream.stream_id, threshold };
    report_from_samples(&rows, labels, target, centering, meta)
}

/// One-sample Kolmogorov–Smirnov test against `N(mu, var)`; returns the
/// statistic and the asymptotic p-value (floored at [`P_VALUE_FLOOR`]).
pub fn ks_gaussian(samples: &[f64], mu: f64, var: f64) -> Result<(f64, f64)> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::NonPositive { name: "var", value: var });
    }
    if samples.len() < 50 {
        return Err(Error::TooFewSamples { got: samples.len(), min: 50 });
    }
    let normal = Normal::new(mu, var.sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    Ok((d, kolmogorov_q(lambda).max(P_VALUE_FLOOR)))
}

/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub t: f64,
    pub zmax: f64,
    /// `max |empirical - target|`
    pub transient: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSummary {
    pub rows: Vec<ConvergenceRow>,
    /// Transients never increase by more than four standard errors.
    pub monotone: bool,
}

pub fn summarize_convergence(reports: &[(f64, CovarianceReport)]) -> Result<ConvergenceSummary> {
    if reports.is_empty() {
        return Err(Error::Invalid("no reports to summarize".into()));
    }
    let rows: Vec<ConvergenceRow> = reports
        .iter()
        .map(|(t, r)| ConvergenceRow { t: *t, zmax: r.zmax, transient: r.max_abs_deviation(), passed: r.passed })
        .collect();
    let monotone = rows.windows(2).zip(reports.windows(2)).all(|(w, r)| {
        let noise = 4.0 * r[0].1.max_stderr().max(r[1].1.max_stderr());
        w[1].transient <= w[0].transient + noise
    });
    Ok(ConvergenceSummary { rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::standard_normal;
    use proptest::prelude::*;

    fn meta(samples: usize) -> ReportMeta {
        ReportMeta { samples, seed: 1, stream_id: 2, threshold: DEFAULT_Z_THRESHOLD }
    }

    #[test]
    fn scalar_variance() {
        let stream = RngStream::new(11, 0);
        let r = estimate_covariance(
            |rng| Ok(vec![standard_normal(rng)]),
            vec!["x".into()],
            vec![vec![1.0]],
            100_000,
            &stream,
            Centering::SampleMean,
            3.0,
        )
        .unwrap();
        assert!(r.passed, "z = {}", r.zmax);
    }

    #[test]
    fn perfect_correlation() {
        let stream = RngStream::new(12, 0);
        let r = estimate_covariance(
            |rng| {
                let z = standard_normal(rng);
                Ok(vec![z, 2.0 * z])
            },
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![2.0, 4.0]],
            20_000,
            &stream,
            Centering::SampleMean,
            4.0,
        )
        .unwrap();
        let corr = r.empirical[0][1] / (r.empirical[0][0] * r.empirical[1][1]).sqrt();
        assert!((corr - 1.0).abs() < 1e-12);
        assert!(r.z(0, 1).abs() < 4.0);
    }

    #[test]
    fn too_few_samples_and_degenerate() {
        let stream = RngStream::new(1, 1);
        let err = estimate_covariance(|_| Ok(vec![0.0]), vec!["x".into()], vec![vec![0.0]], 99, &stream, Centering::SampleMean, 4.0);
        assert_eq!(err.unwrap_err(), Error::TooFewSamples { got: 99, min: 100 });
        let r = estimate_covariance(
            |rng| Ok(vec![0.0, standard_normal(rng)]),
            vec!["zero".into(), "x".into()],
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            1000,
            &stream,
            Centering::SampleMean,
            4.0,
        )
        .unwrap();
        assert_eq!(r.degenerate, vec![0]);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let stream = RngStream::new(5, 9);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                estimate_covariance(
                    |rng| Ok(vec![standard_normal(rng), standard_normal(rng)]),
                    vec!["a".into(), "b".into()],
                    vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                    5000,
                    &stream,
                    Centering::SampleMean,
                    4.0,
                )
                .unwrap()
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn csv_round_trip() {
        let stream = RngStream::new(8, 3);
        let r = estimate_covariance(
            |rng| Ok(vec![standard_normal(rng), 0.1 * standard_normal(rng) - 3.0]),
            vec!["f1".into(), "g_2".into()],
            vec![vec![1.0, 0.0], vec![0.0, 0.01]],
            500,
            &stream,
            Centering::SampleMean,
            4.0,
        )
        .unwrap();
        let back = CovarianceReport::from_csv(&r.to_csv(), r.meta).unwrap();
        assert_eq!(back, r);
        assert!(CovarianceReport::new(vec!["a,b".into()], vec![vec![1.0]], vec![vec![1.0]], vec![vec![1.0]], meta(100)).is_err());
    }

    #[test]
    fn ks_examples() {
        let stream = RngStream::new(21, 0);
        let mut failures = 0;
        for s in 0..200u64 {
            let mut rng = stream.substream(s);
            let xs: Vec<f64> = (0..10_000).map(|_| standard_normal(&mut rng)).collect();
            if ks_gaussian(&xs, 0.0, 1.0).unwrap().1 <= 1e-3 {
                failures += 1;
            }
        }
        assert!(failures <= 2, "{failures} of 200 seeds rejected");
        let mut rng = stream.substream(999);
        let shifted: Vec<f64> = (0..10_000).map(|_| 0.2 + standard_normal(&mut rng)).collect();
        assert!(ks_gaussian(&shifted, 0.0, 1.0).unwrap().1 < 1e-6);
        let (d, p) = ks_gaussian(&[50.0; 100], 0.0, 1.0).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(p, P_VALUE_FLOOR);
        assert!(ks_gaussian(&[0.0; 49], 0.0, 1.0).is_err());
        assert!(ks_gaussian(&[0.0; 60], 0.0, 0.0).is_err());
    }

    #[test]
    fn kolmogorov_series_values() {
        // Q(1.36) ≈ 0.0494 and Q(1.63) ≈ 0.0098, the classical 5% and 1% points
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 3e-4);
    }

    #[test]
    fn summaries() {
        let mk = |dev: f64| {
            CovarianceReport::new(
                vec!["a".into()],
                vec![vec![1.0 + dev]],
                vec![vec![1.0]],
                vec![vec![0.001]],
                meta(1000),
            )
            .unwrap()
        };
        assert!(summarize_convergence(&[]).is_err());
        let one = summarize_convergence(&[(1.0, mk(0.0))]).unwrap();
        assert_eq!(one.rows.len(), 1);
        let decay: Vec<(f64, CovarianceReport)> = [0.0f64, 0.5, 1.0, 2.0].iter().map(|&t| (t, mk((-3.0 * t).exp()))).collect();
        let s = summarize_convergence(&decay).unwrap();
        assert!(s.monotone);
        assert!(!s.rows[0].passed && s.rows[3].passed);
        let grow: Vec<(f64, CovarianceReport)> = [0.0, 1.0].iter().map(|&t| (t, mk(0.1 * t))).collect();
        assert!(!summarize_convergence(&grow).unwrap().monotone);
    }

    proptest! {
        #[test]
        fn pairwise_matches_exact_sum_of_integers(v in prop::collection::vec(-1000i32..1000, 0..300)) {
            let xs: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            prop_assert_eq!(pairwise_sum(&xs), v.iter().map(|&x| x as i64).sum::<i64>() as f64);
        }

        #[test]
        fn report_is_symmetric(seed in 0u64..1000) {
            let stream = RngStream::new(seed, 0);
            let r = estimate_covariance(
                |rng| { let a = standard_normal(rng); Ok(vec![a, a + standard_normal(rng), -a]) },
                vec!["a".into(), "b".into(), "c".into()],
                vec![vec![1.0, 1.0, -1.0], vec![1.0, 2.0, -1.0], vec![-1.0, -1.0, 1.0]],
                200,
                &stream,
                Centering::SampleMean,
                4.0,
            ).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(r.empirical[i][j], r.empirical[j][i]);
                    prop_assert_eq!(r.stderr[i][j], r.stderr[j][i]);
                }
            }
        }
    }
}
