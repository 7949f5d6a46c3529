//! Ensemble statistics checked against the analytic model.
//!
//! Covariances are estimated between a fixed anchor point and each point of a
//! straight segment, with no mean subtraction since simulated fields are zero
//! mean. The standard error of each estimate is the sample standard deviation of
//! the per-realization products divided by `sqrt(R)`.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::covariance::{AngularSpectrum, BallPoint, ProductCovariance};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRole};
use crate::sampler::{sample_degree, Ensemble};

/// Ensembles smaller than this are refused.
pub const MIN_REALIZATIONS: usize = 100;

/// Straight chord between two ball points sampled at equally spaced parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSpec {
    pub endpoint_a: BallPoint,
    pub endpoint_b: BallPoint,
    pub n_samples: usize,
}

impl SegmentSpec {
    pub fn new(endpoint_a: BallPoint, endpoint_b: BallPoint, n_samples: usize) -> Result<Self> {
        if n_samples < 2 {
            return Err(Error::config("validation.n_samples", "must be at least 2"));
        }
        Ok(Self {
            endpoint_a,
            endpoint_b,
            n_samples,
        })
    }

    /// `t_i = i / (n_samples - 1)`.
    pub fn parameters(&self) -> Vec<f64> {
        let last = (self.n_samples - 1) as f64;
        (0..self.n_samples).map(|i| i as f64 / last).collect()
    }
}

/// Points `(1 - t) x_a + t x_b` in Cartesian coordinates, one per parameter.
/// The first and last points are the endpoints themselves.
pub fn segment_points(spec: &SegmentSpec) -> Result<Vec<BallPoint>> {
    let a = spec.endpoint_a.to_cartesian();
    let b = spec.endpoint_b.to_cartesian();
    let params = spec.parameters();
    params
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i == 0 {
                Ok(spec.endpoint_a)
            } else if i + 1 == params.len() {
                Ok(spec.endpoint_b)
            } else {
                let x = [0, 1, 2].map(|c| (1.0 - t) * a[c] + t * b[c]);
                BallPoint::from_cartesian(x)
            }
        })
        .collect()
}

/// Pass rule for a covariance report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceRule {
    /// Per-point tolerance in standard errors.
    pub se_multiple: f64,
    /// Hard ceiling for the allowed excursions, in standard errors.
    pub excursion_limit: f64,
    /// One excursion is tolerated per this many points.
    pub points_per_excursion: usize,
}

impl ToleranceRule {
    pub fn new(se_multiple: f64) -> Self {
        Self {
            se_multiple,
            excursion_limit: se_multiple + 2.0,
            points_per_excursion: 21,
        }
    }

    pub fn allowed_excursions(&self, n_points: usize) -> usize {
        n_points.div_ceil(self.points_per_excursion.max(1))
    }
}

impl Default for ToleranceRule {
    fn default() -> Self {
        Self::new(4.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    pub estimated: f64,
    pub analytic: f64,
    pub stderr: f64,
    pub pass: bool,
}

impl ReportRow {
    /// `|estimated - analytic|` in standard-error units.
    pub fn deviation(&self) -> f64 {
        let diff = (self.estimated - self.analytic).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub rows: Vec<ReportRow>,
    pub max_abs_dev_in_se: f64,
}

impl CovarianceReport {
    fn from_rows(rows: Vec<ReportRow>) -> Self {
        let max_abs_dev_in_se = rows.iter().map(ReportRow::deviation).fold(0.0, f64::max);
        Self {
            rows,
            max_abs_dev_in_se,
        }
    }

    /// Overall verdict: at most the allowed number of failing points, none beyond
    /// the excursion limit.
    pub fn passes(&self, rule: &ToleranceRule) -> bool {
        let failures: Vec<&ReportRow> = self.rows.iter().filter(|r| !r.pass).collect();
        failures.len() <= rule.allowed_excursions(self.rows.len())
            && failures.iter().all(|r| r.deviation() <= rule.excursion_limit)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,estimated,analytic,stderr,pass")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.t, r.estimated, r.analytic, r.stderr, r.pass)?;
        }
        writeln!(out, "# max_abs_dev_in_se={}", self.max_abs_dev_in_se)
    }

    pub fn read_csv<R: BufRead>(input: R, path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::format(path, msg);
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad("empty report".into()))?
            .map_err(|e| Error::io(path, e))?;
        if header.trim() != "t,estimated,analytic,stderr,pass" {
            return Err(bad(format!("unexpected header `{header}`")));
        }
        let mut rows = Vec::new();
        let mut max_dev = None;
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if let Some(v) = line.strip_prefix("# max_abs_dev_in_se=") {
                max_dev = Some(v.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?);
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(bad(format!("expected 5 fields in `{line}`")));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
            rows.push(ReportRow {
                t: num(fields[0])?,
                estimated: num(fields[1])?,
                analytic: num(fields[2])?,
                stderr: num(fields[3])?,
                pass: fields[4]
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("bad pass flag `{}`", fields[4])))?,
            });
        }
        let max_abs_dev_in_se = max_dev.ok_or_else(|| bad("missing summary line".into()))?;
        Ok(Self {
            rows,
            max_abs_dev_in_se,
        })
    }
}

/// Covariance between ensemble column `anchor` and every column, compared with
/// the given analytic values (one per column).
pub fn estimate_covariance(
    ensemble: &Ensemble,
    anchor: usize,
    params: &[f64],
    analytic: &[f64],
    rule: &ToleranceRule,
) -> Result<CovarianceReport> {
    let r = ensemble.count();
    if r < MIN_REALIZATIONS {
        return Err(Error::TooFewRealizations {
            found: r,
            required: MIN_REALIZATIONS,
        });
    }
    let p = ensemble.n_points();
    for len in [params.len(), analytic.len()] {
        if len != p {
            return Err(Error::DimensionMismatch { expected: p, found: len });
        }
    }
    let anchor_values = ensemble.column(anchor);
    let rows = (0..p)
        .map(|i| {
            let products: Vec<f64> = anchor_values
                .iter()
                .zip(ensemble.values_at(i))
                .map(|(a, b)| a * b)
                .collect();
            let (mean, var) = mean_and_variance(&products);
            let mut row = ReportRow {
                t: params[i],
                estimated: mean,
                analytic: analytic[i],
                stderr: (var / r as f64).sqrt(),
                pass: false,
            };
            row.pass = row.deviation() <= rule.se_multiple;
            row
        })
        .collect();
    Ok(CovarianceReport::from_rows(rows))
}

/// Segment covariance report; ensemble columns must follow [`segment_points`] order.
pub fn estimate_segment_covariance(
    ensemble: &Ensemble,
    spec: &SegmentSpec,
    cov: &ProductCovariance,
    rule: &ToleranceRule,
) -> Result<CovarianceReport> {
    let points = segment_points(spec)?;
    let analytic = points
        .iter()
        .map(|p| cov.eval(&spec.endpoint_a, p))
        .collect::<Result<Vec<_>>>()?;
    estimate_covariance(ensemble, 0, &spec.parameters(), &analytic, rule)
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Sample moments of one point across an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased, `sum (x - mean)^2 / (R - 1)`.
    pub variance: f64,
    /// Adjusted Fisher–Pearson `G1 = g1 sqrt(R (R - 1)) / (R - 2)`.
    pub skewness: f64,
    /// `G2 = (R - 1) / ((R - 2)(R - 3)) ((R + 1) g2 + 6)`.
    pub excess_kurtosis: f64,
    /// Set when all values coincide; skewness and kurtosis are then NaN.
    pub degenerate: bool,
}

pub fn empirical_moments(values: &[f64]) -> Result<Moments> {
    if values.len() < MIN_REALIZATIONS {
        return Err(Error::TooFewRealizations {
            found: values.len(),
            required: MIN_REALIZATIONS,
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let variance = m2 * n / (n - 1.0);
    if m2 <= f64::EPSILON * f64::EPSILON * mean * mean || m2 == 0.0 {
        return Ok(Moments {
            mean,
            variance,
            skewness: f64::NAN,
            excess_kurtosis: f64::NAN,
            degenerate: true,
        });
    }
    let g1 = m3 / m2.powf(1.5);
    let g2 = m4 / (m2 * m2) - 3.0;
    Ok(Moments {
        mean,
        variance,
        skewness: g1 * (n * (n - 1.0)).sqrt() / (n - 2.0),
        excess_kurtosis: (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    /// 0.999 quantile of the chi-square distribution with `dof` degrees of freedom.
    pub threshold: f64,
}

impl ChiSquareOutcome {
    pub fn passed(&self) -> bool {
        self.statistic <= self.threshold
    }
}

/// Chi-square goodness of fit of observed degree counts against `a_n / A`.
///
/// Degrees whose expected count is below 10 are pooled into one tail bin; a tail
/// bin that is itself below 10 is merged into the last regular bin.
pub fn chi_square_degrees(spectrum: &AngularSpectrum, counts: &[u64]) -> ChiSquareOutcome {
    let total: u64 = counts.iter().sum();
    let expected_of = |n: usize| total as f64 * spectrum.probability(n);
    let len = counts.len().max(spectrum.n_max() + 1);
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut tail = (0.0, 0.0);
    for n in 0..len {
        let observed = counts.get(n).copied().unwrap_or(0) as f64;
        let expected = expected_of(n);
        if expected >= 10.0 {
            bins.push((observed, expected));
        } else {
            tail.0 += observed;
            tail.1 += expected;
        }
    }
    if tail.1 >= 10.0 || bins.is_empty() {
        bins.push(tail);
    } else if let Some(last) = bins.last_mut() {
        last.0 += tail.0;
        last.1 += tail.1;
    }
    let statistic = bins
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = bins.len() - 1;
    let threshold = if dof == 0 {
        0.0
    } else {
        ChiSquared::new(dof as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.999)
    };
    ChiSquareOutcome {
        statistic,
        dof,
        threshold,
    }
}

/// Chi-square test of `draws` degrees produced by `sampler`.
pub fn spectrum_frequency_test_with(
    spectrum: &AngularSpectrum,
    draws: usize,
    mut sampler: impl FnMut() -> usize,
) -> Result<ChiSquareOutcome> {
    if draws < 100_000 {
        return Err(Error::domain(format!("frequency test needs at least 1e5 draws, got {draws}")));
    }
    let mut counts = vec![0u64; spectrum.n_max() + 1];
    for _ in 0..draws {
        let n = sampler();
        if n >= counts.len() {
            counts.resize(n + 1, 0);
        }
        counts[n] += 1;
    }
    Ok(chi_square_degrees(spectrum, &counts))
}

/// Chi-square test of [`sample_degree`] on the degree stream of `seed`.
pub fn spectrum_frequency_test(spectrum: &AngularSpectrum, draws: usize, seed: u64) -> Result<ChiSquareOutcome> {
    let mut rng = stream(seed, 0, StreamRole::Degree);
    spectrum_frequency_test_with(spectrum, draws, || sample_degree(spectrum, &mut rng))
}

/// Largest deviation of order frequencies from `1/(2n+1)`, in binomial standard errors.
pub fn order_uniformity_deviation(n: usize, draws: usize, rng: &mut impl Rng) -> f64 {
    let bins = 2 * n + 1;
    let mut counts = vec![0u64; bins];
    for _ in 0..draws {
        counts[(crate::sampler::sample_order(n, rng) + n as i64) as usize] += 1;
    }
    let p = 1.0 / bins as f64;
    let se = (p * (1.0 - p) / draws as f64).sqrt();
    counts
        .iter()
        .map(|&c| (c as f64 / draws as f64 - p).abs() / se)
        .fold(0.0, f64::max)
}
