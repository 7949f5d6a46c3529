//! Radial covariance matrices and their correlating factors.
//!
//! The radial grid carries the only radii at which a ball field is simulated;
//! there is no interpolation between grid radii. Two factorizations are offered:
//! a Cholesky factor `C = L L^T` and a (possibly truncated) Karhunen–Loève factor
//! `C = V D V^T` with eigenvectors stored as the columns of `V`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::covariance::RadialCovarianceModel;
use crate::error::{Error, Result};

/// Strictly increasing radii in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    radii: Vec<f64>,
}

impl RadialGrid {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::domain("radial grid needs at least one radius"));
        }
        if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(Error::domain(format!("radius {r} outside (0, 1]")));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("radii must be strictly increasing"));
        }
        Ok(Self { radii })
    }

    /// `r_i = i / m` for `i = 1..=m`.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|i| i as f64 / m as f64).collect())
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Index of a radius equal to `r` within `tol`.
    pub fn position(&self, r: f64, tol: f64) -> Option<usize> {
        let i = self.radii.partition_point(|&x| x < r - tol);
        (i < self.radii.len() && (self.radii[i] - r).abs() <= tol).then_some(i)
    }
}

/// Symmetric matrix of radial covariances `C_r(r_i, r_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialCovMatrix {
    entries: DMatrix<f64>,
}

impl RadialCovMatrix {
    /// Wraps an arbitrary square matrix, which must be exactly symmetric.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries != entries.transpose() {
            return Err(Error::domain("covariance matrix is not symmetric"));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

pub fn build_radial_matrix(grid: &RadialGrid, model: &RadialCovarianceModel) -> RadialCovMatrix {
    let m = grid.len();
    let r = grid.radii();
    let mut entries = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let c = model.eval(r[i], r[j]);
            entries[(i, j)] = c;
            entries[(j, i)] = c;
        }
    }
    RadialCovMatrix { entries }
}

/// Diagonal jitter schedule for near-singular matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    /// First jitter as a multiple of `trace / M`.
    pub initial_relative: f64,
    pub growth: f64,
    pub max_retries: usize,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self {
            initial_relative: 1e-12,
            growth: 10.0,
            max_retries: 3,
        }
    }
}

impl JitterPolicy {
    pub fn none() -> Self {
        Self {
            max_retries: 0,
            ..Self::default()
        }
    }
}

/// Lower-triangular `L` with `L L^T = C + jitter * I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
    jitter_applied: f64,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn correlate(&self, white: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.correlate_into(white, &mut out)?;
        Ok(out)
    }

    pub fn correlate_into(&self, white: &[f64], out: &mut [f64]) -> Result<()> {
        let m = self.dim();
        check_len(m, white.len())?;
        check_len(m, out.len())?;
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..=i).map(|j| self.lower[(i, j)] * white[j]).sum();
        }
        Ok(())
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Plain Cholesky–Banachiewicz; `Err(row, pivot)` on the first non-positive pivot.
fn try_cholesky(a: &DMatrix<f64>, jitter: f64) -> std::result::Result<DMatrix<f64>, (usize, f64)> {
    let m = a.nrows();
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[(i, j)];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                // Pivots at rounding level mean the matrix is numerically singular.
                if !(s > f64::EPSILON * m as f64 * (a[(i, i)] + jitter)) {
                    return Err((i, s));
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Cholesky factorization with escalating diagonal jitter on failure.
pub fn cholesky(cov: &RadialCovMatrix, policy: JitterPolicy) -> Result<CholeskyFactor> {
    let a = cov.entries();
    let mut jitter = 0.0;
    let mut next = policy.initial_relative * cov.trace() / cov.dim().max(1) as f64;
    let mut attempt = 0;
    loop {
        match try_cholesky(a, jitter) {
            Ok(lower) => {
                return Ok(CholeskyFactor {
                    lower,
                    jitter_applied: jitter,
                })
            }
            Err((row, pivot)) => {
                if attempt == policy.max_retries {
                    return Err(Error::NotPositiveDefinite { row, pivot, jitter });
                }
                attempt += 1;
                jitter = next;
                next *= policy.growth;
            }
        }
    }
}

/// Eigenpairs of a radial covariance matrix sorted by decreasing eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct KlFactor {
    eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, in the same order as `eigenvalues`.
    eigenvectors: DMatrix<f64>,
    retained: usize,
    trace: f64,
}

impl KlFactor {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Number of retained eigenpairs, `M_1`.
    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Share of the trace carried by the retained eigenvalues.
    pub fn trace_fraction(&self) -> f64 {
        if self.trace == 0.0 {
            return 1.0;
        }
        self.eigenvalues[..self.retained].iter().sum::<f64>() / self.trace
    }

    /// `sum_{i <= M_1} lambda_i v_i v_i^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut c = DMatrix::zeros(m, m);
        for i in 0..self.retained {
            let v = self.eigenvectors.column(i);
            c += self.eigenvalues[i] * &v * v.transpose();
        }
        c
    }

    /// `sum_{i <= M_1} sqrt(lambda_i) v_i white_i`.
    pub fn correlate(&self, white: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.correlate_into(white, &mut out)?;
        Ok(out)
    }

    pub fn correlate_into(&self, white: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.retained, white.len())?;
        check_len(self.dim(), out.len())?;
        out.fill(0.0);
        for (i, w) in white.iter().enumerate() {
            let scale = self.eigenvalues[i].sqrt() * w;
            for (o, v) in out.iter_mut().zip(self.eigenvectors.column(i).iter()) {
                *o += scale * v;
            }
        }
        Ok(())
    }

    /// Writes `i,lambda_i,cumulative_fraction` rows (1-based `i`).
    pub fn write_eigen_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,lambda_i,cumulative_fraction")?;
        let mut acc = 0.0;
        for (i, l) in self.eigenvalues.iter().enumerate() {
            acc += l;
            let frac = if self.trace > 0.0 { acc / self.trace } else { 1.0 };
            writeln!(out, "{},{l},{frac}", i + 1)?;
        }
        Ok(())
    }
}

/// Full symmetric eigendecomposition; tiny negative eigenvalues are clamped to 0.
pub fn eigendecompose(cov: &RadialCovMatrix) -> Result<KlFactor> {
    let trace = cov.trace();
    let tolerance = 1e-12 * trace.abs();
    let eig = SymmetricEigen::new(cov.entries().clone());
    let mut order: Vec<usize> = (0..cov.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut eigenvalues = Vec::with_capacity(order.len());
    for &i in &order {
        let l = eig.eigenvalues[i];
        if l < -tolerance {
            return Err(Error::IndefiniteMatrix {
                eigenvalue: l,
                tolerance: -tolerance,
            });
        }
        eigenvalues.push(l.max(0.0));
    }
    let columns: Vec<DVector<f64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let eigenvectors = DMatrix::from_columns(&columns);
    Ok(KlFactor {
        retained: eigenvalues.len(),
        eigenvalues,
        eigenvectors,
        trace,
    })
}

/// Keeps the smallest leading set of eigenpairs whose sum reaches `fraction` of the trace.
pub fn truncate_kl(factor: &KlFactor, fraction: f64) -> Result<KlFactor> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::domain(format!("KL fraction {fraction} outside (0, 1]")));
    }
    let m = factor.dim();
    let retained = if fraction == 1.0 {
        m
    } else {
        let target = fraction * factor.trace;
        let mut acc = 0.0;
        factor
            .eigenvalues
            .iter()
            .position(|l| {
                acc += l;
                acc >= target
            })
            .map_or(m, |i| i + 1)
    };
    Ok(KlFactor {
        retained,
        ..factor.clone()
    })
}

/// A correlating factor for per-term radial white noise.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialFactor {
    Cholesky(CholeskyFactor),
    Kl(KlFactor),
}

impl RadialFactor {
    /// Number of radii the factor produces values for.
    pub fn dim(&self) -> usize {
        match self {
            RadialFactor::Cholesky(f) => f.dim(),
            RadialFactor::Kl(f) => f.dim(),
        }
    }

    /// Length of the white-noise vector consumed by [`RadialFactor::correlate`].
    pub fn white_len(&self) -> usize {
        match self {
            RadialFactor::Cholesky(f) => f.dim(),
            RadialFactor::Kl(f) => f.retained(),
        }
    }

    pub fn correlate(&self, white: &[f64]) -> Result<Vec<f64>> {
        match self {
            RadialFactor::Cholesky(f) => f.correlate(white),
            RadialFactor::Kl(f) => f.correlate(white),
        }
    }

    pub fn correlate_into(&self, white: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            RadialFactor::Cholesky(f) => f.correlate_into(white, out),
            RadialFactor::Kl(f) => f.correlate_into(white, out),
        }
    }

    /// The 1x1 factor `[1]`, which makes a single-shell ball field a sphere field.
    pub fn unit() -> Self {
        RadialFactor::Cholesky(CholeskyFactor {
            lower: DMatrix::identity(1, 1),
            jitter_applied: 0.0,
        })
    }
}

pub fn correlate(factor: &RadialFactor, white: &[f64]) -> Result<Vec<f64>> {
    factor.correlate(white)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    fn matrix(rows: &[&[f64]]) -> RadialCovMatrix {
        let m = rows.len();
        RadialCovMatrix::from_matrix(DMatrix::from_fn(m, m, |i, j| rows[i][j])).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    fn random_exponential_matrix(m: usize, seed: u64) -> RadialCovMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut radii: Vec<f64> = Uniform::new(0.001, 1.0)
            .unwrap()
            .sample_iter(&mut rng)
            .take(m)
            .collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let grid = RadialGrid::new(radii).unwrap();
        build_radial_matrix(&grid, &RadialCovarianceModel::exponential(1.0, 0.15).unwrap())
    }

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(vec![]).is_err());
        assert!(RadialGrid::new(vec![0.0, 0.5]).is_err());
        assert!(RadialGrid::new(vec![0.5, 0.5]).is_err());
        assert!(RadialGrid::new(vec![0.5, 1.1]).is_err());
        let g = RadialGrid::uniform(4).unwrap();
        assert_eq!(g.radii(), &[0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.position(0.75, 1e-12), Some(2));
        assert_eq!(g.position(0.7, 1e-12), None);
    }

    #[test]
    fn build_examples() {
        let unit = RadialCovarianceModel::exponential(1.0, 0.15).unwrap();
        let c = build_radial_matrix(&RadialGrid::new(vec![0.5]).unwrap(), &unit);
        assert_eq!(c.entries()[(0, 0)], 1.0);
        let c = build_radial_matrix(&RadialGrid::new(vec![0.5, 1.0]).unwrap(), &unit);
        assert_abs_diff_eq!(c.entries()[(0, 1)], 0.035_674_0, epsilon = 1e-7);
        assert_eq!(c.entries()[(0, 1)], c.entries()[(1, 0)]);
        let two = RadialCovarianceModel::exponential(2.0, 0.3).unwrap();
        let c = build_radial_matrix(&RadialGrid::uniform(7).unwrap(), &two);
        assert!(c.entries().diagonal().iter().all(|&d| d == 4.0));
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&matrix(&[&[1.0, 0.5], &[0.5, 1.0]]), JitterPolicy::default()).unwrap();
        assert_abs_diff_eq!(l.lower()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_eq!(l.lower()[(0, 1)], 0.0);
        assert_abs_diff_eq!(l.lower()[(1, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(l.lower()[(1, 1)], 0.866_025_4, epsilon = 1e-7);
        assert_eq!(l.jitter_applied(), 0.0);

        let id = RadialCovMatrix::from_matrix(DMatrix::identity(5, 5)).unwrap();
        assert_eq!(cholesky(&id, JitterPolicy::default()).unwrap().lower(), &DMatrix::identity(5, 5));
    }

    #[test]
    fn duplicated_radii_are_repaired_or_rejected() {
        let unit = RadialCovarianceModel::exponential(1.0, 0.15).unwrap();
        let radii = [0.3, 0.6, 0.6, 0.9];
        let c = RadialCovMatrix::from_matrix(DMatrix::from_fn(4, 4, |i, j| {
            unit.eval(radii[i], radii[j])
        }))
        .unwrap();
        match cholesky(&c, JitterPolicy::default()) {
            Ok(f) => assert!(f.jitter_applied() > 0.0),
            Err(e) => assert!(matches!(e, Error::NotPositiveDefinite { .. })),
        }
        assert!(matches!(
            cholesky(&c, JitterPolicy::none()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn indefinite_matrix_fails_everywhere() {
        let c = matrix(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            cholesky(&c, JitterPolicy::default()),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(eigendecompose(&c), Err(Error::IndefiniteMatrix { .. })));
        assert!(RadialCovMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0])).is_err());
    }

    #[test]
    fn eigen_examples() {
        let kl = eigendecompose(&matrix(&[&[1.0, 0.5], &[0.5, 1.0]])).unwrap();
        assert_abs_diff_eq!(kl.eigenvalues()[0], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(kl.eigenvalues()[1], 0.5, epsilon = 1e-14);

        let id = eigendecompose(&RadialCovMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap()).unwrap();
        assert!(id.eigenvalues().iter().all(|&l| (l - 1.0).abs() < 1e-14));

        let diag = matrix(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 3.0, 0.0, 0.0],
            &[0.0, 0.0, 4.0, 0.0],
            &[0.0, 0.0, 0.0, 2.0],
        ]);
        let kl = eigendecompose(&diag).unwrap();
        assert_eq!(kl.eigenvalues(), &[4.0, 3.0, 2.0, 1.0]);
        for (col, axis) in [2, 1, 3, 0].into_iter().enumerate() {
            assert_abs_diff_eq!(kl.eigenvectors()[(axis, col)].abs(), 1.0, epsilon = 1e-14);
        }
    }

    fn diag4321() -> KlFactor {
        eigendecompose(&matrix(&[
            &[4.0, 0.0, 0.0, 0.0],
            &[0.0, 3.0, 0.0, 0.0],
            &[0.0, 0.0, 2.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]))
        .unwrap()
    }

    /// Prefix-sum walk, independent of `truncate_kl`.
    fn retained_oracle(eigenvalues: &[f64], fraction: f64) -> usize {
        let total: f64 = eigenvalues.iter().sum();
        let mut sum = 0.0;
        for (i, l) in eigenvalues.iter().enumerate() {
            sum += l;
            if sum >= fraction * total {
                return i + 1;
            }
        }
        eigenvalues.len()
    }

    #[test]
    fn truncation_examples() {
        let kl = diag4321();
        assert_eq!(truncate_kl(&kl, 0.95).unwrap().retained(), 4);
        assert_eq!(truncate_kl(&kl, 0.7).unwrap().retained(), 2);
        assert_eq!(truncate_kl(&kl, 1.0).unwrap().retained(), 4);
        assert_eq!(retained_oracle(kl.eigenvalues(), 0.95), 4);
        assert_eq!(retained_oracle(kl.eigenvalues(), 0.7), 2);
        assert!(truncate_kl(&kl, 0.0).is_err());
        assert!(truncate_kl(&kl, 1.5).is_err());
    }

    #[test]
    fn correlate_examples() {
        let id = RadialFactor::Cholesky(
            cholesky(&RadialCovMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap(), JitterPolicy::default())
                .unwrap(),
        );
        assert_eq!(correlate(&id, &[0.3, -1.0, 2.0]).unwrap(), vec![0.3, -1.0, 2.0]);

        let l = RadialFactor::Cholesky(
            cholesky(&matrix(&[&[1.0, 0.5], &[0.5, 1.0]]), JitterPolicy::default()).unwrap(),
        );
        assert_eq!(correlate(&l, &[1.0, 0.0]).unwrap(), vec![1.0, 0.5]);
        assert!(matches!(correlate(&l, &[1.0]), Err(Error::DimensionMismatch { .. })));

        let kl = RadialFactor::Kl(truncate_kl(&diag4321(), 0.7).unwrap());
        assert_eq!(kl.white_len(), 2);
        let out = correlate(&kl, &[1.0, 1.0]).unwrap();
        let expected = [2.0, 3.0f64.sqrt(), 0.0, 0.0];
        for (o, e) in out.iter().zip(expected) {
            assert_abs_diff_eq!(o.abs(), e, epsilon = 1e-14);
        }
    }

    #[test]
    fn reconstruction_on_exponential_matrices() {
        for (m, seed) in [(2, 1), (20, 2), (200, 3)] {
            let c = random_exponential_matrix(m, seed);
            let l = cholesky(&c, JitterPolicy::default()).unwrap();
            let err = max_abs(&(l.lower() * l.lower().transpose() - c.entries()));
            assert!(err <= 1e-10, "cholesky M={m}: {err}");
            assert!(l.lower().diagonal().iter().all(|&d| d > 0.0));

            let kl = eigendecompose(&c).unwrap();
            let err = max_abs(&(kl.reconstruct() - c.entries()));
            assert!(err <= 1e-10, "kl M={m}: {err}");
            let gram = kl.eigenvectors().transpose() * kl.eigenvectors();
            assert!(max_abs(&(gram - DMatrix::identity(kl.dim(), kl.dim()))) <= 1e-10);
            assert!(kl.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn truncation_error_is_tail_energy() {
        let c = random_exponential_matrix(60, 9);
        let kl = eigendecompose(&c).unwrap();
        for fraction in [0.5, 0.8, 0.95, 0.99] {
            let t = truncate_kl(&kl, fraction).unwrap();
            assert!(t.trace_fraction() >= fraction);
            assert_eq!(t.retained(), retained_oracle(kl.eigenvalues(), fraction));
            let residual = (c.entries() - t.reconstruct()).norm_squared();
            let tail: f64 = kl.eigenvalues()[t.retained()..].iter().map(|l| l * l).sum();
            assert!((residual - tail).abs() <= 1e-8 * tail.max(1e-300), "{residual} vs {tail}");
        }
    }

    #[test]
    fn sample_covariance_of_correlated_noise() {
        let grid = RadialGrid::new(vec![0.2, 0.35, 0.5, 0.8, 1.0]).unwrap();
        let c = build_radial_matrix(&grid, &RadialCovarianceModel::exponential(1.5, 0.2).unwrap());
        let factors = [
            RadialFactor::Cholesky(cholesky(&c, JitterPolicy::default()).unwrap()),
            RadialFactor::Kl(eigendecompose(&c).unwrap()),
        ];
        let draws = 100_000;
        for factor in &factors {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let m = grid.len();
            let mut acc = DMatrix::<f64>::zeros(m, m);
            let mut white = vec![0.0; factor.white_len()];
            for _ in 0..draws {
                white.iter_mut().for_each(|w| *w = StandardNormal.sample(&mut rng));
                let x = DVector::from_vec(factor.correlate(&white).unwrap());
                acc += &x * x.transpose();
            }
            acc /= draws as f64;
            let e = c.entries();
            for i in 0..m {
                for j in 0..m {
                    let tol = 5.0 * ((e[(i, i)] * e[(j, j)] + e[(i, j)].powi(2)) / draws as f64).sqrt();
                    assert!((acc[(i, j)] - e[(i, j)]).abs() <= tol, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn eigen_csv_dump() {
        let mut out = Vec::new();
        diag4321().write_eigen_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "i,lambda_i,cumulative_fraction\n1,4,0.4\n2,3,0.7\n3,2,0.9\n4,1,1\n");
    }
}
