//! Legendre polynomials, associated Legendre functions and complex spherical
//! harmonics.
//!
//! Associated Legendre functions include the Condon–Shortley phase `(-1)^k`.
//! Spherical harmonics are orthonormal on the unit sphere:
//!
//! ```text
//! Y_n^k(phi, theta) = sqrt((2n+1)/(4 pi) * (n-k)!/(n+k)!) * P_n^k(cos theta) * exp(i k phi)
//! ```

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest spherical-harmonic degree accepted anywhere in the crate.
pub const N_MAX_CAP: usize = 512;

/// A direction on the unit sphere: longitude `phi` and colatitude `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalDirection {
    pub phi: f64,
    pub theta: f64,
}

impl SphericalDirection {
    /// Checked constructor: `0 <= phi < 2 pi`, `0 <= theta <= pi`.
    pub fn new(phi: f64, theta: f64) -> Result<Self> {
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::domain(format!("longitude {phi} outside [0, 2pi)")));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::domain(format!("colatitude {theta} outside [0, pi]")));
        }
        Ok(Self { phi, theta })
    }

    /// Like [`SphericalDirection::new`] but wraps any finite longitude into `[0, 2 pi)`.
    pub fn wrapped(phi: f64, theta: f64) -> Result<Self> {
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Self::new(phi, theta)
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (sp, cp) = self.phi.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        [cp * st, sp * st, ct]
    }

    /// Direction of a non-zero vector. The zero vector maps to the north pole.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm == 0.0 {
            return Self { phi: 0.0, theta: 0.0 };
        }
        let theta = (v[2] / norm).clamp(-1.0, 1.0).acos();
        let mut phi = v[1].atan2(v[0]).rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Self { phi, theta }
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if x.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "Legendre argument {x} outside [-1, 1] (not a cosine)"
        )))
    }
}

/// Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre_poly(n: usize, x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    let (mut prev, mut cur) = (0.0, 1.0);
    for m in 1..=n {
        let m = m as f64;
        let next = ((2.0 * m - 1.0) * x * cur - (m - 1.0) * prev) / m;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `sum_n coefficients[n] * P_n(x)` with a single pass of the recurrence.
pub fn legendre_series(coefficients: &[f64], x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    let mut sum = 0.0;
    let (mut prev, mut cur) = (0.0, 1.0);
    for (n, &a) in coefficients.iter().enumerate() {
        if n > 0 {
            let m = n as f64;
            let next = ((2.0 * m - 1.0) * x * cur - (m - 1.0) * prev) / m;
            prev = cur;
            cur = next;
        }
        sum += a * cur;
    }
    Ok(sum)
}

/// Associated Legendre function `P_n^k(x)`, Condon–Shortley phase included,
/// for `0 <= k <= n`.
///
/// Unnormalized values grow like `(2n-1)!!`; use [`sph_harm`] for large degrees.
pub fn assoc_legendre(n: usize, k: usize, x: f64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("order {k} exceeds degree {n}")));
    }
    check_unit_interval(x)?;
    // P_k^k = (-1)^k (2k-1)!! (1-x^2)^(k/2)
    let s = ((1.0 - x) * (1.0 + x)).sqrt();
    let mut pkk = 1.0;
    for i in 1..=k {
        pkk *= -((2 * i - 1) as f64) * s;
    }
    if n == k {
        return Ok(pkk);
    }
    let (mut prev, mut cur) = (pkk, (2 * k + 1) as f64 * x * pkk);
    for m in (k + 2)..=n {
        let next =
            ((2 * m - 1) as f64 * x * cur - (m + k - 1) as f64 * prev) / (m - k) as f64;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `ln |Pbar_k^k|` without the `(1-x^2)^(k/2)` factor, where `Pbar` carries the
/// spherical-harmonic normalization.
fn log_sectoral_constant(k: usize) -> f64 {
    let kf = k as f64;
    0.5 * ((2.0 * kf + 1.0) / (4.0 * PI)).ln() + 0.5 * ln_gamma(2.0 * kf + 1.0)
        - kf * LN_2
        - ln_gamma(kf + 1.0)
}

fn recurrence_coefficient(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    ((4.0 * n * n - 1.0) / (n * n - k * k)).sqrt()
}

fn sectoral(k: usize, log_constant: f64, ln_sin2: f64) -> f64 {
    let magnitude = if k == 0 {
        log_constant.exp()
    } else {
        (log_constant + 0.5 * k as f64 * ln_sin2).exp()
    };
    if k % 2 == 1 {
        -magnitude
    } else {
        magnitude
    }
}

/// `sqrt((2n+1)/(4 pi) (n-k)!/(n+k)!) P_n^k(x)` for `0 <= k <= n`, evaluated by the
/// normalized upward recurrence so that no factorial is ever formed.
fn normalized_assoc(n: usize, k: usize, x: f64) -> f64 {
    let ln_sin2 = ((1.0 - x) * (1.0 + x)).ln();
    let mut prev = 0.0;
    let mut cur = sectoral(k, log_sectoral_constant(k), ln_sin2);
    let mut a_prev = f64::INFINITY;
    for m in (k + 1)..=n {
        let a = recurrence_coefficient(m, k);
        let next = a * (x * cur - prev / a_prev);
        prev = cur;
        cur = next;
        a_prev = a;
    }
    cur
}

/// Fully normalized complex spherical harmonic `Y_n^k(phi, theta)`, `-n <= k <= n`.
pub fn sph_harm(n: usize, k: i64, dir: &SphericalDirection) -> Result<Complex64> {
    let order = k.unsigned_abs() as usize;
    if order > n {
        return Err(Error::domain(format!("|order| {order} exceeds degree {n}")));
    }
    let p = normalized_assoc(n, order, dir.theta.cos());
    let (s, c) = (order as f64 * dir.phi).sin_cos();
    let y = Complex64::new(p * c, p * s);
    if k >= 0 {
        Ok(y)
    } else if order.is_multiple_of(2) {
        Ok(y.conj())
    } else {
        Ok(-y.conj())
    }
}

/// Precomputed recurrence coefficients for normalized associated Legendre
/// functions up to a fixed degree. Shared read-only by sampler threads.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    n_max: usize,
    log_sectoral: Vec<f64>,
    // Triangular storage indexed by n(n+1)/2 + k.
    coeff: Vec<f64>,
    inv_coeff: Vec<f64>,
}

impl LegendreTable {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max > N_MAX_CAP {
            return Err(Error::domain(format!(
                "degree {n_max} exceeds the cap {N_MAX_CAP}"
            )));
        }
        let log_sectoral = (0..=n_max).map(log_sectoral_constant).collect();
        let size = (n_max + 1) * (n_max + 2) / 2;
        let mut coeff = vec![0.0; size];
        let mut inv_coeff = vec![0.0; size];
        for n in 0..=n_max {
            for k in 0..n {
                let a = recurrence_coefficient(n, k);
                coeff[Self::index(n, k)] = a;
                inv_coeff[Self::index(n, k)] = 1.0 / a;
            }
        }
        Ok(Self {
            n_max,
            log_sectoral,
            coeff,
            inv_coeff,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn index(n: usize, k: usize) -> usize {
        n * (n + 1) / 2 + k
    }

    /// Normalized `Pbar_n^k(x)` given `ln_sin2 = ln(1 - x^2)`.
    pub fn eval(&self, n: usize, k: usize, x: f64, ln_sin2: f64) -> f64 {
        debug_assert!(k <= n && n <= self.n_max);
        let mut prev = 0.0;
        let mut cur = sectoral(k, self.log_sectoral[k], ln_sin2);
        for m in (k + 1)..=n {
            let idx = Self::index(m, k);
            // inv_coeff at (k, k) is unused since prev == 0 there.
            let back = if m == k + 1 {
                0.0
            } else {
                prev * self.inv_coeff[idx - m]
            };
            let next = self.coeff[idx] * (x * cur - back);
            prev = cur;
            cur = next;
        }
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_poly(0, 0.37).unwrap(), 1.0);
        assert_eq!(legendre_poly(1, 0.3).unwrap(), 0.3);
        assert_abs_diff_eq!(legendre_poly(2, 0.5).unwrap(), -0.125, epsilon = 1e-15);
        for n in 0..40 {
            assert_eq!(legendre_poly(n, 1.0).unwrap(), 1.0);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(legendre_poly(n, -1.0).unwrap(), sign);
        }
        assert!(matches!(legendre_poly(3, 1.0001), Err(Error::Domain(_))));
    }

    #[test]
    fn series_matches_termwise_sum() {
        let coeffs: Vec<f64> = (0..30).map(|n| 0.8f64.powi(n)).collect();
        for &x in &[-1.0, -0.3, 0.0, 0.77, 1.0] {
            let direct: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(n, a)| a * legendre_poly(n, x).unwrap())
                .sum();
            assert_abs_diff_eq!(legendre_series(&coeffs, x).unwrap(), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn assoc_legendre_examples() {
        assert_eq!(
            assoc_legendre(3, 0, 0.6).unwrap(),
            legendre_poly(3, 0.6).unwrap()
        );
        assert_abs_diff_eq!(assoc_legendre(1, 1, 0.0).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(assoc_legendre(2, 2, 0.0).unwrap(), 3.0, epsilon = 1e-15);
        // P_3^1(x) = -3/2 (5x^2 - 1) sqrt(1 - x^2)
        let x: f64 = 0.4;
        let expected = -1.5 * (5.0 * x * x - 1.0) * (1.0 - x * x).sqrt();
        assert_abs_diff_eq!(assoc_legendre(3, 1, x).unwrap(), expected, epsilon = 1e-14);
        assert!(assoc_legendre(2, 3, 0.1).is_err());
        assert!(assoc_legendre(2, 1, -1.5).is_err());
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn normalized_recurrence_matches_factorial_route() {
        for n in 0..=15 {
            for k in 0..=n {
                for &x in &[-0.95, -0.2, 0.0, 0.5, 0.99] {
                    let norm = ((2 * n + 1) as f64 / (4.0 * PI) * factorial(n - k)
                        / factorial(n + k))
                    .sqrt();
                    let expected = norm * assoc_legendre(n, k, x).unwrap();
                    let got = normalized_assoc(n, k, x);
                    assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let table = LegendreTable::new(60).unwrap();
        for n in [0, 1, 2, 7, 33, 60] {
            for k in 0..=n {
                for &x in &[-1.0f64, -0.4, 0.1, 0.9, 1.0] {
                    let ln_sin2 = ((1.0 - x) * (1.0 + x)).ln();
                    assert_abs_diff_eq!(
                        table.eval(n, k, x, ln_sin2),
                        normalized_assoc(n, k, x),
                        epsilon = 1e-12
                    );
                }
            }
        }
        assert!(LegendreTable::new(N_MAX_CAP + 1).is_err());
    }

    #[test]
    fn sph_harm_examples() {
        let dir = SphericalDirection::new(1.2, 0.7).unwrap();
        let y00 = sph_harm(0, 0, &dir).unwrap();
        assert_abs_diff_eq!(y00.re, 0.282_094_791_773_878_1, epsilon = 1e-15);
        assert_eq!(y00.im, 0.0);

        let pole = SphericalDirection::new(0.0, 0.0).unwrap();
        let y10 = sph_harm(1, 0, &pole).unwrap();
        assert_abs_diff_eq!(y10.re, (3.0 / (4.0 * PI)).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(y10.re, 0.488_602_511_902_919_9, epsilon = 1e-15);

        let shifted = SphericalDirection {
            phi: dir.phi + TAU,
            ..dir
        };
        let a = sph_harm(5, 3, &dir).unwrap();
        let b = sph_harm(5, 3, &shifted).unwrap();
        assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-13);
        assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-13);

        assert!(sph_harm(2, -3, &dir).is_err());
    }

    #[test]
    fn sph_harm_high_degree_is_finite() {
        let dir = SphericalDirection::new(0.3, 1.1).unwrap();
        for k in [0, 100, 300, 512] {
            let y = sph_harm(512, k, &dir).unwrap();
            assert!(y.re.is_finite() && y.im.is_finite());
            assert!(y.norm() < 20.0);
        }
    }

    fn random_direction(rng: &mut ChaCha8Rng) -> SphericalDirection {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        SphericalDirection::new(phi, z.acos()).unwrap()
    }

    #[test]
    fn conjugation_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let dir = random_direction(&mut rng);
            let n = rng.random_range(0..40usize);
            let k = rng.random_range(0..=n) as i64;
            let pos = sph_harm(n, k, &dir).unwrap();
            let neg = sph_harm(n, -k, &dir).unwrap();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(neg.re, sign * pos.conj().re, epsilon = 1e-15);
            assert_abs_diff_eq!(neg.im, sign * pos.conj().im, epsilon = 1e-15);
        }
    }

    #[test]
    fn magnitude_is_independent_of_longitude() {
        for phi in [0.0, 0.5, 2.0, 6.0] {
            let a = sph_harm(9, -4, &SphericalDirection::new(phi, 0.8).unwrap()).unwrap();
            let b = sph_harm(9, -4, &SphericalDirection::new(0.0, 0.8).unwrap()).unwrap();
            assert_abs_diff_eq!(a.norm(), b.norm(), epsilon = 1e-14);
        }
    }

    #[test]
    fn addition_theorem() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = random_direction(&mut rng);
            let y = random_direction(&mut rng);
            let ux = x.unit_vector();
            let uy = y.unit_vector();
            let dot = (ux[0] * uy[0] + ux[1] * uy[1] + ux[2] * uy[2]).clamp(-1.0, 1.0);
            for n in 0..=30usize {
                let mut sum = Complex64::new(0.0, 0.0);
                for k in -(n as i64)..=(n as i64) {
                    sum += sph_harm(n, k, &x).unwrap() * sph_harm(n, k, &y).unwrap().conj();
                }
                let lhs = 4.0 * PI / (2 * n + 1) as f64 * sum.re;
                assert!((lhs - legendre_poly(n, dot).unwrap()).abs() <= 1e-10);
                assert!(sum.im.abs() <= 1e-10);
            }
        }
    }

    /// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
    fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let p = legendre_poly(m, x).unwrap();
                let p1 = legendre_poly(m - 1, x).unwrap();
                dp = m as f64 * (x * p - p1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        (nodes, weights)
    }

    #[test]
    fn orthonormality_by_quadrature() {
        let (nodes, weights) = gauss_legendre(16);
        let n_phi = 32;
        let mut pairs = Vec::new();
        for n in 0..=10usize {
            for k in -(n as i64)..=(n as i64) {
                pairs.push((n, k));
            }
        }
        let grid: Vec<(SphericalDirection, f64)> = nodes
            .iter()
            .zip(&weights)
            .flat_map(|(&x, &w)| {
                (0..n_phi).map(move |j| {
                    let phi = TAU * j as f64 / n_phi as f64;
                    (
                        SphericalDirection::new(phi, x.acos()).unwrap(),
                        w * TAU / n_phi as f64,
                    )
                })
            })
            .collect();
        let values: Vec<Vec<Complex64>> = pairs
            .iter()
            .map(|&(n, k)| grid.iter().map(|(d, _)| sph_harm(n, k, d).unwrap()).collect())
            .collect();
        for (i, a) in values.iter().enumerate() {
            for (j, b) in values.iter().enumerate().skip(i) {
                let integral: Complex64 = a
                    .iter()
                    .zip(b)
                    .zip(&grid)
                    .map(|((ya, yb), (_, w))| ya * yb.conj() * *w)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (integral.re - expected).abs() < 1e-8 && integral.im.abs() < 1e-8,
                    "pair {:?} {:?}: {integral}",
                    pairs[i],
                    pairs[j]
                );
            }
        }
    }

    #[test]
    fn direction_round_trip() {
        let d = SphericalDirection::new(4.0, 2.5).unwrap();
        let back = SphericalDirection::from_vector(d.unit_vector());
        assert_abs_diff_eq!(back.phi, d.phi, epsilon = 1e-12);
        assert_abs_diff_eq!(back.theta, d.theta, epsilon = 1e-12);
        assert!(SphericalDirection::new(TAU, 0.1).is_err());
        assert!(SphericalDirection::new(0.0, -0.1).is_err());
        let w = SphericalDirection::wrapped(-0.5, 1.0).unwrap();
        assert_abs_diff_eq!(w.phi, TAU - 0.5, epsilon = 1e-15);
    }
}
