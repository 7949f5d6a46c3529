//! Radial, angular and product covariance models.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::special::{legendre_series, SphericalDirection, N_MAX_CAP};

/// Tail bound used to pick the default truncation of a geometric spectrum.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

/// Exponential radial covariance `sigma^2 exp(-|r_x - r_y| / I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialCovarianceModel {
    sigma: f64,
    corr_length: f64,
}

impl RadialCovarianceModel {
    pub fn exponential(sigma: f64, corr_length: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        if !(corr_length > 0.0 && corr_length.is_finite()) {
            return Err(Error::domain(format!(
                "correlation length must be positive, got {corr_length}"
            )));
        }
        Ok(Self { sigma, corr_length })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn corr_length(&self) -> f64 {
        self.corr_length
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn eval(&self, r_x: f64, r_y: f64) -> f64 {
        self.variance() * (-(r_x - r_y).abs() / self.corr_length).exp()
    }
}

/// `C_r(r_x, r_y)` for the exponential model.
pub fn radial_cov(model: &RadialCovarianceModel, r_x: f64, r_y: f64) -> f64 {
    model.eval(r_x, r_y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    General,
    /// `a_n = scale * rho^n`.
    Geometric { rho: f64, scale: f64 },
}

/// Truncated Schoenberg spectrum `a_0..a_{n_max}` of an isotropic covariance
/// on the sphere, with the cumulative table used for degree sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectrum {
    coefficients: Vec<f64>,
    cumulative: Vec<f64>,
    family: Family,
}

impl AngularSpectrum {
    /// Builds a spectrum from explicit coefficients. Every coefficient must be
    /// finite and non-negative, and at least one must be positive.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        Self::with_family(coefficients, Family::General)
    }

    fn with_family(coefficients: Vec<f64>, family: Family) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::domain("angular spectrum needs at least one coefficient"));
        }
        if coefficients.len() - 1 > N_MAX_CAP {
            return Err(Error::domain(format!(
                "spectrum degree {} exceeds the cap {N_MAX_CAP}",
                coefficients.len() - 1
            )));
        }
        if let Some((n, a)) = coefficients
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.is_finite() && **a >= 0.0))
        {
            return Err(Error::domain(format!(
                "coefficient a_{n} = {a} violates non-negativity"
            )));
        }
        let cumulative: Vec<f64> = coefficients
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a;
                Some(*acc)
            })
            .collect();
        if cumulative[cumulative.len() - 1] <= 0.0 {
            return Err(Error::domain("angular spectrum has zero total mass"));
        }
        Ok(Self {
            coefficients,
            cumulative,
            family,
        })
    }

    /// `a_n = rho^n` for `n = 0..=n_max`.
    pub fn geometric(rho: f64, n_max: usize) -> Result<Self> {
        check_rho(rho)?;
        let coefficients = (0..=n_max).map(|n| rho.powi(n as i32)).collect();
        Self::with_family(coefficients, Family::Geometric { rho, scale: 1.0 })
    }

    /// Geometric spectrum truncated at [`default_truncation`].
    pub fn geometric_default(rho: f64) -> Result<Self> {
        Self::geometric(rho, default_truncation(rho)?)
    }

    /// Rescales the coefficients by `1/A`, so the angular covariance is 1 at zero lag.
    pub fn normalized(&self) -> Self {
        let mass = self.total_mass();
        let family = match self.family {
            Family::General => Family::General,
            Family::Geometric { rho, scale } => Family::Geometric {
                rho,
                scale: scale / mass,
            },
        };
        let coefficients = self.coefficients.iter().map(|a| a / mass).collect();
        Self::with_family(coefficients, family).expect("rescaling keeps the spectrum valid")
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn n_max(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// `A = sum a_n`, the angular covariance at zero lag.
    pub fn total_mass(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    /// `(rho, scale)` when the spectrum is `scale * rho^n`.
    pub fn geometric_params(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::Geometric { rho, scale } => Some((rho, scale)),
            Family::General => None,
        }
    }

    /// Probability of drawing degree `n`.
    pub fn probability(&self, n: usize) -> f64 {
        self.coefficients.get(n).map_or(0.0, |a| a / self.total_mass())
    }

    /// Writes `n,a_n` rows followed by a `# A=<value>` summary line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,a_n")?;
        for (n, a) in self.coefficients.iter().enumerate() {
            writeln!(out, "{n},{a}")?;
        }
        writeln!(out, "# A={}", self.total_mass())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("rho must lie in (0, 1), got {rho}")))
    }
}

fn check_angle(alpha: f64) -> Result<()> {
    if (0.0..=PI).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::domain(format!("angle {alpha} outside [0, pi]")))
    }
}

/// Smallest `n` with `rho^n / (1 - rho) < 1e-8`, capped at [`N_MAX_CAP`].
pub fn default_truncation(rho: f64) -> Result<usize> {
    check_rho(rho)?;
    let mut n = 0usize;
    let mut tail = 1.0 / (1.0 - rho);
    while tail >= DEFAULT_TAIL_TOLERANCE && n < N_MAX_CAP {
        n += 1;
        tail *= rho;
    }
    Ok(n)
}

/// `a_n = rho^n`, `n = 0..=n_max`.
pub fn geometric_spectrum(rho: f64, n_max: usize) -> Result<AngularSpectrum> {
    AngularSpectrum::geometric(rho, n_max)
}

/// `C_alpha(alpha) = sum_n a_n P_n(cos alpha)` over the truncated spectrum.
pub fn angular_cov_series(spectrum: &AngularSpectrum, alpha: f64) -> Result<f64> {
    check_angle(alpha)?;
    legendre_series(spectrum.coefficients(), alpha.cos().clamp(-1.0, 1.0))
}

/// Closed form of the untruncated geometric series, `1/sqrt(1 - 2 rho cos(alpha) + rho^2)`.
pub fn angular_cov_closed_geometric(rho: f64, alpha: f64) -> Result<f64> {
    check_rho(rho)?;
    check_angle(alpha)?;
    Ok(1.0 / (1.0 - 2.0 * rho * alpha.cos() + rho * rho).sqrt())
}

/// A point of the closed unit ball in spherical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallPoint {
    pub r: f64,
    pub dir: SphericalDirection,
}

impl BallPoint {
    pub fn new(r: f64, phi: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::domain(format!("radius {r} outside [0, 1]")));
        }
        Ok(Self {
            r,
            dir: SphericalDirection::new(phi, theta)?,
        })
    }

    pub fn to_cartesian(&self) -> [f64; 3] {
        self.dir.unit_vector().map(|c| self.r * c)
    }

    pub fn from_cartesian(v: [f64; 3]) -> Result<Self> {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r > 1.0 + 1e-12 {
            return Err(Error::domain(format!("point at radius {r} is outside the ball")));
        }
        Ok(Self {
            r: r.min(1.0),
            dir: SphericalDirection::from_vector(v),
        })
    }
}

/// Great-circle angle between the directions of two ball points.
///
/// The direction of the centre is undefined; the angle is 0 when either radius is 0.
pub fn geodesic_angle(a: &BallPoint, b: &BallPoint) -> f64 {
    if a.r == 0.0 || b.r == 0.0 {
        return 0.0;
    }
    direction_angle(&a.dir, &b.dir)
}

pub(crate) fn direction_angle(a: &SphericalDirection, b: &SphericalDirection) -> f64 {
    let (u, v) = (a.unit_vector(), b.unit_vector());
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    dot.clamp(-1.0, 1.0).acos()
}

/// `C(x, y) = C_r(r_x, r_y) * C_alpha(alpha)` with unit proportionality constant.
#[derive(Debug, Clone)]
pub struct ProductCovariance {
    radial: RadialCovarianceModel,
    angular: AngularSpectrum,
    force_series: bool,
}

impl ProductCovariance {
    pub fn new(radial: RadialCovarianceModel, angular: AngularSpectrum) -> Self {
        Self {
            radial,
            angular,
            force_series: false,
        }
    }

    /// Always sum the truncated series, even for geometric spectra.
    pub fn series_only(mut self) -> Self {
        self.force_series = true;
        self
    }

    pub fn radial(&self) -> &RadialCovarianceModel {
        &self.radial
    }

    pub fn angular(&self) -> &AngularSpectrum {
        &self.angular
    }

    pub fn angular_cov(&self, alpha: f64) -> Result<f64> {
        match self.angular.geometric_params() {
            Some((rho, scale)) if !self.force_series => {
                Ok(scale * angular_cov_closed_geometric(rho, alpha)?)
            }
            _ => angular_cov_series(&self.angular, alpha),
        }
    }

    /// Field variance `sigma^2 * C_alpha(0)`.
    pub fn variance(&self) -> f64 {
        self.eval(
            &BallPoint::new(1.0, 0.0, 0.0).unwrap(),
            &BallPoint::new(1.0, 0.0, 0.0).unwrap(),
        )
        .expect("zero angle is in range")
    }

    pub fn eval(&self, a: &BallPoint, b: &BallPoint) -> Result<f64> {
        Ok(self.radial.eval(a.r, b.r) * self.angular_cov(geodesic_angle(a, b))?)
    }
}

pub fn product_cov(cov: &ProductCovariance, a: &BallPoint, b: &BallPoint) -> Result<f64> {
    cov.eval(a, b)
}
