//! Spectral simulation of isotropic fields on the sphere and of product-covariance
//! fields in the ball.
//!
//! One realization is a normalized sum of `N` random spherical-harmonic terms.
//! Term `l` draws a degree `n_l` with probability `a_n / A`, an order `k_l`
//! uniformly from `-n_l..=n_l`, and two radial white vectors that the radial
//! factor turns into correlated coefficients `xi_l(r_i)`, `eta_l(r_i)`:
//!
//! ```text
//! f(r_i, phi, theta) = 2 sqrt(pi A) / sqrt(N)
//!     * sum_l ( xi_l(r_i) Re Y_{n_l}^{k_l}(phi, theta) + eta_l(r_i) Im Y_{n_l}^{k_l}(phi, theta) )
//! ```
//!
//! For `k_l = 0` the imaginary part vanishes and `eta_l` contributes nothing;
//! the covariance is still reproduced on average over `k_l`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::{AngularSpectrum, RadialCovarianceModel};
use crate::error::{Error, Result};
use crate::grid::{BallGrid, PointSet, Provenance, Realization};
use crate::parallel::Execution;
use crate::radial::{
    build_radial_matrix, cholesky, eigendecompose, truncate_kl, JitterPolicy, RadialFactor,
    RadialGrid,
};
use crate::rng::{stream, StreamRole, DEFAULT_SEED};
use crate::special::{LegendreTable, SphericalDirection};

/// Point sets at least this large are accumulated in parallel inside a realization.
#[cfg(feature = "parallel")]
const PAR_NODE_THRESHOLD: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialMethod {
    Cholesky,
    Kl,
}

impl std::str::FromStr for RadialMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cholesky" => Ok(RadialMethod::Cholesky),
            "kl" => Ok(RadialMethod::Kl),
            other => Err(format!("unknown radial method `{other}` (expected cholesky or kl)")),
        }
    }
}

impl std::fmt::Display for RadialMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RadialMethod::Cholesky => "cholesky",
            RadialMethod::Kl => "kl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Number of spectral terms `N`.
    pub n_terms: usize,
    pub seed: u64,
    pub radial_method: RadialMethod,
    /// Trace fraction kept by the KL factor.
    pub kl_fraction: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_terms: 2000,
            seed: DEFAULT_SEED,
            radial_method: RadialMethod::Cholesky,
            kl_fraction: 0.95,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_terms == 0 {
            return Err(Error::config("sampler.n_terms", "must be at least 1"));
        }
        if !(self.kl_fraction > 0.0 && self.kl_fraction <= 1.0) {
            return Err(Error::config("sampler.kl_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// The radial factor selected by `radial_method` on `grid`.
    pub fn build_factor(&self, grid: &RadialGrid, model: &RadialCovarianceModel) -> Result<RadialFactor> {
        let c = build_radial_matrix(grid, model);
        match self.radial_method {
            RadialMethod::Cholesky => Ok(RadialFactor::Cholesky(cholesky(&c, JitterPolicy::default())?)),
            RadialMethod::Kl => Ok(RadialFactor::Kl(truncate_kl(&eigendecompose(&c)?, self.kl_fraction)?)),
        }
    }
}

/// Degree `n` with probability `a_n / A` by inverse-CDF lookup.
pub fn sample_degree<R: Rng + ?Sized>(spectrum: &AngularSpectrum, rng: &mut R) -> usize {
    let cumulative = spectrum.cumulative();
    let u = rng.random::<f64>() * spectrum.total_mass();
    let n = cumulative.partition_point(|&c| c <= u);
    if n < cumulative.len() {
        n
    } else {
        // u rounded up to A: take the last degree with positive weight.
        spectrum
            .coefficients()
            .iter()
            .rposition(|&a| a > 0.0)
            .expect("spectrum has positive mass")
    }
}

/// Order uniform on `-n..=n`.
pub fn sample_order<R: Rng + ?Sized>(n: usize, rng: &mut R) -> i64 {
    let n = n as i64;
    rng.random_range(-n..=n)
}

/// One spectral term with its correlated radial coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDraw {
    pub degree: usize,
    pub order: i64,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

/// Shared, immutable state for simulating realizations on one point set.
#[derive(Debug)]
pub struct Simulator<'a> {
    config: SamplerConfig,
    spectrum: &'a AngularSpectrum,
    factor: &'a RadialFactor,
    points: &'a PointSet,
    table: LegendreTable,
    cos_theta: Vec<f64>,
    ln_sin2: Vec<f64>,
    amplitude: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(
        config: SamplerConfig,
        spectrum: &'a AngularSpectrum,
        factor: &'a RadialFactor,
        points: &'a PointSet,
    ) -> Result<Self> {
        config.validate()?;
        if factor.dim() != points.radial().len() {
            return Err(Error::DimensionMismatch {
                expected: points.radial().len(),
                found: factor.dim(),
            });
        }
        let cos_theta: Vec<f64> = points.thetas().iter().map(|t| t.cos().clamp(-1.0, 1.0)).collect();
        let ln_sin2 = cos_theta.iter().map(|x| ((1.0 - x) * (1.0 + x)).ln()).collect();
        Ok(Self {
            config,
            spectrum,
            factor,
            points,
            table: LegendreTable::new(spectrum.n_max())?,
            cos_theta,
            ln_sin2,
            amplitude: 2.0 * (PI * spectrum.total_mass()).sqrt() / (config.n_terms as f64).sqrt(),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn points(&self) -> &PointSet {
        self.points
    }

    /// Draws every term of realization `index` in term order and hands the
    /// uncorrelated white vectors to `visit`.
    fn draw_terms_raw(&self, index: u64, mut visit: impl FnMut(usize, i64, &[f64], &[f64])) {
        let seed = self.config.seed;
        let mut degree_rng = stream(seed, index, StreamRole::Degree);
        let mut order_rng = stream(seed, index, StreamRole::Order);
        let mut xi_rng = stream(seed, index, StreamRole::XiWhite);
        let mut eta_rng = stream(seed, index, StreamRole::EtaWhite);
        let w = self.factor.white_len();
        let mut xi = vec![0.0; w];
        let mut eta = vec![0.0; w];
        for _ in 0..self.config.n_terms {
            let n = sample_degree(self.spectrum, &mut degree_rng);
            let k = sample_order(n, &mut order_rng);
            xi.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut xi_rng));
            eta.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut eta_rng));
            visit(n, k, &xi, &eta);
        }
    }

    /// The terms of realization `index`, each correlated separately.
    pub fn draw_terms(&self, index: u64) -> Vec<HarmonicDraw> {
        let mut out = Vec::with_capacity(self.config.n_terms);
        self.draw_terms_raw(index, |degree, order, xi, eta| {
            out.push(HarmonicDraw {
                degree,
                order,
                xi: self.factor.correlate(xi).expect("white length matches factor"),
                eta: self.factor.correlate(eta).expect("white length matches factor"),
            });
        });
        out
    }

    /// Field values of realization `index` on every point, in point order.
    ///
    /// Terms sharing `(n, k)` are merged before evaluation: the radial factor is
    /// linear, so their white vectors are summed and correlated once, and the
    /// harmonic is evaluated once per distinct pair.
    pub fn realization(&self, index: u64) -> Vec<f64> {
        let w = self.factor.white_len();
        let mut slots: HashMap<(usize, i64), usize> = HashMap::new();
        let mut keys: Vec<(usize, i64)> = Vec::new();
        let mut xi_acc: Vec<f64> = Vec::new();
        let mut eta_acc: Vec<f64> = Vec::new();
        self.draw_terms_raw(index, |n, k, xi, eta| {
            let g = *slots.entry((n, k)).or_insert_with(|| {
                keys.push((n, k));
                xi_acc.resize(xi_acc.len() + w, 0.0);
                eta_acc.resize(eta_acc.len() + w, 0.0);
                keys.len() - 1
            });
            for (a, x) in xi_acc[g * w..(g + 1) * w].iter_mut().zip(xi) {
                *a += x;
            }
            for (a, x) in eta_acc[g * w..(g + 1) * w].iter_mut().zip(eta) {
                *a += x;
            }
        });
        let mut groups: Vec<usize> = (0..keys.len()).collect();
        groups.sort_unstable_by_key(|&g| keys[g]);

        let m = self.factor.dim();
        let n_dirs = self.points.directions().len();
        let mut field = vec![0.0; self.points.len()];
        let mut xi_r = vec![0.0; m];
        let mut eta_r = vec![0.0; m];
        let mut legendre = vec![0.0; self.cos_theta.len()];
        let mut phase = vec![(0.0, 0.0); self.points.phis().len()];
        let mut re = vec![0.0; n_dirs];
        let mut im = vec![0.0; n_dirs];
        for g in groups {
            let (n, k) = keys[g];
            self.factor
                .correlate_into(&xi_acc[g * w..(g + 1) * w], &mut xi_r)
                .expect("white length matches factor");
            self.factor
                .correlate_into(&eta_acc[g * w..(g + 1) * w], &mut eta_r)
                .expect("white length matches factor");
            let order = k.unsigned_abs() as usize;
            // Y_n^{-k} = (-1)^k conj(Y_n^k)
            let sign = if k < 0 && order % 2 == 1 { -1.0 } else { 1.0 };
            for (p, (x, l)) in legendre.iter_mut().zip(self.cos_theta.iter().zip(&self.ln_sin2)) {
                *p = sign * self.table.eval(n, order, *x, *l);
            }
            for (ph, phi) in phase.iter_mut().zip(self.points.phis()) {
                *ph = (k as f64 * phi).sin_cos();
            }
            for (d, &(t, p)) in self.points.directions().iter().enumerate() {
                let (s, c) = phase[p as usize];
                let base = legendre[t as usize];
                re[d] = base * c;
                im[d] = base * s;
            }
            self.accumulate(&mut field, &xi_r, &eta_r, &re, &im);
        }
        field.iter_mut().for_each(|v| *v *= self.amplitude);
        field
    }

    fn accumulate(&self, field: &mut [f64], xi: &[f64], eta: &[f64], re: &[f64], im: &[f64]) {
        let nodes = self.points.nodes();
        let update = |(v, &(r, d)): (&mut f64, &(u32, u32))| {
            *v += xi[r as usize] * re[d as usize] + eta[r as usize] * im[d as usize];
        };
        #[cfg(feature = "parallel")]
        if nodes.len() >= PAR_NODE_THRESHOLD {
            use rayon::prelude::*;
            field.par_iter_mut().zip(nodes.par_iter()).for_each(update);
            return;
        }
        field.iter_mut().zip(nodes).for_each(update);
    }
}

/// Field values at `points` for realization `index`.
pub fn simulate_points(
    config: &SamplerConfig,
    spectrum: &AngularSpectrum,
    factor: &RadialFactor,
    points: &PointSet,
    index: u64,
) -> Result<Vec<f64>> {
    Ok(Simulator::new(*config, spectrum, factor, points)?.realization(index))
}

/// Isotropic field on the unit sphere with covariance `sum a_n P_n(cos alpha)`.
pub fn simulate_sphere(
    config: &SamplerConfig,
    spectrum: &AngularSpectrum,
    directions: &[SphericalDirection],
    index: u64,
) -> Result<Vec<f64>> {
    let points = PointSet::from_directions(directions)?;
    simulate_points(config, spectrum, &RadialFactor::unit(), &points, index)
}

/// Ball field on every node of `grid`; `factor` must be built on the grid radii.
pub fn simulate_ball(
    config: &SamplerConfig,
    spectrum: &AngularSpectrum,
    factor: &RadialFactor,
    grid: &Arc<BallGrid>,
    index: u64,
) -> Result<Realization> {
    let points = grid.point_set();
    let values = simulate_points(config, spectrum, factor, &points, index)?;
    Realization::new(
        grid.clone(),
        values,
        Some(Provenance {
            seed: config.seed,
            index,
        }),
    )
}

/// Realizations `0..count` on one point set, stored realization-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    seed: u64,
    n_points: usize,
    data: Vec<f64>,
}

impl Ensemble {
    pub fn from_rows(seed: u64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_points = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_points) {
            return Err(Error::DimensionMismatch {
                expected: n_points,
                found: bad.len(),
            });
        }
        Ok(Self {
            seed,
            n_points,
            data: rows.concat(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.data.len().checked_div(self.n_points).unwrap_or(0)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn realization(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_points..(j + 1) * self.n_points]
    }

    /// Values at point `p` across all realizations.
    pub fn values_at(&self, p: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(p).step_by(self.n_points).copied()
    }

    pub fn column(&self, p: usize) -> Vec<f64> {
        self.values_at(p).collect()
    }
}

pub fn generate_ensemble(
    config: &SamplerConfig,
    spectrum: &AngularSpectrum,
    factor: &RadialFactor,
    points: &PointSet,
    count: usize,
) -> Result<Ensemble> {
    generate_ensemble_with(config, spectrum, factor, points, count, Execution::default())
}

/// Like [`generate_ensemble`] with an explicit execution mode. Realization `j`
/// depends only on `(seed, j)`, so every mode yields identical ensembles.
pub fn generate_ensemble_with(
    config: &SamplerConfig,
    spectrum: &AngularSpectrum,
    factor: &RadialFactor,
    points: &PointSet,
    count: usize,
    execution: Execution,
) -> Result<Ensemble> {
    if count == 0 {
        return Err(Error::domain("ensemble size must be at least 1"));
    }
    let sim = Simulator::new(*config, spectrum, factor, points)?;
    let rows = execution.map(count as u64, |j| sim.realization(j));
    Ensemble::from_rows(config.seed, rows)
}
