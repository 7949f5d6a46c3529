//! Plain-text run configuration.
//!
//! One `key = value` pair per line with dotted section prefixes; `#` starts a
//! comment. Unknown keys are rejected and every value is re-validated against
//! the model invariants at load time. [`RunConfig::to_text`] writes every key
//! and parses back to an equal configuration.
//!
//! ```text
//! model.sigma = 1
//! model.corr_length = 0.15
//! model.rho = 0.7
//! grid.m = 10
//! sampler.seed = 7
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::covariance::{default_truncation, AngularSpectrum, BallPoint, ProductCovariance, RadialCovarianceModel};
use crate::error::{Error, Result};
use crate::grid::{BallGrid, SphereGrid};
use crate::radial::RadialGrid;
use crate::sampler::SamplerConfig;
use crate::special::N_MAX_CAP;
use crate::validation::{SegmentSpec, ToleranceRule, MIN_REALIZATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Binary,
    Vtk,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Binary => "bin",
            OutputFormat::Vtk => "vtk",
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "binary" => Ok(OutputFormat::Binary),
            "vtk" => Ok(OutputFormat::Vtk),
            other => Err(format!("unknown format `{other}` (expected csv, binary or vtk)")),
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Binary => "binary",
            OutputFormat::Vtk => "vtk",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub sigma: f64,
    pub corr_length: f64,
    pub rho: f64,
    /// `None`: smallest degree whose geometric tail is below the default tolerance.
    pub n_max: Option<usize>,
    /// Rescale the angular spectrum to unit mass.
    pub normalize_angular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    /// Explicit radii; takes precedence over `m`.
    pub radii: Option<Vec<f64>>,
    /// Uniform radii `i / m`.
    pub m: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub format: OutputFormat,
    pub directory: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSection {
    pub endpoint_a: [f64; 3],
    pub endpoint_b: [f64; 3],
    pub n_samples: usize,
    pub se_multiple: f64,
    /// Multiplies the analytic covariance; anything but 1 is a negative control.
    pub analytic_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub sampler: SamplerConfig,
    /// Ensemble size `R`, used by both `simulate` and `validate`.
    pub count: usize,
    pub output: OutputSection,
    pub validation: ValidationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSection {
                sigma: 1.0,
                corr_length: 0.15,
                rho: 0.7,
                n_max: None,
                normalize_angular: false,
            },
            grid: GridSection {
                radii: None,
                m: 10,
                n_theta: 33,
                n_phi: 64,
            },
            sampler: SamplerConfig::default(),
            count: 20_000,
            output: OutputSection {
                format: OutputFormat::Csv,
                directory: PathBuf::from("out"),
            },
            validation: ValidationSection {
                endpoint_a: [0.5, PI / 6.0, PI / 6.0],
                endpoint_b: [1.0, PI / 2.0, PI / 2.0],
                n_samples: 21,
                se_multiple: 4.0,
                analytic_scale: 1.0,
            },
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn parse_triple(key: &str, value: &str) -> Result<[f64; 3]> {
    let list = parse_list(key, value)?;
    list.try_into()
        .map_err(|_| Error::config(key, "expected three comma-separated numbers r,phi,theta"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, found `{value}`"))),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, found `{line}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "model.sigma" => c.model.sigma = parse_num(key, value)?,
                "model.corr_length" => c.model.corr_length = parse_num(key, value)?,
                "model.rho" => c.model.rho = parse_num(key, value)?,
                "model.n_max" => {
                    c.model.n_max = if value == "auto" { None } else { Some(parse_num(key, value)?) }
                }
                "model.normalize_angular" => c.model.normalize_angular = parse_bool(key, value)?,
                "grid.radii" => c.grid.radii = Some(parse_list(key, value)?),
                "grid.m" => c.grid.m = parse_num(key, value)?,
                "grid.n_theta" => c.grid.n_theta = parse_num(key, value)?,
                "grid.n_phi" => c.grid.n_phi = parse_num(key, value)?,
                "sampler.n_terms" => c.sampler.n_terms = parse_num(key, value)?,
                "sampler.seed" => c.sampler.seed = parse_num(key, value)?,
                "sampler.radial_method" => {
                    c.sampler.radial_method = value.parse().map_err(|e: String| Error::config(key, e))?
                }
                "sampler.kl_fraction" => c.sampler.kl_fraction = parse_num(key, value)?,
                "ensemble.count" => c.count = parse_num(key, value)?,
                "output.format" => c.output.format = value.parse().map_err(|e: String| Error::config(key, e))?,
                "output.directory" => c.output.directory = PathBuf::from(value),
                "validation.endpoint_a" => c.validation.endpoint_a = parse_triple(key, value)?,
                "validation.endpoint_b" => c.validation.endpoint_b = parse_triple(key, value)?,
                "validation.n_samples" => c.validation.n_samples = parse_num(key, value)?,
                "validation.se_multiple" => c.validation.se_multiple = parse_num(key, value)?,
                "validation.analytic_scale" => c.validation.analytic_scale = parse_num(key, value)?,
                other => return Err(Error::config(other, "unknown key")),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks every key against the invariants of the object it configures.
    pub fn validate(&self) -> Result<()> {
        let tag = |key: &'static str| move |e: Error| Error::config(key, e.to_string());
        RadialCovarianceModel::exponential(self.model.sigma, self.model.corr_length)
            .map_err(tag("model.sigma/model.corr_length"))?;
        if !(self.model.rho > 0.0 && self.model.rho < 1.0) {
            return Err(Error::config("model.rho", format!("{} outside (0, 1)", self.model.rho)));
        }
        if let Some(n) = self.model.n_max {
            if n > N_MAX_CAP {
                return Err(Error::config("model.n_max", format!("{n} exceeds the cap {N_MAX_CAP}")));
            }
        }
        match &self.grid.radii {
            Some(r) => {
                RadialGrid::new(r.clone()).map_err(tag("grid.radii"))?;
            }
            None if self.grid.m == 0 => return Err(Error::config("grid.m", "must be at least 1")),
            None => {}
        }
        SphereGrid::new(self.grid.n_phi, self.grid.n_theta).map_err(tag("grid.n_theta/grid.n_phi"))?;
        self.sampler.validate()?;
        if self.count == 0 {
            return Err(Error::config("ensemble.count", "must be at least 1"));
        }
        self.segment()?;
        if !(self.validation.se_multiple > 0.0) {
            return Err(Error::config("validation.se_multiple", "must be positive"));
        }
        if !self.validation.analytic_scale.is_finite() {
            return Err(Error::config("validation.analytic_scale", "must be finite"));
        }
        Ok(())
    }

    /// Every key with its effective value, in a form [`RunConfig::parse`] accepts.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let _ = writeln!(s, "model.sigma = {}", m.sigma);
        let _ = writeln!(s, "model.corr_length = {}", m.corr_length);
        let _ = writeln!(s, "model.rho = {}", m.rho);
        match m.n_max {
            Some(n) => {
                let _ = writeln!(s, "model.n_max = {n}");
            }
            None => {
                let _ = writeln!(s, "model.n_max = auto");
            }
        }
        let _ = writeln!(s, "model.normalize_angular = {}", m.normalize_angular);
        if let Some(r) = &self.grid.radii {
            let _ = writeln!(s, "grid.radii = {}", join(r));
        }
        let _ = writeln!(s, "grid.m = {}", self.grid.m);
        let _ = writeln!(s, "grid.n_theta = {}", self.grid.n_theta);
        let _ = writeln!(s, "grid.n_phi = {}", self.grid.n_phi);
        let sm = &self.sampler;
        let _ = writeln!(s, "sampler.n_terms = {}", sm.n_terms);
        let _ = writeln!(s, "sampler.seed = {}", sm.seed);
        let _ = writeln!(s, "sampler.radial_method = {}", sm.radial_method);
        let _ = writeln!(s, "sampler.kl_fraction = {}", sm.kl_fraction);
        let _ = writeln!(s, "ensemble.count = {}", self.count);
        let _ = writeln!(s, "output.format = {}", self.output.format);
        let _ = writeln!(s, "output.directory = {}", self.output.directory.display());
        let v = &self.validation;
        let _ = writeln!(s, "validation.endpoint_a = {}", join(&v.endpoint_a));
        let _ = writeln!(s, "validation.endpoint_b = {}", join(&v.endpoint_b));
        let _ = writeln!(s, "validation.n_samples = {}", v.n_samples);
        let _ = writeln!(s, "validation.se_multiple = {}", v.se_multiple);
        let _ = writeln!(s, "validation.analytic_scale = {}", v.analytic_scale);
        s
    }

    pub fn radial_model(&self) -> Result<RadialCovarianceModel> {
        RadialCovarianceModel::exponential(self.model.sigma, self.model.corr_length)
    }

    pub fn spectrum(&self) -> Result<AngularSpectrum> {
        let n_max = match self.model.n_max {
            Some(n) => n,
            None => default_truncation(self.model.rho)?,
        };
        let s = AngularSpectrum::geometric(self.model.rho, n_max)?;
        Ok(if self.model.normalize_angular { s.normalized() } else { s })
    }

    pub fn covariance(&self) -> Result<ProductCovariance> {
        Ok(ProductCovariance::new(self.radial_model()?, self.spectrum()?))
    }

    pub fn radial_grid(&self) -> Result<RadialGrid> {
        match &self.grid.radii {
            Some(r) => RadialGrid::new(r.clone()),
            None => RadialGrid::uniform(self.grid.m),
        }
    }

    pub fn ball_grid(&self) -> Result<BallGrid> {
        Ok(BallGrid::new(
            self.radial_grid()?,
            SphereGrid::new(self.grid.n_phi, self.grid.n_theta)?,
        ))
    }

    pub fn segment(&self) -> Result<SegmentSpec> {
        let point = |key: &'static str, p: [f64; 3]| {
            BallPoint::new(p[0], p[1], p[2]).map_err(|e| Error::config(key, e.to_string()))
        };
        let a = point("validation.endpoint_a", self.validation.endpoint_a)?;
        let b = point("validation.endpoint_b", self.validation.endpoint_b)?;
        SegmentSpec::new(a, b, self.validation.n_samples)
            .map_err(|e| Error::config("validation.n_samples", e.to_string()))
    }

    pub fn tolerance(&self) -> ToleranceRule {
        ToleranceRule::new(self.validation.se_multiple)
    }

    /// Validation needs at least this many realizations.
    pub fn check_validation_count(&self) -> Result<()> {
        if self.count < MIN_REALIZATIONS {
            return Err(Error::TooFewRealizations {
                found: self.count,
                required: MIN_REALIZATIONS,
            });
        }
        Ok(())
    }
}
