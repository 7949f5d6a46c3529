//! Command-line front end.
//!
//! Exit codes: 0 success or validation pass, 1 validation fail, 2 configuration
//! error, 3 I/O or file-format error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::grid::{PointSet, Provenance, Realization};
use crate::io::{read_field, write_field_binary_to, write_field_csv_to, write_vtk_ball_to};
use crate::parallel::{with_threads, Execution};
use crate::radial::RadialFactor;
use crate::render::{extract_slice, render_slice, RenderOptions, SliceSpec};
use crate::sampler::{generate_ensemble, Simulator};
use crate::validation::{estimate_covariance, segment_points, CovarianceReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Realizations generated concurrently before they are written out.
const WRITE_BATCH: u64 = 64;

#[derive(Debug, Parser)]
#[command(name = "ballfield", version, about = "Gaussian random fields in the unit ball")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (`key = value` lines). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `sampler.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Output file or directory; see each command.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the angular spectrum as `n,a_n` CSV (stdout unless --out).
    Spectrum(Common),
    /// Write `ensemble.count` realizations and a manifest into a directory
    /// (--out, else `output.directory`).
    Simulate(Common),
    /// Run the segment covariance check; report CSV to --out or stdout.
    Validate(Common),
    /// Render a slice of a realization file as a PPM image (--out, required).
    Render {
        #[command(flatten)]
        common: Common,
        /// Realization file (CSV or BALLF1 binary).
        input: PathBuf,
        /// `phi:<phi0>` for the plane through phi0 and phi0+pi, or `shell:<radius>`.
        #[arg(long)]
        slice: SliceSpec,
        /// Colour range symmetric about zero.
        #[arg(long)]
        symmetric: bool,
        /// Canvas side in pixels for plane slices.
        #[arg(long)]
        size: Option<usize>,
    },
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.sampler.seed = seed;
    }
    if common.threads == Some(0) {
        return Err(Error::config("--threads", "must be at least 1"));
    }
    Ok(config)
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Spectrum(common) => {
            let config = load(&common)?;
            let spectrum = config.spectrum()?;
            write_output(common.out.as_deref(), |w| spectrum.write_csv(w))?;
            Ok(EXIT_PASS)
        }
        Command::Simulate(common) => {
            let config = load(&common)?;
            let dir = common.out.clone().unwrap_or_else(|| config.output.directory.clone());
            with_threads(common.threads, || simulate(&config, &dir))?;
            Ok(EXIT_PASS)
        }
        Command::Validate(common) => {
            let config = load(&common)?;
            with_threads(common.threads, || validate(&config, common.out.as_deref()))
        }
        Command::Render {
            common,
            input,
            slice,
            symmetric,
            size,
        } => {
            let out = common
                .out
                .clone()
                .ok_or_else(|| Error::config("--out", "render needs an output path"))?;
            let realization = read_field(&input)?;
            let slice = extract_slice(&realization, slice)?;
            let outcome = render_slice(&slice, RenderOptions { symmetric, canvas: size }, &out)?;
            if outcome.degenerate_range {
                eprintln!("warning: slice is constant; image is uniformly mid-colour");
            }
            Ok(EXIT_PASS)
        }
    }
}

fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match path {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = std::io::BufWriter::new(file);
            f(&mut w).map_err(|e| Error::io(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn encode(realization: &Realization, format: OutputFormat) -> Vec<u8> {
    let mut bytes = Vec::new();
    let result = match format {
        OutputFormat::Csv => write_field_csv_to(realization, &mut bytes),
        OutputFormat::Binary => write_field_binary_to(realization, &mut bytes),
        OutputFormat::Vtk => write_vtk_ball_to(realization, &mut bytes),
    };
    result.expect("writing to memory cannot fail");
    bytes
}

/// File name of realization `index`.
pub fn realization_file_name(index: u64, format: OutputFormat) -> String {
    format!("field_{index:05}.{}", format.extension())
}

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Writes the realizations and a manifest. The manifest is the configuration
/// echo followed by comment lines with the radial factor summary and one
/// `sha256` line per file, so it parses back as a [`RunConfig`].
pub fn simulate(config: &RunConfig, dir: &Path) -> Result<()> {
    let grid = Arc::new(config.ball_grid()?);
    let spectrum = config.spectrum()?;
    let factor = config.sampler.build_factor(grid.radial(), &config.radial_model()?)?;
    let points = grid.point_set();
    let sim = Simulator::new(config.sampler, &spectrum, &factor, &points)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut manifest = String::from("# ballfield simulate manifest\n");
    manifest.push_str(&config.to_text());
    manifest.push_str(&format!("# seed {}\n", config.sampler.seed));
    manifest.push_str(&format!("# nodes_per_file {}\n", grid.len()));
    match &factor {
        RadialFactor::Cholesky(c) => manifest.push_str(&format!("# radial cholesky jitter {:e}\n", c.jitter_applied())),
        RadialFactor::Kl(k) => manifest.push_str(&format!(
            "# radial kl retained {} of {} trace_fraction {}\n",
            k.retained(),
            k.dim(),
            k.trace_fraction()
        )),
    }

    let count = config.count as u64;
    let mut start = 0;
    while start < count {
        let end = (start + WRITE_BATCH).min(count);
        let batch = Execution::default().map(end - start, |j| sim.realization(start + j));
        for (offset, values) in batch.into_iter().enumerate() {
            let index = start + offset as u64;
            let provenance = Provenance {
                seed: config.sampler.seed,
                index,
            };
            let realization = Realization::new(grid.clone(), values, Some(provenance))?;
            let bytes = encode(&realization, config.output.format);
            let name = realization_file_name(index, config.output.format);
            let path = dir.join(&name);
            std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            manifest.push_str(&format!("# sha256 {:x} {name}\n", Sha256::digest(&bytes)));
        }
        start = end;
    }
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

/// Runs the segment covariance experiment described by `config`.
pub fn validation_report(config: &RunConfig) -> Result<CovarianceReport> {
    config.check_validation_count()?;
    let segment = config.segment()?;
    let points = segment_points(&segment)?;
    let set = PointSet::from_points(&points)?;
    let cov = config.covariance()?;
    let factor = config.sampler.build_factor(set.radial(), cov.radial())?;
    let ensemble = generate_ensemble(&config.sampler, cov.angular(), &factor, &set, config.count)?;
    let analytic = points
        .iter()
        .map(|p| Ok(config.validation.analytic_scale * cov.eval(&segment.endpoint_a, p)?))
        .collect::<Result<Vec<_>>>()?;
    estimate_covariance(&ensemble, 0, &segment.parameters(), &analytic, &config.tolerance())
}

/// Segment covariance check; returns the exit code.
pub fn validate(config: &RunConfig, out: Option<&Path>) -> Result<i32> {
    let report = validation_report(config)?;
    write_output(out, |w| report.write_csv(w))?;
    Ok(if report.passes(&config.tolerance()) { EXIT_PASS } else { EXIT_FAIL })
}
