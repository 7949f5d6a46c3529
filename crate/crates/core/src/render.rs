//! Cross-sections of ball realizations and their PPM rendering.
//!
//! Slices only ever contain values at grid nodes; nothing is interpolated.
//! A fixed-longitude slice is the plane through the polar axis containing the
//! half-planes `phi0` and `phi0 + pi`. Its columns are indexed by the in-plane
//! angle `psi` measured from the north pole: `psi = theta` on the `phi0`
//! half-plane and `psi = 2 pi - theta` on the opposite one, so the second block
//! of columns lists colatitudes in descending order.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Realization;

/// Radii given on the command line are matched to the grid with this tolerance.
pub const SLICE_RADIUS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceSpec {
    /// Great-circle plane through longitudes `phi0` and `phi0 + pi`, `0 <= phi0 < pi`.
    FixedPhi(f64),
    /// Spherical shell at a grid radius.
    Shell(f64),
}

impl std::str::FromStr for SliceSpec {
    type Err = String;

    /// `phi:<value>` or `shell:<radius>`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| format!("slice `{s}` is not of the form phi:<value> or shell:<radius>"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("slice value `{value}` is not a number"))?;
        match kind.trim() {
            "phi" => Ok(SliceSpec::FixedPhi(value)),
            "shell" => Ok(SliceSpec::Shell(value)),
            other => Err(format!("unknown slice kind `{other}` (expected phi or shell)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceKind {
    /// Rows are radii, columns are in-plane angles `psi` in `[0, 2 pi]`.
    Polar,
    /// Rows are colatitudes, columns are longitudes.
    Shell,
    /// A bare matrix without coordinates.
    Plain,
}

/// Row-major 2D array with its coordinate axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice2D {
    kind: SliceKind,
    row_coords: Vec<f64>,
    col_coords: Vec<f64>,
    values: Vec<f64>,
}

impl Slice2D {
    pub fn plain(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        Ok(Self {
            kind: SliceKind::Plain,
            row_coords: (0..rows).map(|i| i as f64).collect(),
            col_coords: (0..cols).map(|j| j as f64).collect(),
            values,
        })
    }

    pub fn kind(&self) -> SliceKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.row_coords.len()
    }

    pub fn cols(&self) -> usize {
        self.col_coords.len()
    }

    pub fn row_coords(&self) -> &[f64] {
        &self.row_coords
    }

    pub fn col_coords(&self) -> &[f64] {
        &self.col_coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols() + col]
    }
}

pub fn extract_slice(realization: &Realization, spec: SliceSpec) -> Result<Slice2D> {
    let grid = realization.grid();
    let sphere = grid.sphere();
    let radii = grid.radial().radii();
    let values = realization.values();
    match spec {
        SliceSpec::FixedPhi(phi0) => {
            if !(0.0..PI).contains(&phi0) {
                return Err(Error::domain(format!("slice longitude {phi0} outside [0, pi)")));
            }
            let missing = || Error::LongitudeNotOnGrid { phi: phi0 };
            let j0 = sphere.phi_index(phi0).ok_or_else(missing)?;
            let j1 = sphere.phi_index(phi0 + PI).ok_or_else(missing)?;
            let thetas = sphere.thetas();
            let n_theta = thetas.len();
            let mut col_coords = thetas.clone();
            col_coords.extend(thetas.iter().rev().map(|t| TAU - t));
            let mut out = Vec::with_capacity(radii.len() * 2 * n_theta);
            for i_r in 0..radii.len() {
                out.extend((0..n_theta).map(|i_t| values[grid.index(i_r, i_t, j0)]));
                out.extend((0..n_theta).rev().map(|i_t| values[grid.index(i_r, i_t, j1)]));
            }
            Ok(Slice2D {
                kind: SliceKind::Polar,
                row_coords: radii.to_vec(),
                col_coords,
                values: out,
            })
        }
        SliceSpec::Shell(r0) => {
            let i_r = grid
                .radial()
                .position(r0, SLICE_RADIUS_TOLERANCE)
                .ok_or(Error::RadiusNotOnGrid { radius: r0 })?;
            let per_shell = sphere.n_theta() * sphere.n_phi();
            let start = grid.index(i_r, 0, 0);
            Ok(Slice2D {
                kind: SliceKind::Shell,
                row_coords: sphere.thetas(),
                col_coords: sphere.phis(),
                values: values[start..start + per_shell].to_vec(),
            })
        }
    }
}

const COOL: [f64; 3] = [59.0, 76.0, 192.0];
const NEUTRAL: [f64; 3] = [221.0, 221.0, 221.0];
const WARM: [f64; 3] = [180.0, 4.0, 38.0];

/// Index used for every pixel when the value range is degenerate.
pub const MID_INDEX: u8 = 128;

/// Diverging blue–grey–red map: entry `i` interpolates linearly from
/// `(59, 76, 192)` at 0 through `(221, 221, 221)` at 127.5 to `(180, 4, 38)` at 255.
pub fn colormap(index: u8) -> [u8; 3] {
    let t = index as f64 / 255.0;
    let (from, to, s) = if t < 0.5 {
        (COOL, NEUTRAL, t * 2.0)
    } else {
        (NEUTRAL, WARM, t * 2.0 - 1.0)
    };
    let mut rgb = [0u8; 3];
    for c in 0..3 {
        rgb[c] = (from[c] + (to[c] - from[c]) * s).round() as u8;
    }
    rgb
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenderOptions {
    /// Map `[-c, c]` with `c = max |value|` instead of `[min, max]`.
    pub symmetric: bool,
    /// Side of the square canvas for polar slices; defaults to `max(256, 4 M)`.
    pub canvas: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOutcome {
    pub width: usize,
    pub height: usize,
    /// The value range was empty and the image is uniformly mid-colour.
    pub degenerate_range: bool,
}

/// Colormap indices for `values` under the chosen range convention.
pub fn color_indices(values: &[f64], symmetric: bool) -> Result<(Vec<u8>, bool)> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("cannot render non-finite values"));
    }
    let (lo, hi) = if symmetric {
        let c = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (-c, c)
    } else {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    if !(hi > lo) {
        return Ok((vec![MID_INDEX; values.len()], true));
    }
    let scale = 255.0 / (hi - lo);
    Ok((
        values
            .iter()
            .map(|v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8)
            .collect(),
        false,
    ))
}

fn nearest(sorted: &[f64], x: f64) -> usize {
    let i = sorted.partition_point(|&c| c < x);
    if i == 0 {
        0
    } else if i == sorted.len() || x - sorted[i - 1] <= sorted[i] - x {
        i - 1
    } else {
        i
    }
}

/// Writes `slice` as a binary PPM (P6).
///
/// Shell and plain slices use one pixel per cell, row 0 at the top. Polar
/// slices are drawn on a square canvas with the north pole up and the `phi0`
/// half-plane on the right; each pixel takes the nearest node and pixels
/// outside the unit disk are white.
pub fn render_slice_to<W: Write>(slice: &Slice2D, options: RenderOptions, mut out: W) -> Result<RenderOutcome> {
    let (indices, degenerate_range) = color_indices(&slice.values, options.symmetric)?;
    let mut pixels = Vec::new();
    let (width, height) = match slice.kind {
        SliceKind::Shell | SliceKind::Plain => {
            pixels.reserve(indices.len() * 3);
            for &i in &indices {
                pixels.extend_from_slice(&colormap(i));
            }
            (slice.cols(), slice.rows())
        }
        SliceKind::Polar => {
            let side = options.canvas.unwrap_or((4 * slice.rows()).max(256));
            pixels.reserve(side * side * 3);
            let half = side as f64 / 2.0;
            for py in 0..side {
                for px in 0..side {
                    let x = (px as f64 + 0.5 - half) / half;
                    let up = (half - py as f64 - 0.5) / half;
                    let rho = x.hypot(up);
                    if rho > 1.0 {
                        pixels.extend_from_slice(&[255, 255, 255]);
                        continue;
                    }
                    let psi = x.atan2(up).rem_euclid(TAU);
                    let row = nearest(&slice.row_coords, rho);
                    let col = nearest(&slice.col_coords, psi);
                    pixels.extend_from_slice(&colormap(indices[row * slice.cols() + col]));
                }
            }
            (side, side)
        }
    };
    let write = |out: &mut W| -> std::io::Result<()> {
        write!(out, "P6\n{width} {height}\n255\n")?;
        out.write_all(&pixels)?;
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io("<ppm>", e))?;
    Ok(RenderOutcome {
        width,
        height,
        degenerate_range,
    })
}

pub fn render_slice(slice: &Slice2D, options: RenderOptions, path: &Path) -> Result<RenderOutcome> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    render_slice_to(slice, options, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BallGrid, SphereGrid};
    use crate::radial::RadialGrid;
    use std::sync::Arc;

    fn grid(m: usize, n_phi: usize, n_theta: usize) -> Arc<BallGrid> {
        Arc::new(BallGrid::new(
            RadialGrid::uniform(m).unwrap(),
            SphereGrid::new(n_phi, n_theta).unwrap(),
        ))
    }

    fn indexed(g: &Arc<BallGrid>) -> Realization {
        Realization::new(g.clone(), (0..g.len()).map(|i| i as f64).collect(), None).unwrap()
    }

    fn parse_ppm(bytes: &[u8]) -> (usize, usize, &[u8]) {
        let header_end = bytes
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == b'\n')
            .nth(2)
            .unwrap()
            .0;
        let text = std::str::from_utf8(&bytes[..header_end]).unwrap();
        let mut parts = text.split_ascii_whitespace();
        assert_eq!(parts.next(), Some("P6"));
        let w: usize = parts.next().unwrap().parse().unwrap();
        let h: usize = parts.next().unwrap().parse().unwrap();
        let header = format!("P6\n{w} {h}\n255\n").len();
        (w, h, &bytes[header..])
    }

    #[test]
    fn constant_field_slices_are_constant() {
        let g = grid(3, 8, 5);
        let ones = Realization::new(g.clone(), vec![1.0; g.len()], None).unwrap();
        for spec in [SliceSpec::FixedPhi(0.0), SliceSpec::FixedPhi(PI / 4.0), SliceSpec::Shell(2.0 / 3.0)] {
            assert!(extract_slice(&ones, spec).unwrap().values().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn fixed_phi_shape_and_node_selection() {
        let g = grid(3, 8, 5);
        let r = indexed(&g);
        let s = extract_slice(&r, SliceSpec::FixedPhi(PI / 4.0)).unwrap();
        assert_eq!((s.rows(), s.cols()), (3, 10));
        assert_eq!(s.kind(), SliceKind::Polar);
        // phi0 = pi/4 is column 1, its antipode is column 5.
        for i_r in 0..3 {
            for i_t in 0..5 {
                assert_eq!(s.get(i_r, i_t), g.index(i_r, i_t, 1) as f64);
                assert_eq!(s.get(i_r, 9 - i_t), g.index(i_r, i_t, 5) as f64);
            }
        }
        assert_eq!(s.col_coords()[0], 0.0);
        assert_eq!(s.col_coords()[9], TAU);
        assert!(s.col_coords().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fixed_phi_needs_both_half_planes() {
        let r = indexed(&grid(2, 5, 3));
        assert!(matches!(
            extract_slice(&r, SliceSpec::FixedPhi(0.0)),
            Err(Error::LongitudeNotOnGrid { .. })
        ));
        assert!(extract_slice(&r, SliceSpec::FixedPhi(PI)).is_err());
    }

    #[test]
    fn shell_slices() {
        let g = grid(1, 6, 4);
        let r = indexed(&g);
        let s = extract_slice(&r, SliceSpec::Shell(1.0)).unwrap();
        assert_eq!((s.rows(), s.cols()), (4, 6));
        assert_eq!(s.values(), r.values());

        let r = indexed(&grid(4, 6, 4));
        let s = extract_slice(&r, SliceSpec::Shell(0.5)).unwrap();
        assert_eq!(s.values()[0], 24.0);
        assert!(matches!(
            extract_slice(&r, SliceSpec::Shell(0.6)),
            Err(Error::RadiusNotOnGrid { .. })
        ));
    }

    #[test]
    fn slicing_commutes_with_scaling() {
        let g = grid(3, 8, 5);
        let r = Realization::new(g.clone(), (0..g.len()).map(|i| (i as f64).sin()).collect(), None).unwrap();
        for spec in [SliceSpec::FixedPhi(PI / 2.0), SliceSpec::Shell(1.0 / 3.0)] {
            let scaled: Vec<f64> = extract_slice(&r, spec).unwrap().values().iter().map(|v| -2.5 * v).collect();
            assert_eq!(extract_slice(&r.scaled(-2.5).unwrap(), spec).unwrap().values(), &scaled[..]);
        }
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0), [59, 76, 192]);
        assert_eq!(colormap(255), [180, 4, 38]);
        let mid = colormap(MID_INDEX);
        assert!(mid.iter().all(|&c| c >= 215));
    }

    #[test]
    fn two_by_two_corners_hit_the_endpoints() {
        let s = Slice2D::plain(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        let out = render_slice_to(&s, RenderOptions::default(), &mut buf).unwrap();
        assert_eq!((out.width, out.height, out.degenerate_range), (2, 2, false));
        let (w, h, px) = parse_ppm(&buf);
        assert_eq!((w, h, px.len()), (2, 2, 12));
        assert_eq!(&px[0..3], &colormap(0));
        assert_eq!(&px[3..6], &colormap(255));
        assert_eq!(&px[9..12], &colormap(0));
    }

    #[test]
    fn zero_slice_symmetric_is_uniform_mid() {
        let s = Slice2D::plain(3, 4, vec![0.0; 12]).unwrap();
        let mut buf = Vec::new();
        let out = render_slice_to(&s, RenderOptions { symmetric: true, canvas: None }, &mut buf).unwrap();
        assert!(out.degenerate_range);
        let (_, _, px) = parse_ppm(&buf);
        assert!(px.chunks(3).all(|c| c == colormap(MID_INDEX)));
    }

    #[test]
    fn symmetric_range_is_centred() {
        let (idx, _) = color_indices(&[-1.0, 0.0, 0.5], true).unwrap();
        assert_eq!(idx, vec![0, 128, 191]);
        assert!(color_indices(&[f64::NAN], false).is_err());
    }

    #[test]
    fn polar_canvas_has_white_corners() {
        let g = grid(4, 8, 9);
        let s = extract_slice(&indexed(&g), SliceSpec::FixedPhi(0.0)).unwrap();
        let mut buf = Vec::new();
        let out = render_slice_to(&s, RenderOptions { symmetric: false, canvas: Some(40) }, &mut buf).unwrap();
        assert_eq!((out.width, out.height), (40, 40));
        let (_, _, px) = parse_ppm(&buf);
        assert_eq!(px.len(), 40 * 40 * 3);
        assert_eq!(&px[0..3], &[255, 255, 255]);
        // Just right of centre is inside the disk.
        let centre = (20 * 40 + 21) * 3;
        assert_ne!(&px[centre..centre + 3], &[255, 255, 255]);
    }

    #[test]
    fn slice_spec_parsing() {
        assert_eq!("phi:0.5".parse::<SliceSpec>(), Ok(SliceSpec::FixedPhi(0.5)));
        assert_eq!("shell:1".parse::<SliceSpec>(), Ok(SliceSpec::Shell(1.0)));
        assert!("disk:1".parse::<SliceSpec>().is_err());
        assert!("shell".parse::<SliceSpec>().is_err());
    }
}
