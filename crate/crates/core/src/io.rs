//! Realization file formats.
//!
//! * CSV: `#` comment lines declaring the grid, then `r,phi,theta,value` rows in
//!   grid order, every number with 17 significant digits.
//! * Binary: magic `BALLF1`, then `M`, `n_theta`, `n_phi` as little-endian u64,
//!   then the `M` radii and the field values as little-endian f64 in grid order.
//! * Legacy VTK ASCII `STRUCTURED_GRID` with one extra longitude column that
//!   repeats `phi = 0`, so surfaces close in external viewers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{BallGrid, Provenance, Realization, SphereGrid};
use crate::radial::RadialGrid;

pub const BINARY_MAGIC: &[u8; 6] = b"BALLF1";

const CSV_HEADER: &str = "r,phi,theta,value";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_field_csv_to<W: Write>(realization: &Realization, mut out: W) -> std::io::Result<()> {
    let grid = realization.grid();
    let radii: Vec<String> = grid.radial().radii().iter().map(|&r| full(r)).collect();
    writeln!(out, "# ballfield realization")?;
    writeln!(out, "# radii={}", radii.join(";"))?;
    writeln!(
        out,
        "# n_theta={} n_phi={}",
        grid.sphere().n_theta(),
        grid.sphere().n_phi()
    )?;
    if let Some(p) = realization.provenance() {
        writeln!(out, "# seed={} index={}", p.seed, p.index)?;
    }
    writeln!(out, "{CSV_HEADER}")?;
    for (i, v) in realization.values().iter().enumerate() {
        let p = grid.point(i);
        writeln!(
            out,
            "{},{},{},{}",
            full(p.r),
            full(p.dir.phi),
            full(p.dir.theta),
            full(*v)
        )?;
    }
    out.flush()
}

pub fn write_field_csv(realization: &Realization, path: &Path) -> Result<()> {
    write_field_csv_to(realization, create(path)?).map_err(|e| Error::io(path, e))
}

fn parse_kv<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
}

pub fn read_field_csv_from<R: BufRead>(input: R, path: &Path) -> Result<Realization> {
    let bad = |msg: String| Error::format(path, msg);
    let mut radii: Option<Vec<f64>> = None;
    let mut dims: Option<(usize, usize)> = None;
    let mut provenance = None;
    let mut header_seen = false;
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(list) = parse_kv(comment, "radii") {
                let parsed = list
                    .split(';')
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| bad(format!("radii: {e}")))?;
                radii = Some(parsed);
            }
            if let (Some(t), Some(p)) = (parse_kv(comment, "n_theta"), parse_kv(comment, "n_phi")) {
                let t = t.parse().map_err(|_| bad(format!("bad n_theta `{t}`")))?;
                let p = p.parse().map_err(|_| bad(format!("bad n_phi `{p}`")))?;
                dims = Some((t, p));
            }
            if let (Some(s), Some(i)) = (parse_kv(comment, "seed"), parse_kv(comment, "index")) {
                provenance = Some(Provenance {
                    seed: s.parse().map_err(|_| bad(format!("bad seed `{s}`")))?,
                    index: i.parse().map_err(|_| bad(format!("bad index `{i}`")))?,
                });
            }
            continue;
        }
        if !header_seen {
            if line != CSV_HEADER {
                return Err(bad(format!("expected header `{CSV_HEADER}`, found `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let mut row = [0.0f64; 4];
        let mut fields = line.split(',');
        for slot in row.iter_mut() {
            let field = fields
                .next()
                .ok_or_else(|| bad(format!("line {}: expected 4 fields", lineno + 1)))?;
            *slot = field
                .trim()
                .parse()
                .map_err(|e| bad(format!("line {}: `{field}`: {e}", lineno + 1)))?;
        }
        if fields.next().is_some() {
            return Err(bad(format!("line {}: expected 4 fields", lineno + 1)));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("line {}: non-finite value", lineno + 1)));
        }
        rows.push(row);
    }
    if !header_seen {
        return Err(bad("no data header (empty file?)".into()));
    }
    let radii = radii.ok_or_else(|| bad("missing `# radii=` grid declaration".into()))?;
    let (n_theta, n_phi) = dims.ok_or_else(|| bad("missing `# n_theta= n_phi=` grid declaration".into()))?;
    let grid = BallGrid::new(RadialGrid::new(radii)?, SphereGrid::new(n_phi, n_theta)?);
    if rows.len() != grid.len() {
        return Err(bad(format!(
            "declared grid has {} nodes but file has {} rows",
            grid.len(),
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        let p = grid.point(i);
        if [p.r, p.dir.phi, p.dir.theta] != [row[0], row[1], row[2]] {
            return Err(bad(format!("row {i} coordinates do not match the declared grid order")));
        }
    }
    Realization::new(Arc::new(grid), rows.iter().map(|r| r[3]).collect(), provenance)
}

pub fn read_field_csv(path: &Path) -> Result<Realization> {
    read_field_csv_from(open(path)?, path)
}

pub fn write_field_binary_to<W: Write>(realization: &Realization, mut out: W) -> std::io::Result<()> {
    let grid = realization.grid();
    out.write_all(BINARY_MAGIC)?;
    for d in [grid.radial().len(), grid.sphere().n_theta(), grid.sphere().n_phi()] {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for r in grid.radial().radii() {
        out.write_all(&r.to_le_bytes())?;
    }
    for v in realization.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()
}

pub fn write_field_binary(realization: &Realization, path: &Path) -> Result<()> {
    write_field_binary_to(realization, create(path)?).map_err(|e| Error::io(path, e))
}

pub fn read_field_binary_from<R: Read>(mut input: R, path: &Path) -> Result<Realization> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::format(path, msg.to_string());
    let body = bytes
        .strip_prefix(BINARY_MAGIC.as_slice())
        .ok_or_else(|| bad("missing BALLF1 magic"))?;
    if body.len() < 24 {
        return Err(bad("truncated dimensions"));
    }
    let dim = |i: usize| u64::from_le_bytes(body[8 * i..8 * i + 8].try_into().unwrap()) as usize;
    let (m, n_theta, n_phi) = (dim(0), dim(1), dim(2));
    let reals = &body[24..];
    let expected = m
        .checked_mul(n_theta)
        .and_then(|x| x.checked_mul(n_phi))
        .and_then(|x| x.checked_add(m))
        .and_then(|x| x.checked_mul(8))
        .ok_or_else(|| bad("dimensions overflow"))?;
    if reals.len() != expected {
        return Err(bad("payload size does not match the declared dimensions"));
    }
    let floats: Vec<f64> = reals
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let grid = BallGrid::new(RadialGrid::new(floats[..m].to_vec())?, SphereGrid::new(n_phi, n_theta)?);
    Realization::new(Arc::new(grid), floats[m..].to_vec(), None)
}

pub fn read_field_binary(path: &Path) -> Result<Realization> {
    read_field_binary_from(open(path)?, path)
}

/// Reads either format, chosen by the leading magic bytes.
pub fn read_field(path: &Path) -> Result<Realization> {
    let mut head = [0u8; 6];
    let n = open(path)?.read(&mut head).map_err(|e| Error::io(path, e))?;
    if n == 6 && &head == BINARY_MAGIC {
        read_field_binary(path)
    } else {
        read_field_csv(path)
    }
}

pub fn write_vtk_ball_to<W: Write>(realization: &Realization, mut out: W) -> std::io::Result<()> {
    let grid = realization.grid();
    let sphere = grid.sphere();
    let (m, n_theta, n_phi) = (grid.radial().len(), sphere.n_theta(), sphere.n_phi());
    let count = (n_phi + 1) * n_theta * m;
    writeln!(out, "# vtk DataFile Version 3.0")?;
    match realization.provenance() {
        Some(p) => writeln!(out, "ballfield realization seed={} index={}", p.seed, p.index)?,
        None => writeln!(out, "ballfield realization")?,
    }
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_GRID")?;
    writeln!(out, "DIMENSIONS {} {} {}", n_phi + 1, n_theta, m)?;
    writeln!(out, "POINTS {count} double")?;
    let node = |i_r: usize, i_t: usize, i_p: usize| grid.index(i_r, i_t, i_p % n_phi);
    for i_r in 0..m {
        for i_t in 0..n_theta {
            for i_p in 0..=n_phi {
                let x = grid.point(node(i_r, i_t, i_p)).to_cartesian();
                writeln!(out, "{} {} {}", full(x[0]), full(x[1]), full(x[2]))?;
            }
        }
    }
    writeln!(out, "POINT_DATA {count}")?;
    writeln!(out, "SCALARS field double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    let values = realization.values();
    for i_r in 0..m {
        for i_t in 0..n_theta {
            for i_p in 0..=n_phi {
                writeln!(out, "{}", full(values[node(i_r, i_t, i_p)]))?;
            }
        }
    }
    out.flush()
}

pub fn write_vtk_ball(realization: &Realization, path: &Path) -> Result<()> {
    write_vtk_ball_to(realization, create(path)?).map_err(|e| Error::io(path, e))
}
