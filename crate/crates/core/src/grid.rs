//! Evaluation domains: sphere grids, ball grids and arbitrary point sets.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::covariance::BallPoint;
use crate::error::{Error, Result};
use crate::radial::RadialGrid;
use crate::special::SphericalDirection;

/// Radii closer than this are treated as one grid radius.
pub const RADIUS_TOLERANCE: f64 = 1e-12;

/// Longitudes `2 pi j / n_phi` and colatitudes `pi i / (n_theta - 1)`, poles included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereGrid {
    n_phi: usize,
    n_theta: usize,
}

impl SphereGrid {
    pub fn new(n_phi: usize, n_theta: usize) -> Result<Self> {
        if n_phi < 1 {
            return Err(Error::domain("sphere grid needs n_phi >= 1"));
        }
        if n_theta < 2 {
            return Err(Error::domain("sphere grid needs n_theta >= 2"));
        }
        Ok(Self { n_phi, n_theta })
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn phi(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_phi as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        if i + 1 == self.n_theta {
            PI
        } else {
            PI * i as f64 / (self.n_theta - 1) as f64
        }
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.n_phi).map(|j| self.phi(j)).collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_theta).map(|i| self.theta(i)).collect()
    }

    /// Index of the grid longitude equal to `phi`, if any.
    pub fn phi_index(&self, phi: f64) -> Option<usize> {
        let j = (phi / TAU * self.n_phi as f64).round();
        if j < 0.0 {
            return None;
        }
        let j = j as usize % self.n_phi;
        ((self.phi(j) - phi.rem_euclid(TAU)).abs() <= 1e-9
            || (self.phi(j) + TAU - phi).abs() <= 1e-9)
            .then_some(j)
    }

    /// Directions in theta-major, phi-minor order.
    pub fn directions(&self) -> Vec<SphericalDirection> {
        let mut out = Vec::with_capacity(self.n_theta * self.n_phi);
        for i in 0..self.n_theta {
            for j in 0..self.n_phi {
                out.push(SphericalDirection {
                    phi: self.phi(j),
                    theta: self.theta(i),
                });
            }
        }
        out
    }
}

/// Tensor product of a radial grid and a sphere grid.
///
/// Nodes are ordered r-major, then theta, then phi:
/// `index = (i_r * n_theta + i_theta) * n_phi + i_phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallGrid {
    radial: RadialGrid,
    sphere: SphereGrid,
}

impl BallGrid {
    pub fn new(radial: RadialGrid, sphere: SphereGrid) -> Self {
        Self { radial, sphere }
    }

    pub fn radial(&self) -> &RadialGrid {
        &self.radial
    }

    pub fn sphere(&self) -> &SphereGrid {
        &self.sphere
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.sphere.n_theta * self.sphere.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i_r: usize, i_theta: usize, i_phi: usize) -> usize {
        (i_r * self.sphere.n_theta + i_theta) * self.sphere.n_phi + i_phi
    }

    pub fn unindex(&self, index: usize) -> (usize, usize, usize) {
        let i_phi = index % self.sphere.n_phi;
        let rest = index / self.sphere.n_phi;
        (rest / self.sphere.n_theta, rest % self.sphere.n_theta, i_phi)
    }

    pub fn point(&self, index: usize) -> BallPoint {
        let (i_r, i_t, i_p) = self.unindex(index);
        BallPoint {
            r: self.radial.radii()[i_r],
            dir: SphericalDirection {
                phi: self.sphere.phi(i_p),
                theta: self.sphere.theta(i_t),
            },
        }
    }

    pub fn point_set(&self) -> PointSet {
        let n_theta = self.sphere.n_theta;
        let n_phi = self.sphere.n_phi;
        let directions = (0..n_theta)
            .flat_map(|t| (0..n_phi).map(move |p| (t as u32, p as u32)))
            .collect();
        let nodes = (0..self.radial.len())
            .flat_map(|r| (0..n_theta * n_phi).map(move |d| (r as u32, d as u32)))
            .collect();
        PointSet {
            radial: self.radial.clone(),
            thetas: self.sphere.thetas(),
            phis: self.sphere.phis(),
            directions,
            nodes,
        }
    }
}

/// Provenance of a simulated field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub index: u64,
}

/// Field values on every node of a ball grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    grid: Arc<BallGrid>,
    values: Vec<f64>,
    provenance: Option<Provenance>,
}

impl Realization {
    pub fn new(grid: Arc<BallGrid>, values: Vec<f64>, provenance: Option<Provenance>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite field value at node {i}")));
        }
        Ok(Self {
            grid,
            values,
            provenance,
        })
    }

    pub fn grid(&self) -> &BallGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<BallGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|v| v * factor).collect(),
            self.provenance,
        )
    }
}

/// A set of ball points prepared for spectral evaluation: distinct radii form
/// the radial grid, distinct colatitudes and longitudes are stored once.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    radial: RadialGrid,
    thetas: Vec<f64>,
    phis: Vec<f64>,
    /// `(theta index, phi index)` per direction.
    directions: Vec<(u32, u32)>,
    /// `(radius index, direction index)` per point.
    nodes: Vec<(u32, u32)>,
}

fn intern(values: &mut Vec<f64>, lookup: &mut HashMap<u64, u32>, x: f64) -> u32 {
    *lookup.entry(x.to_bits()).or_insert_with(|| {
        values.push(x);
        (values.len() - 1) as u32
    })
}

impl PointSet {
    /// Arbitrary ball points. Radii within [`RADIUS_TOLERANCE`] share a grid radius.
    pub fn from_points(points: &[BallPoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("point set is empty"));
        }
        let mut radii: Vec<f64> = points.iter().map(|p| p.r).collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup_by(|b, a| (*b - *a).abs() <= RADIUS_TOLERANCE);
        let radial = RadialGrid::new(radii)?;

        let (mut thetas, mut theta_ids) = (Vec::new(), HashMap::new());
        let (mut phis, mut phi_ids) = (Vec::new(), HashMap::new());
        let mut directions: Vec<(u32, u32)> = Vec::new();
        let mut direction_ids = HashMap::new();
        let mut nodes = Vec::with_capacity(points.len());
        for p in points {
            let r = radial
                .position(p.r, RADIUS_TOLERANCE)
                .expect("every point radius is on the grid");
            let key = (
                intern(&mut thetas, &mut theta_ids, p.dir.theta),
                intern(&mut phis, &mut phi_ids, p.dir.phi),
            );
            let d = *direction_ids.entry(key).or_insert_with(|| {
                directions.push(key);
                (directions.len() - 1) as u32
            });
            nodes.push((r as u32, d));
        }
        Ok(Self {
            radial,
            thetas,
            phis,
            directions,
            nodes,
        })
    }

    /// Directions on the unit sphere (a single shell at radius 1).
    pub fn from_directions(dirs: &[SphericalDirection]) -> Result<Self> {
        let points: Vec<BallPoint> = dirs.iter().map(|&dir| BallPoint { r: 1.0, dir }).collect();
        Self::from_points(&points)
    }

    pub fn radial(&self) -> &RadialGrid {
        &self.radial
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn directions(&self) -> &[(u32, u32)] {
        &self.directions
    }

    pub fn nodes(&self) -> &[(u32, u32)] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn point(&self, i: usize) -> BallPoint {
        let (r, d) = self.nodes[i];
        let (t, p) = self.directions[d as usize];
        BallPoint {
            r: self.radial.radii()[r as usize],
            dir: SphericalDirection {
                phi: self.phis[p as usize],
                theta: self.thetas[t as usize],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_maps_are_bijective() {
        for (m, nt, np) in [(1, 2, 1), (2, 3, 4), (3, 5, 2)] {
            let g = BallGrid::new(RadialGrid::uniform(m).unwrap(), SphereGrid::new(np, nt).unwrap());
            assert_eq!(g.len(), m * nt * np);
            let mut seen = vec![false; g.len()];
            for r in 0..m {
                for t in 0..nt {
                    for p in 0..np {
                        let i = g.index(r, t, p);
                        assert!(!seen[i]);
                        seen[i] = true;
                        assert_eq!(g.unindex(i), (r, t, p));
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn sphere_grid_includes_poles() {
        let s = SphereGrid::new(8, 5).unwrap();
        assert_eq!(s.theta(0), 0.0);
        assert_eq!(s.theta(4), PI);
        assert_eq!(s.phi(4), PI);
        assert_eq!(s.phi_index(PI), Some(4));
        assert_eq!(s.phi_index(0.1), None);
        assert!(SphereGrid::new(0, 3).is_err());
        assert!(SphereGrid::new(3, 1).is_err());
    }

    #[test]
    fn point_set_matches_grid_order() {
        let g = BallGrid::new(RadialGrid::uniform(2).unwrap(), SphereGrid::new(3, 4).unwrap());
        let ps = g.point_set();
        assert_eq!(ps.len(), g.len());
        for i in 0..g.len() {
            assert_eq!(ps.point(i), g.point(i));
        }
    }

    #[test]
    fn point_set_merges_close_radii() {
        let a = BallPoint::new(0.5, 0.1, 0.2).unwrap();
        let b = BallPoint::new(0.5 + 1e-15, 0.3, 0.2).unwrap();
        let c = BallPoint::new(0.9, 0.1, 1.0).unwrap();
        let ps = PointSet::from_points(&[a, b, c]).unwrap();
        assert_eq!(ps.radial().len(), 2);
        assert_eq!(ps.thetas().len(), 2);
        assert_eq!(ps.phis().len(), 2);
        assert_eq!(ps.point(2), c);
        assert!(PointSet::from_points(&[]).is_err());
        assert!(PointSet::from_points(&[BallPoint::new(0.0, 0.0, 0.0).unwrap()]).is_err());
    }

    #[test]
    fn realization_rejects_bad_values() {
        let g = Arc::new(BallGrid::new(RadialGrid::uniform(1).unwrap(), SphereGrid::new(1, 2).unwrap()));
        assert!(Realization::new(g.clone(), vec![0.0], None).is_err());
        assert!(Realization::new(g.clone(), vec![0.0, f64::NAN], None).is_err());
        assert!(Realization::new(g, vec![0.0, 1.0], None).is_ok());
    }
}
