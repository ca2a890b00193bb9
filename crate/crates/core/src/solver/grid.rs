use std::sync::Arc;

use crate::domain::Domain2D;
use crate::error::{Error, Result};
use crate::Point;

/// Stencil directions, in the order stored in [`Grid::legs`].
pub const DIRECTIONS: [Point; 4] = [
    Point::new(1.0, 0.0),
    Point::new(-1.0, 0.0),
    Point::new(0.0, 1.0),
    Point::new(0.0, -1.0),
];

/// Index of the opposite direction in [`DIRECTIONS`].
pub const OPPOSITE: [usize; 4] = [1, 0, 3, 2];

/// One arm of the five-point stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leg {
    /// Full-length leg to another interior node.
    Node(usize),
    /// Shortened leg ending on the boundary after `len ∈ (0, h]`.
    Boundary { len: f64, point: Point },
}

impl Leg {
    pub fn len(&self, h: f64) -> f64 {
        match *self {
            Leg::Node(_) => h,
            Leg::Boundary { len, .. } => len,
        }
    }
}

/// Uniform Cartesian grid with nodes at `(i·h, j·h)`, masked to the domain
/// interior, with Shortley–Weller legs at the boundary.
#[derive(Debug)]
pub struct Grid {
    domain: Domain2D,
    h: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    /// `usize::MAX` marks exterior lattice points.
    index: Vec<usize>,
    nodes: Vec<(i64, i64)>,
    legs: Vec<[Leg; 4]>,
}

const EXTERIOR: usize = usize::MAX;

impl Grid {
    pub fn new(domain: &Domain2D, h: f64) -> Result<Arc<Grid>> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("grid spacing must be positive, got {h}")));
        }
        let extent = domain.max_radius() * (1.0 + 1e-9) + h;
        if extent / h > 20_000.0 {
            return Err(Error::invalid(format!("grid spacing {h} is too fine for a domain of radius {extent}")));
        }
        let lo = -(extent / h).ceil() as i64;
        let hi = (extent / h).ceil() as i64;
        let n = (hi - lo + 1) as usize;

        let mut index = vec![EXTERIOR; n * n];
        let mut nodes = Vec::new();
        for j in lo..=hi {
            for i in lo..=hi {
                let p = Point::new(i as f64 * h, j as f64 * h);
                if domain.contains(p) {
                    index[(j - lo) as usize * n + (i - lo) as usize] = nodes.len();
                    nodes.push((i, j));
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::invalid(format!("grid spacing {h} leaves no interior nodes")));
        }

        let mut grid = Grid { domain: domain.clone(), h, i0: lo, j0: lo, nx: n, ny: n, index, nodes, legs: Vec::new() };
        let legs = (0..grid.nodes.len()).map(|k| grid.compute_legs(k)).collect();
        grid.legs = legs;
        Ok(Arc::new(grid))
    }

    fn compute_legs(&self, k: usize) -> [Leg; 4] {
        let (i, j) = self.nodes[k];
        let p = self.node_point(k);
        let steps = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        let mut legs = [Leg::Node(0); 4];
        for (d, (di, dj)) in steps.iter().enumerate() {
            legs[d] = match self.lookup(i + di, j + dj) {
                Some(t) => Leg::Node(t),
                None => {
                    let dir = DIRECTIONS[d];
                    // a neighbour inside the slack band gives no crossing; its leg is then full length
                    let len = self.domain.exit_distance(p, dir, self.h).unwrap_or(self.h);
                    let len = len.clamp(f64::MIN_POSITIVE, self.h);
                    Leg::Boundary { len, point: p + dir * len }
                }
            };
        }
        legs
    }

    pub fn domain(&self) -> &Domain2D {
        &self.domain
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Interior node index of lattice point `(i, j)`.
    pub fn lookup(&self, i: i64, j: i64) -> Option<usize> {
        let (a, b) = (i - self.i0, j - self.j0);
        if a < 0 || b < 0 || a as usize >= self.nx || b as usize >= self.ny {
            return None;
        }
        let k = self.index[b as usize * self.nx + a as usize];
        (k != EXTERIOR).then_some(k)
    }

    pub fn lattice(&self, k: usize) -> (i64, i64) {
        self.nodes[k]
    }

    pub fn node_point(&self, k: usize) -> Point {
        let (i, j) = self.nodes[k];
        Point::new(i as f64 * self.h, j as f64 * self.h)
    }

    pub fn legs(&self, k: usize) -> &[Leg; 4] {
        &self.legs[k]
    }

    pub fn node_points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|k| self.node_point(k))
    }

    /// Whether every stencil leg of node `k` has full length.
    pub fn is_regular(&self, k: usize) -> bool {
        self.legs[k].iter().all(|l| matches!(l, Leg::Node(_)))
    }

    /// Lattice point nearest to `z`.
    pub fn nearest_lattice(&self, z: Point) -> (i64, i64) {
        ((z.re / self.h).round() as i64, (z.im / self.h).round() as i64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_disk, build_star, TrigSeries};

    #[test]
    fn mask_and_legs() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2], vec![0.1])).unwrap();
        let h = 1.0 / 32.0;
        let g = Grid::new(&s, h).unwrap();
        for k in 0..g.len() {
            let p = g.node_point(k);
            assert!(s.contains(p));
            for (d, leg) in g.legs(k).iter().enumerate() {
                let l = leg.len(h);
                assert!(l > 0.0 && l <= h);
                match *leg {
                    Leg::Node(t) => assert_eq!(g.node_point(t), p + DIRECTIONS[d] * h),
                    Leg::Boundary { point, .. } => {
                        assert!((point.norm() - s.rho(point.arg())).abs() < 1e-12);
                    }
                }
            }
        }
        // mask consistency on the lattice
        for j in -40..=40 {
            for i in -40..=40 {
                let p = Point::new(i as f64 * h, j as f64 * h);
                assert_eq!(g.lookup(i, j).is_some(), s.contains(p));
            }
        }
    }

    #[test]
    fn node_count_tracks_area() {
        let d = build_disk(1.0).unwrap();
        let h = 1.0 / 64.0;
        let g = Grid::new(&d, h).unwrap();
        let area = g.len() as f64 * h * h;
        assert!((area - std::f64::consts::PI).abs() < 0.05);
        assert!(Grid::new(&d, 0.0).is_err());
        assert!(Grid::new(&d, 1e-6).is_err());
    }
}
