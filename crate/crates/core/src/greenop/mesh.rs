use std::f64::consts::TAU;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::domain::Domain2D;
use crate::error::{Error, Result};
use crate::Point;

/// Area quadrature on a star domain in the coordinates `ξ = s ρ(θ) e^{iθ}`:
/// Gauss–Legendre in `s ∈ (0, 1)` times the midpoint rule in `θ`.
///
/// Nodes are stored ring by ring (`index = i·n_theta + l`) so that on a disk
/// a rotation by one angular step maps ring `i` onto itself.
#[derive(Debug, Clone)]
pub struct QuadratureMesh {
    n_s: usize,
    n_theta: usize,
    nodes: Vec<Point>,
    weights: Vec<f64>,
}

impl QuadratureMesh {
    pub fn polar(domain: &Domain2D, n_s: usize, n_theta: usize) -> Result<Self> {
        if n_s < 2 || n_theta < 8 {
            return Err(Error::invalid(format!("quadrature mesh {n_s}×{n_theta} is too coarse (need ≥ 2×8)")));
        }
        let rule = GaussLegendre::new(NonZeroUsize::new(n_s).expect("n_s ≥ 2"));
        let mut radial: Vec<(f64, f64)> =
            rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        radial.sort_by(|a, b| a.0.total_cmp(&b.0));
        let dt = TAU / n_theta as f64;
        let mut nodes = Vec::with_capacity(n_s * n_theta);
        let mut weights = Vec::with_capacity(n_s * n_theta);
        for &(s, ws) in &radial {
            for l in 0..n_theta {
                let theta = (l as f64 + 0.5) * dt;
                let rho = domain.rho(theta);
                nodes.push(Point::from_polar(s * rho, theta));
                weights.push(ws * s * rho * rho * dt);
            }
        }
        Ok(QuadratureMesh { n_s, n_theta, nodes, weights })
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }
}
