//! Smooth interior fields given in closed form: bivariate polynomials for
//! perturbation densities `p(ξ)` and conductivities `λ(ξ)`.

use crate::domain::Domain2D;
use crate::error::{Error, Result};
use crate::Point;

/// `Σ c · x^i · y^j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly2 {
    terms: Vec<(u32, u32, f64)>,
}

fn powi(x: f64, n: u32) -> f64 {
    x.powi(n as i32)
}

impl Poly2 {
    pub fn new(terms: Vec<(u32, u32, f64)>) -> Self {
        let mut merged: Vec<(u32, u32, f64)> = Vec::new();
        for (i, j, c) in terms {
            match merged.iter_mut().find(|t| t.0 == i && t.1 == j) {
                Some(t) => t.2 += c,
                None => merged.push((i, j, c)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        merged.sort_by_key(|t| (t.0 + t.1, t.0));
        Poly2 { terms: merged }
    }

    pub fn zero() -> Self {
        Poly2::default()
    }

    pub fn constant(c: f64) -> Self {
        Poly2::new(vec![(0, 0, c)])
    }

    /// `|ξ|² = x² + y²`.
    pub fn radius_squared() -> Self {
        Poly2::new(vec![(2, 0, 1.0), (0, 2, 1.0)])
    }

    pub fn terms(&self) -> &[(u32, u32, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [] => Some(0.0),
            [(0, 0, c)] => Some(*c),
            _ => None,
        }
    }

    /// Whether this is `c·|ξ|²` for some `c`; returns `c`.
    pub fn as_radius_squared_multiple(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [(0, 2, a), (2, 0, b)] | [(2, 0, b), (0, 2, a)] if a == b => Some(*a),
            _ => None,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Poly2::new(self.terms.iter().map(|&(i, j, c)| (i, j, c * s)).collect())
    }

    /// `1 + ε·self`.
    pub fn one_plus(&self, eps: f64) -> Self {
        let mut terms = vec![(0, 0, 1.0)];
        terms.extend(self.terms.iter().map(|&(i, j, c)| (i, j, c * eps)));
        Poly2::new(terms)
    }

    pub fn eval(&self, z: Point) -> f64 {
        self.terms.iter().map(|&(i, j, c)| c * powi(z.re, i) * powi(z.im, j)).sum()
    }

    /// Gradient as `∂x + i∂y`.
    pub fn grad(&self, z: Point) -> Point {
        let mut g = Point::new(0.0, 0.0);
        for &(i, j, c) in &self.terms {
            if i > 0 {
                g.re += c * i as f64 * powi(z.re, i - 1) * powi(z.im, j);
            }
            if j > 0 {
                g.im += c * j as f64 * powi(z.re, i) * powi(z.im, j - 1);
            }
        }
        g
    }

    pub fn laplacian(&self, z: Point) -> f64 {
        let mut v = 0.0;
        for &(i, j, c) in &self.terms {
            if i > 1 {
                v += c * (i * (i - 1)) as f64 * powi(z.re, i - 2) * powi(z.im, j);
            }
            if j > 1 {
                v += c * (j * (j - 1)) as f64 * powi(z.re, i) * powi(z.im, j - 2);
            }
        }
        v
    }

    /// Parses `c:i:j` items separated by commas, e.g. `1:2:0, 1:0:2` for
    /// `x² + y²`. A bare number is a constant term.
    pub fn parse(s: &str) -> Option<Self> {
        let mut terms = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let term: (u32, u32, f64) = match parts.as_slice() {
                [c] => (0, 0, c.parse().ok()?),
                [c, i, j] => (i.parse().ok()?, j.parse().ok()?, c.parse().ok()?),
                _ => return None,
            };
            if !term.2.is_finite() {
                return None;
            }
            terms.push(term);
        }
        Some(Poly2::new(terms))
    }

    /// Inverse of [`Poly2::parse`].
    pub fn to_spec(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms.iter().map(|(i, j, c)| format!("{c}:{i}:{j}")).collect::<Vec<_>>().join(", ")
    }

    /// Minimum over a polar sample of the domain, boundary included.
    pub fn sampled_min(&self, domain: &Domain2D) -> f64 {
        polar_samples(domain).map(|z| self.eval(z)).fold(f64::INFINITY, f64::min)
    }

    /// Maximum of `|self|` over a polar sample of the domain.
    pub fn sampled_abs_max(&self, domain: &Domain2D) -> f64 {
        polar_samples(domain).map(|z| self.eval(z).abs()).fold(0.0, f64::max)
    }
}

fn polar_samples(domain: &Domain2D) -> impl Iterator<Item = Point> + '_ {
    const NR: usize = 64;
    const NT: usize = 256;
    (0..=NR).flat_map(move |i| {
        (0..NT).map(move |k| {
            let t = std::f64::consts::TAU * k as f64 / NT as f64;
            Point::from_polar(domain.rho(t) * i as f64 / NR as f64, t)
        })
    })
}

/// Positive conductivity `λ` of the operator `∇·(λ∇)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conductivity {
    lambda: Poly2,
}

impl Conductivity {
    /// Rejects `λ` that is not positive on (a dense sample of) the closed
    /// domain.
    pub fn new(lambda: Poly2, domain: &Domain2D) -> Result<Self> {
        let min = lambda.sampled_min(domain);
        if !(min > 0.0) {
            return Err(Error::invalid(format!("conductivity must be positive, minimum sampled value is {min}")));
        }
        Ok(Conductivity { lambda })
    }

    pub fn poly(&self) -> &Poly2 {
        &self.lambda
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.lambda.as_constant()
    }

    pub fn eval(&self, z: Point) -> f64 {
        self.lambda.eval(z)
    }

    /// Potential `u = λ^{-1/2} Δ(λ^{1/2}) = Δλ/(2λ) − |∇λ|²/(4λ²)` of the
    /// Schrödinger operator `Δ − u` equivalent to `∇·(λ∇)`.
    pub fn potential(&self, z: Point) -> f64 {
        let l = self.lambda.eval(z);
        let g = self.lambda.grad(z);
        self.lambda.laplacian(z) / (2.0 * l) - g.norm_sqr() / (4.0 * l * l)
    }
}
