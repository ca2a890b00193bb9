//! Smooth star-shaped planar domains, their boundary discretization and
//! normal-direction boundary perturbations.
//!
//! A star-shaped domain is `{ r e^{iθ} : 0 ≤ r < ρ(θ) }` for a positive
//! trigonometric polynomial `ρ`. The disk is kept as its own kind so that the
//! closed-form Green function can be used for it.

use std::f64::consts::{PI, TAU};

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

use crate::error::{Error, Result};
use crate::keyvalue::KeyValues;
use crate::Point;

/// Points closer than this to the boundary are classified as exterior.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// Number of θ samples used to check positivity of trigonometric series.
const POSITIVITY_SAMPLES: usize = 4096;

/// `f(θ) = a0 + Σ_k cos[k-1]·cos(kθ) + sin[k-1]·sin(kθ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigSeries {
    pub fn new(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        TrigSeries { a0, cos, sin }
    }

    pub fn constant(c: f64) -> Self {
        TrigSeries::new(c, Vec::new(), Vec::new())
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Highest harmonic with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        let last = |v: &[f64]| v.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
        last(&self.cos).max(last(&self.sin))
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.a0;
        for (k, c) in self.cos.iter().enumerate() {
            v += c * ((k + 1) as f64 * theta).cos();
        }
        for (k, s) in self.sin.iter().enumerate() {
            v += s * ((k + 1) as f64 * theta).sin();
        }
        v
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let mut v = 0.0;
        for (k, c) in self.cos.iter().enumerate() {
            let m = (k + 1) as f64;
            v -= m * c * (m * theta).sin();
        }
        for (k, s) in self.sin.iter().enumerate() {
            let m = (k + 1) as f64;
            v += m * s * (m * theta).cos();
        }
        v
    }

    pub fn second_derivative(&self, theta: f64) -> f64 {
        let mut v = 0.0;
        for (k, c) in self.cos.iter().enumerate() {
            let m = (k + 1) as f64;
            v -= m * m * c * (m * theta).cos();
        }
        for (k, s) in self.sin.iter().enumerate() {
            let m = (k + 1) as f64;
            v -= m * m * s * (m * theta).sin();
        }
        v
    }

    fn sampled(&self) -> impl Iterator<Item = f64> + '_ {
        (0..POSITIVITY_SAMPLES).map(move |k| self.eval(TAU * k as f64 / POSITIVITY_SAMPLES as f64))
    }

    pub fn sampled_min(&self) -> f64 {
        self.sampled().fold(f64::INFINITY, f64::min)
    }

    pub fn sampled_max(&self) -> f64 {
        self.sampled().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫₀^{2π} f(θ)² dθ / 2`, exact by orthogonality.
    fn half_square_integral(&self) -> f64 {
        let harmonics: f64 = self.cos.iter().chain(&self.sin).map(|c| c * c).sum();
        PI * (self.a0 * self.a0 + 0.5 * harmonics)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disk { radius: f64 },
    Star { rho: TrigSeries },
}

/// Bounded planar domain, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain2D {
    shape: Shape,
}

/// Disk of radius `radius` centered at the origin.
pub fn build_disk(radius: f64) -> Result<Domain2D> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidDomain(format!("disk radius must be positive, got {radius}")));
    }
    Ok(Domain2D { shape: Shape::Disk { radius } })
}

/// Star-shaped domain with boundary radius `rho(θ)`, which must stay positive.
pub fn build_star(rho: TrigSeries) -> Result<Domain2D> {
    let all_finite = std::iter::once(rho.a0).chain(rho.cos.iter().copied()).chain(rho.sin.iter().copied());
    if !all_finite.into_iter().all(f64::is_finite) {
        return Err(Error::InvalidDomain("radius coefficients must be finite".into()));
    }
    let min = rho.sampled_min();
    if min <= 0.0 {
        return Err(Error::InvalidDomain(format!(
            "boundary radius must be positive everywhere, minimum sampled value is {min}"
        )));
    }
    Ok(Domain2D { shape: Shape::Star { rho } })
}

impl Domain2D {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Radius of the disk, if this domain was built as one.
    pub fn disk_radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Disk { radius } => Some(radius),
            Shape::Star { .. } => None,
        }
    }

    /// The boundary radius as a trigonometric series (constant for a disk).
    pub fn radius_series(&self) -> TrigSeries {
        match &self.shape {
            Shape::Disk { radius } => TrigSeries::constant(*radius),
            Shape::Star { rho } => rho.clone(),
        }
    }

    /// The same domain expressed as a star domain.
    pub fn to_star(&self) -> Domain2D {
        Domain2D { shape: Shape::Star { rho: self.radius_series() } }
    }

    pub fn degree(&self) -> usize {
        match &self.shape {
            Shape::Disk { .. } => 0,
            Shape::Star { rho } => rho.degree(),
        }
    }

    pub fn rho(&self, theta: f64) -> f64 {
        match &self.shape {
            Shape::Disk { radius } => *radius,
            Shape::Star { rho } => rho.eval(theta),
        }
    }

    pub fn rho_prime(&self, theta: f64) -> f64 {
        match &self.shape {
            Shape::Disk { .. } => 0.0,
            Shape::Star { rho } => rho.derivative(theta),
        }
    }

    pub fn rho_second(&self, theta: f64) -> f64 {
        match &self.shape {
            Shape::Disk { .. } => 0.0,
            Shape::Star { rho } => rho.second_derivative(theta),
        }
    }

    /// Strict interior test; points within [`BOUNDARY_SLACK`] of the
    /// boundary radius count as exterior.
    pub fn contains(&self, z: Point) -> bool {
        let r = z.norm();
        if r == 0.0 {
            return true;
        }
        r < self.rho(z.arg()) - BOUNDARY_SLACK
    }

    pub fn boundary_point(&self, theta: f64) -> Point {
        Point::from_polar(self.rho(theta), theta)
    }

    /// `dγ/dθ` for the parametrization `γ(θ) = ρ(θ) e^{iθ}`.
    pub fn tangent(&self, theta: f64) -> Point {
        Point::new(self.rho_prime(theta), self.rho(theta)) * Point::from_polar(1.0, theta)
    }

    pub fn outward_normal(&self, theta: f64) -> Point {
        let t = self.tangent(theta);
        -Point::i() * t / t.norm()
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius } => PI * radius * radius,
            Shape::Star { rho } => rho.half_square_integral(),
        }
    }

    /// Boundary length by the periodic trapezoid rule with `n` nodes.
    pub fn boundary_length(&self, n: usize) -> f64 {
        let dt = TAU / n as f64;
        (0..n).map(|k| self.tangent(k as f64 * dt).norm()).sum::<f64>() * dt
    }

    pub fn max_radius(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius } => *radius,
            Shape::Star { rho } => rho.sampled_max(),
        }
    }

    pub fn min_radius(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius } => *radius,
            Shape::Star { rho } => rho.sampled_min(),
        }
    }

    /// Signed radial gap `|z| − ρ(arg z)`: negative inside.
    fn radial_gap(&self, z: Point) -> f64 {
        let r = z.norm();
        if r == 0.0 {
            return -self.rho(0.0);
        }
        r - self.rho(z.arg())
    }

    /// Distance along `dir` (unit) from the interior point `p` to the first
    /// boundary crossing, searched in `(0, t_max]`. Returns `None` when the
    /// segment stays inside.
    pub fn exit_distance(&self, p: Point, dir: Point, t_max: f64) -> Option<f64> {
        if let Shape::Disk { radius } = self.shape {
            // |p + t d|² = R² with |d| = 1
            let b = (p * dir.conj()).re;
            let c = p.norm_sqr() - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let t = -b + disc.sqrt();
            return (t > 0.0 && t <= t_max).then_some(t);
        }
        let f = |t: f64| self.radial_gap(p + dir * t);
        if f(t_max) < 0.0 {
            return None;
        }
        let (mut lo, mut hi) = (0.0, t_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * t_max {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Euclidean distance from `z` to the boundary curve.
    pub fn boundary_distance(&self, z: Point) -> f64 {
        if let Shape::Disk { radius } = self.shape {
            return (radius - z.norm()).abs();
        }
        let n = 720;
        let dist = |t: f64| (self.boundary_point(t) - z).norm();
        let (mut best_t, mut best) = (0.0, f64::INFINITY);
        for k in 0..n {
            let t = TAU * k as f64 / n as f64;
            let d = dist(t);
            if d < best {
                best = d;
                best_t = t;
            }
        }
        // golden-section refinement around the best sample
        let step = TAU / n as f64;
        let (mut a, mut b) = (best_t - step, best_t + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if dist(c) < dist(d) {
                b = d;
            } else {
                a = c;
            }
        }
        dist(0.5 * (a + b)).min(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub theta: f64,
    pub point: Point,
    /// Outward unit normal.
    pub normal: Point,
    /// Arclength weight of the periodic trapezoid rule.
    pub ds: f64,
}

/// θ-uniform boundary discretization.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    nodes: Vec<BoundaryNode>,
}

pub const MIN_BOUNDARY_NODES: usize = 4;

pub fn boundary_mesh(domain: &Domain2D, n: usize) -> Result<BoundaryMesh> {
    if n < MIN_BOUNDARY_NODES {
        return Err(Error::invalid(format!(
            "boundary mesh needs at least {MIN_BOUNDARY_NODES} nodes, got {n}"
        )));
    }
    let dt = TAU / n as f64;
    let nodes = (0..n)
        .map(|k| {
            let theta = k as f64 * dt;
            let t = domain.tangent(theta);
            BoundaryNode {
                theta,
                point: domain.boundary_point(theta),
                normal: -Point::i() * t / t.norm(),
                ds: t.norm() * dt,
            }
        })
        .collect();
    Ok(BoundaryMesh { nodes })
}

impl BoundaryMesh {
    pub fn nodes(&self) -> &[BoundaryNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.nodes.iter().map(|n| n.ds).sum()
    }

    /// Trapezoid rule `∮ f ds`.
    pub fn integrate(&self, mut f: impl FnMut(&BoundaryNode) -> f64) -> f64 {
        self.nodes.iter().map(|n| f(n) * n.ds).sum()
    }
}

/// Positive normal displacement profile `p(θ)` along the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPerturbation {
    p: TrigSeries,
}

impl BoundaryPerturbation {
    pub fn new(p: TrigSeries) -> Result<Self> {
        let min = p.sampled_min();
        if !(min > 0.0) {
            return Err(Error::invalid(format!(
                "boundary perturbation must be positive, minimum sampled value is {min}"
            )));
        }
        Ok(BoundaryPerturbation { p })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(TrigSeries::constant(c))
    }

    pub fn series(&self) -> &TrigSeries {
        &self.p
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.p.eval(theta)
    }

    pub fn at(&self, node: &BoundaryNode) -> f64 {
        self.p.eval(node.theta)
    }
}

/// Moves every boundary point `ζ` to `ζ + ε p(ζ) n(ζ)` and fits the moved
/// curve with a trigonometric polynomial in the polar angle.
///
/// The fit degree is `deg ρ + deg p + 4`; the moved points of a trigonometric
/// boundary are not themselves trigonometric, so the result is faithful to the
/// sampled points up to truncation.
pub fn perturb(domain: &Domain2D, p: &BoundaryPerturbation, eps: f64) -> Result<Domain2D> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("perturbation size must be nonnegative, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(domain.clone());
    }
    let degree = domain.degree() + p.series().degree() + 4;
    let unknowns = 2 * degree + 1;
    let samples = (16 * unknowns).max(64);

    let mut angles = Vec::with_capacity(samples);
    let mut radii = Vec::with_capacity(samples);
    for j in 0..samples {
        let theta = TAU * j as f64 / samples as f64;
        let moved = domain.boundary_point(theta) + eps * p.eval(theta) * domain.outward_normal(theta);
        // angle unwrapped relative to θ so the sequence is monotone when star-shaped
        let dev = (moved * Point::from_polar(1.0, -theta)).arg();
        angles.push(theta + dev);
        radii.push(moved.norm());
    }
    let monotone = angles.windows(2).all(|w| w[1] > w[0]) && angles[0] + TAU > angles[samples - 1];
    if !monotone {
        return Err(Error::InvalidDomain(
            "perturbed boundary is not a graph over the polar angle (not star-shaped)".into(),
        ));
    }

    let basis = |phi: f64, col: usize| -> f64 {
        if col == 0 {
            1.0
        } else if col <= degree {
            (col as f64 * phi).cos()
        } else {
            ((col - degree) as f64 * phi).sin()
        }
    };
    let a = Mat::<f64>::from_fn(samples, unknowns, |i, j| basis(angles[i], j));
    let b = Mat::<f64>::from_fn(samples, 1, |i, _| radii[i]);
    let coeffs = a.qr().solve_lstsq(&b);
    let cos = (1..=degree).map(|k| coeffs[(k, 0)]).collect();
    let sin = (1..=degree).map(|k| coeffs[(degree + k, 0)]).collect();
    build_star(TrigSeries::new(coeffs[(0, 0)], cos, sin))
}

/// A domain together with an optional boundary perturbation, as read from a
/// domain spec file.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub domain: Domain2D,
    pub perturbation: Option<BoundaryPerturbation>,
}

fn parse_series(kv: &mut KeyValues, prefix: &str) -> Result<Option<TrigSeries>> {
    let a0 = kv.take_f64(&format!("{prefix}_a0"))?;
    let cos = kv.take_f64_list(&format!("{prefix}_cos"))?;
    let sin = kv.take_f64_list(&format!("{prefix}_sin"))?;
    match a0 {
        Some(a0) => Ok(Some(TrigSeries::new(a0, cos.unwrap_or_default(), sin.unwrap_or_default()))),
        None if cos.is_some() || sin.is_some() => Err(Error::Parse {
            line: 0,
            message: format!("{prefix}_cos/{prefix}_sin given without {prefix}_a0"),
        }),
        None => Ok(None),
    }
}

impl DomainSpec {
    /// Consumes the domain keys (`kind`, `radius`, `rho_*`, `p_*`) from `kv`.
    pub fn from_keys(kv: &mut KeyValues) -> Result<Self> {
        let kind = kv.take_str("kind").unwrap_or_else(|| "disk".to_string());
        let radius = kv.take_f64("radius")?;
        let rho = parse_series(kv, "rho")?;
        let domain = match kind.as_str() {
            "disk" => {
                if rho.is_some() {
                    return Err(Error::Parse { line: 0, message: "rho_* keys require kind = star".into() });
                }
                build_disk(radius.unwrap_or(1.0))?
            }
            "star" => {
                if radius.is_some() {
                    return Err(Error::Parse { line: 0, message: "radius requires kind = disk".into() });
                }
                let rho = rho.ok_or_else(|| Error::Parse {
                    line: 0,
                    message: "kind = star requires rho_a0".into(),
                })?;
                build_star(rho)?
            }
            other => {
                return Err(Error::Parse { line: 0, message: format!("unknown domain kind '{other}'") });
            }
        };
        let perturbation = parse_series(kv, "p")?.map(BoundaryPerturbation::new).transpose()?;
        Ok(DomainSpec { domain, perturbation })
    }

    /// Parses a complete domain spec file; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let spec = Self::from_keys(&mut kv)?;
        kv.finish()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Point {
        Point::new(re, im)
    }

    #[test]
    fn disk_contains() {
        let d = build_disk(1.0).unwrap();
        assert!(d.contains(c(0.0, 0.0)));
        assert!(d.contains(c(0.5, 0.0)));
        assert!(!d.contains(c(1.5, 0.0)));
        let d2 = build_disk(2.0).unwrap();
        assert!(d2.contains(c(1.9, 0.0)));
        assert!(!d2.contains(c(2.1, 0.0)));
        assert!(!d.contains(c(1.0 - 1e-13, 0.0)), "points in the slack band are exterior");
    }

    #[test]
    fn nonpositive_radius_rejected() {
        assert!(build_disk(0.0).is_err());
        assert!(build_disk(-1.0).is_err());
        assert!(build_disk(f64::NAN).is_err());
    }

    #[test]
    fn star_evaluation_and_rejection() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2], vec![])).unwrap();
        assert!((s.rho(0.0) - 1.2).abs() < 1e-15);
        assert!((s.rho(PI) - 0.8).abs() < 1e-15);
        assert!(build_star(TrigSeries::new(0.1, vec![0.2], vec![])).is_err());
    }

    #[test]
    fn constant_star_matches_disk() {
        let d = build_disk(1.0).unwrap();
        let s = build_star(TrigSeries::constant(1.0)).unwrap();
        for k in 0..100 {
            let t = 0.0628 * k as f64;
            assert_eq!(d.rho(t), s.rho(t));
            assert_eq!(d.boundary_point(t), s.boundary_point(t));
            assert_eq!(d.outward_normal(t), s.outward_normal(t));
        }
        let back = d.to_star();
        assert_eq!(back, s);
    }

    #[test]
    fn disk_mesh_four_nodes() {
        let d = build_disk(1.0).unwrap();
        let m = boundary_mesh(&d, 4).unwrap();
        let expect = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (node, e) in m.nodes().iter().zip(expect) {
            assert!((node.point - e).norm() < 1e-15);
            assert!((node.normal - e).norm() < 1e-15);
            assert!((node.ds - PI / 2.0).abs() < 1e-15);
        }
        assert!(boundary_mesh(&d, 3).is_err());
    }

    #[test]
    fn disk_mesh_length() {
        let d = build_disk(1.0).unwrap();
        for n in [16, 64, 256, 1000] {
            let m = boundary_mesh(&d, n).unwrap();
            assert!((m.length() - TAU).abs() < 1e-10);
        }
        let d2 = build_disk(2.5).unwrap();
        assert!((boundary_mesh(&d2, 64).unwrap().length() - TAU * 2.5).abs() < 1e-10 * TAU * 2.5);
    }

    #[test]
    fn star_length_self_refinement() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2], vec![])).unwrap();
        let coarse = boundary_mesh(&s, 512).unwrap().length();
        let fine = boundary_mesh(&s, 8192).unwrap().length();
        assert!(((coarse - fine) / fine).abs() < 1e-6);
    }

    #[test]
    fn star_normals_orthogonal_to_tangent() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2, 0.05], vec![0.0, 0.1])).unwrap();
        let m = boundary_mesh(&s, 256).unwrap();
        for node in m.nodes() {
            let t = s.tangent(node.theta);
            assert!((node.normal.norm() - 1.0).abs() < 1e-12);
            assert!((node.normal.re * t.re + node.normal.im * t.im).abs() < 1e-10);
            // outward: the normal points away from the origin for a star domain
            assert!((node.normal * node.point.conj()).re > 0.0);
        }
    }

    #[test]
    fn area_formula() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2], vec![0.1])).unwrap();
        let n = 4096;
        let numeric: f64 = (0..n)
            .map(|k| {
                let r = s.rho(TAU * k as f64 / n as f64);
                0.5 * r * r
            })
            .sum::<f64>()
            * TAU
            / n as f64;
        assert!((s.area() - numeric).abs() < 1e-12);
    }

    #[test]
    fn perturb_disk_uniformly() {
        let d = build_disk(1.0).unwrap();
        let p = BoundaryPerturbation::constant(1.0).unwrap();
        let moved = perturb(&d, &p, 0.1).unwrap();
        for k in 0..360 {
            let t = TAU * k as f64 / 360.0;
            assert!((moved.rho(t) - 1.1).abs() < 1e-12);
        }
    }

    #[test]
    fn perturb_zero_is_identity() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2], vec![])).unwrap();
        let p = BoundaryPerturbation::new(TrigSeries::new(1.0, vec![0.5], vec![])).unwrap();
        assert_eq!(perturb(&s, &p, 0.0).unwrap(), s);
        assert!(perturb(&s, &p, -0.1).is_err());
    }

    #[test]
    fn moved_points_on_disk() {
        let d = build_disk(1.0).unwrap();
        let p = BoundaryPerturbation::new(TrigSeries::new(1.0, vec![1.0], vec![])).unwrap_err();
        // 1 + cos θ vanishes at π, so it is not an admissible positive profile
        assert!(matches!(p, Error::InvalidArgument(_)));
        let p = TrigSeries::new(1.0, vec![1.0], vec![]);
        let eps = 0.05;
        let moved = |t: f64| d.boundary_point(t) + eps * p.eval(t) * d.outward_normal(t);
        assert!((moved(0.0) - c(1.1, 0.0)).norm() < 1e-15);
        // p(π) = 0, so the point at θ = π does not move
        assert!((moved(PI) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn perturbed_area_is_first_order() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2], vec![])).unwrap();
        let p = BoundaryPerturbation::new(TrigSeries::new(1.0, vec![0.3], vec![0.2])).unwrap();
        let mesh = boundary_mesh(&s, 2048).unwrap();
        let flux = mesh.integrate(|n| p.at(n));
        let eps = [0.04, 0.02, 0.01];
        let resid: Vec<f64> = eps
            .iter()
            .map(|&e| (perturb(&s, &p, e).unwrap().area() - s.area() - e * flux).abs())
            .collect();
        let slope = fit_slope(&eps, &resid);
        assert!(slope >= 1.9, "slope {slope}, residuals {resid:?}");
    }

    fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let n = x.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
        sxy / sxx
    }

    #[test]
    fn exit_distance_matches_disk() {
        let d = build_disk(1.0).unwrap();
        let s = d.to_star();
        let p = c(0.3, 0.2);
        for dir in [c(1.0, 0.0), c(0.0, -1.0), c(-0.6, 0.8)] {
            let a = d.exit_distance(p, dir, 2.0).unwrap();
            let b = s.exit_distance(p, dir, 2.0).unwrap();
            assert!((a - b).abs() < 1e-13, "{a} {b}");
            assert!(((p + dir * a).norm() - 1.0).abs() < 1e-13);
        }
        assert!(d.exit_distance(c(0.0, 0.0), c(1.0, 0.0), 0.5).is_none());
    }

    #[test]
    fn boundary_distance_star() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2], vec![])).unwrap();
        assert!((s.boundary_distance(c(1.0, 0.0)) - 0.2).abs() < 1e-9);
        let d = build_disk(1.0).unwrap();
        assert!((d.to_star().boundary_distance(c(0.3, 0.4)) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn spec_file_parsing() {
        let spec = DomainSpec::parse("kind = star\nrho_a0 = 1\nrho_cos = 0.2\np_a0 = 1\n").unwrap();
        assert!((spec.domain.rho(0.0) - 1.2).abs() < 1e-15);
        assert!(spec.perturbation.is_some());
        let disk = DomainSpec::parse("# unit disk\nkind = disk\nradius = 2\n").unwrap();
        assert_eq!(disk.domain.disk_radius(), Some(2.0));
        assert!(DomainSpec::parse("kind = disk\ncolour = red\n").is_err());
        assert!(DomainSpec::parse("kind = star\n").is_err());
        assert!(DomainSpec::parse("kind = star\nrho_a0 = 0.1\nrho_cos = 0.2\n").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mesh_normals_are_unit(a1 in -0.3f64..0.3, b1 in -0.3f64..0.3, a2 in -0.1f64..0.1, n in 16usize..300) {
                let s = build_star(TrigSeries::new(1.0, vec![a1, a2], vec![b1])).unwrap();
                let m = boundary_mesh(&s, n).unwrap();
                for node in m.nodes() {
                    prop_assert!((node.normal.norm() - 1.0).abs() < 1e-12);
                    let t = s.tangent(node.theta);
                    prop_assert!((node.normal.re * t.re + node.normal.im * t.im).abs() < 1e-10);
                }
            }

            #[test]
            fn disk_perturbed_by_constant_stays_disk(r in 0.5f64..2.0, pc in 0.2f64..2.0, eps in 0.0f64..0.1) {
                let d = build_disk(r).unwrap();
                let p = BoundaryPerturbation::constant(pc).unwrap();
                let moved = perturb(&d, &p, eps).unwrap();
                for k in 0..64 {
                    let t = TAU * k as f64 / 64.0;
                    prop_assert!((moved.rho(t) - (r + eps * pc)).abs() < 1e-12);
                }
            }
        }
    }
}
