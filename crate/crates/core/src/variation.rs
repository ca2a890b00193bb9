//! First variations of the Green function: Hadamard (boundary motion, plain
//! and weighted), growth dynamics, the alternate sign convention, and the two
//! Laplace–Beltrami forms; plus the Poisson–Jensen residual.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::disk::DiskGreen;
use crate::domain::{boundary_mesh, BoundaryNode, BoundaryPerturbation, Domain2D};
use crate::error::{Error, Result};
use crate::field::{Conductivity, Poly2};
use crate::greenop::{apply_t, apply_t_green, KernelOperator, QuadratureMesh};
use crate::solver::{GreenCache, GreenSolver, DEFAULT_H};
use crate::{dot, fundamental, fundamental_grad, Point};

/// Beltrami formulas reject `|z − w|` below this.
pub const DIAGONAL_EXCLUSION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaTag {
    Hadamard,
    HadamardWeighted,
    Growth,
    BeltramiGrad,
    BeltramiLap,
    /// Hadamard variation under the `g = −ln|z − w| + O(1)` convention.
    HadamardAlt,
}

impl FormulaTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormulaTag::Hadamard => "hadamard",
            FormulaTag::HadamardWeighted => "hadamard_weighted",
            FormulaTag::Growth => "growth",
            FormulaTag::BeltramiGrad => "beltrami_grad",
            FormulaTag::BeltramiLap => "beltrami_lap",
            FormulaTag::HadamardAlt => "hadamard_alt",
        }
    }
}

impl fmt::Display for FormulaTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulaTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hadamard" => FormulaTag::Hadamard,
            "hadamard_weighted" => FormulaTag::HadamardWeighted,
            "growth" => FormulaTag::Growth,
            "beltrami_grad" => FormulaTag::BeltramiGrad,
            "beltrami_lap" => FormulaTag::BeltramiLap,
            "hadamard_alt" => FormulaTag::HadamardAlt,
            other => return Err(Error::invalid(format!("unknown formula tag '{other}'"))),
        })
    }
}

/// A first variation `δg(z, w)` with its quadrature size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationResult {
    pub z: Point,
    pub w: Point,
    pub value: f64,
    pub tag: FormulaTag,
    /// Boundary nodes or area quadrature nodes used.
    pub n: usize,
}

impl VariationResult {
    pub const CSV_HEADER: &'static str = "z_re,z_im,w_re,w_im,delta_g,formula_tag,N";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            self.z.re, self.z.im, self.w.re, self.w.im, self.value, self.tag, self.n
        )
    }
}

/// Source of Green function values, gradients and boundary densities.
pub enum GreenBackend {
    Disk { domain: Domain2D, green: DiskGreen },
    Numeric { domain: Domain2D, cache: GreenCache },
}

impl fmt::Debug for GreenBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GreenBackend::Disk { green, .. } => write!(f, "GreenBackend::Disk(R = {})", green.radius()),
            GreenBackend::Numeric { cache, .. } => write!(f, "GreenBackend::Numeric(h = {})", cache.solver().grid().h()),
        }
    }
}

impl GreenBackend {
    /// Closed form on disks, grid solves with spacing `h` otherwise.
    pub fn for_domain(domain: &Domain2D, h: f64) -> Result<Self> {
        match domain.disk_radius() {
            Some(r) => Ok(GreenBackend::Disk { domain: domain.clone(), green: DiskGreen::new(r)? }),
            None => Self::numeric(domain, h),
        }
    }

    pub fn numeric(domain: &Domain2D, h: f64) -> Result<Self> {
        Ok(Self::from_solver(GreenSolver::laplace(domain, h)?))
    }

    pub fn from_solver(solver: GreenSolver) -> Self {
        let domain = solver.grid().domain().clone();
        GreenBackend::Numeric { domain, cache: GreenCache::new(solver) }
    }

    /// Green functions of `∇·(λ∇)` on a grid of spacing `h`.
    pub fn conductivity(domain: &Domain2D, lambda: &Conductivity, h: f64) -> Result<Self> {
        Ok(Self::from_solver(GreenSolver::laplace(domain, h)?.with_conductivity(lambda)?))
    }

    pub fn domain(&self) -> &Domain2D {
        match self {
            GreenBackend::Disk { domain, .. } | GreenBackend::Numeric { domain, .. } => domain,
        }
    }

    /// Grid spacing of the numeric backend.
    pub fn h(&self) -> Option<f64> {
        match self {
            GreenBackend::Disk { .. } => None,
            GreenBackend::Numeric { cache, .. } => Some(cache.solver().grid().h()),
        }
    }

    /// Interior check; the numeric backend also keeps `2h` from the boundary.
    pub fn check_point(&self, z: Point) -> Result<()> {
        let domain = self.domain();
        if !domain.contains(z) {
            return Err(Error::OutsideDomain { point: z, detail: "variation evaluation point".into() });
        }
        if let Some(h) = self.h() {
            let dist = domain.boundary_distance(z);
            if dist < 2.0 * h {
                return Err(Error::OutsideDomain {
                    point: z,
                    detail: format!("{dist:.3e} from the boundary, needs at least 2h = {:.3e}", 2.0 * h),
                });
            }
        }
        Ok(())
    }

    pub fn green(&self, z: Point, w: Point) -> Result<f64> {
        match self {
            GreenBackend::Disk { green, .. } => green.green(z, w),
            GreenBackend::Numeric { cache, .. } => cache.get(w)?.value(z),
        }
    }

    /// `∇_z g(z, w)`.
    pub fn grad(&self, z: Point, w: Point) -> Result<Point> {
        match self {
            GreenBackend::Disk { green, .. } => {
                if z == w {
                    return Err(Error::AtPole(w));
                }
                Ok(green.grad(z, w))
            }
            GreenBackend::Numeric { cache, .. } => cache.get(w)?.gradient(z),
        }
    }

    /// Harmonic-measure density `∂g/∂n(w, ζ)` at a boundary node.
    pub fn density(&self, node: &BoundaryNode, w: Point) -> Result<f64> {
        match self {
            GreenBackend::Disk { green, .. } => Ok(green.normal_derivative_unchecked(node.point, w)),
            GreenBackend::Numeric { cache, .. } => cache.get(w)?.normal_derivative(node),
        }
    }
}

fn boundary_integral(
    backend: &GreenBackend,
    n: usize,
    mut integrand: impl FnMut(&BoundaryNode) -> Result<f64>,
) -> Result<f64> {
    let mesh = boundary_mesh(backend.domain(), n)?;
    let mut acc = 0.0;
    for node in mesh.nodes() {
        acc += integrand(node)? * node.ds;
    }
    Ok(acc)
}

/// `−∮ ∂g/∂n(z,ζ) ∂g/∂n(w,ζ) q(ζ) ds` for an arbitrary boundary weight `q`.
pub fn hadamard_delta_profile(
    backend: &GreenBackend,
    profile: &dyn Fn(&BoundaryNode) -> f64,
    z: Point,
    w: Point,
    n: usize,
) -> Result<f64> {
    backend.check_point(z)?;
    backend.check_point(w)?;
    let v = boundary_integral(backend, n, |node| {
        Ok(backend.density(node, z)? * backend.density(node, w)? * profile(node))
    })?;
    Ok(-v)
}

/// Hadamard variation for the boundary motion `ζ → ζ + εp(ζ)n(ζ)`.
pub fn hadamard_delta_with(
    backend: &GreenBackend,
    p: &BoundaryPerturbation,
    z: Point,
    w: Point,
    n: usize,
) -> Result<VariationResult> {
    let value = hadamard_delta_profile(backend, &|node| p.at(node), z, w, n)?;
    Ok(VariationResult { z, w, value, tag: FormulaTag::Hadamard, n })
}

/// [`hadamard_delta_with`] using the closed form on disks and grid solves at
/// the default spacing otherwise.
pub fn hadamard_delta(
    d: &Domain2D,
    p: &BoundaryPerturbation,
    z: Point,
    w: Point,
    n: usize,
) -> Result<VariationResult> {
    hadamard_delta_with(&GreenBackend::for_domain(d, DEFAULT_H)?, p, z, w, n)
}

/// Hadamard variation for the Green function of `∇·(λ∇)`.
///
/// Constant `λ = c` uses `g_λ = g/c`; otherwise the densities come from the
/// numerical Green function of `∇·(λ∇)` at the default spacing.
pub fn hadamard_delta_weighted(
    d: &Domain2D,
    lambda: &Conductivity,
    p: &BoundaryPerturbation,
    z: Point,
    w: Point,
    n: usize,
) -> Result<VariationResult> {
    hadamard_delta_weighted_at(d, lambda, p, z, w, n, DEFAULT_H)
}

/// [`hadamard_delta_weighted`] with grid spacing `h` for non-constant `λ`.
pub fn hadamard_delta_weighted_at(
    d: &Domain2D,
    lambda: &Conductivity,
    p: &BoundaryPerturbation,
    z: Point,
    w: Point,
    n: usize,
    h: f64,
) -> Result<VariationResult> {
    let value = match lambda.as_constant() {
        Some(c) => {
            let plain = GreenBackend::for_domain(d, h)?;
            hadamard_delta_profile(&plain, &|node| p.at(node), z, w, n)? / c
        }
        None => {
            let backend = GreenBackend::conductivity(d, lambda, h)?;
            hadamard_delta_profile(&backend, &|node| lambda.eval(node.point) * p.at(node), z, w, n)?
        }
    };
    Ok(VariationResult { z, w, value, tag: FormulaTag::HadamardWeighted, n })
}

/// `dg/dt(z, 0) = −∮ ∂g/∂n(z,ζ) [λ(ζ) ∂g/∂n(0,ζ)]² ds` for growth with
/// velocity `λ ∂g/∂n(·, 0)`; `λ = None` is Laplacian growth.
pub fn growth_dgdt_with(
    backend: &GreenBackend,
    lambda: Option<&Conductivity>,
    z: Point,
    n: usize,
) -> Result<VariationResult> {
    let origin = Point::new(0.0, 0.0);
    if !backend.domain().contains(origin) {
        return Err(Error::OutsideDomain { point: origin, detail: "growth needs the origin inside".into() });
    }
    backend.check_point(z)?;
    let v = boundary_integral(backend, n, |node| {
        let l = lambda.map_or(1.0, |l| l.eval(node.point));
        let v0 = l * backend.density(node, origin)?;
        Ok(backend.density(node, z)? * v0 * v0)
    })?;
    Ok(VariationResult { z, w: origin, value: -v, tag: FormulaTag::Growth, n })
}

pub fn growth_dgdt(d: &Domain2D, lambda: Option<&Conductivity>, z: Point, n: usize) -> Result<VariationResult> {
    let backend = match lambda {
        Some(l) if l.as_constant() != Some(1.0) => GreenBackend::conductivity(d, l, DEFAULT_H)?,
        _ => GreenBackend::for_domain(d, DEFAULT_H)?,
    };
    growth_dgdt_with(&backend, lambda, z, n)
}

/// Converts a Hadamard variation to the `g = −ln|z − w| + O(1)` convention,
/// where `g_alt = −2π g` and hence `δg_alt = −2π δg`.
pub fn sign_convention_adapter(v: VariationResult) -> Result<VariationResult> {
    if v.tag != FormulaTag::Hadamard {
        return Err(Error::invalid(format!("the convention adapter expects a hadamard result, got {}", v.tag)));
    }
    Ok(VariationResult { value: -TAU * v.value, tag: FormulaTag::HadamardAlt, ..v })
}

/// Inverse of [`sign_convention_adapter`].
pub fn sign_convention_inverse(v: VariationResult) -> Result<VariationResult> {
    if v.tag != FormulaTag::HadamardAlt {
        return Err(Error::invalid(format!("the inverse adapter expects a hadamard_alt result, got {}", v.tag)));
    }
    Ok(VariationResult { value: -v.value / TAU, tag: FormulaTag::Hadamard, ..v })
}

/// `(1/2π) ∮ ∂g_alt/∂n(z,ζ) ∂g_alt/∂n(w,ζ) p ds` with `g_alt = −2π g`,
/// computed directly rather than through the adapter.
pub fn hadamard_alt_direct(
    backend: &GreenBackend,
    p: &BoundaryPerturbation,
    z: Point,
    w: Point,
    n: usize,
) -> Result<f64> {
    backend.check_point(z)?;
    backend.check_point(w)?;
    let v = boundary_integral(backend, n, |node| {
        let dz = -TAU * backend.density(node, z)?;
        let dw = -TAU * backend.density(node, w)?;
        Ok(dz * dw * p.at(node))
    })?;
    Ok(v / TAU)
}

fn check_pair(backend: &GreenBackend, z: Point, w: Point) -> Result<()> {
    backend.check_point(z)?;
    backend.check_point(w)?;
    if (z - w).norm() < DIAGONAL_EXCLUSION {
        return Err(Error::invalid(format!(
            "|z − w| = {:.3e} is below the diagonal exclusion {DIAGONAL_EXCLUSION}",
            (z - w).norm()
        )));
    }
    Ok(())
}

/// `∫_D ∇Φ_x dA = ∮ Φ_x n ds`; equal to `−x/2` on any disk centred at 0.
pub fn log_gradient_moment(domain: &Domain2D, x: Point) -> Point {
    if domain.disk_radius().is_some() {
        return -x / 2.0;
    }
    let dist = domain.boundary_distance(x).max(1e-12);
    let n = ((64.0 * TAU * domain.max_radius() / dist) as usize).clamp(4096, 1 << 20);
    let dt = TAU / n as f64;
    let mut acc = Point::new(0.0, 0.0);
    for k in 0..n {
        let t = k as f64 * dt;
        // n ds = −i γ'(θ) dθ
        acc += fundamental(domain.boundary_point(t), x) * (-Point::i() * domain.tangent(t));
    }
    acc * dt
}

/// Gradient form `∫ p ∇g(z,ξ)·∇g(ξ,w) dA` of the variation under
/// `Δ → ∇·(1 + εp)∇`.
///
/// The pole parts `p(z)∇g_w(z)·∇Φ_z` and `p(w)∇g_z(w)·∇Φ_w` are subtracted
/// under the quadrature and integrated exactly.
pub fn beltrami_delta_grad(
    backend: &GreenBackend,
    p: &Poly2,
    z: Point,
    w: Point,
    mesh: &QuadratureMesh,
) -> Result<VariationResult> {
    check_pair(backend, z, w)?;
    let n = mesh.len();
    if p.is_zero() {
        return Ok(VariationResult { z, w, value: 0.0, tag: FormulaTag::BeltramiGrad, n });
    }
    let a_z = p.eval(z) * backend.grad(z, w)?;
    let a_w = p.eval(w) * backend.grad(w, z)?;
    let mut acc = 0.0;
    for (&x, &a) in mesh.nodes().iter().zip(mesh.weights()) {
        if (x - z).norm() < 1e-14 || (x - w).norm() < 1e-14 {
            continue;
        }
        let gz = backend.grad(x, z)?;
        let gw = backend.grad(x, w)?;
        let f = p.eval(x) * dot(gz, gw) - dot(a_z, fundamental_grad(x, z)) - dot(a_w, fundamental_grad(x, w));
        acc += a * f;
    }
    let domain = backend.domain();
    let value = acc + dot(a_z, log_gradient_moment(domain, z)) + dot(a_w, log_gradient_moment(domain, w));
    Ok(VariationResult { z, w, value, tag: FormulaTag::BeltramiGrad, n })
}

/// Laplacian form `−g(z,w)(p(z) + p(w))/2 + ½ ∫ g_z g_w Δp dA`, the area
/// term being `½ T(Δp · g_w)(z)`.
pub fn beltrami_delta_lap(
    backend: &GreenBackend,
    op: &KernelOperator,
    p: &Poly2,
    z: Point,
    w: Point,
) -> Result<VariationResult> {
    check_pair(backend, z, w)?;
    let g = backend.green(z, w)?;
    let lap = |x: Point| p.laplacian(x);
    let area = if p.terms().iter().all(|&(i, j, _)| i + j < 2) {
        0.0
    } else {
        apply_t_green(op, &lap, w, z)?
    };
    let value = -g * (p.eval(z) + p.eval(w)) / 2.0 + 0.5 * area;
    let n = op.mesh().map_or_else(|| op.grid_solver().map_or(0, |s| s.grid().len()), |m| m.len());
    Ok(VariationResult { z, w, value, tag: FormulaTag::BeltramiLap, n })
}

/// `|u(z) − ∮ u dω(z, ·) − ∫ g(z, ξ) Δu(ξ) dA|`.
pub fn poisson_jensen_residual(
    backend: &GreenBackend,
    op: &KernelOperator,
    u: &Poly2,
    z: Point,
    n: usize,
) -> Result<f64> {
    backend.check_point(z)?;
    let boundary = boundary_integral(backend, n, |node| Ok(u.eval(node.point) * backend.density(node, z)?))?;
    let area = if u.terms().iter().all(|&(i, j, _)| i + j < 2) {
        0.0
    } else {
        apply_t(op, &|x| u.laplacian(x), z)?
    };
    Ok((u.eval(z) - boundary - area).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::{beltrami_disk_delta, beltrami_disk_delta_origin, hadamard_disk_delta};
    use crate::domain::{build_disk, build_star, TrigSeries};

    fn c(re: f64, im: f64) -> Point {
        Point::new(re, im)
    }

    fn unit() -> Domain2D {
        build_disk(1.0).unwrap()
    }

    #[test]
    fn hadamard_disk_examples() {
        let d = unit();
        let p = BoundaryPerturbation::constant(1.0).unwrap();
        let v = hadamard_delta(&d, &p, c(0.0, 0.0), c(0.0, 0.0), 2048).unwrap();
        assert!((v.value / (-1.0 / TAU) - 1.0).abs() < 1e-6);
        let v = hadamard_delta(&d, &p, c(0.5, 0.0), c(0.5, 0.0), 2048).unwrap();
        assert!((v.value / (-5.0 / (3.0 * TAU)) - 1.0).abs() < 1e-6);
        let (z, w) = (c(0.3, -0.4), c(-0.6, 0.1));
        let a = hadamard_delta(&d, &p, z, w, 2048).unwrap().value;
        let b = hadamard_delta(&d, &p, w, z, 2048).unwrap().value;
        assert!((a - b).abs() < 1e-12);
        assert!((a / hadamard_disk_delta(z, w).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weighted_reductions() {
        let d = unit();
        let p = BoundaryPerturbation::new(TrigSeries::new(1.0, vec![0.3], vec![])).unwrap();
        let (z, w) = (c(0.2, 0.1), c(-0.3, 0.4));
        let plain = hadamard_delta(&d, &p, z, w, 1024).unwrap().value;
        let one = Conductivity::new(Poly2::constant(1.0), &d).unwrap();
        assert_eq!(hadamard_delta_weighted(&d, &one, &p, z, w, 1024).unwrap().value, plain);
        let two = Conductivity::new(Poly2::constant(2.0), &d).unwrap();
        let v = hadamard_delta_weighted(&d, &two, &p, z, w, 1024).unwrap().value;
        assert!((v - plain / 2.0).abs() < 1e-15);
        assert!(v < 0.0);
    }

    #[test]
    fn growth_on_disks() {
        for r in [1.0, 2.0] {
            let d = build_disk(r).unwrap();
            for z in [c(0.0, 0.0), c(0.4 * r, 0.0), c(0.0, 0.3 * r)] {
                let v = growth_dgdt(&d, None, z, 2048).unwrap().value;
                let exact = -1.0 / (TAU * TAU * r * r);
                assert!((v / exact - 1.0).abs() < 1e-6);
            }
        }
        let d = unit();
        let backend = GreenBackend::for_domain(&d, DEFAULT_H).unwrap();
        let z = c(0.4, 0.0);
        let growth = growth_dgdt_with(&backend, None, z, 2048).unwrap().value;
        let origin = c(0.0, 0.0);
        let h = hadamard_delta_profile(&backend, &|n| backend.density(n, origin).unwrap(), z, origin, 2048).unwrap();
        assert!((growth / h - 1.0).abs() < 1e-8);
    }

    #[test]
    fn alternate_convention() {
        let d = unit();
        let backend = GreenBackend::for_domain(&d, DEFAULT_H).unwrap();
        let p = BoundaryPerturbation::constant(1.0).unwrap();
        let o = c(0.0, 0.0);
        let v = hadamard_delta_with(&backend, &p, o, o, 2048).unwrap();
        let alt = sign_convention_adapter(v).unwrap();
        assert!((alt.value - 1.0).abs() < 1e-12);
        assert!((hadamard_alt_direct(&backend, &p, o, o, 2048).unwrap() - 1.0).abs() < 1e-12);
        for (z, w) in [(c(0.1, 0.2), c(-0.5, 0.3)), (c(0.7, 0.0), c(0.0, -0.6))] {
            let v = hadamard_delta_with(&backend, &p, z, w, 1024).unwrap();
            let direct = hadamard_alt_direct(&backend, &p, z, w, 1024).unwrap();
            assert!((sign_convention_adapter(v).unwrap().value - direct).abs() < 1e-10);
        }
        let back = sign_convention_inverse(alt).unwrap();
        assert!((back.value - v.value).abs() < 1e-16);
        assert!(sign_convention_adapter(alt).is_err());
    }

    #[test]
    fn beltrami_disk_values() {
        let d = unit();
        let backend = GreenBackend::for_domain(&d, DEFAULT_H).unwrap();
        let mesh = QuadratureMesh::polar(&d, 32, 128).unwrap();
        let op = KernelOperator::disk(&d, 32, 128).unwrap();
        let p = Poly2::radius_squared();
        let z = c(0.6, 0.0);
        let o = c(0.0, 0.0);
        let exact = beltrami_disk_delta_origin(z).unwrap();
        let grad = beltrami_delta_grad(&backend, &p, z, o, &mesh).unwrap().value;
        assert!((grad - exact).abs() < 1e-3, "{grad} {exact}");
        let lap = beltrami_delta_lap(&backend, &op, &p, z, o).unwrap().value;
        assert!((lap - exact).abs() < 1e-3, "{lap} {exact}");
        let (z, w) = (c(0.5, 0.0), c(0.0, 0.5));
        let exact = beltrami_disk_delta(z, w).unwrap();
        let grad = beltrami_delta_grad(&backend, &p, z, w, &mesh).unwrap().value;
        assert!((grad - exact).abs() < 1e-3, "{grad} {exact}");
        assert_eq!(beltrami_delta_grad(&backend, &Poly2::zero(), z, w, &mesh).unwrap().value, 0.0);
        assert!(beltrami_delta_grad(&backend, &p, z, z + 1e-4, &mesh).is_err());
    }

    #[test]
    fn beltrami_constant_profile() {
        let d = unit();
        let backend = GreenBackend::for_domain(&d, DEFAULT_H).unwrap();
        let op = KernelOperator::disk(&d, 16, 64).unwrap();
        let mesh = QuadratureMesh::polar(&d, 32, 128).unwrap();
        let (z, w) = (c(0.2, 0.3), c(-0.4, 0.1));
        let g = backend.green(z, w).unwrap();
        let p = Poly2::constant(1.5);
        let lap = beltrami_delta_lap(&backend, &op, &p, z, w).unwrap().value;
        assert!((lap + 1.5 * g).abs() < 1e-14);
        let grad = beltrami_delta_grad(&backend, &p, z, w, &mesh).unwrap().value;
        assert!((grad + 1.5 * g).abs() < 1e-3);
    }

    #[test]
    fn poisson_jensen() {
        let d = unit();
        let backend = GreenBackend::for_domain(&d, DEFAULT_H).unwrap();
        let op = KernelOperator::disk(&d, 24, 96).unwrap();
        let o = c(0.0, 0.0);
        assert!(poisson_jensen_residual(&backend, &op, &Poly2::radius_squared(), o, 1024).unwrap() < 1e-3);
        let re = Poly2::new(vec![(1, 0, 1.0)]);
        assert!(poisson_jensen_residual(&backend, &op, &re, c(0.3, 0.2), 1024).unwrap() < 1e-4);
        assert!(poisson_jensen_residual(&backend, &op, &Poly2::constant(2.0), c(0.3, 0.2), 1024).unwrap() < 1e-10);
    }

    #[test]
    fn star_hadamard_is_negative() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2], vec![])).unwrap();
        let backend = GreenBackend::numeric(&s, 1.0 / 64.0).unwrap();
        let p = BoundaryPerturbation::new(TrigSeries::new(1.0, vec![0.5], vec![0.2])).unwrap();
        for (z, w) in [(c(0.0, 0.0), c(0.3, 0.1)), (c(-0.4, 0.2), c(0.5, -0.3))] {
            assert!(hadamard_delta_with(&backend, &p, z, w, 512).unwrap().value < 0.0);
        }
        assert!(backend.check_point(c(1.19, 0.0)).is_err());
    }

    #[test]
    fn gradient_moment_on_star_matches_disk_formula() {
        let d = unit();
        let s = d.to_star();
        let x = c(0.3, -0.2);
        assert!((log_gradient_moment(&s, x) - log_gradient_moment(&d, x)).norm() < 1e-10);
    }
}
