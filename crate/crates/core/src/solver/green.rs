use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex};

use super::dirichlet::{DirichletSolver, FieldGrid};
use super::grid::Grid;
use crate::domain::{BoundaryNode, Domain2D};
use crate::error::{Error, Result};
use crate::field::Conductivity;
use crate::{fundamental, fundamental_grad, Point};

/// First zero of the Bessel function `J₀`.
pub const J01: f64 = 2.404_825_557_695_773;

/// Largest `‖q‖∞ · ‖T‖` accepted by the perturbed solvers.
pub const RESONANCE_LIMIT: f64 = 0.9;

/// Upper bound for `‖T‖ = 1/λ₁(D)`: the domain lies in the disk of radius
/// `max ρ`, and the first Dirichlet eigenvalue decreases under inclusion.
pub fn t_norm_bound(domain: &Domain2D) -> f64 {
    let r = domain.max_radius();
    r * r / (J01 * J01)
}

/// `∬ ½ ln(x² + y²) dx dy` as a function of the upper corner.
fn log_antiderivative(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return 0.0;
    }
    let xy = if x == 0.0 || y == 0.0 { 0.0 } else { x * y * r2.ln() };
    let ax = if x == 0.0 { 0.0 } else { x * x * (y / x).atan() };
    let ay = if y == 0.0 { 0.0 } else { y * y * (x / y).atan() };
    0.5 * (xy - 3.0 * x * y + ax + ay)
}

/// Mean of `Φ_w` over the axis-aligned square of side `h` centred at `c`.
pub fn cell_average_fundamental(c: Point, w: Point, h: f64) -> f64 {
    let (x1, x2) = (c.re - 0.5 * h - w.re, c.re + 0.5 * h - w.re);
    let (y1, y2) = (c.im - 0.5 * h - w.im, c.im + 0.5 * h - w.im);
    let f = log_antiderivative;
    (f(x2, y2) - f(x1, y2) - f(x2, y1) + f(x1, y1)) / (h * h * TAU)
}

/// Numerical Green function `g_w = (Φ_w + c_w) / (√λ(·) √λ(w))` with the
/// smooth correction `c_w` on a grid; `λ ≡ 1` unless a conductivity is set.
#[derive(Debug, Clone)]
pub struct NumericGreen {
    pole: Point,
    correction: FieldGrid,
    conductivity: Option<Conductivity>,
}

impl NumericGreen {
    pub fn pole(&self) -> Point {
        self.pole
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.correction.grid()
    }

    pub fn correction(&self) -> &FieldGrid {
        &self.correction
    }

    fn weight(&self, z: Point) -> f64 {
        match &self.conductivity {
            None => 1.0,
            Some(c) => (c.eval(z) * c.eval(self.pole)).sqrt(),
        }
    }

    pub fn value(&self, z: Point) -> Result<f64> {
        if z == self.pole {
            return Err(Error::AtPole(z));
        }
        let (c, _) = self.correction.eval_cubic(z)?;
        Ok((fundamental(z, self.pole) + c) / self.weight(z))
    }

    /// Value at grid node `k`; the node whose cell holds the pole gets the
    /// cell average of the singular part.
    pub fn node_value(&self, k: usize) -> f64 {
        let grid = self.grid();
        let p = grid.node_point(k);
        let phi = if grid.lattice(k) == grid.nearest_lattice(self.pole) {
            cell_average_fundamental(p, self.pole, grid.h())
        } else {
            fundamental(p, self.pole)
        };
        (phi + self.correction.value(k)) / self.weight(p)
    }

    /// Gradient in the first argument.
    pub fn gradient(&self, z: Point) -> Result<Point> {
        if z == self.pole {
            return Err(Error::AtPole(z));
        }
        let (c, gc) = self.correction.eval_cubic(z)?;
        let g = fundamental_grad(z, self.pole) + gc;
        match &self.conductivity {
            None => Ok(g),
            Some(lam) => {
                let s = self.weight(z);
                let v = fundamental(z, self.pole) + c;
                let dl = lam.poly().grad(z) / (2.0 * lam.eval(z));
                Ok((g - v * dl) / s)
            }
        }
    }

    /// Samples of the correction along the inward normal at `s·h`, `s = 3, 4, 5`.
    fn inward_samples(&self, node: &BoundaryNode) -> Result<[f64; 3]> {
        let h = self.grid().h();
        let mut out = [0.0; 3];
        for (slot, s) in out.iter_mut().zip([3.0, 4.0, 5.0]) {
            *slot = self.correction.eval_cubic(node.point - node.normal * (s * h))?.0;
        }
        Ok(out)
    }

    /// Outward normal derivative at a boundary node: analytic `∂Φ_w/∂n` plus
    /// a one-sided cubic difference of the correction through its boundary
    /// value and interior samples at `3h, 4h, 5h`.
    pub fn normal_derivative(&self, node: &BoundaryNode) -> Result<f64> {
        let h = self.grid().h();
        let f0 = -fundamental(node.point, self.pole);
        let [f3, f4, f5] = self.inward_samples(node)?;
        // d/ds at s = 0 of the cubic through s = 0, 3h, 4h, 5h
        let d_ds = (-(47.0 / 60.0) * f0 + (10.0 / 3.0) * f3 - 3.75 * f4 + 1.2 * f5) / h;
        let dphi = crate::dot(fundamental_grad(node.point, self.pole), node.normal);
        Ok((dphi - d_ds) / self.weight(node.point))
    }

    /// Correction extrapolated to the boundary node plus the singular part;
    /// vanishes up to discretization error.
    pub fn boundary_value(&self, node: &BoundaryNode) -> Result<f64> {
        let [f3, f4, f5] = self.inward_samples(node)?;
        let c0 = 10.0 * f3 - 15.0 * f4 + 6.0 * f5;
        Ok((fundamental(node.point, self.pole) + c0) / self.weight(node.point))
    }
}

fn boundary_distance_check(domain: &Domain2D, w: Point, h: f64) -> Result<()> {
    if !domain.contains(w) {
        return Err(Error::OutsideDomain { point: w, detail: "pole outside domain".into() });
    }
    let dist = domain.boundary_distance(w);
    if dist < 4.0 * h {
        return Err(Error::OutsideDomain {
            point: w,
            detail: format!("pole is {dist:.3e} from the boundary, needs at least 4h = {:.3e}", 4.0 * h),
        });
    }
    Ok(())
}

/// Factorized solvers for Green functions of `Δ − q` on one grid.
pub struct GreenSolver {
    laplace: Arc<DirichletSolver>,
    shifted: Option<(DirichletSolver, Vec<f64>)>,
    conductivity: Option<Conductivity>,
}

impl std::fmt::Debug for GreenSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenSolver")
            .field("laplace", &self.laplace)
            .field("shifted", &self.shifted.is_some())
            .finish()
    }
}

impl GreenSolver {
    /// Solver for the Laplacian Green function.
    pub fn laplace(domain: &Domain2D, h: f64) -> Result<Self> {
        let grid = Grid::new(domain, h)?;
        let laplace = Arc::new(DirichletSolver::new(grid, None)?);
        Ok(GreenSolver { laplace, shifted: None, conductivity: None })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.laplace.grid()
    }

    /// The factorized plain Laplacian on this grid.
    pub fn laplace_solver(&self) -> &DirichletSolver {
        &self.laplace
    }

    /// Adds the operator `Δ − q` for a bounded potential `q`, after checking
    /// `‖q‖∞ · ‖T‖ < 0.9` with the inclusion bound on `‖T‖`.
    pub fn with_potential(&self, q: &(dyn Fn(Point) -> f64 + Sync)) -> Result<Self> {
        let grid = self.grid().clone();
        let qv: Vec<f64> = grid.node_points().map(q).collect();
        let domain = grid.domain();
        let q_max = qv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // nodes do not reach the boundary; include a boundary sample in the sup
        let q_bdry = (0..512)
            .map(|k| q(domain.boundary_point(TAU * k as f64 / 512.0)).abs())
            .fold(0.0, f64::max);
        let measured = q_max.max(q_bdry) * t_norm_bound(domain);
        if !(measured < RESONANCE_LIMIT) {
            return Err(Error::Resonance { measured, limit: RESONANCE_LIMIT });
        }
        let solver = DirichletSolver::new(grid, Some(&qv))?;
        Ok(GreenSolver { laplace: self.laplace.clone(), shifted: Some((solver, qv)), conductivity: None })
    }

    /// Solver for the operator `∇·(λ∇)` via the potential of `λ`.
    pub fn with_conductivity(&self, lambda: &Conductivity) -> Result<Self> {
        let lam = lambda.clone();
        let mut s = self.with_potential(&move |z| lam.potential(z))?;
        s.conductivity = Some(lambda.clone());
        Ok(s)
    }

    /// Laplacian Green function with pole `w`.
    pub fn laplace_green(&self, w: Point) -> Result<NumericGreen> {
        let grid = self.grid();
        boundary_distance_check(grid.domain(), w, grid.h())?;
        let zeros = vec![0.0; grid.len()];
        let correction = self.laplace.solve(&zeros, &|z| -fundamental(z, w))?;
        Ok(NumericGreen { pole: w, correction, conductivity: None })
    }

    /// Green function of the configured operator with pole `w`.
    pub fn green(&self, w: Point) -> Result<NumericGreen> {
        let base = self.laplace_green(w)?;
        let Some((solver, q)) = &self.shifted else {
            return Ok(base);
        };
        let rhs: Vec<f64> = (0..q.len()).map(|k| q[k] * base.node_value(k)).collect();
        let v = solver.solve(&rhs, &|_| 0.0)?;
        Ok(NumericGreen {
            pole: w,
            correction: base.correction.add(&v),
            conductivity: self.conductivity.clone(),
        })
    }
}

pub fn green_numeric(domain: &Domain2D, w: Point, h: f64) -> Result<NumericGreen> {
    GreenSolver::laplace(domain, h)?.laplace_green(w)
}

/// Green function of `Δ − a`: `Δg* = δ_w + a g*`.
pub fn green_helmholtz_numeric(domain: &Domain2D, a: f64, w: Point, h: f64) -> Result<NumericGreen> {
    green_schrodinger_numeric(domain, &|_| a, w, h)
}

/// Green function of `Δ − q`: `Δg* = δ_w + q g*`.
pub fn green_schrodinger_numeric(
    domain: &Domain2D,
    q: &(dyn Fn(Point) -> f64 + Sync),
    w: Point,
    h: f64,
) -> Result<NumericGreen> {
    GreenSolver::laplace(domain, h)?.with_potential(q)?.green(w)
}

/// Green function of `∇·(λ∇)` through `G̃/(√λ(z) √λ(w))`, `G̃` the Green
/// function of `Δ − u` with `u = λ^{-1/2} Δ λ^{1/2}`.
pub fn green_beltrami_numeric(domain: &Domain2D, lambda: &Conductivity, w: Point, h: f64) -> Result<NumericGreen> {
    GreenSolver::laplace(domain, h)?.with_conductivity(lambda)?.green(w)
}

/// Solved Green functions keyed by pole, sharing one factorization.
pub struct GreenCache {
    solver: GreenSolver,
    poles: Mutex<HashMap<(u64, u64), Arc<NumericGreen>>>,
}

impl std::fmt::Debug for GreenCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenCache").field("solver", &self.solver).finish()
    }
}

impl GreenCache {
    pub fn new(solver: GreenSolver) -> Self {
        GreenCache { solver, poles: Mutex::new(HashMap::new()) }
    }

    pub fn solver(&self) -> &GreenSolver {
        &self.solver
    }

    pub fn get(&self, w: Point) -> Result<Arc<NumericGreen>> {
        let key = (w.re.to_bits(), w.im.to_bits());
        if let Some(g) = self.poles.lock().expect("green cache poisoned").get(&key) {
            return Ok(g.clone());
        }
        // solve outside the lock; a concurrent duplicate solve is harmless
        let g = Arc::new(self.solver.green(w)?);
        self.poles.lock().expect("green cache poisoned").entry(key).or_insert_with(|| g.clone());
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::DiskGreen;
    use crate::domain::{boundary_mesh, build_disk, build_star, TrigSeries};
    use crate::field::Poly2;

    fn c(re: f64, im: f64) -> Point {
        Point::new(re, im)
    }

    #[test]
    fn log_cell_average_matches_quadrature() {
        let h = 0.1;
        for (cen, w) in [(c(0.0, 0.0), c(0.0, 0.0)), (c(0.02, -0.01), c(0.0, 0.0)), (c(0.3, 0.2), c(0.1, 0.1))] {
            let n = 400;
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let p = cen + c((a as f64 + 0.5) / n as f64 - 0.5, (b as f64 + 0.5) / n as f64 - 0.5) * h;
                    acc += fundamental(p, w);
                }
            }
            acc /= (n * n) as f64;
            let exact = cell_average_fundamental(cen, w, h);
            assert!((acc - exact).abs() < 2e-5, "{acc} vs {exact}");
        }
    }

    #[test]
    fn disk_green_values() {
        let d = build_disk(1.0).unwrap();
        let h = 1.0 / 128.0;
        let solver = GreenSolver::laplace(&d, h).unwrap();
        let g = solver.laplace_green(c(0.5, 0.0)).unwrap();
        let exact = DiskGreen::new(1.0).unwrap().green_unchecked(c(0.0, 0.0), c(0.5, 0.0));
        assert!((g.value(c(0.0, 0.0)).unwrap() - exact).abs() < 5e-5);
        let (z, w) = (c(0.3, 0.0), c(-0.2, 0.4));
        let gz = solver.laplace_green(z).unwrap().value(w).unwrap();
        let gw = solver.laplace_green(w).unwrap().value(z).unwrap();
        assert!((gz - gw).abs() < 1e-4);
        assert!(solver.laplace_green(c(0.99, 0.0)).is_err());
        assert!(solver.laplace_green(c(1.5, 0.0)).is_err());
    }

    #[test]
    fn density_from_center() {
        let d = build_disk(1.0).unwrap();
        let g = green_numeric(&d, c(0.0, 0.0), 1.0 / 128.0).unwrap();
        let mesh = boundary_mesh(&d, 256).unwrap();
        for node in mesh.nodes() {
            assert!((g.normal_derivative(node).unwrap() - 1.0 / TAU).abs() < 1e-4);
        }
        let g = green_numeric(&d, c(0.5, 0.0), 1.0 / 128.0).unwrap();
        let node = mesh.nodes()[0];
        assert!((g.normal_derivative(&node).unwrap() - 3.0 / TAU).abs() < 5e-4);
        let total = mesh.integrate(|n| g.normal_derivative(n).unwrap());
        assert!((total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn star_density_normalized_and_boundary_vanishing() {
        let s = build_star(TrigSeries::new(1.0, vec![0.2], vec![])).unwrap();
        let g = green_numeric(&s, c(0.1, 0.1), 1.0 / 128.0).unwrap();
        let mesh = boundary_mesh(&s, 512).unwrap();
        let total = mesh.integrate(|n| g.normal_derivative(n).unwrap());
        assert!((total - 1.0).abs() < 1e-3, "{total}");
        for node in mesh.nodes() {
            assert!(g.boundary_value(node).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn gradient_of_centered_pole() {
        let d = build_disk(1.0).unwrap();
        let g = green_numeric(&d, c(0.0, 0.0), 1.0 / 128.0).unwrap();
        let grad = g.gradient(c(0.5, 0.0)).unwrap();
        assert!((grad - c(1.0 / (TAU * 0.5), 0.0)).norm() < 1e-4);
    }

    #[test]
    fn helmholtz_identity_and_sign() {
        let d = build_disk(1.0).unwrap();
        let h = 1.0 / 64.0;
        let base = GreenSolver::laplace(&d, h).unwrap();
        let w = c(0.1, -0.2);
        let g = base.laplace_green(w).unwrap();
        let g0 = base.with_potential(&|_| 0.0).unwrap().green(w).unwrap();
        let diff = g.correction().values().iter().zip(g0.correction().values()).map(|(a, b)| (a - b).abs());
        assert!(diff.fold(0.0, f64::max) < 1e-12);
        let gs = base.with_potential(&|_| 0.5).unwrap().green(w).unwrap();
        for k in 0..g.grid().len() {
            assert!(gs.correction().value(k) - g.correction().value(k) >= -1e-8);
        }
        assert!(matches!(base.with_potential(&|_| -6.0), Err(Error::Resonance { .. })));
    }

    #[test]
    fn constant_potential_matches_helmholtz() {
        let d = build_disk(1.0).unwrap();
        let (w, h) = (c(0.2, 0.1), 1.0 / 64.0);
        let a = green_helmholtz_numeric(&d, 0.7, w, h).unwrap();
        let b = green_schrodinger_numeric(&d, &|_| 0.7, w, h).unwrap();
        assert_eq!(a.correction().values(), b.correction().values());
    }

    #[test]
    fn constant_conductivity_scales() {
        let d = build_disk(1.0).unwrap();
        let (w, h) = (c(0.2, 0.1), 1.0 / 64.0);
        let plain = green_numeric(&d, w, h).unwrap();
        let lam = Conductivity::new(Poly2::constant(2.0), &d).unwrap();
        let scaled = green_beltrami_numeric(&d, &lam, w, h).unwrap();
        for z in [c(0.0, 0.0), c(-0.4, 0.5)] {
            assert!((scaled.value(z).unwrap() - plain.value(z).unwrap() / 2.0).abs() < 1e-12);
        }
        let one = Conductivity::new(Poly2::constant(1.0), &d).unwrap();
        let same = green_beltrami_numeric(&d, &one, w, h).unwrap();
        assert!((same.value(c(0.3, 0.3)).unwrap() - plain.value(c(0.3, 0.3)).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn beltrami_radial_example() {
        let d = build_disk(1.0).unwrap();
        let eps = 0.01;
        let h = 1.0 / 128.0;
        let lam = Conductivity::new(Poly2::radius_squared().one_plus(eps), &d).unwrap();
        let base = GreenSolver::laplace(&d, h).unwrap();
        let g = base.laplace_green(c(0.0, 0.0)).unwrap();
        let gs = base.with_conductivity(&lam).unwrap().green(c(0.0, 0.0)).unwrap();
        let z = c(0.6, 0.0);
        let delta = (gs.value(z).unwrap() - g.value(z).unwrap()) / eps;
        assert!((delta - 0.64 / (4.0 * std::f64::consts::PI)).abs() < 2e-3, "{delta}");
    }

    #[test]
    fn cache_reuses_solves() {
        let d = build_disk(1.0).unwrap();
        let cache = GreenCache::new(GreenSolver::laplace(&d, 1.0 / 32.0).unwrap());
        let a = cache.get(c(0.1, 0.0)).unwrap();
        let b = cache.get(c(0.1, 0.0)).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
