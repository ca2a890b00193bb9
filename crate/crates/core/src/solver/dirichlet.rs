use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::grid::{Grid, Leg, OPPOSITE};
use crate::error::{Error, Result};
use crate::Point;

/// Normwise backward error accepted from the sparse direct solve.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

const REFINEMENT_STEPS: usize = 4;

/// Scalar field on the interior nodes of a [`Grid`].
#[derive(Debug, Clone)]
pub struct FieldGrid {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl FieldGrid {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!("field has {} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite field value at node {k}")));
        }
        Ok(FieldGrid { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        FieldGrid { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> f64) -> Self {
        let values = grid.node_points().map(f).collect();
        FieldGrid { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Node-wise sum; both fields must live on the same grid.
    pub fn add(&self, other: &FieldGrid) -> FieldGrid {
        assert!(Arc::ptr_eq(&self.grid, &other.grid), "fields on different grids");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        FieldGrid { grid: self.grid.clone(), values }
    }

    fn at(&self, i: i64, j: i64) -> Option<f64> {
        self.grid.lookup(i, j).map(|k| self.values[k])
    }

    fn check_inside(&self, z: Point) -> Result<()> {
        if self.grid.domain().contains(z) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: z, detail: "field evaluation".into() })
        }
    }

    /// Bilinear interpolation among the interior corners of the cell
    /// containing `z`, renormalized when some corners are exterior.
    pub fn eval(&self, z: Point) -> Result<f64> {
        self.check_inside(z)?;
        self.bilinear(z)
            .ok_or_else(|| Error::OutsideDomain { point: z, detail: "no interior grid node nearby".into() })
    }

    fn bilinear(&self, z: Point) -> Option<f64> {
        let h = self.grid.h();
        let (x, y) = (z.re / h, z.im / h);
        let (i, j) = (x.floor() as i64, y.floor() as i64);
        let (fx, fy) = (x - i as f64, y - j as f64);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (di, dj, w) in [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ] {
            if let Some(v) = self.at(i + di, j + dj) {
                acc += w * v;
                wsum += w;
            }
        }
        if wsum > 1e-12 {
            return Some(acc / wsum);
        }
        let (ni, nj) = self.grid.nearest_lattice(z);
        self.at(ni, nj)
    }

    /// Bicubic Lagrange interpolation on the 4×4 block of nodes around `z`,
    /// returning the value and gradient. Falls back to bilinear data when
    /// the block is not fully interior.
    pub fn eval_cubic(&self, z: Point) -> Result<(f64, Point)> {
        self.check_inside(z)?;
        let h = self.grid.h();
        let (x, y) = (z.re / h, z.im / h);
        let (i, j) = (x.floor() as i64, y.floor() as i64);
        let (fx, fy) = (x - i as f64, y - j as f64);
        let mut block = [[0.0; 4]; 4];
        for (b, row) in block.iter_mut().enumerate() {
            for (a, v) in row.iter_mut().enumerate() {
                match self.at(i - 1 + a as i64, j - 1 + b as i64) {
                    Some(val) => *v = val,
                    None => return self.bilinear_with_gradient(z),
                }
            }
        }
        let (wx, dx) = cubic_weights(fx);
        let (wy, dy) = cubic_weights(fy);
        let mut val = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for b in 0..4 {
            for a in 0..4 {
                let v = block[b][a];
                val += wx[a] * wy[b] * v;
                gx += dx[a] * wy[b] * v;
                gy += wx[a] * dy[b] * v;
            }
        }
        Ok((val, Point::new(gx / h, gy / h)))
    }

    fn bilinear_with_gradient(&self, z: Point) -> Result<(f64, Point)> {
        let h = self.grid.h();
        let v = self.eval(z)?;
        let probe = |d: Point| -> f64 {
            let p = z + d;
            if self.grid.domain().contains(p) {
                self.bilinear(p).unwrap_or(v)
            } else {
                v
            }
        };
        let gx = (probe(Point::new(0.5 * h, 0.0)) - probe(Point::new(-0.5 * h, 0.0))) / h;
        let gy = (probe(Point::new(0.0, 0.5 * h)) - probe(Point::new(0.0, -0.5 * h))) / h;
        Ok((v, Point::new(gx, gy)))
    }
}

/// Lagrange weights and their derivatives for nodes −1, 0, 1, 2 at `t`.
fn cubic_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let nodes = [-1.0, 0.0, 1.0, 2.0];
    let mut w = [0.0; 4];
    let mut d = [0.0; 4];
    for a in 0..4 {
        let mut denom = 1.0;
        for b in 0..4 {
            if b != a {
                denom *= nodes[a] - nodes[b];
            }
        }
        let mut prod = 1.0;
        for b in 0..4 {
            if b != a {
                prod *= t - nodes[b];
            }
        }
        w[a] = prod / denom;
        let mut deriv = 0.0;
        for skip in 0..4 {
            if skip == a {
                continue;
            }
            let mut p = 1.0;
            for b in 0..4 {
                if b != a && b != skip {
                    p *= t - nodes[b];
                }
            }
            deriv += p;
        }
        d[a] = deriv / denom;
    }
    (w, d)
}

/// Factorized Shortley–Weller discretization of `Δ − q` with Dirichlet data.
pub struct DirichletSolver {
    grid: Arc<Grid>,
    /// Row-wise stencil: `(column, coefficient)` with the diagonal first.
    rows: Vec<Vec<(usize, f64)>>,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for DirichletSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletSolver").field("nodes", &self.grid.len()).field("h", &self.grid.h()).finish()
    }
}

impl DirichletSolver {
    /// Discretizes `Δu − q·u`; `q = None` gives the plain Laplacian.
    pub fn new(grid: Arc<Grid>, q: Option<&[f64]>) -> Result<Self> {
        if let Some(q) = q {
            if q.len() != grid.len() {
                return Err(Error::invalid("potential length does not match the grid"));
            }
        }
        let h = grid.h();
        let mut rows = Vec::with_capacity(grid.len());
        let mut triplets = Vec::with_capacity(5 * grid.len());
        for k in 0..grid.len() {
            let legs = grid.legs(k);
            let mut row = vec![(k, 0.0)];
            let mut diag = -q.map_or(0.0, |q| q[k]);
            for (d, leg) in legs.iter().enumerate() {
                let l = leg.len(h);
                let c = 2.0 / (l * (l + legs[OPPOSITE[d]].len(h)));
                diag -= c;
                if let Leg::Node(t) = *leg {
                    row.push((t, c));
                }
            }
            row[0].1 = diag;
            for &(col, v) in &row {
                triplets.push(Triplet::new(k, col, v));
            }
            rows.push(row);
        }
        let n = grid.len();
        let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Solver(format!("matrix assembly failed: {e:?}")))?;
        let lu = matrix.sp_lu().map_err(|e| {
            Error::Solver(format!("factorization failed on {} nodes at h = {}: {e:?}", n, h))
        })?;
        Ok(DirichletSolver { grid, rows, lu })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Right-hand side contribution of the Dirichlet data at node `k`.
    fn boundary_term(&self, k: usize, bvals: &dyn Fn(Point) -> f64) -> f64 {
        let h = self.grid.h();
        let legs = self.grid.legs(k);
        let mut acc = 0.0;
        for (d, leg) in legs.iter().enumerate() {
            if let Leg::Boundary { len, point } = *leg {
                let c = 2.0 / (len * (len + legs[OPPOSITE[d]].len(h)));
                acc += c * bvals(point);
            }
        }
        acc
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(c, v)| v * x[c]).sum()).collect()
    }

    /// Solves `(Δ_h − q) u = rhs` with `u = bvals` on the boundary.
    pub fn solve(&self, rhs: &[f64], bvals: &dyn Fn(Point) -> f64) -> Result<FieldGrid> {
        let n = self.grid.len();
        if rhs.len() != n {
            return Err(Error::invalid("right-hand side length does not match the grid"));
        }
        if let Some(k) = rhs.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite right-hand side at node {k}")));
        }
        let b: Vec<f64> = (0..n).map(|k| rhs[k] - self.boundary_term(k, bvals)).collect();
        let x = self.solve_system(&b)?;
        FieldGrid::new(self.grid.clone(), x)
    }

    /// Solves the assembled system `A x = b` with iterative refinement until
    /// the normwise backward error is below [`SOLVER_TOLERANCE`].
    pub fn solve_system(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let mut work = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        self.lu.solve_in_place(work.as_mut());
        let mut x: Vec<f64> = (0..n).map(|i| work[(i, 0)]).collect();
        let a_norm = self.rows.iter().map(|r| r.iter().map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let b_norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut err = f64::INFINITY;
        for _ in 0..=REFINEMENT_STEPS {
            let ax = self.apply(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let r_norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = a_norm * x_norm + b_norm;
            err = if scale == 0.0 { 0.0 } else { r_norm / scale };
            if err <= SOLVER_TOLERANCE {
                return Ok(x);
            }
            let mut corr = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
            self.lu.solve_in_place(corr.as_mut());
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += corr[(i, 0)];
            }
        }
        Err(Error::Solver(format!(
            "backward error {err:.3e} above {SOLVER_TOLERANCE:e} on {n} nodes at h = {}",
            self.grid.h()
        )))
    }
}

/// One-shot `Δu = rhs` in the domain, `u = bvals` on its boundary.
pub fn solve_dirichlet(grid: &Arc<Grid>, rhs: &FieldGrid, bvals: &dyn Fn(Point) -> f64) -> Result<FieldGrid> {
    DirichletSolver::new(grid.clone(), None)?.solve(rhs.values(), bvals)
}
