//! The integral operator `Tφ(z) = ∫_D φ(ξ) g(z, ξ) dA(ξ)` and the Neumann
//! series for the Green functions of `Δ − a` and `Δ − εp`.
//!
//! Two backends are available. On a disk, `T` is evaluated by area
//! quadrature against the closed-form kernel, with the logarithmic
//! singularity subtracted and integrated exactly. On other domains `T` is the
//! discrete solution operator of the Dirichlet problem on a grid, which keeps
//! series and direct solves discretely consistent.

mod mesh;

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use rayon::prelude::*;

pub use mesh::QuadratureMesh;

use crate::disk::DiskGreen;
use crate::domain::Domain2D;
use crate::error::{Error, Result};
use crate::solver::{FieldGrid, GreenSolver, DEFAULT_H};
use crate::{fundamental, Point};

pub const DEFAULT_MESH: (usize, usize) = (32, 128);
pub const POWER_MAX_ITERATIONS: usize = 500;
pub const POWER_TOLERANCE: f64 = 1e-6;

/// `∫_{|ξ|<R} Φ_x(ξ) dA = R² ln R / 2 − (R² − |x|²)/4` for `|x| ≤ R`.
pub fn disk_log_moment(radius: f64, x: Point) -> f64 {
    let r2 = radius * radius;
    0.5 * r2 * radius.ln() - 0.25 * (r2 - x.norm_sqr())
}

/// `∫_D Φ_x(ξ)² dA` as the boundary integral
/// `(4π²)⁻¹ ∮ (ξ − x)·n (ln²r/2 − ln r/2 + 1/4) ds`, `r = |ξ − x|`.
pub fn log_square_moment(domain: &Domain2D, x: Point) -> f64 {
    let dist = domain.boundary_distance(x).max(1e-12);
    let n = ((64.0 * TAU * domain.max_radius() / dist) as usize).clamp(4096, 1 << 20);
    let dt = TAU / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        let t = k as f64 * dt;
        let xi = domain.boundary_point(t);
        // (ξ − x)·n ds = (ξ − x)·(−i γ') dθ
        let flux = crate::dot(xi - x, -Point::i() * domain.tangent(t));
        let lr = (xi - x).norm().ln();
        acc += flux * (0.5 * lr * lr - 0.5 * lr + 0.25);
    }
    acc * dt / (4.0 * PI * PI)
}

/// Quadrature backend on a disk.
struct DiskQuadrature {
    green: DiskGreen,
    mesh: QuadratureMesh,
    /// `B[(i·n_s + j)·n_θ + m] = A_j g(ξ_{i,0}, ξ_{j,m})`; the slot `j = i, m = 0`
    /// holds the subtracted-singularity diagonal.
    blocks: Vec<f64>,
}

impl DiskQuadrature {
    fn new(radius: f64, domain: &Domain2D, n_s: usize, n_theta: usize) -> Result<Self> {
        let green = DiskGreen::new(radius)?;
        let mesh = QuadratureMesh::polar(domain, n_s, n_theta)?;
        let nodes = mesh.nodes();
        let weights = mesh.weights();
        let blocks: Vec<f64> = (0..n_s)
            .into_par_iter()
            .flat_map_iter(|i| {
                let zi = nodes[i * n_theta];
                let mut row = vec![0.0; n_s * n_theta];
                let mut phi_sum = 0.0;
                for j in 0..n_s {
                    for m in 0..n_theta {
                        let k = j * n_theta + m;
                        if k == i * n_theta {
                            continue;
                        }
                        row[k] = weights[k] * green.green_unchecked(zi, nodes[k]);
                        phi_sum += weights[k] * fundamental(zi, nodes[k]);
                    }
                }
                let k = i * n_theta;
                row[k] = weights[k] * green.regular(zi, zi) + disk_log_moment(radius, zi) - phi_sum;
                row
            })
            .collect();
        Ok(DiskQuadrature { green, mesh, blocks })
    }

    fn apply_nodes(&self, x: &[f64]) -> Vec<f64> {
        let (n_s, n_t) = (self.mesh.n_s(), self.mesh.n_theta());
        (0..n_s * n_t)
            .into_par_iter()
            .map(|idx| {
                let (i, l) = (idx / n_t, idx % n_t);
                let mut acc = 0.0;
                for j in 0..n_s {
                    let b = &self.blocks[(i * n_s + j) * n_t..(i * n_s + j + 1) * n_t];
                    let xr = &x[j * n_t..(j + 1) * n_t];
                    // x index (m + l) mod n_t
                    let split = n_t - l;
                    acc += b[..split].iter().zip(&xr[l..]).map(|(a, c)| a * c).sum::<f64>();
                    acc += b[split..].iter().zip(&xr[..l]).map(|(a, c)| a * c).sum::<f64>();
                }
                acc
            })
            .collect()
    }

    /// `∫ φ g(z, ·) dA` for continuous `φ` given at the nodes and at `z`.
    fn smooth_at(&self, z: Point, phi_nodes: &[f64], phi_z: f64) -> f64 {
        let mut acc = 0.0;
        for ((&x, &a), &f) in self.mesh.nodes().iter().zip(self.mesh.weights()).zip(phi_nodes) {
            if x == z {
                acc += a * f * self.green.regular(z, z);
                continue;
            }
            acc += a * ((f - phi_z) * fundamental(z, x) + f * self.green.regular(z, x));
        }
        acc + phi_z * disk_log_moment(self.green.radius(), z)
    }

    /// `∫ Φ_w g(z, ·) dA`.
    fn pole_at(&self, domain: &Domain2D, w: Point, z: Point) -> f64 {
        let radius = self.green.radius();
        let nodes = self.mesh.nodes();
        let weights = self.mesh.weights();
        if z == w {
            let hw = self.green.regular(w, w);
            let mut acc = 0.0;
            for (&x, &a) in nodes.iter().zip(weights) {
                if x != w {
                    acc += a * fundamental(x, w) * (self.green.regular(w, x) - hw);
                }
            }
            return log_square_moment(domain, w) + acc + hw * disk_log_moment(radius, w);
        }
        let phi_wz = fundamental(z, w);
        let h_zw = self.green.regular(z, w);
        let mut acc = 0.0;
        for (&x, &a) in nodes.iter().zip(weights) {
            let (pw, pz) = if x == z || x == w {
                (0.0, 0.0)
            } else {
                (fundamental(x, w) - phi_wz, fundamental(x, z) - phi_wz)
            };
            let hz = if x == w { 0.0 } else { fundamental(x, w) * (self.green.regular(z, x) - h_zw) };
            acc += a * (pw * pz + hz);
        }
        acc - phi_wz * phi_wz * self.mesh.total_weight()
            + (phi_wz + h_zw) * disk_log_moment(radius, w)
            + phi_wz * disk_log_moment(radius, z)
    }
}

enum Backend {
    Disk(DiskQuadrature),
    Grid(GreenSolver),
}

/// The operator `T` on a fixed domain, with its discretization.
pub struct KernelOperator {
    domain: Domain2D,
    backend: Backend,
    norm: OnceLock<f64>,
}

impl std::fmt::Debug for KernelOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.backend {
            Backend::Disk(q) => format!("disk quadrature {}×{}", q.mesh.n_s(), q.mesh.n_theta()),
            Backend::Grid(s) => format!("grid h = {}", s.grid().h()),
        };
        f.debug_struct("KernelOperator").field("backend", &kind).finish()
    }
}

/// A function `c·Φ_w + φ_c` with continuous `φ_c`, sampled where `T` needs it.
struct Sampled {
    nodes: Vec<f64>,
    c: f64,
    pole: Point,
}

impl KernelOperator {
    /// Closed-form kernel with an `n_s × n_theta` polar quadrature mesh.
    pub fn disk(domain: &Domain2D, n_s: usize, n_theta: usize) -> Result<Self> {
        let radius = domain
            .disk_radius()
            .ok_or_else(|| Error::invalid("the quadrature backend needs a disk domain"))?;
        let q = DiskQuadrature::new(radius, domain, n_s, n_theta)?;
        Ok(KernelOperator { domain: domain.clone(), backend: Backend::Disk(q), norm: OnceLock::new() })
    }

    /// Discrete Dirichlet solution operator on a grid of spacing `h`.
    pub fn grid(domain: &Domain2D, h: f64) -> Result<Self> {
        Self::from_solver(GreenSolver::laplace(domain, h)?)
    }

    pub fn from_solver(solver: GreenSolver) -> Result<Self> {
        let domain = solver.grid().domain().clone();
        Ok(KernelOperator { domain, backend: Backend::Grid(solver), norm: OnceLock::new() })
    }

    /// Quadrature backend for disks, grid backend otherwise.
    pub fn new(domain: &Domain2D) -> Result<Self> {
        match domain.disk_radius() {
            Some(_) => Self::disk(domain, DEFAULT_MESH.0, DEFAULT_MESH.1),
            None => Self::grid(domain, DEFAULT_H),
        }
    }

    pub fn domain(&self) -> &Domain2D {
        &self.domain
    }

    pub fn mesh(&self) -> Option<&QuadratureMesh> {
        match &self.backend {
            Backend::Disk(q) => Some(&q.mesh),
            Backend::Grid(_) => None,
        }
    }

    pub fn grid_solver(&self) -> Option<&GreenSolver> {
        match &self.backend {
            Backend::Disk(_) => None,
            Backend::Grid(s) => Some(s),
        }
    }

    /// Kernel matrix entries `g(ξ_j, ξ_k)` between two quadrature nodes
    /// (disk backend).
    pub fn kernel_entry(&self, j: usize, k: usize) -> Option<f64> {
        let Backend::Disk(q) = &self.backend else { return None };
        let nodes = q.mesh.nodes();
        (j != k).then(|| q.green.green_unchecked(nodes[j], nodes[k]))
    }

    fn check_point(&self, z: Point) -> Result<()> {
        if self.domain.contains(z) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: z, detail: "operator evaluation point".into() })
        }
    }

    fn points(&self) -> Vec<Point> {
        match &self.backend {
            Backend::Disk(q) => q.mesh.nodes().to_vec(),
            Backend::Grid(s) => s.grid().node_points().collect(),
        }
    }

    /// Base Green function `g_w` sampled on the discretization points and at
    /// the probes.
    fn sample_green(&self, w: Point, probes: &[Point]) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.backend {
            Backend::Disk(q) => {
                let nodes = q.mesh.nodes().iter().map(|&x| q.green.green_unchecked(x, w)).collect();
                let at = probes.iter().map(|&z| q.green.green(z, w)).collect::<Result<_>>()?;
                Ok((nodes, at))
            }
            Backend::Grid(s) => {
                let g = s.laplace_green(w)?;
                let nodes = (0..s.grid().len()).map(|k| g.node_value(k)).collect();
                let at = probes.iter().map(|&z| g.value(z)).collect::<Result<_>>()?;
                Ok((nodes, at))
            }
        }
    }

    /// `T` applied to continuous node values, returning node values and the
    /// values at `probes` (for which `φ(probe)` is supplied).
    fn apply_continuous(&self, phi: &[f64], probes: &[Point], phi_probes: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.backend {
            Backend::Disk(q) => {
                let nodes = q.apply_nodes(phi);
                let at = probes.par_iter().zip(phi_probes).map(|(&z, &f)| q.smooth_at(z, phi, f)).collect();
                Ok((nodes, at))
            }
            Backend::Grid(s) => self.grid_solve(s, phi, probes),
        }
    }

    fn grid_solve(&self, s: &GreenSolver, rhs: &[f64], probes: &[Point]) -> Result<(Vec<f64>, Vec<f64>)> {
        let u = s.laplace_solver().solve(rhs, &|_| 0.0)?;
        let at = probes.iter().map(|&z| Ok(u.eval_cubic(z)?.0)).collect::<Result<_>>()?;
        Ok((u.values().to_vec(), at))
    }

    /// `T` applied to `c·Φ_w + φ_c`.
    fn apply_sampled(&self, f: &Sampled, cont_probes: &[f64], probes: &[Point]) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.backend {
            Backend::Disk(q) => {
                let smooth = q.apply_nodes(&f.nodes);
                let node_vals: Vec<f64> = if f.c == 0.0 {
                    smooth
                } else {
                    let nodes = q.mesh.nodes();
                    (0..nodes.len())
                        .into_par_iter()
                        .map(|k| smooth[k] + f.c * q.pole_at(&self.domain, f.pole, nodes[k]))
                        .collect()
                };
                let at = probes
                    .par_iter()
                    .zip(cont_probes)
                    .map(|(&z, &fz)| {
                        q.smooth_at(z, &f.nodes, fz)
                            + if f.c != 0.0 { f.c * q.pole_at(&self.domain, f.pole, z) } else { 0.0 }
                    })
                    .collect();
                Ok((node_vals, at))
            }
            Backend::Grid(s) => {
                let grid = s.grid();
                let pole_lattice = grid.nearest_lattice(f.pole);
                let rhs: Vec<f64> = (0..grid.len())
                    .map(|k| {
                        let p = grid.node_point(k);
                        let phi = if grid.lattice(k) == pole_lattice {
                            crate::solver::cell_average_fundamental(p, f.pole, grid.h())
                        } else {
                            fundamental(p, f.pole)
                        };
                        f.c * phi + f.nodes[k]
                    })
                    .collect();
                self.grid_solve(s, &rhs, probes)
            }
        }
    }
}

/// `Tφ(z)` for a bounded continuous `φ`.
pub fn apply_t(op: &KernelOperator, phi: &(dyn Fn(Point) -> f64 + Sync), z: Point) -> Result<f64> {
    op.check_point(z)?;
    let nodes: Vec<f64> = op.points().into_iter().map(phi).collect();
    let (_, at) = op.apply_continuous(&nodes, &[z], &[phi(z)])?;
    Ok(at[0])
}

/// `Tφ(z)` for `φ = c·Φ_w + φ_c` with continuous `φ_c`, e.g. `φ = p·g_w`
/// split as `p(w)Φ_w + [p·H_w + (p − p(w))Φ_w]`.
pub fn apply_t_pole(
    op: &KernelOperator,
    c: f64,
    cont: &(dyn Fn(Point) -> f64 + Sync),
    w: Point,
    z: Point,
) -> Result<f64> {
    op.check_point(z)?;
    op.check_point(w)?;
    let nodes: Vec<f64> = op.points().into_iter().map(cont).collect();
    let f = Sampled { nodes, c, pole: w };
    let (_, at) = op.apply_sampled(&f, &[cont(z)], &[z])?;
    Ok(at[0])
}

/// `T(p·g_w)(z)` for a continuous multiplier `p`.
pub fn apply_t_green(op: &KernelOperator, p: &(dyn Fn(Point) -> f64 + Sync), w: Point, z: Point) -> Result<f64> {
    op.check_point(z)?;
    op.check_point(w)?;
    let (g_nodes, _) = op.sample_green(w, &[])?;
    let points = op.points();
    let (f, fz) = green_product(op, p, w, &points, &g_nodes, z)?;
    let (_, at) = op.apply_sampled(&f, &[fz], &[z])?;
    Ok(at[0])
}

/// Splits `p·g_w` into pole coefficient and continuous remainder.
fn green_product(
    op: &KernelOperator,
    p: &(dyn Fn(Point) -> f64 + Sync),
    w: Point,
    points: &[Point],
    g_nodes: &[f64],
    z: Point,
) -> Result<(Sampled, f64)> {
    let pw = p(w);
    match &op.backend {
        Backend::Disk(q) => {
            // p·g_w = p(w)Φ_w + [p·H_w + (p − p(w))Φ_w]
            let cont = |x: Point| {
                if x == w {
                    pw * q.green.regular(w, w)
                } else {
                    p(x) * q.green.regular(x, w) + (p(x) - pw) * fundamental(x, w)
                }
            };
            let nodes = points.iter().map(|&x| cont(x)).collect();
            Ok((Sampled { nodes, c: pw, pole: w }, cont(z)))
        }
        Backend::Grid(_) => {
            // on the grid the node values already carry the cell-averaged pole
            let nodes = points.iter().zip(g_nodes).map(|(&x, &g)| p(x) * g).collect();
            Ok((Sampled { nodes, c: 0.0, pole: w }, 0.0))
        }
    }
}

/// Largest singular value of the discretized `T` by power iteration.
pub fn estimate_t_norm(op: &KernelOperator) -> Result<f64> {
    if let Some(v) = op.norm.get() {
        return Ok(*v);
    }
    let n = op.points().len();
    let weights: Vec<f64> = match &op.backend {
        Backend::Disk(q) => q.mesh.weights().to_vec(),
        Backend::Grid(s) => vec![s.grid().h().powi(2); n],
    };
    let apply = |x: &[f64]| -> Result<Vec<f64>> { Ok(op.apply_continuous(x, &[], &[])?.0) };
    let wdot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(&weights).map(|((x, y), w)| x * y * w).sum::<f64>();

    let mut x = vec![1.0; n];
    let mut prev = f64::NAN;
    for _ in 0..POWER_MAX_ITERATIONS {
        let y = apply(&x)?;
        // T is self-adjoint in the weighted inner product
        let rq = wdot(&x, &y) / wdot(&x, &x);
        let norm = wdot(&y, &y).sqrt();
        if norm == 0.0 {
            return Err(Error::Solver("power iteration collapsed to zero".into()));
        }
        x = y.iter().map(|v| v / norm).collect();
        if (rq - prev).abs() <= POWER_TOLERANCE * rq.abs() {
            let v = rq.abs();
            let _ = op.norm.set(v);
            return Ok(v);
        }
        prev = rq;
    }
    Err(Error::NonConvergence { what: "power iteration for ‖T‖", iterations: POWER_MAX_ITERATIONS })
}

/// Probe values of a Neumann series `g* = Σ εⁿ (TP)ⁿ g_w`.
#[derive(Debug, Clone)]
pub struct SeriesResult {
    pub probes: Vec<Point>,
    /// Partial sums at the probes.
    pub values: Vec<f64>,
    /// `terms[n][k]`: the `n`-th term at probe `k`.
    pub terms: Vec<Vec<f64>>,
    /// `|ε|·‖p‖∞·‖T‖`.
    pub contraction: f64,
    /// Geometric bound `‖t_N‖·q/(1 − q)` on the truncation error.
    pub residual_bound: f64,
}

impl SeriesResult {
    pub fn terms_used(&self) -> usize {
        self.terms.len()
    }

    /// `‖t_n‖∞` over the probes.
    pub fn term_norm(&self, n: usize) -> f64 {
        self.terms[n].iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `g*_w = Σ aⁿ Tⁿ g_w`, the Green function of `Δ − a`.
pub fn neumann_series_helmholtz(
    op: &KernelOperator,
    a: f64,
    w: Point,
    probes: &[Point],
    max_terms: usize,
    tol: f64,
) -> Result<SeriesResult> {
    neumann_series_schrodinger(op, &|_| 1.0, a, w, probes, max_terms, tol)
}

/// `g*_w = Σ εⁿ (TP)ⁿ g_w`, the Green function of `Δ − εp`.
pub fn neumann_series_schrodinger(
    op: &KernelOperator,
    p: &(dyn Fn(Point) -> f64 + Sync),
    eps: f64,
    w: Point,
    probes: &[Point],
    max_terms: usize,
    tol: f64,
) -> Result<SeriesResult> {
    if max_terms == 0 {
        return Err(Error::invalid("the series needs at least one term"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("series tolerance must be positive, got {tol}")));
    }
    op.check_point(w)?;
    for &z in probes {
        op.check_point(z)?;
        if z == w {
            return Err(Error::AtPole(w));
        }
    }
    let points = op.points();
    let p_nodes: Vec<f64> = points.iter().map(|&x| p(x)).collect();
    let p_probes: Vec<f64> = probes.iter().map(|&z| p(z)).collect();
    let p_bdry = (0..512).map(|k| p(op.domain.boundary_point(TAU * k as f64 / 512.0)).abs());
    let p_sup = p_nodes.iter().map(|v| v.abs()).chain(p_bdry).fold(0.0, f64::max);

    let (g_nodes, g_probes) = op.sample_green(w, probes)?;
    let mut result = SeriesResult {
        probes: probes.to_vec(),
        values: g_probes.clone(),
        terms: vec![g_probes],
        contraction: 0.0,
        residual_bound: 0.0,
    };
    if eps == 0.0 || p_sup == 0.0 {
        return Ok(result);
    }
    let q = eps.abs() * p_sup * estimate_t_norm(op)?;
    result.contraction = q;
    if q >= 1.0 {
        return Err(Error::Resonance { measured: q, limit: 1.0 });
    }

    // t₁ = ε T(p g_w) carries the logarithmic pole
    let first = {
        let (f, _) = green_product(op, p, w, &points, &g_nodes, w)?;
        let cont_probes: Vec<f64> = match &op.backend {
            Backend::Disk(qd) => probes
                .iter()
                .zip(&p_probes)
                .map(|(&z, &pz)| pz * qd.green.regular(z, w) + (pz - p(w)) * fundamental(z, w))
                .collect(),
            Backend::Grid(_) => vec![0.0; probes.len()],
        };
        op.apply_sampled(&f, &cont_probes, probes)?
    };
    let (mut t_nodes, mut t_probes) = (scale(&first.0, eps), scale(&first.1, eps));
    loop {
        for (v, t) in result.values.iter_mut().zip(&t_probes) {
            *v += t;
        }
        result.terms.push(t_probes.clone());
        let norm = t_probes.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        result.residual_bound = norm * q / (1.0 - q);
        if norm < tol || result.terms.len() >= max_terms {
            return Ok(result);
        }
        let pt_nodes: Vec<f64> = t_nodes.iter().zip(&p_nodes).map(|(t, p)| t * p).collect();
        let pt_probes: Vec<f64> = t_probes.iter().zip(&p_probes).map(|(t, p)| t * p).collect();
        let (n, pr) = op.apply_continuous(&pt_nodes, probes, &pt_probes)?;
        t_nodes = scale(&n, eps);
        t_probes = scale(&pr, eps);
    }
}

fn scale(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// Convenience: the field `T(p g_w)` on the grid backend, for callers that
/// need more than probe values.
pub fn grid_t_green(op: &KernelOperator, p: &(dyn Fn(Point) -> f64 + Sync), w: Point) -> Result<FieldGrid> {
    let Backend::Grid(s) = &op.backend else {
        return Err(Error::invalid("grid_t_green needs the grid backend"));
    };
    let g = s.laplace_green(w)?;
    let grid = s.grid();
    let rhs: Vec<f64> = (0..grid.len()).map(|k| p(grid.node_point(k)) * g.node_value(k)).collect();
    s.laplace_solver().solve(&rhs, &|_| 0.0)
}
