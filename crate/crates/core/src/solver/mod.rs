//! Grid-based Dirichlet solver and numerical Green functions.
//!
//! Green functions are split as `g_w = Φ_w + c_w` with the closed-form
//! logarithmic part `Φ_w` and a correction `c_w` that solves a regular
//! boundary value problem on a Shortley–Weller grid.

mod dirichlet;
mod green;
mod grid;

pub use dirichlet::{solve_dirichlet, DirichletSolver, FieldGrid, SOLVER_TOLERANCE};
pub use green::{
    cell_average_fundamental, green_beltrami_numeric, green_helmholtz_numeric, green_numeric,
    green_schrodinger_numeric, t_norm_bound, GreenCache, GreenSolver, NumericGreen, J01, RESONANCE_LIMIT,
};
pub use grid::{Grid, Leg, DIRECTIONS, OPPOSITE};

/// Default grid spacing for unit-scale domains.
pub const DEFAULT_H: f64 = 1.0 / 128.0;

/// Gradient of a grid field at `z`: centered differences of its cubic
/// interpolant.
pub fn gradient_numeric(f: &FieldGrid, z: crate::Point) -> crate::Result<crate::Point> {
    Ok(f.eval_cubic(z)?.1)
}
