//! Green functions of bounded planar domains and their first-order
//! variations.
//!
//! The crate computes Dirichlet Green functions (normalized so that
//! `Δg_w = δ_w` and `g(z, w) ~ (2π)⁻¹ log|z − w|` near the pole) for disks in
//! closed form and for smooth star-shaped domains numerically, and evaluates
//! the first variation of `g` under
//!
//! * a normal displacement of the boundary (Hadamard),
//! * a zeroth-order perturbation `Δ → Δ − a` or `Δ → Δ − εp`
//!   (Helmholtz/Schrödinger, including the full Neumann series), and
//! * a divergence-form perturbation `Δ → ∇·(1 + εp)∇` (Laplace–Beltrami).
//!
//! Every formula is cross-checked against directly recomputed Green
//! functions by the [`harness`] module.

pub mod cli;
pub mod disk;
pub mod domain;
pub mod error;
pub mod field;
pub mod greenop;
pub mod harness;
pub mod keyvalue;
pub mod solver;
pub mod variation;

pub use error::{Error, Result};

/// Complex numbers double as points of the plane throughout the crate.
pub type Point = num_complex::Complex64;

/// Free-space fundamental solution `Φ_w(z) = (2π)⁻¹ log|z − w|`.
pub fn fundamental(z: Point, w: Point) -> f64 {
    (z - w).norm().ln() / std::f64::consts::TAU
}

/// Gradient of [`fundamental`] with respect to `z`, as a complex number
/// `∂x + i∂y`.
pub fn fundamental_grad(z: Point, w: Point) -> Point {
    let d = z - w;
    d / (std::f64::consts::TAU * d.norm_sqr())
}

/// Euclidean dot product of two plane vectors stored as complex numbers.
pub fn dot(a: Point, b: Point) -> f64 {
    a.re * b.re + a.im * b.im
}
