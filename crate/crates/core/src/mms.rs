//! Manufactured polynomial solution, derived sources, and error norms.
//!
//! The built-in exact pair is
//!
//! ```text
//!     ψ(x,y) =  2·x²(x−1)²·y(y−1)(2y−1)
//!     θ(x,y) = −2·y²(y−1)²·x(x−1)(2x−1)
//! ```
//!
//! both vanishing on ∂Ω.  Substituting into the governing system yields the
//! compatible sources
//!
//! ```text
//!     f₁ = −Δψ − Ra·∂θ/∂x
//!     f₂ = J(ψ,θ) − Δθ
//! ```
//!
//! coded here as closed-form polynomials (hand differentiation,
//! cross-checked in the tests against a central-difference oracle — the
//! single most important correctness gate for the sources).

use crate::assembly::{ProblemParams, SourceFn};
use crate::field::Field;
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::Result;
use std::sync::Arc;

// One-dimensional factor polynomials and their derivatives.
// p(t) = t²(t−1)² and q(t) = t(t−1)(2t−1), expanded.
fn p(t: f64) -> f64 {
    t * t * (t - 1.0) * (t - 1.0)
}
fn dp(t: f64) -> f64 {
    4.0 * t * t * t - 6.0 * t * t + 2.0 * t
}
fn d2p(t: f64) -> f64 {
    12.0 * t * t - 12.0 * t + 2.0
}
fn q(t: f64) -> f64 {
    2.0 * t * t * t - 3.0 * t * t + t
}
fn dq(t: f64) -> f64 {
    6.0 * t * t - 6.0 * t + 1.0
}
fn d2q(t: f64) -> f64 {
    12.0 * t - 6.0
}

/// Stream-function component of the exact pair.
pub fn psi_exact(x: f64, y: f64) -> f64 {
    2.0 * p(x) * q(y)
}

/// Temperature component of the exact pair.
pub fn theta_exact(x: f64, y: f64) -> f64 {
    -2.0 * p(y) * q(x)
}

/// Gradient of the exact stream function.
pub fn psi_grad(x: f64, y: f64) -> (f64, f64) {
    (2.0 * dp(x) * q(y), 2.0 * p(x) * dq(y))
}

/// Gradient of the exact temperature.
pub fn theta_grad(x: f64, y: f64) -> (f64, f64) {
    (-2.0 * p(y) * dq(x), -2.0 * dp(y) * q(x))
}

/// Both exact values at a point.
pub fn exact(x: f64, y: f64) -> (f64, f64) {
    (psi_exact(x, y), theta_exact(x, y))
}

/// A manufactured solution: exact fields, their gradients, and a source
/// builder.  The solver interfaces accept any instance; [`ExactSolution::reference`]
/// is the pair shipped with the crate.
#[derive(Clone, Copy)]
pub struct ExactSolution {
    pub psi: fn(f64, f64) -> f64,
    pub theta: fn(f64, f64) -> f64,
    pub psi_grad: fn(f64, f64) -> (f64, f64),
    pub theta_grad: fn(f64, f64) -> (f64, f64),
    /// Builds the compatible `(f₁, f₂)` for a given Rayleigh number.
    pub sources: fn(f64) -> (SourceFn, SourceFn),
}

impl ExactSolution {
    /// The built-in polynomial pair.
    pub fn reference() -> Self {
        ExactSolution {
            psi: psi_exact,
            theta: theta_exact,
            psi_grad,
            theta_grad,
            sources,
        }
    }
}

/// The compatible sources for Rayleigh number `ra`, as closed forms:
/// `f₁ = −Δψ − Ra·∂θ/∂x` and `f₂ = J(ψ,θ) − Δθ`.
pub fn sources(ra: f64) -> (SourceFn, SourceFn) {
    let f1: SourceFn = Arc::new(move |x: f64, y: f64| {
        let lap_psi = 2.0 * (d2p(x) * q(y) + p(x) * d2q(y));
        let theta_x = -2.0 * p(y) * dq(x);
        -lap_psi - ra * theta_x
    });
    let f2: SourceFn = Arc::new(|x: f64, y: f64| {
        let (px, py) = (psi_grad(x, y).0, psi_grad(x, y).1);
        let (tx, ty) = theta_grad(x, y);
        let jacobian = px * ty - py * tx;
        let lap_theta = -2.0 * (p(y) * d2q(x) + d2p(y) * q(x));
        jacobian - lap_theta
    });
    (f1, f2)
}

/// Problem parameters carrying the manufactured sources for `ra`.
pub fn problem(ra: f64) -> Result<ProblemParams> {
    let (f1, f2) = sources(ra);
    ProblemParams::new(ra, f1, f2)
}

/// Problem parameters with the manufactured sources scaled by a factor
/// (used by the stability studies).
pub fn scaled_problem(ra: f64, scale: f64) -> Result<ProblemParams> {
    let (f1, f2) = sources(ra);
    let sf1: SourceFn = Arc::new(move |x, y| scale * f1(x, y));
    let sf2: SourceFn = Arc::new(move |x, y| scale * f2(x, y));
    ProblemParams::new(ra, sf1, sf2)
}

/// L² distance between a P1 field and an exact function, degree-6
/// quadrature per triangle.
pub fn error_l2<F: Fn(f64, f64) -> f64>(field: &Field, exact: F, mesh: &Mesh) -> Result<f64> {
    field.check_mesh(mesh)?;
    let rule = QuadratureRule::for_degree(6)?;
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let tri = mesh.triangles[t];
        let verts = tri.map(|i| mesh.nodes[i]);
        let coeffs = tri.map(|i| field.coeffs[i]);
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            let x = lambda[0] * verts[0].x + lambda[1] * verts[1].x + lambda[2] * verts[2].x;
            let y = lambda[0] * verts[0].y + lambda[1] * verts[1].y + lambda[2] * verts[2].y;
            let fh = lambda[0] * coeffs[0] + lambda[1] * coeffs[1] + lambda[2] * coeffs[2];
            let d = fh - exact(x, y);
            acc += geo.area * w * d * d;
        }
    }
    Ok(acc.sqrt())
}

/// H¹ seminorm distance `√(Σ_T ∫|∇field − exact_grad|²)`; the field
/// gradient is constant per triangle, the exact gradient is sampled at the
/// degree-6 quadrature points.
pub fn error_h1_semi<G: Fn(f64, f64) -> (f64, f64)>(
    field: &Field,
    exact_grad: G,
    mesh: &Mesh,
) -> Result<f64> {
    field.check_mesh(mesh)?;
    let rule = QuadratureRule::for_degree(6)?;
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let tri = mesh.triangles[t];
        let verts = tri.map(|i| mesh.nodes[i]);
        let g = field.gradient_on(mesh, t)?;
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            let x = lambda[0] * verts[0].x + lambda[1] * verts[1].x + lambda[2] * verts[2].x;
            let y = lambda[0] * verts[0].y + lambda[1] * verts[1].y + lambda[2] * verts[2].y;
            let (ex, ey) = exact_grad(x, y);
            let (dx, dy) = (g[0] - ex, g[1] - ey);
            acc += geo.area * w * (dx * dx + dy * dy);
        }
    }
    Ok(acc.sqrt())
}
