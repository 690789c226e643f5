//! Finite element solver for a coupled nonlinear convection system on the
//! unit square.
//!
//! The library solves the coupled elliptic system
//!
//! ```text
//!     −Δψ − Ra·∂θ/∂x = f₁        (stream function)
//!     J(ψ,θ) = Δθ + f₂           (temperature),   J(ψ,θ) = ψ_x θ_y − ψ_y θ_x
//! ```
//!
//! on Ω = (0,1)² with homogeneous Dirichlet conditions, using continuous
//! piecewise-linear (P1) elements on a structured right-triangle mesh and a
//! Newton–Kantorovich outer iteration.  Supporting pieces: sparse CSR
//! storage, a banded direct solver and conjugate gradients, a manufactured
//! polynomial solution with derived sources for convergence studies, and
//! well-posedness diagnostics (Poincaré constant estimate, energy-ball
//! radius, uniqueness/stability condition values).
//!
//! Module layout mirrors the data flow: [`mesh`] → [`quadrature`]/[`field`]
//! → [`assembly`] → [`newton`], with [`mms`] and [`analysis`] layered on top
//! and [`io`] for file output.

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod field;
pub mod io;
pub mod mesh;
pub mod mms;
pub mod newton;
pub mod quadrature;
pub mod solve;
pub mod sparse;

pub use error::Error;
pub use field::Field;
pub use mesh::Mesh;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
