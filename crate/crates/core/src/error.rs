//! Crate-wide error type.

use crate::analysis::RateTable;

/// Errors produced by mesh construction, assembly, linear and nonlinear
/// solvers, and field I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Mesh subdivision count outside the supported range.
    #[error("subdivision count {n} not in 1..={max}")]
    InvalidSubdivisions { n: usize, max: usize },

    /// Index into mesh nodes or triangles out of bounds.
    #[error("{what} index {index} out of bounds (len {len})")]
    IndexOutOfBounds {
        what: &'static str,
        index: usize,
        len: usize,
    },

    /// Triangle with (numerically) zero area; cannot form basis gradients.
    #[error("triangle {index} is degenerate (area {area:.3e})")]
    DegenerateTriangle { index: usize, area: f64 },

    /// Requested quadrature degree has no tabulated rule.
    #[error("no quadrature rule for degree {degree} (supported: 1, 2, 4, 6)")]
    UnsupportedQuadratureDegree { degree: usize },

    /// Point-evaluation outside the closed unit square.
    #[error("point ({x}, {y}) lies outside the unit square")]
    PointOutsideDomain { x: f64, y: f64 },

    /// A sampled function value was NaN or infinite.
    #[error("non-finite value {value} sampled at ({x}, {y})")]
    NonFiniteSample { x: f64, y: f64, value: f64 },

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Field and mesh were built with different subdivision counts.
    #[error("field was built for n = {field_n}, mesh has n = {mesh_n}")]
    MeshMismatch { field_n: usize, mesh_n: usize },

    /// Parameter validation failure (negative Ra, zero tolerance, ...).
    #[error("invalid parameter: {message}")]
    InvalidParameter { message: String },

    /// Direct factorization hit a pivot too small to divide by.
    #[error("matrix is singular: pivot {pivot:.3e} at elimination step {row}")]
    SingularMatrix { row: usize, pivot: f64 },

    /// Conjugate gradients stopped at the iteration cap; carries the final
    /// iterate's data so callers can inspect how close it got.
    #[error(
        "conjugate gradients did not converge: residual {residual:.3e} after {iterations} iterations (tolerance {tolerance:.3e})"
    )]
    CgDidNotConverge {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    /// Newton tangent factorization failed at a given outer iteration.
    #[error("singular tangent at Newton iteration {iteration}: pivot {pivot:.3e} at step {row}")]
    SingularTangent {
        iteration: usize,
        row: usize,
        pivot: f64,
    },

    /// Inverse power iteration for the Poincaré estimate did not settle.
    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    EigenDidNotConverge { iterations: usize },

    /// A convergence study failed partway; the rows completed so far are
    /// attached.
    #[error("convergence study aborted at level n = {level}: {reason}")]
    StudyAborted {
        level: usize,
        reason: String,
        partial: RateTable,
    },

    /// Reading a field file back failed.
    #[error("cannot parse field file at line {line}: {message}")]
    FieldParse { line: usize, message: String },

    /// Underlying file-system failure.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
