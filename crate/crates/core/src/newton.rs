//! Newton–Kantorovich iteration for the coupled system.
//!
//! Each step solves the linearized correction equation
//!
//! ```text
//!     DF(uᵢ) wᵢ = F(uᵢ),        uᵢ₊₁ = uᵢ − wᵢ,
//! ```
//!
//! and the loop stops as soon as ‖wᵢ‖ < ε (so every run performs at least
//! one tangent solve).  The correction system is nonsymmetric, so it goes
//! through the banded direct LU factorization; before factoring, the ψ/θ
//! unknowns of each node are interleaved, which shrinks the matrix band
//! from O(n²) (block layout) to O(n) and keeps the factorization cheap.
//!
//! Divergence is reported, not raised: hitting the iteration cap, a
//! non-finite residual or correction, and a residual norm that grows three
//! times in a row all end the run with `converged = false` and a reason.
//! Only a singular tangent matrix is a hard error.

use crate::assembly::{assemble_residual, assemble_tangent, CoupledState, InteriorIndex, ProblemParams};
use crate::error::Error;
use crate::mesh::Mesh;
use crate::solve::{norm2, BandedLu};
use crate::sparse::SparseMatrix;
use crate::Result;

/// Norm used for the stopping test and the reported histories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StoppingNorm {
    /// Discrete ℓ₂ over the stacked interior unknowns (the default).
    #[default]
    L2,
    /// Max (ℓ∞) norm.
    Max,
}

impl StoppingNorm {
    fn of(&self, v: &[f64]) -> f64 {
        match self {
            StoppingNorm::L2 => norm2(v),
            StoppingNorm::Max => v.iter().fold(0.0_f64, |m, &x| m.max(x.abs())),
        }
    }
}

/// Outer-iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Stop when the correction norm drops below this (default 1e−8).
    pub epsilon: f64,
    /// Hard cap on iterations (default 25).
    pub max_iterations: usize,
    /// Norm for the stopping test.
    pub norm: StoppingNorm,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            epsilon: 1e-8,
            max_iterations: 25,
            norm: StoppingNorm::L2,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                message: format!("Newton tolerance must be positive and finite, got {}", self.epsilon),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                message: "Newton iteration cap must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

/// Why a run ended without convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceReason {
    /// The iteration cap was reached with ‖w‖ still above tolerance.
    MaxIterations,
    /// ‖F(uᵢ)‖ was NaN or infinite at the start of the given iteration.
    NonFiniteResidual { iteration: usize },
    /// The solved correction had NaN or infinite entries.
    NonFiniteCorrection { iteration: usize },
    /// ‖F‖ increased on three consecutive iterations, ending at this one.
    ResidualGrowth { iteration: usize },
}

impl std::fmt::Display for DivergenceReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DivergenceReason::MaxIterations => write!(f, "iteration cap reached"),
            DivergenceReason::NonFiniteResidual { iteration } => {
                write!(f, "non-finite residual at iteration {iteration}")
            }
            DivergenceReason::NonFiniteCorrection { iteration } => {
                write!(f, "non-finite correction at iteration {iteration}")
            }
            DivergenceReason::ResidualGrowth { iteration } => {
                write!(f, "residual grew three iterations in a row (through iteration {iteration})")
            }
        }
    }
}

/// Per-run history: one entry of each vector per completed iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    /// Number of tangent solves performed.
    pub iterations: usize,
    /// ‖wᵢ‖ per iteration (stopping norm).
    pub correction_norms: Vec<f64>,
    /// ‖F(uᵢ)‖ at the start of each iteration (stopping norm).  May hold
    /// one extra trailing entry if the run ended on a residual check
    /// before any solve happened that iteration.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    pub divergence: Option<DivergenceReason>,
}

impl NewtonReport {
    /// Machine-parsable log, one line per completed iteration:
    /// `iter=<k> wnorm=<float> fnorm=<float>`.
    pub fn log_lines(&self) -> Vec<String> {
        self.correction_norms
            .iter()
            .zip(&self.residual_norms)
            .enumerate()
            .map(|(k, (w, f))| format!("iter={} wnorm={:e} fnorm={:e}", k + 1, w, f))
            .collect()
    }
}

/// Interleaves the block-ordered correction system (ψ unknowns then θ
/// unknowns) so that the two unknowns of node d land at rows 2d and 2d+1,
/// then solves by banded LU.  Block order puts the cross-coupling a full
/// block apart (bandwidth ≈ n²); interleaving brings every coupling within
/// 2·(n+1) rows of the diagonal.
fn solve_tangent(df: &SparseMatrix, rhs: &[f64], iteration: usize) -> Result<Vec<f64>> {
    let total = df.rows;
    let half = total / 2;
    let mut perm = vec![0usize; total];
    for d in 0..half {
        perm[d] = 2 * d;
        perm[half + d] = 2 * d + 1;
    }
    let interleaved = df.permute_symmetric(&perm)?;
    let mut rhs_p = vec![0.0; total];
    for (old, &new) in perm.iter().enumerate() {
        rhs_p[new] = rhs[old];
    }
    let lu = BandedLu::factor(&interleaved).map_err(|e| match e {
        Error::SingularMatrix { row, pivot } => Error::SingularTangent {
            iteration,
            row,
            pivot,
        },
        other => other,
    })?;
    let w_p = lu.solve(&rhs_p);
    let mut w = vec![0.0; total];
    for (old, &new) in perm.iter().enumerate() {
        w[old] = w_p[new];
    }
    Ok(w)
}

/// Runs the iteration from `initial` and returns the final state with its
/// report.  Boundary coefficients stay exactly zero throughout: corrections
/// exist only on interior unknowns.
pub fn newton_solve(
    initial: CoupledState,
    params: &ProblemParams,
    mesh: &Mesh,
    config: &NewtonConfig,
) -> Result<(CoupledState, NewtonReport)> {
    config.validate()?;
    initial.validate(mesh)?;
    let idx = InteriorIndex::build(mesh);
    if idx.is_empty() {
        return Err(Error::InvalidParameter {
            message: "mesh has no interior nodes; nothing to solve".to_string(),
        });
    }

    let mut u = initial;
    let mut correction_norms: Vec<f64> = Vec::new();
    let mut residual_norms: Vec<f64> = Vec::new();
    let mut growth_streak = 0usize;

    let diverged = |u: CoupledState,
                    correction_norms: Vec<f64>,
                    residual_norms: Vec<f64>,
                    reason: DivergenceReason| {
        let iterations = correction_norms.len();
        Ok((
            u,
            NewtonReport {
                iterations,
                correction_norms,
                residual_norms,
                converged: false,
                divergence: Some(reason),
            },
        ))
    };

    for iteration in 1..=config.max_iterations {
        let f = assemble_residual(&u, params, mesh)?;
        let fnorm = config.norm.of(&f);
        if !fnorm.is_finite() {
            residual_norms.push(fnorm);
            return diverged(
                u,
                correction_norms,
                residual_norms,
                DivergenceReason::NonFiniteResidual { iteration },
            );
        }
        if let Some(&prev) = residual_norms.last() {
            if fnorm > prev {
                growth_streak += 1;
            } else {
                growth_streak = 0;
            }
        }
        residual_norms.push(fnorm);
        if growth_streak >= 3 {
            return diverged(
                u,
                correction_norms,
                residual_norms,
                DivergenceReason::ResidualGrowth { iteration },
            );
        }

        let df = assemble_tangent(&u, params, mesh)?;
        let w = solve_tangent(&df, &f, iteration)?;
        let wnorm = config.norm.of(&w);
        correction_norms.push(wnorm);
        if !wnorm.is_finite() {
            return diverged(
                u,
                correction_norms,
                residual_norms,
                DivergenceReason::NonFiniteCorrection { iteration },
            );
        }

        for (d, &node) in idx.nodes.iter().enumerate() {
            u.psi.coeffs[node] -= w[d];
            u.theta.coeffs[node] -= w[idx.len() + d];
        }

        if wnorm < config.epsilon {
            return Ok((
                u,
                NewtonReport {
                    iterations: iteration,
                    correction_norms,
                    residual_norms,
                    converged: true,
                    divergence: None,
                },
            ));
        }
    }

    let iterations = correction_norms.len();
    Ok((
        u,
        NewtonReport {
            iterations,
            correction_norms,
            residual_norms,
            converged: false,
            divergence: Some(DivergenceReason::MaxIterations),
        },
    ))
}
