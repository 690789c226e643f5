//! Linear solvers for the assembled systems.
//!
//! Two methods are provided:
//!
//! * **Direct** — banded LU with partial pivoting.  The band is taken from
//!   the matrix as given, so callers control fill through their ordering
//!   (the Newton driver interleaves the two unknown blocks to keep the band
//!   at O(n) instead of O(n²)).
//! * **Cg** — Jacobi-preconditioned conjugate gradients, valid only for
//!   symmetric positive definite systems (pure-diffusion blocks and the
//!   eigenvalue estimate); the Newton tangent is nonsymmetric and must use
//!   the direct path.

use crate::error::Error;
use crate::sparse::SparseMatrix;
use crate::Result;

/// Which algorithm [`solve_linear`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Banded LU with partial pivoting.
    Direct,
    /// Jacobi-preconditioned conjugate gradients (SPD matrices only).
    Cg,
}

/// What a linear solve did and how well it finished.
#[derive(Debug, Clone)]
pub struct LinearSolveReport {
    pub method: SolveMethod,
    /// Iterations used (0 for the direct solver).
    pub iterations: usize,
    /// Final relative residual ‖Ax − b‖₂ / ‖b‖₂ (absolute if b = 0).
    pub residual: f64,
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|&x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Solves `A x = b`.
///
/// `tol` is the relative residual target for the iterative method; the
/// direct method ignores it (its report still carries the achieved
/// residual).
pub fn solve_linear(
    a: &SparseMatrix,
    b: &[f64],
    method: SolveMethod,
    tol: f64,
) -> Result<(Vec<f64>, LinearSolveReport)> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            context: "solve_linear (matrix must be square)",
            expected: a.rows,
            got: a.cols,
        });
    }
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            context: "solve_linear right-hand side",
            expected: a.rows,
            got: b.len(),
        });
    }
    match method {
        SolveMethod::Direct => {
            let x = BandedLu::factor(a)?.solve(b);
            let report = LinearSolveReport {
                method,
                iterations: 0,
                residual: relative_residual(a, &x, b),
            };
            Ok((x, report))
        }
        SolveMethod::Cg => cg_jacobi(a, b, tol),
    }
}

fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.spmv(x).expect("dimensions already checked");
    let r: Vec<f64> = ax.iter().zip(b).map(|(&p, &q)| p - q).collect();
    let bn = norm2(b);
    if bn > 0.0 {
        norm2(&r) / bn
    } else {
        norm2(&r)
    }
}

/// Banded LU factorization with partial pivoting.
///
/// Row `i` of the working array stores columns `i − kl ..= i + kl + ku`
/// (width `2·kl + ku + 1`); the extra `kl` columns hold fill introduced by
/// row swaps.  Multipliers are kept separately per elimination step.
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<f64>,
    /// `mult[k·kl + (i − k − 1)]` is the multiplier eliminating row `i`
    /// at step `k`.
    mult: Vec<f64>,
    /// Row swapped with row `k` at step `k`.
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Factors the matrix; fails on a zero/near-zero pivot.
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.rows;
        let (kl, ku_pattern) = a.bandwidths();
        // Row swaps smear the upper band out by up to kl columns.
        let ku = ku_pattern;
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];

        let mut max_abs = 0.0f64;
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                // offset of column j in row i's window [i − kl, i + kl + ku]
                band[i * width + (j + kl - i)] = v;
                max_abs = max_abs.max(v.abs());
            }
        }
        if max_abs == 0.0 {
            return Err(Error::SingularMatrix { row: 0, pivot: 0.0 });
        }
        let tiny = max_abs * f64::EPSILON * (n as f64).sqrt();

        let mut mult = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0usize; n];
        let col_of = |row: usize, j: usize| j + kl - row; // valid when in-window

        for k in 0..n {
            // Partial pivoting over the kl rows below the diagonal.
            let last_row = (k + kl).min(n - 1);
            let mut piv_row = k;
            let mut piv_val = band[k * width + col_of(k, k)].abs();
            for r in (k + 1)..=last_row {
                let v = band[r * width + col_of(r, k)].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < tiny || !piv_val.is_finite() {
                return Err(Error::SingularMatrix {
                    row: k,
                    pivot: band[piv_row * width + col_of(piv_row, k)],
                });
            }
            pivots[k] = piv_row;
            let last_col = (k + kl + ku).min(n - 1);
            if piv_row != k {
                for j in k..=last_col {
                    let a_idx = k * width + col_of(k, j);
                    let b_idx = piv_row * width + col_of(piv_row, j);
                    band.swap(a_idx, b_idx);
                }
            }
            let pivot = band[k * width + col_of(k, k)];
            for r in (k + 1)..=last_row {
                let m = band[r * width + col_of(r, k)] / pivot;
                mult[k * kl.max(1) + (r - k - 1)] = m;
                if m != 0.0 {
                    for j in (k + 1)..=last_col {
                        band[r * width + col_of(r, j)] -= m * band[k * width + col_of(k, j)];
                    }
                }
            }
        }

        Ok(BandedLu {
            n,
            kl,
            ku,
            width,
            band,
            mult,
            pivots,
        })
    }

    /// Solves with the stored factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, ku, width) = (self.n, self.kl, self.ku, self.width);
        let mut x = b.to_vec();
        // Forward: apply the recorded swaps and multipliers.
        for k in 0..n {
            let piv = self.pivots[k];
            if piv != k {
                x.swap(k, piv);
            }
            let last_row = (k + kl).min(n - 1);
            for r in (k + 1)..=last_row {
                x[r] -= self.mult[k * kl.max(1) + (r - k - 1)] * x[k];
            }
        }
        // Back-substitution on the banded U.
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let mut acc = x[k];
            for j in (k + 1)..=last_col {
                acc -= self.band[k * width + (j + kl - k)] * x[j];
            }
            x[k] = acc / self.band[k * width + kl];
        }
        x
    }
}

/// Jacobi-preconditioned conjugate gradients from the zero initial guess.
fn cg_jacobi(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, LinearSolveReport)> {
    let n = a.rows;
    let bn = norm2(b);
    if bn == 0.0 {
        return Ok((
            vec![0.0; n],
            LinearSolveReport {
                method: SolveMethod::Cg,
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut inv_diag = vec![0.0; n];
    for i in 0..n {
        let d = a.get(i, i);
        if d <= 0.0 {
            return Err(Error::InvalidParameter {
                message: format!("cg requires a positive diagonal; entry ({i}, {i}) = {d}"),
            });
        }
        inv_diag[i] = 1.0 / d;
    }

    let max_iterations = 20 * n + 100;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for iter in 1..=max_iterations {
        let ap = a.spmv(&p)?;
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::InvalidParameter {
                message: format!("cg breakdown: non-positive curvature {pap:.3e} (matrix not SPD?)"),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) / bn <= tol {
            // The recursively updated residual drifts from b − Ax over many
            // iterations; accept only if the true residual agrees, otherwise
            // resync and keep going.
            let true_rel = relative_residual(a, &x, b);
            if true_rel <= tol {
                return Ok((
                    x,
                    LinearSolveReport {
                        method: SolveMethod::Cg,
                        iterations: iter,
                        residual: true_rel,
                    },
                ));
            }
            let ax = a.spmv(&x)?;
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            rz = dot(&r, &z);
            p.copy_from_slice(&z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    Err(Error::CgDidNotConverge {
        iterations: max_iterations,
        residual: relative_residual(a, &x, b),
        tolerance: tol,
    })
}
