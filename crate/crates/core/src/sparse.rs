//! Compressed sparse row matrices.
//!
//! Matrices are assembled from (row, col, value) triplets; duplicates are
//! summed, and each row's column indices end up strictly increasing.
//! Structural zeros from element assembly are kept, so all weak-form
//! matrices share one sparsity pattern.

use crate::error::Error;
use crate::Result;
use std::io::Write;

/// A CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    /// `row_ptr[i]..row_ptr[i+1]` indexes row `i`'s entries.
    pub row_ptr: Vec<usize>,
    /// Column indices, strictly increasing within each row.
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from triplets, summing duplicate positions.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for &(r, c, v) in triplets {
            if r >= rows {
                return Err(Error::IndexOutOfBounds {
                    what: "triplet row",
                    index: r,
                    len: rows,
                });
            }
            if c >= cols {
                return Err(Error::IndexOutOfBounds {
                    what: "triplet column",
                    index: c,
                    len: cols,
                });
            }
            per_row[r].push((c, v));
        }

        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            // Stable sort keeps duplicate contributions in insertion order,
            // so summation order is deterministic.
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.iter().peekable();
            while let Some(&&(c, v)) = iter.peek() {
                iter.next();
                let mut sum = v;
                while let Some(&&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    sum += v2;
                    iter.next();
                }
                col_idx.push(c);
                values.push(sum);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// The n×n identity.
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Sparse matrix–vector product.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "spmv input",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// Entry `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    /// Lower and upper bandwidths `(kl, ku)`: the largest `i − j` and
    /// `j − i` over stored entries.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0usize, 0usize);
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Symmetric reordering: returns `B` with `B[p[i], p[j]] = A[i, j]`.
    ///
    /// `perm[old] = new` must be a permutation of `0..rows` (square matrices
    /// only).
    pub fn permute_symmetric(&self, perm: &[usize]) -> Result<SparseMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                context: "symmetric permutation (matrix must be square)",
                expected: self.rows,
                got: self.cols,
            });
        }
        if perm.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "permutation length",
                expected: self.rows,
                got: perm.len(),
            });
        }
        let mut seen = vec![false; self.rows];
        for &p in perm {
            if p >= self.rows || seen[p] {
                return Err(Error::InvalidParameter {
                    message: format!("permutation is not a bijection at target {p}"),
                });
            }
            seen[p] = true;
        }
        let mut triplets = Vec::with_capacity(self.values.len());
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                triplets.push((perm[i], perm[self.col_idx[k]], self.values[k]));
            }
        }
        SparseMatrix::from_triplets(self.rows, self.cols, &triplets)
    }

    /// Writes the matrix in MatrixMarket coordinate format (1-based).
    pub fn write_matrix_market<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.rows, self.cols, self.values.len())?;
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(out, "{} {} {}", i + 1, self.col_idx[k] + 1, self.values[k])?;
            }
        }
        Ok(())
    }
}
