//! Structured right-triangle mesh of the unit square.
//!
//! The unit square is divided into `n × n` grid cells; every cell is split
//! along its lower-left to upper-right diagonal:
//!
//! ```text
//!   ul ______ ur
//!     |     /|
//!     | up / |        lower triangle: (ll, lr, ur)
//!     |   /  |        upper triangle: (ll, ur, ul)
//!     |  /   |        both counter-clockwise
//!     | / lo |
//!     |/_____|
//!   ll        lr
//! ```
//!
//! Nodes are numbered lexicographically, row by row from the bottom:
//! node `(ix, iy)` has index `iy · (n+1) + ix`.  The single fixed diagonal
//! makes the assembled Laplacian equal to the classical 5-point finite
//! difference stencil on interior rows, which the tests exploit as an
//! independent oracle.

use crate::error::Error;
use crate::Result;

/// Largest accepted subdivision count.  A 1025×1025 node mesh is ~50 MB of
/// mesh data and far beyond what the direct solver is sized for; anything
/// larger is almost certainly a typo in a config file.
pub const MAX_SUBDIVISIONS: usize = 1024;

/// A mesh node position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Per-triangle geometry: signed area and the constant gradients of the
/// three vertex basis functions.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    /// Triangle area (positive; triangles are counter-clockwise).
    pub area: f64,
    /// `grad[i]` is ∇φ of the basis function attached to vertex `i`,
    /// constant over the triangle.  The three gradients sum to zero.
    pub grad: [[f64; 2]; 3],
}

/// Structured triangulation of the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    /// Subdivisions per side.
    pub n: usize,
    /// Mesh size, `1/n`.
    pub h: f64,
    /// Node coordinates, lexicographic by (row, column).
    pub nodes: Vec<Point>,
    /// Vertex index triples, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    /// `true` iff the node lies on ∂Ω.
    pub boundary_mask: Vec<bool>,
}

impl Mesh {
    /// Builds the structured mesh with `n` subdivisions per side.
    pub fn structured(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SUBDIVISIONS {
            return Err(Error::InvalidSubdivisions {
                n,
                max: MAX_SUBDIVISIONS,
            });
        }
        let h = 1.0 / n as f64;
        let side = n + 1;

        let mut nodes = Vec::with_capacity(side * side);
        let mut boundary_mask = Vec::with_capacity(side * side);
        for iy in 0..side {
            for ix in 0..side {
                nodes.push(Point {
                    x: ix as f64 * h,
                    y: iy as f64 * h,
                });
                boundary_mask.push(ix == 0 || ix == n || iy == 0 || iy == n);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for iy in 0..n {
            for ix in 0..n {
                let ll = iy * side + ix;
                let lr = ll + 1;
                let ul = ll + side;
                let ur = ul + 1;
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            }
        }

        Ok(Mesh {
            n,
            h,
            nodes,
            triangles,
            boundary_mask,
        })
    }

    /// Node index for grid position `(ix, iy)`.
    #[inline]
    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        iy * (self.n + 1) + ix
    }

    /// Number of nodes, `(n+1)²`.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of interior (non-boundary) nodes, `(n−1)²`.
    pub fn num_interior(&self) -> usize {
        (self.n - 1) * (self.n - 1)
    }

    /// Indices of interior nodes in ascending (lexicographic) order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&i| !self.boundary_mask[i])
            .collect()
    }

    /// Area and P1 basis gradients for triangle `t`.
    ///
    /// With vertices `p₁ p₂ p₃`, the gradient of the basis function at
    /// vertex 1 is `(y₂ − y₃, x₃ − x₂) / (2A)`, and cyclically for the
    /// others.
    pub fn element_geometry(&self, t: usize) -> Result<ElementGeometry> {
        let tri = *self
            .triangles
            .get(t)
            .ok_or(Error::IndexOutOfBounds {
                what: "triangle",
                index: t,
                len: self.triangles.len(),
            })?;
        let [a, b, c] = tri.map(|i| self.nodes[i]);

        let two_a = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        let area = 0.5 * two_a;
        if !(area.is_finite() && area > f64::EPSILON * self.h * self.h) {
            return Err(Error::DegenerateTriangle { index: t, area });
        }

        let grad = [
            [(b.y - c.y) / two_a, (c.x - b.x) / two_a],
            [(c.y - a.y) / two_a, (a.x - c.x) / two_a],
            [(a.y - b.y) / two_a, (b.x - a.x) / two_a],
        ];
        Ok(ElementGeometry { area, grad })
    }
}
