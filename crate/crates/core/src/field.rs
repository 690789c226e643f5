//! Nodal P1 fields: interpolation and pointwise evaluation.
//!
//! A [`Field`] holds one coefficient per mesh node of the structured mesh
//! with `n` subdivisions; the geometry is fully determined by `n`, so the
//! field carries `n` rather than a mesh handle and checks it against any
//! mesh it is combined with.

use crate::error::Error;
use crate::mesh::Mesh;
use crate::Result;

/// A piecewise-linear function given by its nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    /// Subdivision count of the mesh the coefficients live on.
    pub n: usize,
    /// One value per node, lexicographic node order.
    pub coeffs: Vec<f64>,
}

/// Which half of a grid cell a local point falls in.
enum CellHalf {
    /// Below the lower-left → upper-right diagonal: triangle (ll, lr, ur).
    Lower,
    /// Above the diagonal: triangle (ll, ur, ul).
    Upper,
}

/// Splits a coordinate `v ∈ [0, 1]` into a cell index and local fraction,
/// snapping values within 1e−12 of a grid line onto it so that node
/// coordinates computed as `i·(1/n)` evaluate exactly.
fn grid_coord(v: f64, n: usize) -> (usize, f64) {
    let t = v * n as f64;
    let nearest = t.round();
    let t = if (t - nearest).abs() < 1e-12 { nearest } else { t };
    let cell = t.floor();
    if cell >= n as f64 {
        // v = 1 exactly: evaluate from the last cell with fraction 1.
        (n - 1, 1.0)
    } else {
        (cell as usize, t - cell)
    }
}

impl Field {
    /// The zero field on an `n`-subdivision mesh.
    pub fn zeros(n: usize) -> Self {
        Field {
            n,
            coeffs: vec![0.0; (n + 1) * (n + 1)],
        }
    }

    /// Wraps an existing coefficient vector, checking its length.
    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = (n + 1) * (n + 1);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "field coefficients",
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Field { n, coeffs })
    }

    /// Ensures the field matches a mesh built with the same `n`.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.n != mesh.n {
            return Err(Error::MeshMismatch {
                field_n: self.n,
                mesh_n: mesh.n,
            });
        }
        Ok(())
    }

    /// Evaluates the piecewise-linear interpolant at `(x, y) ∈ [0, 1]²`.
    ///
    /// Exact at nodes; linear inside each triangle.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::PointOutsideDomain { x, y });
        }
        let n = self.n;
        let (ix, fx) = grid_coord(x, n);
        let (iy, fy) = grid_coord(y, n);
        let side = n + 1;
        let ll = iy * side + ix;
        let lr = ll + 1;
        let ul = ll + side;
        let ur = ul + 1;
        let c = &self.coeffs;

        // Local coordinates (fx, fy) in the unit cell; the diagonal fy = fx
        // separates the two triangles.  On the diagonal both expressions
        // agree (shared edge), so the tie-break is immaterial.
        let half = if fy > fx { CellHalf::Upper } else { CellHalf::Lower };
        let value = match half {
            CellHalf::Lower => c[ll] * (1.0 - fx) + c[lr] * (fx - fy) + c[ur] * fy,
            CellHalf::Upper => c[ll] * (1.0 - fy) + c[ur] * fx + c[ul] * (fy - fx),
        };
        Ok(value)
    }

    /// The constant gradient of the field on triangle `t`.
    pub fn gradient_on(&self, mesh: &Mesh, t: usize) -> Result<[f64; 2]> {
        self.check_mesh(mesh)?;
        let geo = mesh.element_geometry(t)?;
        let tri = mesh.triangles[t];
        let mut g = [0.0, 0.0];
        for k in 0..3 {
            let c = self.coeffs[tri[k]];
            g[0] += c * geo.grad[k][0];
            g[1] += c * geo.grad[k][1];
        }
        Ok(g)
    }

    /// True iff every boundary coefficient is exactly zero.
    pub fn boundary_is_zero(&self, mesh: &Mesh) -> bool {
        self.coeffs
            .iter()
            .zip(&mesh.boundary_mask)
            .all(|(&c, &b)| !b || c == 0.0)
    }
}

/// Nodal interpolation: samples `f` at every node.
///
/// Fails if `f` returns a non-finite value at any node.
pub fn interpolate_nodal<F: Fn(f64, f64) -> f64>(f: F, mesh: &Mesh) -> Result<Field> {
    let mut coeffs = Vec::with_capacity(mesh.num_nodes());
    for p in &mesh.nodes {
        let value = f(p.x, p.y);
        if !value.is_finite() {
            return Err(Error::NonFiniteSample {
                x: p.x,
                y: p.y,
                value,
            });
        }
        coeffs.push(value);
    }
    Ok(Field {
        n: mesh.n,
        coeffs,
    })
}
