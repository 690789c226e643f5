//! Numerical quadrature on triangles.
//!
//! Rules are stored in barycentric coordinates with weights summing to one;
//! the caller scales by the triangle area.  Four exactness degrees are
//! tabulated (symmetric Gauss rules for triangles): degree 1 (centroid),
//! degree 2 (3 points), degree 4 (6 points) and degree 6 (12 points).

use crate::error::Error;
use crate::mesh::Point;
use crate::Result;

/// A symmetric quadrature rule on the reference triangle.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Barycentric coordinates of the evaluation points.
    pub points: Vec<[f64; 3]>,
    /// Positive weights summing to 1 (scale by triangle area at use site).
    pub weights: Vec<f64>,
    /// Highest total polynomial degree integrated exactly.
    pub degree: usize,
}

/// Expands the orbit of (1−2a, a, a): three distinct permutations.
fn orbit3(a: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    pts.push([b, a, a]);
    pts.push([a, b, a]);
    pts.push([a, a, b]);
    wts.extend_from_slice(&[w, w, w]);
}

/// Expands the full orbit of (a, b, 1−a−b): six permutations.
fn orbit6(a: f64, b: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        pts.push(p);
        wts.push(w);
    }
}

impl QuadratureRule {
    /// Returns the tabulated rule exact for polynomials of `degree`.
    ///
    /// Supported degrees: 1, 2, 4, 6.
    pub fn for_degree(degree: usize) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match degree {
            1 => {
                points.push([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
                weights.push(1.0);
            }
            2 => {
                orbit3(1.0 / 6.0, 1.0 / 3.0, &mut points, &mut weights);
            }
            4 => {
                orbit3(
                    0.445948490915965,
                    0.223381589678011,
                    &mut points,
                    &mut weights,
                );
                orbit3(
                    0.091576213509771,
                    0.109951743655322,
                    &mut points,
                    &mut weights,
                );
            }
            6 => {
                orbit3(
                    0.249286745170910,
                    0.116786275726379,
                    &mut points,
                    &mut weights,
                );
                orbit3(
                    0.063089014491502,
                    0.050844906370207,
                    &mut points,
                    &mut weights,
                );
                orbit6(
                    0.053145049844816,
                    0.310352451033785,
                    0.082851075618374,
                    &mut points,
                    &mut weights,
                );
            }
            _ => return Err(Error::UnsupportedQuadratureDegree { degree }),
        }
        Ok(QuadratureRule {
            points,
            weights,
            degree,
        })
    }

    /// Integrates `f(x, y)` over the triangle with the given vertices and
    /// area: `area · Σ wᵢ f(xᵢ, yᵢ)` with `(xᵢ, yᵢ)` the barycentric
    /// combination of the vertices.
    pub fn integrate_on<F: Fn(f64, f64) -> f64>(&self, verts: [Point; 3], area: f64, f: F) -> f64 {
        let mut acc = 0.0;
        for (lambda, w) in self.points.iter().zip(&self.weights) {
            let x = lambda[0] * verts[0].x + lambda[1] * verts[1].x + lambda[2] * verts[2].x;
            let y = lambda[0] * verts[0].y + lambda[1] * verts[1].y + lambda[2] * verts[2].y;
            acc += w * f(x, y);
        }
        area * acc
    }
}
