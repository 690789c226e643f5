//! Assembly of the coupled weak formulation.
//!
//! For the system
//!
//! ```text
//!     −Δψ − Ra·∂θ/∂x = f₁,      J(ψ,θ) = Δθ + f₂
//! ```
//!
//! with zero Dirichlet data, the residual tested against interior basis
//! functions (v for the first equation, τ for the second) is
//!
//! ```text
//!     F_ψ(u)ᵢ = ∫ ∇ψ·∇vᵢ − Ra·∫ (∂θ/∂x) vᵢ − ∫ f₁ vᵢ
//!     F_θ(u)ᵢ = ∫ ∇θ·∇τᵢ + ∫ J(ψ,θ) τᵢ − ∫ f₂ τᵢ
//! ```
//!
//! On P1 elements all field gradients are constant per triangle, so the
//! Jacobian determinant J(ψ,θ) = ψ_x θ_y − ψ_y θ_x is a per-triangle
//! constant scattered through ∫_T φᵢ = area/3.  The Newton tangent is the
//! exact Gâteaux derivative of F: the J-term is bilinear, so its derivative
//! splits into a δψ part and a δθ part and nothing else; the source terms
//! do not appear.
//!
//! Boundary conditions are imposed by row/column elimination: residuals and
//! tangents are built on interior unknowns only, stacked ψ-block first.

use crate::error::Error;
use crate::field::Field;
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::sparse::SparseMatrix;
use crate::Result;
use std::sync::Arc;

/// A scalar source term.
pub type SourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Rayleigh number and source terms of one problem instance.
#[derive(Clone)]
pub struct ProblemParams {
    /// Rayleigh number, finite and ≥ 0.
    pub ra: f64,
    pub f1: SourceFn,
    pub f2: SourceFn,
}

impl ProblemParams {
    /// Validates and wraps the parameters.
    pub fn new(ra: f64, f1: SourceFn, f2: SourceFn) -> Result<Self> {
        if !ra.is_finite() || ra < 0.0 {
            return Err(Error::InvalidParameter {
                message: format!("Rayleigh number must be finite and non-negative, got {ra}"),
            });
        }
        Ok(ProblemParams { ra, f1, f2 })
    }

    /// Zero sources (the trivial fixed-point problem).
    pub fn homogeneous(ra: f64) -> Result<Self> {
        Self::new(ra, Arc::new(|_, _| 0.0), Arc::new(|_, _| 0.0))
    }
}

impl std::fmt::Debug for ProblemParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemParams")
            .field("ra", &self.ra)
            .finish_non_exhaustive()
    }
}

/// The discrete unknown: stream-function and temperature coefficients on a
/// shared mesh, boundary coefficients exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub psi: Field,
    pub theta: Field,
}

impl CoupledState {
    /// The zero state on an `n`-subdivision mesh.
    pub fn zeros(n: usize) -> Self {
        CoupledState {
            psi: Field::zeros(n),
            theta: Field::zeros(n),
        }
    }

    /// Wraps two fields, which must live on the same mesh.
    pub fn new(psi: Field, theta: Field) -> Result<Self> {
        if psi.n != theta.n {
            return Err(Error::MeshMismatch {
                field_n: psi.n,
                mesh_n: theta.n,
            });
        }
        Ok(CoupledState { psi, theta })
    }

    /// Checks mesh compatibility and the zero-boundary invariant.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        self.psi.check_mesh(mesh)?;
        self.theta.check_mesh(mesh)?;
        if !self.psi.boundary_is_zero(mesh) || !self.theta.boundary_is_zero(mesh) {
            return Err(Error::InvalidParameter {
                message: "state has nonzero boundary coefficients".to_string(),
            });
        }
        Ok(())
    }
}

/// Mapping between full node numbering and interior-only numbering.
#[derive(Debug, Clone)]
pub struct InteriorIndex {
    /// Interior node ids in ascending order.
    pub nodes: Vec<usize>,
    /// `of_node[node] = Some(reduced index)` for interior nodes.
    pub of_node: Vec<Option<usize>>,
}

impl InteriorIndex {
    pub fn build(mesh: &Mesh) -> Self {
        let nodes = mesh.interior_nodes();
        let mut of_node = vec![None; mesh.num_nodes()];
        for (k, &i) in nodes.iter().enumerate() {
            of_node[i] = Some(k);
        }
        InteriorIndex { nodes, of_node }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Restricts a full-node matrix to interior rows and columns.
pub fn restrict_matrix(a: &SparseMatrix, idx: &InteriorIndex) -> Result<SparseMatrix> {
    let m = idx.len();
    let mut triplets = Vec::new();
    for (reduced_row, &node) in idx.nodes.iter().enumerate() {
        let (cols, vals) = a.row(node);
        for (&j, &v) in cols.iter().zip(vals) {
            if let Some(reduced_col) = idx.of_node[j] {
                triplets.push((reduced_row, reduced_col, v));
            }
        }
    }
    SparseMatrix::from_triplets(m, m, &triplets)
}

/// Gathers interior entries of a full-node vector.
pub fn restrict_vector(v: &[f64], idx: &InteriorIndex) -> Vec<f64> {
    idx.nodes.iter().map(|&i| v[i]).collect()
}

/// Stiffness matrix over all nodes: `K_ij = ∫ ∇φᵢ·∇φⱼ`.
///
/// Symmetric positive semidefinite with zero row sums; on the structured
/// mesh the interior rows reproduce the classical 5-point stencil
/// (diagonal 4, edge neighbors −1).
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseMatrix> {
    let nn = mesh.num_nodes();
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for b in 0..3 {
                let v = geo.area
                    * (geo.grad[a][0] * geo.grad[b][0] + geo.grad[a][1] * geo.grad[b][1]);
                triplets.push((tri[a], tri[b], v));
            }
        }
    }
    SparseMatrix::from_triplets(nn, nn, &triplets)
}

/// Mass matrix over all nodes: `M_ij = ∫ φᵢφⱼ`.
///
/// The P1 element mass matrix is `(area/12)·[[2,1,1],[1,2,1],[1,1,2]]`
/// (exact integration of barycentric products).
pub fn assemble_mass(mesh: &Mesh) -> Result<SparseMatrix> {
    let nn = mesh.num_nodes();
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for b in 0..3 {
                let v = geo.area / 12.0 * if a == b { 2.0 } else { 1.0 };
                triplets.push((tri[a], tri[b], v));
            }
        }
    }
    SparseMatrix::from_triplets(nn, nn, &triplets)
}

/// Convection matrix over all nodes: `C_ij = ∫ (∂φⱼ/∂x) φᵢ`.
///
/// The integrand is (constant)·φᵢ per triangle, so `∫_T φᵢ = area/3` gives
/// the exact value.  Restricted to interior rows and columns, C is
/// antisymmetric (integration by parts with zero boundary terms).
pub fn assemble_convection_x(mesh: &Mesh) -> Result<SparseMatrix> {
    let nn = mesh.num_nodes();
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let tri = mesh.triangles[t];
        let third = geo.area / 3.0;
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((tri[a], tri[b], third * geo.grad[b][0]));
            }
        }
    }
    SparseMatrix::from_triplets(nn, nn, &triplets)
}

/// Load vector over all nodes: `bᵢ = ∫ f φᵢ`, with the requested quadrature
/// degree (the studies use degree 6 so polynomial sources up to degree 7
/// carry quadrature error below the discretization error).
pub fn load_vector<F: Fn(f64, f64) -> f64>(
    mesh: &Mesh,
    f: F,
    degree: usize,
) -> Result<Vec<f64>> {
    let rule = QuadratureRule::for_degree(degree)?;
    let mut b = vec![0.0; mesh.num_nodes()];
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let tri = mesh.triangles[t];
        let verts = tri.map(|i| mesh.nodes[i]);
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            let x = lambda[0] * verts[0].x + lambda[1] * verts[1].x + lambda[2] * verts[2].x;
            let y = lambda[0] * verts[0].y + lambda[1] * verts[1].y + lambda[2] * verts[2].y;
            let fv = f(x, y);
            if !fv.is_finite() {
                return Err(Error::NonFiniteSample { x, y, value: fv });
            }
            let scaled = geo.area * w * fv;
            for k in 0..3 {
                b[tri[k]] += scaled * lambda[k];
            }
        }
    }
    Ok(b)
}

/// Per-triangle Jacobian determinant of the state, scattered through
/// `∫_T φᵢ = area/3`: the discrete `∫ J(ψ,θ) φᵢ` over all nodes.
fn jacobian_residual(state: &CoupledState, mesh: &Mesh) -> Result<Vec<f64>> {
    let mut out = vec![0.0; mesh.num_nodes()];
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let tri = mesh.triangles[t];
        let mut gpsi = [0.0, 0.0];
        let mut gtheta = [0.0, 0.0];
        for k in 0..3 {
            let (cp, ct) = (state.psi.coeffs[tri[k]], state.theta.coeffs[tri[k]]);
            gpsi[0] += cp * geo.grad[k][0];
            gpsi[1] += cp * geo.grad[k][1];
            gtheta[0] += ct * geo.grad[k][0];
            gtheta[1] += ct * geo.grad[k][1];
        }
        let jt = gpsi[0] * gtheta[1] - gpsi[1] * gtheta[0];
        let third = geo.area / 3.0;
        for k in 0..3 {
            out[tri[k]] += jt * third;
        }
    }
    Ok(out)
}

/// Nonlinear residual on interior unknowns, stacked `[F_ψ | F_θ]`.
pub fn assemble_residual(
    state: &CoupledState,
    params: &ProblemParams,
    mesh: &Mesh,
) -> Result<Vec<f64>> {
    state.validate(mesh)?;
    let idx = InteriorIndex::build(mesh);
    let k = assemble_stiffness(mesh)?;
    let c = assemble_convection_x(mesh)?;
    let b1 = load_vector(mesh, params.f1.as_ref(), 6)?;
    let b2 = load_vector(mesh, params.f2.as_ref(), 6)?;

    let k_psi = k.spmv(&state.psi.coeffs)?;
    let k_theta = k.spmv(&state.theta.coeffs)?;
    let c_theta = c.spmv(&state.theta.coeffs)?;
    let j_res = jacobian_residual(state, mesh)?;

    let m = idx.len();
    let mut out = vec![0.0; 2 * m];
    for (d, &i) in idx.nodes.iter().enumerate() {
        out[d] = k_psi[i] - params.ra * c_theta[i] - b1[i];
        out[m + d] = k_theta[i] + j_res[i] - b2[i];
    }
    Ok(out)
}

/// Newton tangent on interior unknowns, 2×2 block layout matching
/// [`assemble_residual`]:
///
/// ```text
///     [ K          −Ra·C      ]   rows: ψ-equations
///     [ B₁(θ)       K + B₂(ψ) ]   rows: θ-equations
/// ```
///
/// where `B₁(θ)δψ = ∫ ((δψ)_x θ_y − (δψ)_y θ_x) τ` and
/// `B₂(ψ)δθ = ∫ (ψ_x (δθ)_y − ψ_y (δθ)_x) τ` are the two halves of the
/// J-term's derivative.
pub fn assemble_tangent(
    state: &CoupledState,
    params: &ProblemParams,
    mesh: &Mesh,
) -> Result<SparseMatrix> {
    state.validate(mesh)?;
    let idx = InteriorIndex::build(mesh);
    let m = idx.len();
    let mut triplets = Vec::with_capacity(24 * mesh.triangles.len());

    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let tri = mesh.triangles[t];
        let mut gpsi = [0.0, 0.0];
        let mut gtheta = [0.0, 0.0];
        for k in 0..3 {
            let (cp, ct) = (state.psi.coeffs[tri[k]], state.theta.coeffs[tri[k]]);
            gpsi[0] += cp * geo.grad[k][0];
            gpsi[1] += cp * geo.grad[k][1];
            gtheta[0] += ct * geo.grad[k][0];
            gtheta[1] += ct * geo.grad[k][1];
        }
        let third = geo.area / 3.0;
        for a in 0..3 {
            let Some(ia) = idx.of_node[tri[a]] else {
                continue;
            };
            for b in 0..3 {
                let Some(ib) = idx.of_node[tri[b]] else {
                    continue;
                };
                let gb = geo.grad[b];
                let k_ab =
                    geo.area * (geo.grad[a][0] * gb[0] + geo.grad[a][1] * gb[1]);
                let c_ab = third * gb[0];
                let b1_ab = (gb[0] * gtheta[1] - gb[1] * gtheta[0]) * third;
                let b2_ab = (gpsi[0] * gb[1] - gpsi[1] * gb[0]) * third;
                triplets.push((ia, ib, k_ab));
                triplets.push((ia, m + ib, -params.ra * c_ab));
                triplets.push((m + ia, ib, b1_ab));
                triplets.push((m + ia, m + ib, k_ab + b2_ab));
            }
        }
    }
    SparseMatrix::from_triplets(2 * m, 2 * m, &triplets)
}
