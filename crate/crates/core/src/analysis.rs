//! Convergence studies, well-posedness diagnostics, the discrete Poincaré
//! constant, and source-scaling stability sweeps.
//!
//! The diagnostics quantify, on the computed discrete solution, the
//! small-data conditions under which the continuous problem is known to be
//! well posed: a constant `B` gating an a priori energy bound
//! `‖∇ψ‖² + ‖∇θ‖² ≤ R²`, a pair of uniqueness conditions, and a stability
//! constant `L_stab` bounding the solution norm by the source norm.  All
//! of them combine the Poincaré constant `C`, the Rayleigh number, an
//! embedding constant `A`, and a data bound `L`.
//!
//! Two splittings of the Rayleigh coupling term `Ra·∫(∂θ/∂x)·ψ` circulate
//! for these constants.  The asymmetric one yields pairs whose second
//! entry subtracts `Ra/2` with no Poincaré factor — that entry is negative
//! for every `Ra ≥ 1` no matter how small the data, which would make the
//! diagnostics vacuous in the regime the solver actually runs in.  The
//! symmetric splitting (Cauchy–Schwarz, then Young with equal weights)
//! yields `1/2 − C·Ra/2 − …` forms that degrade smoothly with `Ra`.  This
//! module *gates* every derived quantity (R², the a priori check, the
//! stability ratio) on the symmetric forms and *reports* the asymmetric
//! pair alongside, labeled, so both readings stay visible.

use crate::assembly::{
    assemble_mass, assemble_stiffness, restrict_matrix, CoupledState, InteriorIndex,
    ProblemParams,
};
use crate::error::Error;
use crate::field::{interpolate_nodal, Field};
use crate::mesh::Mesh;
use crate::mms;
use crate::newton::{newton_solve, NewtonConfig};
use crate::quadrature::QuadratureRule;
use crate::solve::{solve_linear, SolveMethod};
use crate::Result;
use std::f64::consts::SQRT_2;

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub h: f64,
    /// L² errors of the computed fields against the exact solution.
    pub l2_psi: f64,
    pub l2_theta: f64,
    /// H¹-seminorm errors (gradient L² distance) against the exact solution.
    pub h1_psi: f64,
    pub h1_theta: f64,
    /// ‖∇(Πₕψ − ψₕ)‖₂: distance between the nodal interpolant of the exact
    /// field and the discrete solution — the quantity the error analysis
    /// actually bounds (likewise for θ).
    pub gap_h1_psi: f64,
    pub gap_h1_theta: f64,
    pub newton_iterations: usize,
    /// Inter-level rates log₂(e_{2h}/e_h) against the previous row; `None`
    /// on the first row.
    pub rate_l2_psi: Option<f64>,
    pub rate_h1_psi: Option<f64>,
    pub rate_l2_theta: Option<f64>,
    pub rate_h1_theta: Option<f64>,
}

/// Errors-by-level table for the manufactured-solution study.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub ra: f64,
    pub rows: Vec<RateRow>,
}

/// Inter-level convergence rates for a sequence of errors on meshes whose
/// `h` halves between entries: `rate[i] = log₂(e[i] / e[i+1])`.
pub fn compute_rates(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

impl RateTable {
    /// CSV with one row per level; rate cells are empty on the first row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,h,l2_psi,rate_l2_psi,h1_psi,rate_h1_psi,l2_theta,rate_l2_theta,h1_theta,rate_h1_theta,gap_h1_psi,gap_h1_theta,newton_iterations\n",
        );
        let opt = |r: &Option<f64>| r.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.h,
                r.l2_psi,
                opt(&r.rate_l2_psi),
                r.h1_psi,
                opt(&r.rate_h1_psi),
                r.l2_theta,
                opt(&r.rate_l2_theta),
                r.h1_theta,
                opt(&r.rate_h1_theta),
                r.gap_h1_psi,
                r.gap_h1_theta,
                r.newton_iterations
            ));
        }
        out
    }

    /// Fixed-width human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = format!("Convergence study, Ra = {}\n", self.ra);
        out.push_str(&format!(
            "{:>5} {:>10} {:>12} {:>6} {:>12} {:>6} {:>12} {:>6} {:>12} {:>6} {:>12} {:>12} {:>4}\n",
            "n", "h", "L2(psi)", "rate", "H1(psi)", "rate", "L2(theta)", "rate", "H1(theta)",
            "rate", "gapH1(psi)", "gapH1(theta)", "its"
        ));
        let opt = |r: &Option<f64>| r.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
        for r in &self.rows {
            out.push_str(&format!(
                "{:>5} {:>10.4e} {:>12.4e} {:>6} {:>12.4e} {:>6} {:>12.4e} {:>6} {:>12.4e} {:>6} {:>12.4e} {:>12.4e} {:>4}\n",
                r.n,
                r.h,
                r.l2_psi,
                opt(&r.rate_l2_psi),
                r.h1_psi,
                opt(&r.rate_h1_psi),
                r.l2_theta,
                opt(&r.rate_l2_theta),
                r.h1_theta,
                opt(&r.rate_h1_theta),
                r.gap_h1_psi,
                r.gap_h1_theta,
                r.newton_iterations
            ));
        }
        out
    }
}

/// ‖∇(a − b)‖₂ between two fields on the same mesh.
fn h1_distance(a: &Field, b: &Field, mesh: &Mesh) -> Result<f64> {
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x - y)
        .collect();
    let diff = Field::from_coeffs(a.n, coeffs)?;
    mms::error_h1_semi(&diff, |_, _| (0.0, 0.0), mesh)
}

/// Runs the manufactured-solution problem on each level and tabulates
/// errors and inter-level rates.
///
/// Levels must be at least three ascending powers of two, each double the
/// previous, so that `h` halves between rows and rates are meaningful.
/// A Newton failure at any level aborts the study; the error carries the
/// rows completed so far.
pub fn convergence_study(
    levels: &[usize],
    ra: f64,
    config: &NewtonConfig,
) -> Result<RateTable> {
    if levels.len() < 3 {
        return Err(Error::InvalidParameter {
            message: format!(
                "convergence study needs at least 3 levels, got {}",
                levels.len()
            ),
        });
    }
    for pair in levels.windows(2) {
        if pair[1] != 2 * pair[0] {
            return Err(Error::InvalidParameter {
                message: format!(
                    "levels must double between entries, got {} then {}",
                    pair[0], pair[1]
                ),
            });
        }
    }
    if !levels[0].is_power_of_two() || levels[0] < 2 {
        return Err(Error::InvalidParameter {
            message: format!("levels must be powers of two (at least 2), got {}", levels[0]),
        });
    }

    let params = mms::problem(ra)?;
    let mut table = RateTable { ra, rows: Vec::new() };
    for &n in levels {
        let row = match study_level(n, &params, config) {
            Ok(row) => row,
            Err(e) => {
                return Err(Error::StudyAborted {
                    level: n,
                    reason: e.to_string(),
                    partial: table,
                })
            }
        };
        table.rows.push(row);
    }

    let l2_psi: Vec<f64> = table.rows.iter().map(|r| r.l2_psi).collect();
    let h1_psi: Vec<f64> = table.rows.iter().map(|r| r.h1_psi).collect();
    let l2_theta: Vec<f64> = table.rows.iter().map(|r| r.l2_theta).collect();
    let h1_theta: Vec<f64> = table.rows.iter().map(|r| r.h1_theta).collect();
    for (i, row) in table.rows.iter_mut().enumerate().skip(1) {
        row.rate_l2_psi = Some((l2_psi[i - 1] / l2_psi[i]).log2());
        row.rate_h1_psi = Some((h1_psi[i - 1] / h1_psi[i]).log2());
        row.rate_l2_theta = Some((l2_theta[i - 1] / l2_theta[i]).log2());
        row.rate_h1_theta = Some((h1_theta[i - 1] / h1_theta[i]).log2());
    }
    Ok(table)
}

fn study_level(n: usize, params: &ProblemParams, config: &NewtonConfig) -> Result<RateRow> {
    let mesh = Mesh::structured(n)?;
    let (state, report) = newton_solve(CoupledState::zeros(n), params, &mesh, config)?;
    if !report.converged {
        let reason = report
            .divergence
            .map(|d| d.to_string())
            .unwrap_or_else(|| "did not converge".to_string());
        return Err(Error::InvalidParameter { message: reason });
    }
    let interp_psi = interpolate_nodal(mms::psi_exact, &mesh)?;
    let interp_theta = interpolate_nodal(mms::theta_exact, &mesh)?;
    Ok(RateRow {
        n,
        h: mesh.h,
        l2_psi: mms::error_l2(&state.psi, mms::psi_exact, &mesh)?,
        l2_theta: mms::error_l2(&state.theta, mms::theta_exact, &mesh)?,
        h1_psi: mms::error_h1_semi(&state.psi, mms::psi_grad, &mesh)?,
        h1_theta: mms::error_h1_semi(&state.theta, mms::theta_grad, &mesh)?,
        gap_h1_psi: h1_distance(&interp_psi, &state.psi, &mesh)?,
        gap_h1_theta: h1_distance(&interp_theta, &state.theta, &mesh)?,
        newton_iterations: report.iterations,
        rate_l2_psi: None,
        rate_h1_psi: None,
        rate_l2_theta: None,
        rate_h1_theta: None,
    })
}

// ---------------------------------------------------------------------------
// Poincaré constant
// ---------------------------------------------------------------------------

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Discrete Poincaré constant `C_h = 1/√λ_min`, where `λ_min` is the
/// smallest eigenvalue of the interior generalized problem `K v = λ M v`
/// (inverse power iteration, conjugate-gradient inner solves).
///
/// As the mesh refines, `C_h` increases monotonically toward the continuum
/// value `1/(√2·π) ≈ 0.22508` for the unit square (discrete eigenvalues
/// overestimate `λ_min`, so `C_h` approaches from below).
pub fn poincare_estimate(mesh: &Mesh) -> Result<f64> {
    let idx = InteriorIndex::build(mesh);
    if idx.is_empty() {
        return Err(Error::InvalidParameter {
            message: "Poincaré estimate needs at least one interior node (n ≥ 2)".to_string(),
        });
    }
    let k = restrict_matrix(&assemble_stiffness(mesh)?, &idx)?;
    let m = restrict_matrix(&assemble_mass(mesh)?, &idx)?;

    // The first eigenfunction is positive, so the all-ones start vector has
    // a large component along it and the iteration is deterministic.
    let mut v = vec![1.0; idx.len()];
    let mut lambda_prev = f64::INFINITY;
    const MAX_OUTER: usize = 500;
    for _ in 0..MAX_OUTER {
        let mv = m.spmv(&v)?;
        let (z, _) = solve_linear(&k, &mv, SolveMethod::Cg, 1e-12)?;
        let mz = m.spmv(&z)?;
        let scale = dot(&z, &mz).sqrt();
        v = z.iter().map(|x| x / scale).collect();

        let kv = k.spmv(&v)?;
        let mv = m.spmv(&v)?;
        let lambda = dot(&v, &kv) / dot(&v, &mv);
        if (lambda - lambda_prev).abs() <= 1e-10 * lambda.abs() {
            return Ok(1.0 / lambda.sqrt());
        }
        lambda_prev = lambda;
    }
    Err(Error::EigenDidNotConverge { iterations: MAX_OUTER })
}

// ---------------------------------------------------------------------------
// Well-posedness diagnostics
// ---------------------------------------------------------------------------

/// A scalar condition with its sign flag (`holds ⇔ value > 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionValue {
    pub value: f64,
    pub holds: bool,
}

impl ConditionValue {
    fn new(value: f64) -> Self {
        ConditionValue {
            value,
            holds: value > 0.0,
        }
    }
}

/// All condition values and derived bounds evaluated on one discrete
/// solution.  `Option` fields require the energy radius `R`, which exists
/// only when the gating constant `b` is positive.
#[derive(Debug, Clone)]
pub struct WellPosednessDiagnostics {
    pub ra: f64,
    /// Discrete Poincaré constant of the mesh.
    pub poincare_c: f64,
    /// Embedding constant A (user input).
    pub sobolev_a: f64,
    /// Data bound L; measured as ‖∂θ_h/∂x‖_{L⁴} unless supplied.
    pub data_bound_l: f64,
    pub l_was_measured: bool,
    pub f1_norm_sq: f64,
    pub f2_norm_sq: f64,
    /// ‖∇ψ_h‖² + ‖∇θ_h‖² of the supplied solution.
    pub grad_energy: f64,
    /// Whether f₂ > 0 at every quadrature point — a hypothesis of the
    /// existence theory, reported but never enforced.
    pub f2_everywhere_positive: bool,
    /// Gating small-data constant, symmetric split: 1/2 − C·Ra/2 − A·L.
    pub b: ConditionValue,
    /// Asymmetric-split pair, reported for reference:
    /// B₁ = 1 − C·Ra/2 − A·L and B₂ = 1/2 − Ra/2 − A·L, plus their min.
    pub b_alt_first: ConditionValue,
    pub b_alt_second: ConditionValue,
    pub b_alt: ConditionValue,
    /// R² = C²(‖f₁‖² + ‖f₂‖²)/(2B), defined when b holds.
    pub r_squared: Option<f64>,
    /// Asymmetric reading (C²‖f₁‖² + ‖f₂‖²)/(2B), reported for reference.
    pub r_squared_alt: Option<f64>,
    /// grad_energy ≤ R²?
    pub apriori_bound_holds: Option<bool>,
    /// Uniqueness conditions (all need R):
    /// 1/2 − C·R/√2 − C·Ra/2,
    pub uniqueness_first: Option<ConditionValue>,
    /// relaxed variant 1 − C·R/√2 − C·Ra/2,
    pub uniqueness_first_relaxed: Option<ConditionValue>,
    /// symmetric-split second condition 1/2 − C·Ra/2 − 2√2·R·C,
    pub uniqueness_second: Option<ConditionValue>,
    /// asymmetric variant 1/2 − Ra/2 − 2√2·R·C.
    pub uniqueness_second_alt: Option<ConditionValue>,
    /// first ∧ second (the gating forms).
    pub unique_solution_indicated: Option<bool>,
    /// Stability entries: S₁ = 1/2 − C·R/(2√2) − C·Ra/2,
    pub stability_first: Option<ConditionValue>,
    /// symmetric-split S₂ = 1/2 − C·Ra/2 − (3/(2√2))·R·C,
    pub stability_second: Option<ConditionValue>,
    /// asymmetric variant 1/2 − Ra/2 − (3/(2√2))·R·C.
    pub stability_second_alt: Option<ConditionValue>,
    /// L_stab = min(S₁, S₂).
    pub l_stab: Option<ConditionValue>,
    /// grad_energy·2·L_stab / (C²(‖f₁‖² + ‖f₂‖²)); ≤ 1 whenever the
    /// stability conditions hold.  0 for the zero problem.
    pub stability_ratio: Option<f64>,
}

/// ∫ f² over the domain with the degree-6 rule.
fn source_norm_sq<F: Fn(f64, f64) -> f64>(f: F, mesh: &Mesh) -> Result<f64> {
    let rule = QuadratureRule::for_degree(6)?;
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let verts = mesh.triangles[t].map(|i| mesh.nodes[i]);
        acc += rule.integrate_on(verts, geo.area, |x, y| {
            let v = f(x, y);
            v * v
        });
    }
    Ok(acc)
}

/// ‖∇u_h‖₂² — exact, since P1 gradients are constant per triangle.
pub fn grad_norm_sq(field: &Field, mesh: &Mesh) -> Result<f64> {
    field.check_mesh(mesh)?;
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let g = field.gradient_on(mesh, t)?;
        acc += geo.area * (g[0] * g[0] + g[1] * g[1]);
    }
    Ok(acc)
}

/// ‖∂θ_h/∂x‖_{L⁴} — exact for the piecewise-constant discrete derivative.
fn measure_data_bound(theta: &Field, mesh: &Mesh) -> Result<f64> {
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let geo = mesh.element_geometry(t)?;
        let g = theta.gradient_on(mesh, t)?;
        acc += geo.area * g[0].powi(4);
    }
    Ok(acc.powf(0.25))
}

/// Evaluates every well-posedness condition on a computed solution.
///
/// `sobolev_a` is the embedding constant A (no universal value is assumed;
/// 1 is a common default).  `data_bound_l` overrides the measured
/// ‖∂θ_h/∂x‖_{L⁴} when supplied.  Negative condition values are reported,
/// never raised.
pub fn well_posedness_diagnostics(
    params: &ProblemParams,
    solved: &CoupledState,
    mesh: &Mesh,
    sobolev_a: f64,
    data_bound_l: Option<f64>,
) -> Result<WellPosednessDiagnostics> {
    solved.validate(mesh)?;
    if !(sobolev_a > 0.0 && sobolev_a.is_finite()) {
        return Err(Error::InvalidParameter {
            message: format!("embedding constant A must be positive and finite, got {sobolev_a}"),
        });
    }
    if let Some(l) = data_bound_l {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter {
                message: format!("data bound L must be positive and finite, got {l}"),
            });
        }
    }

    let ra = params.ra;
    let c = poincare_estimate(mesh)?;
    let (l, l_was_measured) = match data_bound_l {
        Some(l) => (l, false),
        None => (measure_data_bound(&solved.theta, mesh)?, true),
    };
    let f1_norm_sq = source_norm_sq(params.f1.as_ref(), mesh)?;
    let f2_norm_sq = source_norm_sq(params.f2.as_ref(), mesh)?;
    let grad_energy =
        grad_norm_sq(&solved.psi, mesh)? + grad_norm_sq(&solved.theta, mesh)?;

    let rule = QuadratureRule::for_degree(6)?;
    let mut f2_everywhere_positive = true;
    'outer: for t in 0..mesh.triangles.len() {
        let verts = mesh.triangles[t].map(|i| mesh.nodes[i]);
        for lambda in &rule.points {
            let x = lambda[0] * verts[0].x + lambda[1] * verts[1].x + lambda[2] * verts[2].x;
            let y = lambda[0] * verts[0].y + lambda[1] * verts[1].y + lambda[2] * verts[2].y;
            if (params.f2)(x, y) <= 0.0 {
                f2_everywhere_positive = false;
                break 'outer;
            }
        }
    }

    let al = sobolev_a * l;
    let b = ConditionValue::new(0.5 - c * ra / 2.0 - al);
    let b_alt_first = ConditionValue::new(1.0 - c * ra / 2.0 - al);
    let b_alt_second = ConditionValue::new(0.5 - ra / 2.0 - al);
    let b_alt = ConditionValue::new(b_alt_first.value.min(b_alt_second.value));

    let source_sq = f1_norm_sq + f2_norm_sq;
    let (r_squared, r_squared_alt, apriori_bound_holds) = if b.holds {
        let r2 = c * c * source_sq / (2.0 * b.value);
        let r2_alt = (c * c * f1_norm_sq + f2_norm_sq) / (2.0 * b.value);
        (Some(r2), Some(r2_alt), Some(grad_energy <= r2))
    } else {
        (None, None, None)
    };

    let with_r = |f: &dyn Fn(f64) -> f64| r_squared.map(|r2| ConditionValue::new(f(r2.sqrt())));
    let uniqueness_first = with_r(&|r| 0.5 - c * r / SQRT_2 - c * ra / 2.0);
    let uniqueness_first_relaxed = with_r(&|r| 1.0 - c * r / SQRT_2 - c * ra / 2.0);
    let uniqueness_second = with_r(&|r| 0.5 - c * ra / 2.0 - 2.0 * SQRT_2 * r * c);
    let uniqueness_second_alt = with_r(&|r| 0.5 - ra / 2.0 - 2.0 * SQRT_2 * r * c);
    let unique_solution_indicated = match (uniqueness_first, uniqueness_second) {
        (Some(a), Some(b)) => Some(a.holds && b.holds),
        _ => None,
    };

    let stability_first = with_r(&|r| 0.5 - c * r / (2.0 * SQRT_2) - c * ra / 2.0);
    let stability_second = with_r(&|r| 0.5 - c * ra / 2.0 - 1.5 / SQRT_2 * r * c);
    let stability_second_alt = with_r(&|r| 0.5 - ra / 2.0 - 1.5 / SQRT_2 * r * c);
    let l_stab = match (stability_first, stability_second) {
        (Some(a), Some(b)) => Some(ConditionValue::new(a.value.min(b.value))),
        _ => None,
    };
    let stability_ratio = l_stab.and_then(|ls| {
        if !ls.holds {
            return None;
        }
        let denom = c * c * source_sq;
        if denom == 0.0 {
            // zero problem: the bound degenerates to 0 ≤ 0
            if grad_energy == 0.0 {
                Some(0.0)
            } else {
                None
            }
        } else {
            Some(grad_energy * 2.0 * ls.value / denom)
        }
    });

    Ok(WellPosednessDiagnostics {
        ra,
        poincare_c: c,
        sobolev_a,
        data_bound_l: l,
        l_was_measured,
        f1_norm_sq,
        f2_norm_sq,
        grad_energy,
        f2_everywhere_positive,
        b,
        b_alt_first,
        b_alt_second,
        b_alt,
        r_squared,
        r_squared_alt,
        apriori_bound_holds,
        uniqueness_first,
        uniqueness_first_relaxed,
        uniqueness_second,
        uniqueness_second_alt,
        unique_solution_indicated,
        stability_first,
        stability_second,
        stability_second_alt,
        l_stab,
        stability_ratio,
    })
}

impl WellPosednessDiagnostics {
    /// Human-readable report block.
    pub fn to_text(&self) -> String {
        fn cond(c: &ConditionValue) -> String {
            format!("{:+.6e}  [{}]", c.value, if c.holds { "holds" } else { "fails" })
        }
        fn opt_cond(c: &Option<ConditionValue>) -> String {
            c.as_ref().map(cond).unwrap_or_else(|| "undefined (needs R)".into())
        }
        let mut s = String::new();
        s.push_str("Well-posedness diagnostics\n");
        s.push_str("==========================\n");
        s.push_str(&format!("Ra                          = {}\n", self.ra));
        s.push_str(&format!(
            "Poincare constant C (mesh)  = {:.6}  (continuum limit 0.225079)\n",
            self.poincare_c
        ));
        s.push_str(&format!("embedding constant A        = {}\n", self.sobolev_a));
        s.push_str(&format!(
            "data bound L                = {:.6e}  ({})\n",
            self.data_bound_l,
            if self.l_was_measured {
                "measured: L4 norm of d(theta_h)/dx"
            } else {
                "user supplied"
            }
        ));
        s.push_str(&format!("||f1||_2^2                  = {:.6e}\n", self.f1_norm_sq));
        s.push_str(&format!("||f2||_2^2                  = {:.6e}\n", self.f2_norm_sq));
        s.push_str(&format!(
            "grad energy |psi|^2+|theta|^2 = {:.6e}\n",
            self.grad_energy
        ));
        s.push_str(&format!(
            "f2 positive everywhere      = {}  (informational hypothesis, not enforced)\n\n",
            self.f2_everywhere_positive
        ));

        s.push_str("small-data constant (gates everything below)\n");
        s.push_str(&format!(
            "  B  = 1/2 - C*Ra/2 - A*L           = {}\n",
            cond(&self.b)
        ));
        s.push_str("  asymmetric-split pair, for reference:\n");
        s.push_str(&format!(
            "  B1 = 1 - C*Ra/2 - A*L             = {}\n",
            cond(&self.b_alt_first)
        ));
        s.push_str(&format!(
            "  B2 = 1/2 - Ra/2 - A*L             = {}\n",
            cond(&self.b_alt_second)
        ));
        s.push_str(&format!(
            "  min(B1, B2)                       = {}\n",
            cond(&self.b_alt)
        ));
        s.push_str("  note: B2 subtracts Ra/2 without the Poincare factor and is negative\n");
        s.push_str("        for every Ra >= 1 regardless of data; the symmetric form B is\n");
        s.push_str("        therefore the gating constant.\n\n");

        match self.r_squared {
            Some(r2) => {
                s.push_str(&format!(
                    "R^2 = C^2(||f1||^2 + ||f2||^2)/(2B) = {:.6e}   (R = {:.6e})\n",
                    r2,
                    r2.sqrt()
                ));
                s.push_str(&format!(
                    "  asymmetric reading (C^2||f1||^2 + ||f2||^2)/(2B) = {:.6e}, for reference\n",
                    self.r_squared_alt.unwrap_or(f64::NAN)
                ));
                s.push_str(&format!(
                    "a priori bound grad_energy <= R^2   : {}   ({:.6e} vs {:.6e})\n\n",
                    if self.apriori_bound_holds == Some(true) { "holds" } else { "VIOLATED" },
                    self.grad_energy,
                    r2
                ));
            }
            None => {
                s.push_str("R^2 undefined: B <= 0, the small-data regime does not apply.\n\n");
            }
        }

        s.push_str("uniqueness conditions\n");
        s.push_str(&format!(
            "  U1 = 1/2 - C*R/sqrt(2) - C*Ra/2     = {}\n",
            opt_cond(&self.uniqueness_first)
        ));
        s.push_str(&format!(
            "  U1' (relaxed) = 1 - C*R/sqrt(2) - C*Ra/2 = {}\n",
            opt_cond(&self.uniqueness_first_relaxed)
        ));
        s.push_str(&format!(
            "  U2 = 1/2 - C*Ra/2 - 2*sqrt(2)*R*C   = {}\n",
            opt_cond(&self.uniqueness_second)
        ));
        s.push_str(&format!(
            "  U2' (asymmetric) = 1/2 - Ra/2 - 2*sqrt(2)*R*C = {}\n",
            opt_cond(&self.uniqueness_second_alt)
        ));
        s.push_str(&format!(
            "  uniqueness indicated (U1 and U2)    : {}\n\n",
            self.unique_solution_indicated
                .map(|b| b.to_string())
                .unwrap_or_else(|| "undefined".into())
        ));

        s.push_str("stability\n");
        s.push_str(&format!(
            "  S1 = 1/2 - C*R/(2*sqrt(2)) - C*Ra/2 = {}\n",
            opt_cond(&self.stability_first)
        ));
        s.push_str(&format!(
            "  S2 = 1/2 - C*Ra/2 - (3/(2*sqrt(2)))*R*C = {}\n",
            opt_cond(&self.stability_second)
        ));
        s.push_str(&format!(
            "  S2' (asymmetric) = 1/2 - Ra/2 - (3/(2*sqrt(2)))*R*C = {}\n",
            opt_cond(&self.stability_second_alt)
        ));
        s.push_str(&format!(
            "  L_stab = min(S1, S2)                = {}\n",
            opt_cond(&self.l_stab)
        ));
        match self.stability_ratio {
            Some(r) => s.push_str(&format!(
                "  ratio grad_energy*2*L_stab/(C^2*(||f1||^2+||f2||^2)) = {:.6e}  ({})\n",
                r,
                if r <= 1.0 { "<= 1, bound satisfied" } else { "> 1, bound VIOLATED" }
            )),
            None => s.push_str(
                "  stability bound skipped: L_stab undefined or not positive (see values above)\n",
            ),
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Stability sweep
// ---------------------------------------------------------------------------

/// One source-scaling point of a stability sweep.
#[derive(Debug, Clone)]
pub struct StabilityPoint {
    pub scale: f64,
    pub converged: bool,
    pub newton_iterations: usize,
    /// ‖∇ψ_h‖₂ and ‖∇θ_h‖₂ of the final iterate.
    pub grad_psi: f64,
    pub grad_theta: f64,
    /// √(‖f₁‖² + ‖f₂‖²) of the scaled sources.
    pub source_norm: f64,
    /// The stability constant at this point (may be negative; `None` when
    /// the small-data constant B fails and no energy radius exists).
    pub l_stab: Option<f64>,
    /// Bound ratio and flag, present only when L_stab > 0.
    pub bound_margin: Option<f64>,
    pub bound_holds: Option<bool>,
    /// Hard solver failure, if any (the sweep continues past it).
    pub failure: Option<String>,
}

/// Solution-norm vs source-norm curve over a list of source scalings.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub ra: f64,
    pub n: usize,
    pub points: Vec<StabilityPoint>,
}

impl StabilityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scale,converged,newton_iterations,grad_psi,grad_theta,source_norm,l_stab,bound_margin,bound_holds,failure\n",
        );
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                p.scale,
                p.converged,
                p.newton_iterations,
                p.grad_psi,
                p.grad_theta,
                p.source_norm,
                p.l_stab.map(|v| v.to_string()).unwrap_or_default(),
                p.bound_margin.map(|v| v.to_string()).unwrap_or_default(),
                p.bound_holds.map(|v| v.to_string()).unwrap_or_default(),
                p.failure.clone().unwrap_or_default()
            ));
        }
        out
    }
}

/// Solves the manufactured problem with sources scaled by each factor and
/// relates solution gradient norms to source norms.  In the small-data
/// regime the curve is asymptotically linear through the origin; wherever
/// the stability constant is positive the bound ratio is checked.  Solver
/// failures are recorded per point and do not abort the sweep.
pub fn stability_sweep(
    scales: &[f64],
    ra: f64,
    n: usize,
    config: &NewtonConfig,
) -> Result<StabilityReport> {
    if scales.is_empty() {
        return Err(Error::InvalidParameter {
            message: "stability sweep needs at least one scale".to_string(),
        });
    }
    if let Some(&bad) = scales.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::InvalidParameter {
            message: format!("scales must be finite and non-negative, got {bad}"),
        });
    }
    let mesh = Mesh::structured(n)?;
    let mut report = StabilityReport {
        ra,
        n,
        points: Vec::with_capacity(scales.len()),
    };
    for &scale in scales {
        let params = mms::scaled_problem(ra, scale)?;
        let point = match newton_solve(CoupledState::zeros(n), &params, &mesh, config) {
            Err(e) => StabilityPoint {
                scale,
                converged: false,
                newton_iterations: 0,
                grad_psi: f64::NAN,
                grad_theta: f64::NAN,
                source_norm: f64::NAN,
                l_stab: None,
                bound_margin: None,
                bound_holds: None,
                failure: Some(e.to_string()),
            },
            Ok((state, newton)) => {
                let diag = well_posedness_diagnostics(&params, &state, &mesh, 1.0, None)?;
                let margin = diag.stability_ratio;
                StabilityPoint {
                    scale,
                    converged: newton.converged,
                    newton_iterations: newton.iterations,
                    grad_psi: grad_norm_sq(&state.psi, &mesh)?.sqrt(),
                    grad_theta: grad_norm_sq(&state.theta, &mesh)?.sqrt(),
                    source_norm: (diag.f1_norm_sq + diag.f2_norm_sq).sqrt(),
                    l_stab: diag.l_stab.map(|c| c.value),
                    bound_margin: margin,
                    bound_holds: margin.map(|r| r <= 1.0),
                    failure: None,
                }
            }
        };
        report.points.push(point);
    }
    Ok(report)
}
