//! End-to-end integration of the public API: solve → measure → diagnose →
//! serialize, plus cross-module consistency and error-surface checks that
//! only make sense from outside the crate.

use convec::analysis::{convergence_study, well_posedness_diagnostics};
use convec::assembly::{
    assemble_stiffness, load_vector, restrict_matrix, restrict_vector, CoupledState,
    InteriorIndex, ProblemParams,
};
use convec::io::{csv_string, parse_field_csv, parse_field_vtk, read_field, vtk_string, OutputFormat};
use convec::newton::{newton_solve, NewtonConfig};
use convec::solve::{solve_linear, SolveMethod};
use convec::{mms, Error, Field, Mesh};
use std::path::Path;

#[test]
fn manufactured_solve_measures_and_serializes() {
    let n = 16;
    let mesh = Mesh::structured(n).unwrap();
    let params = mms::problem(10.0).unwrap();
    let (state, report) =
        newton_solve(CoupledState::zeros(n), &params, &mesh, &NewtonConfig::default()).unwrap();
    assert!(report.converged, "{:?}", report.divergence);
    assert!(state.psi.boundary_is_zero(&mesh) && state.theta.boundary_is_zero(&mesh));

    // errors sit in the expected envelope for this mesh (H¹ ~ h, L² ~ h²)
    let h1 = mms::error_h1_semi(&state.psi, mms::psi_grad, &mesh).unwrap();
    let l2 = mms::error_l2(&state.psi, mms::psi_exact, &mesh).unwrap();
    assert!(h1 > 1e-4 && h1 < 2e-2, "H1 error {h1}");
    assert!(l2 > 1e-6 && l2 < 1e-3, "L2 error {l2}");

    // both serializations round-trip the solution bit-exactly
    for (field, name) in [(&state.psi, "psi"), (&state.theta, "theta")] {
        let vtk = vtk_string(field, &mesh, name).unwrap();
        assert_eq!(parse_field_vtk(&vtk).unwrap().coeffs, field.coeffs);
        let csv = csv_string(field, &mesh, name).unwrap();
        assert_eq!(parse_field_csv(&csv).unwrap().coeffs, field.coeffs);
    }

    // diagnostics evaluate without error and stay internally consistent
    let diag = well_posedness_diagnostics(&params, &state, &mesh, 1.0, None).unwrap();
    assert!(diag.poincare_c > 0.2 && diag.poincare_c < 0.2251);
    assert_eq!(diag.r_squared.is_some(), diag.b.holds);
    assert!(diag.grad_energy > 0.0);
}

#[test]
fn decoupled_problem_matches_a_direct_linear_solve() {
    // With Ra = 0 and f₂ ≡ 0 the temperature vanishes and the stream
    // function solves a plain Poisson problem; Newton must agree with an
    // independently assembled direct solve.
    let n = 12;
    let mesh = Mesh::structured(n).unwrap();
    let (f1, _) = mms::sources(0.0);
    let params = ProblemParams::new(0.0, f1, std::sync::Arc::new(|_, _| 0.0)).unwrap();
    let (state, report) =
        newton_solve(CoupledState::zeros(n), &params, &mesh, &NewtonConfig::default()).unwrap();
    assert!(report.converged && report.iterations <= 2);
    assert!(state.theta.coeffs.iter().all(|&v| v == 0.0));

    let idx = InteriorIndex::build(&mesh);
    let k = restrict_matrix(&assemble_stiffness(&mesh).unwrap(), &idx).unwrap();
    let b = restrict_vector(
        &load_vector(&mesh, params.f1.as_ref(), 6).unwrap(),
        &idx,
    );
    let (direct, _) = solve_linear(&k, &b, SolveMethod::Direct, 0.0).unwrap();
    for (d, &node) in idx.nodes.iter().enumerate() {
        assert!(
            (state.psi.coeffs[node] - direct[d]).abs() <= 1e-12,
            "node {node}: newton {} vs direct {}",
            state.psi.coeffs[node],
            direct[d]
        );
    }
}

#[test]
fn study_csv_written_to_disk_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let table = convergence_study(&[4, 8, 16], 10.0, &NewtonConfig::default()).unwrap();
    let path = dir.path().join("rates.csv");
    convec::io::write_text(&path, &table.to_csv()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 13);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0][3].is_empty(), "no rate on the coarsest level");
    for row in &rows[1..] {
        let rate: f64 = row[5].parse().unwrap(); // rate_h1_psi
        assert!((0.8..=1.3).contains(&rate), "H1 rate {rate}");
    }
}

#[test]
fn error_surface_is_typed_and_descriptive() {
    assert!(matches!(
        Mesh::structured(0),
        Err(Error::InvalidSubdivisions { n: 0, .. })
    ));
    assert!(matches!(
        Field::from_coeffs(4, vec![0.0; 7]),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(ProblemParams::homogeneous(f64::NAN).is_err());
    assert!(ProblemParams::homogeneous(-1.0).is_err());
    assert!(matches!(
        read_field(Path::new("/definitely/not/here.vtk"), OutputFormat::Vtk),
        Err(Error::Io(_))
    ));

    // messages name the offending quantity
    let msg = Mesh::structured(0).unwrap_err().to_string();
    assert!(msg.contains('0'), "unhelpful message: {msg}");
}

#[test]
fn solver_state_is_reusable_across_rayleigh_numbers() {
    // Warm-starting from a previous solution must converge at least as
    // fast as starting cold — the property the CLI sweep relies on.
    let n = 12;
    let mesh = Mesh::structured(n).unwrap();
    let config = NewtonConfig::default();
    let (state10, _) = newton_solve(
        CoupledState::zeros(n),
        &mms::problem(10.0).unwrap(),
        &mesh,
        &config,
    )
    .unwrap();

    let params50 = mms::problem(50.0).unwrap();
    let (_, cold) = newton_solve(CoupledState::zeros(n), &params50, &mesh, &config).unwrap();
    let (_, warm) = newton_solve(state10, &params50, &mesh, &config).unwrap();
    assert!(cold.converged && warm.converged);
    assert!(
        warm.iterations <= cold.iterations,
        "warm {} vs cold {}",
        warm.iterations,
        cold.iterations
    );
}
