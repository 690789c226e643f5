//! The four subcommand runners.  Every runner resolves its options,
//! computes, writes artifacts into the output directory, and prints a
//! short summary to stdout.

use crate::config::{
    parse_list, resolve_format, resolve_optional, resolve_string, resolve_value, validate_n,
    ConfigFile, ConvergenceArgs, DiagnosticsArgs, Resolved, SolveArgs, SweepRaArgs,
};
use crate::CliError;
use convec::analysis::{convergence_study, stability_sweep, well_posedness_diagnostics};
use convec::assembly::{CoupledState, ProblemParams};
use convec::io::{write_field, write_text, OutputFormat};
use convec::mms;
use convec::newton::{newton_solve, NewtonReport};
use convec::{Error, Mesh};
use std::path::Path;

fn core(e: Error) -> CliError {
    CliError::from_core(e)
}

/// Creates the output directory (exit code 4 if that fails — e.g. the
/// path names an existing file).
fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create output directory {}: {e}", dir.display())))
}

fn newton_log(report: &NewtonReport) -> String {
    let mut log = report.log_lines().join("\n");
    log.push('\n');
    log
}

fn divergence_message(report: &NewtonReport, label: &str) -> String {
    let reason = report
        .divergence
        .as_ref()
        .map(|d| d.to_string())
        .unwrap_or_else(|| "did not converge".to_string());
    format!("{label}: {reason} after {} iterations", report.iterations)
}

pub fn solve(args: SolveArgs) -> Result<(), CliError> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let Resolved { newton, out_dir } = args.common.resolve(&file)?;
    let n = validate_n(resolve_value(args.n, &file, "n", 32)?)?;
    let ra = resolve_value(args.ra, &file, "ra", 10.0)?;
    let scale = resolve_value(args.scale, &file, "scale", 1.0)?;
    let format = resolve_format(&args.format, &file)?;
    let sobolev_a = resolve_value(args.sobolev_a, &file, "sobolev_a", 1.0)?;
    let data_bound_l = resolve_optional(args.data_bound_l, &file, "data_bound_l")?;

    let params = mms::scaled_problem(ra, scale).map_err(core)?;
    let mesh = Mesh::structured(n).map_err(core)?;
    let (state, report) =
        newton_solve(CoupledState::zeros(n), &params, &mesh, &newton).map_err(core)?;

    ensure_out_dir(&out_dir)?;
    write_artifacts(&out_dir, &state, &params, &mesh, &report, format, sobolev_a, data_bound_l)?;

    say!(
        "solve: n={n} ra={ra} scale={scale} converged={} iterations={}",
        report.converged, report.iterations
    );
    say!(
        "wrote psi.{ext}, theta.{ext}, newton.log, diagnostics.txt in {}",
        out_dir.display(),
        ext = format.extension()
    );
    if !report.converged {
        return Err(CliError::divergence(divergence_message(&report, "solve")));
    }
    Ok(())
}

/// Field pair, Newton log, and diagnostics report for one solved state.
#[allow(clippy::too_many_arguments)]
fn write_artifacts(
    out_dir: &Path,
    state: &CoupledState,
    params: &ProblemParams,
    mesh: &Mesh,
    report: &NewtonReport,
    format: OutputFormat,
    sobolev_a: f64,
    data_bound_l: Option<f64>,
) -> Result<(), CliError> {
    let ext = format.extension();
    write_field(&out_dir.join(format!("psi.{ext}")), &state.psi, mesh, "psi", format)
        .map_err(core)?;
    write_field(
        &out_dir.join(format!("theta.{ext}")),
        &state.theta,
        mesh,
        "theta",
        format,
    )
    .map_err(core)?;
    write_text(&out_dir.join("newton.log"), &newton_log(report)).map_err(core)?;
    let diag = well_posedness_diagnostics(params, state, mesh, sobolev_a, data_bound_l).map_err(core)?;
    write_text(&out_dir.join("diagnostics.txt"), &diag.to_text()).map_err(core)?;
    Ok(())
}

pub fn convergence(args: ConvergenceArgs) -> Result<(), CliError> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let Resolved { newton, out_dir } = args.common.resolve(&file)?;
    let levels_raw = resolve_string(&args.levels, &file, "levels", "8,16,32,64");
    let levels: Vec<usize> = parse_list(&levels_raw, "levels")?;
    let ra = resolve_value(args.ra, &file, "ra", 10.0)?;

    ensure_out_dir(&out_dir)?;
    let csv_path = out_dir.join("rates.csv");
    match convergence_study(&levels, ra, &newton) {
        Ok(table) => {
            write_text(&csv_path, &table.to_csv()).map_err(core)?;
            say_raw!("{}", table.to_text());
            say!("wrote {}", csv_path.display());
            Ok(())
        }
        Err(Error::StudyAborted {
            level,
            reason,
            partial,
        }) => {
            // keep whatever levels completed so the failure is inspectable
            write_text(&csv_path, &partial.to_csv()).map_err(core)?;
            say_raw!("{}", partial.to_text());
            say!("wrote partial {}", csv_path.display());
            Err(CliError::divergence(format!(
                "convergence study aborted at level n={level}: {reason}"
            )))
        }
        Err(e) => Err(core(e)),
    }
}

/// `12.5` → `12p5`, so Rayleigh numbers embed into file names.
fn ra_tag(ra: f64) -> String {
    format!("{ra}").replace('.', "p").replace('-', "m")
}

pub fn sweep_ra(args: SweepRaArgs) -> Result<(), CliError> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let Resolved { newton, out_dir } = args.common.resolve(&file)?;
    let n = validate_n(resolve_value(args.n, &file, "n", 32)?)?;
    let ra_raw = resolve_string(&args.ra, &file, "ra", "0,10,50,100");
    let ras: Vec<f64> = parse_list(&ra_raw, "ra")?;
    if ras.is_empty() {
        return Err(CliError::config("ra list must be non-empty".to_string()));
    }
    let scale = resolve_value(args.scale, &file, "scale", 1.0)?;
    let format = resolve_format(&args.format, &file)?;

    let mesh = Mesh::structured(n).map_err(core)?;
    ensure_out_dir(&out_dir)?;

    // Warm start: each Rayleigh number is seeded with the last converged
    // solution, which keeps Newton in its contraction region as Ra grows.
    let mut seed = CoupledState::zeros(n);
    let mut failures: Vec<String> = Vec::new();
    let ext = format.extension();
    for &ra in &ras {
        let tag = ra_tag(ra);
        let params = mms::scaled_problem(ra, scale).map_err(core)?;
        match newton_solve(seed.clone(), &params, &mesh, &newton) {
            Ok((state, report)) if report.converged => {
                write_field(
                    &out_dir.join(format!("psi_ra{tag}.{ext}")),
                    &state.psi,
                    &mesh,
                    "psi",
                    format,
                )
                .map_err(core)?;
                write_field(
                    &out_dir.join(format!("theta_ra{tag}.{ext}")),
                    &state.theta,
                    &mesh,
                    "theta",
                    format,
                )
                .map_err(core)?;
                write_text(&out_dir.join(format!("newton_ra{tag}.log")), &newton_log(&report))
                    .map_err(core)?;
                say!(
                    "sweep-ra: ra={ra} converged=true iterations={} wrote psi_ra{tag}.{ext}, theta_ra{tag}.{ext}",
                    report.iterations
                );
                seed = state;
            }
            Ok((_, report)) => {
                let msg = divergence_message(&report, &format!("ra={ra}"));
                say!("sweep-ra: ra={ra} converged=false iterations={}", report.iterations);
                write_text(&out_dir.join(format!("newton_ra{tag}.log")), &newton_log(&report))
                    .map_err(core)?;
                failures.push(msg);
                // keep the previous converged seed
            }
            Err(Error::SingularTangent { iteration, .. }) => {
                let msg = format!("ra={ra}: singular tangent at iteration {iteration}");
                say!("sweep-ra: ra={ra} converged=false ({msg})");
                failures.push(msg);
            }
            Err(e) => return Err(core(e)),
        }
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::divergence(format!(
            "sweep completed; {} of {} Rayleigh numbers diverged: {}",
            failures.len(),
            ras.len(),
            failures.join("; ")
        )))
    }
}

pub fn diagnostics(args: DiagnosticsArgs) -> Result<(), CliError> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let Resolved { newton, out_dir } = args.common.resolve(&file)?;
    let n = validate_n(resolve_value(args.n, &file, "n", 32)?)?;
    let ra = resolve_value(args.ra, &file, "ra", 1.0)?;
    let scale = resolve_value(args.scale, &file, "scale", 1.0)?;
    let sobolev_a = resolve_value(args.sobolev_a, &file, "sobolev_a", 1.0)?;
    let data_bound_l = resolve_optional(args.data_bound_l, &file, "data_bound_l")?;
    let scales_raw = match &args.stability_scales {
        Some(s) => Some(s.clone()),
        None => file_stability_scales(&file),
    };

    let params = mms::scaled_problem(ra, scale).map_err(core)?;
    let mesh = Mesh::structured(n).map_err(core)?;
    let (state, report) =
        newton_solve(CoupledState::zeros(n), &params, &mesh, &newton).map_err(core)?;
    if !report.converged {
        return Err(CliError::divergence(divergence_message(&report, "diagnostics")));
    }

    let diag =
        well_posedness_diagnostics(&params, &state, &mesh, sobolev_a, data_bound_l).map_err(core)?;
    ensure_out_dir(&out_dir)?;
    write_text(&out_dir.join("diagnostics.txt"), &diag.to_text()).map_err(core)?;
    say_raw!("{}", diag.to_text());
    say!("wrote {}", out_dir.join("diagnostics.txt").display());

    if let Some(raw) = scales_raw {
        let scales: Vec<f64> = parse_list(&raw, "stability scales")?;
        let sweep = stability_sweep(&scales, ra, n, &newton).map_err(core)?;
        let path = out_dir.join("stability.csv");
        write_text(&path, &sweep.to_csv()).map_err(core)?;
        for p in &sweep.points {
            say!(
                "stability: scale={} converged={} grad_psi={:e} grad_theta={:e}",
                p.scale, p.converged, p.grad_psi, p.grad_theta
            );
        }
        say!("wrote {}", path.display());
    }
    Ok(())
}

fn file_stability_scales(file: &ConfigFile) -> Option<String> {
    // stability_scales in the config file enables the sweep just like the flag
    crate::config::config_string(file, "stability_scales")
}
