//! Experiment drivers: error norms against manufactured solutions,
//! convergence studies over the disk mesh family, viscosity sweeps, and the
//! CSV/markdown reports shared with the command line front end.

mod problems;

pub use problems::{Problem, ProblemKind};

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix2, Vector2};

use crate::assembly::{divergence_l2, solve_stokes, Scheme, StokesSolution};
use crate::error::{Error, Result};
use crate::geometry::{generate_disk_mesh, geometry_of, Mesh};
use crate::operators::interpolate_y;
use crate::refelem::triangle_rule;
use crate::spaces::{build_spaces, eval_local, LocalEval, Spaces};

/// One row of an experiment table. `dofs` counts velocity plus pressure
/// unknowns before boundary elimination; rates are pairwise between
/// consecutive mesh sizes and stay empty where that makes no sense (first
/// row, fixed-mesh sweeps, errors at rounding level).
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub scheme: Scheme,
    pub problem: &'static str,
    pub nu: f64,
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub err_u_l2: f64,
    pub err_u_h1: f64,
    pub err_p_l2: f64,
    pub div_l2: f64,
    pub rate_u_l2: Option<f64>,
    pub rate_u_h1: Option<f64>,
    pub rate_p_l2: Option<f64>,
}

/// L2 and broken H1 errors of a solution against the exact fields.
///
/// The exact pressure is recentered against the discrete gauge before
/// comparison: the constant c with L·(samples − c·1) = 0 is subtracted,
/// where the samples collect the exact pressure at the composition nodes.
/// Constants are unobservable in the velocity equation, so this is the only
/// gauge under which the comparison is meaningful.
pub fn error_norms(
    mesh: &Mesh,
    spaces: &Spaces,
    sol: &StokesSolution,
    prob: &Problem,
    scheme: Scheme,
    n: usize,
) -> Result<ErrorReport> {
    if sol.velocity.len() != spaces.vh.dim || sol.pressure.len() != spaces.qh.dim {
        return Err(Error::InvalidMesh(
            "solution size does not match the mesh it is measured on".into(),
        ));
    }
    let rule = triangle_rule(10)?;
    let l = spaces
        .qh
        .constraint
        .as_ref()
        .expect("pressure space carries the gauge vector");
    let mut weighted = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for i in 0..3 {
            weighted += l[3 * t + i] * prob.exact_pressure(mesh.vertices[tri[i]]);
        }
    }
    let center = weighted / l.iter().sum::<f64>();

    let mut u_l2 = 0.0;
    let mut u_h1 = 0.0;
    let mut p_l2 = 0.0;
    for t in 0..mesh.num_triangles() {
        let geom = geometry_of(mesh, t);
        let vloc = spaces.vh.gather(t, &sol.velocity);
        let ploc = spaces.qh.gather(t, &sol.pressure);
        let LocalEval::Vector {
            values, gradients, ..
        } = eval_local(&spaces.vh, &geom, &rule.points)?
        else {
            unreachable!()
        };
        let LocalEval::Scalar { values: pvals, .. } = eval_local(&spaces.qh, &geom, &rule.points)?
        else {
            unreachable!()
        };
        for (q, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let wq = w * geom.piola_at(p)?.det;
            let x = geom.map(p);
            let mut uh = Vector2::zeros();
            let mut guh = Matrix2::zeros();
            for (k, &c) in vloc.iter().enumerate() {
                uh += c * values[q][k];
                guh += c * gradients[q][k];
            }
            let ph: f64 = ploc.iter().zip(&pvals[q]).map(|(c, v)| c * v).sum();
            let du = uh - prob.exact_velocity(x);
            let dg = guh - prob.exact_velocity_gradient(x);
            let dp = ph - (prob.exact_pressure(x) - center);
            u_l2 += wq * du.norm_squared();
            u_h1 += wq * dg.norm_squared();
            p_l2 += wq * dp * dp;
        }
    }
    Ok(ErrorReport {
        scheme,
        problem: prob.name(),
        nu: prob.nu,
        n,
        h: mesh.h_max(),
        dofs: spaces.vh.dim + spaces.qh.dim,
        err_u_l2: u_l2.sqrt(),
        err_u_h1: u_h1.sqrt(),
        err_p_l2: p_l2.sqrt(),
        div_l2: divergence_l2(mesh, spaces, &sol.velocity)?,
        rate_u_l2: None,
        rate_u_h1: None,
        rate_p_l2: None,
    })
}

/// Interpolate the body force and solve one problem on a given mesh.
pub fn solve_on_mesh(
    mesh: &Mesh,
    spaces: &Spaces,
    prob: &Problem,
    scheme: Scheme,
    quad_a_degree: usize,
) -> Result<StokesSolution> {
    let y = interpolate_y(mesh, spaces, |x| prob.forcing(x))?;
    solve_stokes(mesh, spaces, prob.nu, &y, scheme, quad_a_degree)
}

/// A solved disk-mesh case together with its measured errors.
pub struct SolvedCase {
    pub solution: StokesSolution,
    pub report: ErrorReport,
}

/// Generate the disk mesh for `n`, solve, and measure.
pub fn run_case(
    n: usize,
    prob: &Problem,
    scheme: Scheme,
    quad_a_degree: usize,
) -> Result<SolvedCase> {
    let inner = || -> Result<SolvedCase> {
        let mesh = generate_disk_mesh(n)?;
        let spaces = build_spaces(&mesh);
        let solution = solve_on_mesh(&mesh, &spaces, prob, scheme, quad_a_degree)?;
        let report = error_norms(&mesh, &spaces, &solution, prob, scheme, n)?;
        Ok(SolvedCase { solution, report })
    };
    inner().map_err(|e| match e {
        Error::SingularSystem(m) => Error::SingularSystem(format!("n={n}: {m}")),
        Error::InvalidMesh(m) => Error::InvalidMesh(format!("n={n}: {m}")),
        other => other,
    })
}

/// Errors at rounding level make log ratios meaningless.
const RATE_FLOOR: f64 = 1e-13;

fn rate(prev: f64, cur: f64, scale: f64) -> Option<f64> {
    if prev > RATE_FLOOR && cur > RATE_FLOOR {
        Some((prev / cur).ln() / scale)
    } else {
        None
    }
}

fn attach_rates(reports: &mut [ErrorReport]) {
    for i in 1..reports.len() {
        let scale = (reports[i].n as f64 / reports[i - 1].n as f64).ln();
        reports[i].rate_u_l2 = rate(reports[i - 1].err_u_l2, reports[i].err_u_l2, scale);
        reports[i].rate_u_h1 = rate(reports[i - 1].err_u_h1, reports[i].err_u_h1, scale);
        reports[i].rate_p_l2 = rate(reports[i - 1].err_p_l2, reports[i].err_p_l2, scale);
    }
}

/// One solve per mesh size, with pairwise rates between consecutive sizes.
pub fn convergence_study(
    ns: &[usize],
    kind: ProblemKind,
    scheme: Scheme,
    nu: f64,
    paper_psi: bool,
    quad_a_degree: usize,
) -> Result<Vec<ErrorReport>> {
    if ns.is_empty() {
        return Err(Error::InvalidMesh(
            "convergence study needs at least one mesh size".into(),
        ));
    }
    if ns[0] < 2 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidMesh(
            "mesh sizes must be ascending and at least 2".into(),
        ));
    }
    let prob = Problem::new(kind, nu, paper_psi);
    let mut reports = Vec::with_capacity(ns.len());
    for &n in ns {
        reports.push(run_case(n, &prob, scheme, quad_a_degree)?.report);
    }
    attach_rates(&mut reports);
    Ok(reports)
}

/// Fixed mesh, both schemes, one row per viscosity. Rates stay empty; there
/// is no refinement to measure them against.
pub fn nu_sweep(
    n: usize,
    nus: &[f64],
    kind: ProblemKind,
    paper_psi: bool,
    quad_a_degree: usize,
) -> Result<Vec<ErrorReport>> {
    if nus.is_empty() {
        return Err(Error::InvalidMesh("sweep needs at least one viscosity".into()));
    }
    if let Some(&bad) = nus.iter().find(|&&nu| !(nu > 0.0 && nu.is_finite())) {
        return Err(Error::InvalidMesh(format!("viscosity must be positive, got {bad}")));
    }
    let mesh = generate_disk_mesh(n)?;
    let spaces = build_spaces(&mesh);
    let mut reports = Vec::with_capacity(2 * nus.len());
    for scheme in [Scheme::Standard, Scheme::Modified] {
        for &nu in nus {
            let prob = Problem::new(kind, nu, paper_psi);
            let solution = solve_on_mesh(&mesh, &spaces, &prob, scheme, quad_a_degree)?;
            reports.push(error_norms(&mesh, &spaces, &solution, &prob, scheme, n)?);
        }
    }
    Ok(reports)
}

/// Measure of the discrete domain: the squared L2 norm of the constant 1
/// under the same rule the error norms use.
pub fn domain_area(mesh: &Mesh) -> Result<f64> {
    let rule = triangle_rule(10)?;
    let mut area = 0.0;
    for t in 0..mesh.num_triangles() {
        let geom = geometry_of(mesh, t);
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            area += w * geom.piola_at(p)?.det;
        }
    }
    Ok(area)
}

pub const CSV_HEADER: &str =
    "scheme,problem,nu,n,h,dofs,err_u_l2,rate_u_l2,err_u_h1,rate_u_h1,err_p_l2,rate_p_l2,div_l2";

fn fmt_rate(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.3}")).unwrap_or_default()
}

pub fn render_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::with_capacity(128 * (reports.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in reports {
        writeln!(
            out,
            "{},{},{:e},{},{:.6e},{},{:.6e},{},{:.6e},{},{:.6e},{},{:.6e}",
            r.scheme.label(),
            r.problem,
            r.nu,
            r.n,
            r.h,
            r.dofs,
            r.err_u_l2,
            fmt_rate(r.rate_u_l2),
            r.err_u_h1,
            fmt_rate(r.rate_u_h1),
            r.err_p_l2,
            fmt_rate(r.rate_p_l2),
            r.div_l2,
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Markdown table with padded columns; empty rates print as ---.
pub fn render_markdown(reports: &[ErrorReport]) -> String {
    const HEADERS: [&str; 13] = [
        "scheme", "problem", "nu", "n", "h", "dofs", "err_u_l2", "rate", "err_u_h1", "rate",
        "err_p_l2", "rate", "div_l2",
    ];
    let rows: Vec<[String; 13]> = reports
        .iter()
        .map(|r| {
            let rate_cell = |v: Option<f64>| match v {
                Some(v) => format!("{v:.3}"),
                None => "---".to_owned(),
            };
            [
                r.scheme.label().to_owned(),
                r.problem.to_owned(),
                format!("{:e}", r.nu),
                r.n.to_string(),
                format!("{:.6e}", r.h),
                r.dofs.to_string(),
                format!("{:.6e}", r.err_u_l2),
                rate_cell(r.rate_u_l2),
                format!("{:.6e}", r.err_u_h1),
                rate_cell(r.rate_u_h1),
                format!("{:.6e}", r.err_p_l2),
                rate_cell(r.rate_p_l2),
                format!("{:.6e}", r.div_l2),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = HEADERS.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let emit = |out: &mut String, cells: &[String]| {
        out.push('|');
        for (cell, w) in cells.iter().zip(&widths) {
            write!(out, " {cell:>w$} |", w = w).expect("writing to a String cannot fail");
        }
        out.push('\n');
    };
    emit(
        &mut out,
        &HEADERS.map(str::to_owned),
    );
    out.push('|');
    for w in &widths {
        write!(out, "{}|", "-".repeat(w + 2)).expect("writing to a String cannot fail");
    }
    out.push('\n');
    for row in &rows {
        emit(&mut out, row);
    }
    out
}

pub fn write_csv(reports: &[ErrorReport], path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(reports))?;
    Ok(())
}

pub fn write_markdown(reports: &[ErrorReport], path: &Path) -> Result<()> {
    std::fs::write(path, render_markdown(reports))?;
    Ok(())
}
