//! Command line front end: mesh generation, single solves, convergence
//! studies and viscosity sweeps over the disk benchmark problems.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use curved_stokes::assembly::Scheme;
use curved_stokes::geometry::io::{load_mesh, save_mesh};
use curved_stokes::geometry::generate_disk_mesh;
use curved_stokes::harness::{
    convergence_study, error_norms, nu_sweep, render_markdown, solve_on_mesh, write_csv,
    write_markdown, ErrorReport, Problem, ProblemKind,
};
use curved_stokes::spaces::{build_spaces, Spaces};
use curved_stokes::{Error, Result};

#[derive(Parser)]
#[command(
    name = "curved-stokes",
    version,
    about = "Stokes solver on the unit disk: curved nonconforming quadratic elements \
             with an optional divergence-preserving velocity reconstruction"
)]
struct Cli {
    /// Quadrature degree for the viscous form.
    #[arg(long, global = true, default_value_t = 10)]
    quad_a_degree: usize,

    /// Use the square-domain streamfunction verbatim for the flow problem.
    /// Its velocity does not vanish on the circle, so such runs are
    /// qualitative only.
    #[arg(long, global = true)]
    paper_psi: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a disk mesh and write it to a file.
    Mesh {
        /// Number of concentric rings.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one problem and optionally export the solution as JSON.
    Solve {
        /// Load the mesh from a file instead of generating it.
        #[arg(long, conflicts_with = "n")]
        mesh: Option<PathBuf>,
        /// Generate the disk mesh with this many rings.
        #[arg(long, required_unless_present = "mesh")]
        n: Option<usize>,
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        /// Write dims, coefficient arrays, residual and timings as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve over a list of mesh sizes and report errors and rates.
    Convergence {
        /// Comma-separated ring counts, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long, value_enum, default_value_t = SchemeChoice::Both)]
        scheme: SchemeChoice,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
    /// Sweep the viscosity on a fixed mesh, both schemes.
    SweepNu {
        /// Ring count of the fixed mesh.
        #[arg(long)]
        n: usize,
        /// Comma-separated viscosities.
        #[arg(long, value_delimiter = ',', required = true)]
        nus: Vec<f64>,
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProblemArg {
    Noflow,
    Flow,
}

impl From<ProblemArg> for ProblemKind {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Noflow => ProblemKind::NoFlow,
            ProblemArg::Flow => ProblemKind::Flow,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Standard,
    Modified,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Standard => Scheme::Standard,
            SchemeArg::Modified => Scheme::Modified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeChoice {
    Standard,
    Modified,
    Both,
}

impl SchemeChoice {
    fn schemes(self) -> &'static [Scheme] {
        match self {
            SchemeChoice::Standard => &[Scheme::Standard],
            SchemeChoice::Modified => &[Scheme::Modified],
            SchemeChoice::Both => &[Scheme::Standard, Scheme::Modified],
        }
    }
}

#[derive(serde::Serialize)]
struct DimExport {
    wh: usize,
    phih: usize,
    vh: usize,
    qh: usize,
}

#[derive(serde::Serialize)]
struct SolutionExport<'a> {
    problem: &'a str,
    scheme: &'a str,
    nu: f64,
    dims: DimExport,
    velocity: &'a [f64],
    pressure: &'a [f64],
    multiplier: f64,
    residual: f64,
    assemble_seconds: f64,
    solve_seconds: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::SingularSystem(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh { n, out } => {
            let mesh = generate_disk_mesh(n)?;
            save_mesh(&mesh, &out)?;
            println!(
                "wrote {} ({} vertices, {} triangles, {} curved edges)",
                out.display(),
                mesh.num_vertices(),
                mesh.num_triangles(),
                mesh.curved_midpoints.iter().flatten().count(),
            );
            Ok(())
        }
        Command::Solve {
            mesh,
            n,
            problem,
            scheme,
            nu,
            out,
        } => {
            let (mesh, label) = match (mesh, n) {
                (Some(path), _) => (load_mesh(&path)?, 0),
                (None, Some(n)) => (generate_disk_mesh(n)?, n),
                (None, None) => unreachable!("clap enforces one source"),
            };
            let spaces = build_spaces(&mesh);
            let prob = Problem::new(problem.into(), nu, cli.paper_psi);
            let scheme: Scheme = scheme.into();
            let sol = solve_on_mesh(&mesh, &spaces, &prob, scheme, cli.quad_a_degree)?;
            let report = error_norms(&mesh, &spaces, &sol, &prob, scheme, label)?;
            print_solve_summary(&spaces, &sol, &report);
            if let Some(path) = out {
                let export = SolutionExport {
                    problem: prob.name(),
                    scheme: scheme.label(),
                    nu,
                    dims: DimExport {
                        wh: spaces.wh.dim,
                        phih: spaces.phih.dim,
                        vh: spaces.vh.dim,
                        qh: spaces.qh.dim,
                    },
                    velocity: &sol.velocity,
                    pressure: &sol.pressure,
                    multiplier: sol.multiplier,
                    residual: sol.residual,
                    assemble_seconds: sol.assemble_seconds,
                    solve_seconds: sol.solve_seconds,
                };
                let json = serde_json::to_string_pretty(&export)
                    .expect("plain numeric data serializes");
                std::fs::write(&path, json)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Convergence {
            ns,
            problem,
            scheme,
            nu,
            csv,
            markdown,
        } => {
            let mut reports: Vec<ErrorReport> = Vec::new();
            for &s in scheme.schemes() {
                reports.extend(convergence_study(
                    &ns,
                    problem.into(),
                    s,
                    nu,
                    cli.paper_psi,
                    cli.quad_a_degree,
                )?);
            }
            finish_table(&reports, &csv, markdown.as_deref())
        }
        Command::SweepNu {
            n,
            nus,
            problem,
            csv,
        } => {
            let reports = nu_sweep(n, &nus, problem.into(), cli.paper_psi, cli.quad_a_degree)?;
            finish_table(&reports, &csv, None)
        }
    }
}

fn print_solve_summary(spaces: &Spaces, sol: &curved_stokes::assembly::StokesSolution, report: &ErrorReport) {
    println!(
        "solved {} / {} (nu = {:e}): {} velocity + {} pressure dofs",
        report.problem,
        report.scheme.label(),
        report.nu,
        spaces.vh.dim,
        spaces.qh.dim,
    );
    println!(
        "  residual {:.3e}, multiplier {:.3e}, assemble {:.2}s, solve {:.2}s",
        sol.residual, sol.multiplier, sol.assemble_seconds, sol.solve_seconds,
    );
    println!(
        "  err_u_l2 {:.6e}  err_u_h1 {:.6e}  err_p_l2 {:.6e}  div_l2 {:.6e}",
        report.err_u_l2, report.err_u_h1, report.err_p_l2, report.div_l2,
    );
}

fn finish_table(reports: &[ErrorReport], csv: &PathBuf, markdown: Option<&std::path::Path>) -> Result<()> {
    write_csv(reports, csv)?;
    print!("{}", render_markdown(reports));
    println!("wrote {}", csv.display());
    if let Some(path) = markdown {
        write_markdown(reports, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
