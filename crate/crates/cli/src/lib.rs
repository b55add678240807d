//! Command-line driver: convergence tables, single solves with VTK slices,
//! complex diagnostics and mesh summaries.

pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use hodge4d::dof::{assemble_d0, assemble_d1, build_dofmap, harmonic_diagnostics};
use hodge4d::io::{self, SliceSpec};
use hodge4d::scenarios::{self, Solution};
use hodge4d::{BcSpec, Error, Form1Value, Mesh4};

pub use config::{ConfigError, RunConfig, Scenario, SolverKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hodge4d",
    version,
    about = "Space-time Hodge-Laplace solver on 4D cubical meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Config file of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra config entries, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// aha, krylov or mixed.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Example 1 on a sequence of uniform meshes, written as CSV.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Divisions per axis of each level, e.g. 4,6,8.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One solve, with optional VTK slices and a key=value report.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        divisions: Option<String>,
        #[arg(long)]
        extents: Option<String>,
        /// Slice such as z=0.5,t=0; repeatable.
        #[arg(long)]
        slice: Vec<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Reports max |D1 D0| and the harmonic dimension on stderr.
    CheckComplex {
        #[arg(long, default_value = "2,2,2,2")]
        divisions: String,
    },
    /// Reports entity and DOF counts on stderr.
    MeshInfo {
        #[arg(long, default_value = "4,4,4,4")]
        divisions: String,
        #[arg(long)]
        extents: Option<String>,
        #[arg(long)]
        time_periodic: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
    NotConverged(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::TooLarge { .. } => Failure::Config(e.to_string()),
            Error::Diverged { .. } => Failure::NotConverged(e.to_string()),
            Error::Io(_) => Failure::Io(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn build_config(common: &Common, extra: &[(&str, Option<String>)]) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = &common.solver {
        cfg.set("solver.kind", s)?;
    }
    if let Some(s) = &common.scenario {
        cfg.set("scenario", s)?;
    }
    for (k, v) in extra {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn mesh_from(divisions: &str, extents: Option<&str>, periodic: bool) -> Result<Mesh4, Failure> {
    let mut cfg = RunConfig::default();
    cfg.set("mesh.divisions", divisions)?;
    if let Some(e) = extents {
        cfg.set("mesh.extents", e)?;
    }
    cfg.time_periodic = periodic;
    cfg.validate()?;
    Ok(Mesh4::new(cfg.divisions, cfg.extents, periodic)?)
}

fn convergence(common: &Common, levels: Option<String>, out: Option<PathBuf>) -> Outcome {
    let mut cfg = build_config(common, &[("convergence.levels", levels)])?;
    if let Some(o) = out {
        cfg.csv = o;
    }
    if cfg.scenario != Scenario::Example1 {
        return Err(Failure::Config(
            "convergence runs support scenario example1 only".into(),
        ));
    }
    let records = scenarios::convergence_study(&cfg.levels, cfg.solver_choice())?;
    for r in &records {
        eprintln!(
            "N={} h={} E={:.6e} rate={}",
            r.n,
            r.h,
            r.e,
            r.rate.map(|v| format!("{v:.4}")).unwrap_or_default()
        );
    }
    let path = io::output_path(&cfg.csv);
    io::write_csv(&records, &path)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn slice_file_name(scenario: Scenario, s: &SliceSpec) -> String {
    format!(
        "{}_{}{}_t{}.vtk",
        scenario.name(),
        ["t", "x", "y", "z"][s.axis],
        s.coordinate,
        s.time
    )
}

fn solve(
    common: &Common,
    divisions: Option<String>,
    extents: Option<String>,
    slices: &[String],
    out_dir: Option<PathBuf>,
) -> Outcome {
    let mut cfg = build_config(
        common,
        &[("mesh.divisions", divisions), ("mesh.extents", extents)],
    )?;
    for s in slices {
        cfg.set("slice", s)?;
    }
    if let Some(d) = out_dir {
        cfg.output_dir = d;
    }
    let mesh = Mesh4::new(cfg.divisions, cfg.extents, cfg.time_periodic)?;
    for s in &cfg.slices {
        s.locate(&mesh)?;
    }
    let choice = cfg.solver_choice();
    let mut report = vec![
        ("scenario".to_string(), cfg.scenario.name().to_string()),
        ("solver".to_string(), choice.name().to_string()),
        (
            "divisions".to_string(),
            cfg.divisions.map(|d| d.to_string()).join(","),
        ),
    ];

    let solution: Solution = match cfg.scenario {
        Scenario::Example1 => {
            let bc = BcSpec::homogeneous();
            let d0 = build_dofmap(&mesh, 0, &bc)?;
            let d1 = build_dofmap(&mesh, 1, &bc)?;
            let sol = scenarios::solve_problem(
                &mesh,
                &d0,
                &d1,
                &scenarios::example1_load_source,
                cfg.load_quadrature,
                choice,
            )?;
            let e = scenarios::error_norm(
                &mesh,
                sol.u.values(),
                &scenarios::example1_exact,
                cfg.error_quadrature,
            )?;
            report.push(("error_l2".into(), e.to_string()));
            sol
        }
        Scenario::Example2 => {
            let setup = scenarios::example2_setup(&cfg.example2, &mesh)?;
            let d0 = build_dofmap(&mesh, 0, &setup.bc0)?;
            let d1 = build_dofmap(&mesh, 1, &setup.bc1)?;
            let sol = scenarios::solve_problem(
                &mesh,
                &d0,
                &d1,
                &setup.source,
                cfg.load_quadrature,
                choice,
            )?;
            let rep = scenarios::example2_report(&mesh, &cfg.example2, &setup, sol.u.values())?;
            let ok = rep.phi_extremum_on_electrode.iter().all(|&b| b);
            report.push(("phi_extremum_on_electrode".into(), ok.to_string()));
            report.push((
                "coil_concentration".into(),
                rep.coil_concentration.to_string(),
            ));
            sol
        }
        Scenario::Custom => {
            let bc = BcSpec::homogeneous();
            let d0 = build_dofmap(&mesh, 0, &bc)?;
            let d1 = build_dofmap(&mesh, 1, &bc)?;
            let c = cfg.custom_source;
            let source = move |_: [f64; 4]| -> Form1Value { c };
            scenarios::solve_problem(&mesh, &d0, &d1, &source, cfg.load_quadrature, choice)?
        }
    };
    let r = &solution.result;
    report.push(("iterations".into(), r.iterations.to_string()));
    report.push(("converged".into(), r.converged.to_string()));
    report.push(("primal_residual".into(), r.primal_residual().to_string()));
    report.push((
        "constraint_residual".into(),
        r.constraint_residual().to_string(),
    ));

    let dir = cfg.output_dir();
    for s in &cfg.slices {
        let path = dir.join(slice_file_name(cfg.scenario, s));
        io::write_vtk_slice(&mesh, solution.u.values(), s, &path)?;
        eprintln!("wrote {}", path.display());
    }
    let report_path = dir.join(format!("{}_report.txt", cfg.scenario.name()));
    io::write_report(&report, &report_path)?;
    eprintln!("wrote {}", report_path.display());
    eprintln!(
        "{} iterations, primal {:.3e}, constraint {:.3e}",
        r.iterations,
        r.primal_residual(),
        r.constraint_residual()
    );
    if !r.converged {
        return Err(Failure::NotConverged(format!(
            "solver stopped after {} iterations",
            r.iterations
        )));
    }
    Ok(())
}

fn check_complex(divisions: &str) -> Outcome {
    let mesh = mesh_from(divisions, None, false)?;
    let bc = BcSpec::homogeneous();
    let d0 = build_dofmap(&mesh, 0, &bc)?;
    let d1 = build_dofmap(&mesh, 1, &bc)?;
    let d2 = build_dofmap(&mesh, 2, &bc)?;
    let prod = assemble_d1(&mesh, &d1, &d2)?.matmul(&assemble_d0(&mesh, &d0, &d1)?)?;
    eprintln!("D1*D0 max |entry| = {:.1e}", prod.max_abs());
    let h = harmonic_diagnostics(&mesh, &d0, &d1)?;
    eprintln!("dim H_h^1 = {}", h.harmonic_dim);
    eprintln!("min singular value = {:e}", h.min_singular_value);
    Ok(())
}

fn mesh_info(divisions: &str, extents: Option<&str>, periodic: bool) -> Outcome {
    let mesh = mesh_from(divisions, extents, periodic)?;
    let bc = BcSpec::homogeneous();
    let d0 = build_dofmap(&mesh, 0, &bc)?;
    let d1 = build_dofmap(&mesh, 1, &bc)?;
    eprintln!("divisions = {:?}", mesh.divisions());
    eprintln!("h = {}", mesh.h());
    eprintln!("nodes = {}", mesh.num_nodes());
    eprintln!("edges = {}", mesh.num_edges());
    eprintln!("faces = {}", mesh.num_faces());
    eprintln!("cells = {}", mesh.num_cells());
    eprintln!("free 0-form dofs = {}", d0.n_free());
    eprintln!("free 1-form dofs = {}", d1.n_free());
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Convergence {
            common,
            levels,
            out,
        } => convergence(&common, levels, out),
        Command::Solve {
            common,
            divisions,
            extents,
            slice,
            out_dir,
        } => solve(&common, divisions, extents, &slice, out_dir),
        Command::CheckComplex { divisions } => check_complex(&divisions),
        Command::MeshInfo {
            divisions,
            extents,
            time_periodic,
        } => mesh_info(&divisions, extents.as_deref(), time_periodic),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            EXIT_IO
        }
        Err(Failure::NotConverged(m)) => {
            eprintln!("error: {m}");
            EXIT_NOT_CONVERGED
        }
    }
}
