use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ocp_afem::afem::{afem_loop_with, fit_rate, AfemConfig, RefinementMode};
use ocp_afem::bench::{
    self, default_alpha, example_disk, example_lshape, example_square, write_records_csv,
    write_solution_text, write_vtk,
};
use ocp_afem::mesh::{build_initial_mesh, DomainKind, DomainSpec};
use ocp_afem::solver::SsnOptions;

#[derive(Parser)]
#[command(
    name = "ocp-afem",
    version,
    about = "Adaptive finite elements for sparse elliptic optimal control with Dirac controls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark and write per-iteration records to CSV.
    Run(RunArgs),
    /// Write an example's initial mesh (optionally refined) as plain text.
    Mesh(MeshArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleArg {
    Disk,
    Square,
    Lshape,
}

impl ExampleArg {
    fn kind(self) -> DomainKind {
        match self {
            ExampleArg::Disk => DomainKind::Disk,
            ExampleArg::Square => DomainKind::Square,
            ExampleArg::Lshape => DomainKind::LShape,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RefinementArg {
    Adaptive,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum SnapArg {
    On,
    Off,
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark domain.
    #[arg(long, value_enum)]
    example: ExampleArg,
    /// Sparsity parameter; defaults to the example's canonical value.
    #[arg(long)]
    alpha: Option<f64>,
    /// Marking fraction of the maximum strategy.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = RefinementArg::Adaptive)]
    refinement: RefinementArg,
    #[arg(long = "max-iter", default_value_t = 40)]
    max_iter: usize,
    #[arg(long = "max-ndof", default_value_t = 100_000)]
    max_ndof: usize,
    /// Quadrature degree for loads, errors and estimator terms.
    #[arg(long = "quad-degree", default_value_t = 19)]
    quad_degree: usize,
    /// Snap new disk boundary vertices to the unit circle.
    #[arg(long = "snap-boundary", value_enum, default_value_t = SnapArg::On)]
    snap_boundary: SnapArg,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write mesh_<i>.vtk per iteration.
    #[arg(long)]
    vtk: bool,
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, value_enum)]
    example: ExampleArg,
    /// Number of uniform refinements to apply first.
    #[arg(long, default_value_t = 0)]
    refinements: usize,
    #[arg(long = "snap-boundary", value_enum, default_value_t = SnapArg::On)]
    snap_boundary: SnapArg,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Mesh(args) => dump_mesh(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(args: RunArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    if let Some(alpha) = args.alpha {
        if !(alpha > 0.0) || !alpha.is_finite() {
            eprintln!("error: --alpha must be a positive finite number, got {alpha}");
            return Ok(ExitCode::from(2));
        }
    }
    if !(args.theta > 0.0 && args.theta <= 1.0) {
        eprintln!("error: --theta must lie in (0, 1], got {}", args.theta);
        return Ok(ExitCode::from(2));
    }
    let alpha = args
        .alpha
        .unwrap_or_else(|| default_alpha(args.example.kind()));
    let snap = matches!(args.snap_boundary, SnapArg::On);

    let (mut problem, exact) = match args.example {
        ExampleArg::Disk => {
            let (problem, exact) = example_disk(snap);
            (problem, Some(exact))
        }
        ExampleArg::Square => (example_square(alpha)?, None),
        ExampleArg::Lshape => (example_lshape(), None),
    };
    problem.alpha = alpha;
    problem.quad_degree = args.quad_degree;

    let config = AfemConfig {
        theta: args.theta,
        max_iterations: args.max_iter,
        max_ndof: args.max_ndof,
        mode: match args.refinement {
            RefinementArg::Adaptive => RefinementMode::Adaptive,
            RefinementArg::Uniform => RefinementMode::Uniform,
        },
        ssn: SsnOptions::default(),
        error_degree: args.quad_degree,
    };

    std::fs::create_dir_all(&args.out)?;
    println!("{}", bench::CSV_HEADER);
    let vtk = args.vtk;
    let out_dir = args.out.clone();
    let outcome = afem_loop_with(
        &problem,
        &config,
        exact.as_ref(),
        |mesh, solution, record| {
            println!(
                "{},{},{},{:.4e},{:.4e},{:.4e},{:.4e},{:.4e},{},{},{},{:.2e},{},{:.6}",
                record.iteration,
                record.ndof,
                record.num_triangles,
                record.h_max,
                record.est_state,
                record.est_adjoint,
                record.est_total,
                record.log_factor,
                record
                    .err_state_l2
                    .map(|v| format!("{v:.4e}"))
                    .unwrap_or_default(),
                record
                    .err_adjoint_linf
                    .map(|v| format!("{v:.4e}"))
                    .unwrap_or_default(),
                record
                    .err_combined
                    .map(|v| format!("{v:.4e}"))
                    .unwrap_or_default(),
                record.kkt_residual,
                record.newton_iterations,
                record.control_mass,
            );
            if vtk {
                let path = out_dir.join(format!("mesh_{}.vtk", record.iteration));
                let file = File::create(&path).expect("create vtk file");
                write_vtk(mesh, solution, BufWriter::new(file)).expect("write vtk file");
            }
        },
    );

    let outcome = match outcome {
        Ok(outcome) => outcome,
        Err(ocp_afem::afem::AfemError::Solver {
            iteration,
            source,
            records,
        }) => {
            // keep what was computed before failing
            let csv = File::create(args.out.join("records.csv"))?;
            write_records_csv(&records, BufWriter::new(csv))?;
            return Err(format!("solver failed at iteration {iteration}: {source}").into());
        }
        Err(e) => return Err(e.into()),
    };

    let csv = File::create(args.out.join("records.csv"))?;
    write_records_csv(&outcome.records, BufWriter::new(csv))?;

    let mesh_file = File::create(args.out.join("final_mesh.txt"))?;
    outcome.final_mesh.write_text(BufWriter::new(mesh_file))?;
    let sol_file = File::create(args.out.join("final_solution.txt"))?;
    write_solution_text(
        &outcome.final_mesh,
        &outcome.final_solution,
        BufWriter::new(sol_file),
    )?;

    let window = 10;
    println!("fitted slopes vs Ndof over the last {window} iterations:");
    let fits: [(
        &str,
        Box<dyn Fn(&ocp_afem::afem::ConvergenceRecord) -> Option<f64>>,
    ); 6] = [
        ("est_total", Box::new(|r| Some(r.est_total))),
        ("est_y", Box::new(|r| Some(r.est_state))),
        ("est_p", Box::new(|r| Some(r.est_adjoint))),
        ("err_y_l2", Box::new(|r| r.err_state_l2)),
        ("err_p_linf", Box::new(|r| r.err_adjoint_linf)),
        ("err_combined", Box::new(|r| r.err_combined)),
    ];
    for (name, quantity) in fits {
        match fit_rate(&outcome.records, quantity, window) {
            Ok(slope) => println!("  {name:>13}: {slope:+.3}"),
            Err(_) => println!("  {name:>13}: n/a"),
        }
    }
    println!("outputs written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn dump_mesh(args: MeshArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let spec = match args.example.kind() {
        DomainKind::Disk => DomainSpec::disk(),
        DomainKind::Square => DomainSpec::square(),
        DomainKind::LShape => DomainSpec::lshape(),
    }
    .with_snap(matches!(args.snap_boundary, SnapArg::On));
    let mut mesh = build_initial_mesh(&spec);
    for _ in 0..args.refinements {
        mesh = mesh.uniform_refine();
    }
    match args.out {
        Some(path) => {
            let file = File::create(path)?;
            mesh.write_text(BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            mesh.write_text(stdout.lock())?;
        }
    }
    let _ = std::io::stdout().flush();
    Ok(ExitCode::SUCCESS)
}
