use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hpfem::Rect;

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod assemble;
mod basis;
mod demos;
mod expr;
mod output;
mod solve;
mod tables;

use output::{parse_domain, parse_levels, Levels, MeshArgs};

/// Hierarchic hp finite elements on quadrilateral meshes.
#[derive(Parser, Debug)]
#[command(name = "hpfem", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Directory for output files
    #[arg(long, global = true, default_value = "hpfem-out")]
    pub out: PathBuf,
    /// Gauss points per direction for element matrices (default p + 1)
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    /// Seed for randomized sampling
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Matrix output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Mm)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Mm,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverArg {
    Cg,
    Direct,
    Auto,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the 1D shape functions N_1 .. N_{pmax+1}
    Basis1d {
        #[arg(long, default_value_t = 5)]
        pmax: usize,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Sample 2D reference shape functions by local index
    Basis2d {
        /// Local indices, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 5, 17, 23])]
        m: Vec<usize>,
        #[arg(long, default_value_t = 51)]
        grid: usize,
    },
    /// Project cos(3πξ/4)cos(3πη/4) onto the reference space and map it to a quadrilateral
    Iso {
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 51)]
        grid: usize,
    },
    /// Evaluate N10 - 2 N34 - 2 N142 on the 7x2 mesh of (-3,3)x(0,2) at p = 4
    GlobalDemo {
        /// Samples per element and direction
        #[arg(long, default_value_t = 20)]
        grid: usize,
        /// Random points per edge for the continuity check
        #[arg(long, default_value_t = 20)]
        edge_samples: usize,
    },
    /// Print and write the B, C and S matrices of a mesh
    Dofmap {
        #[arg(long, default_value_t = 3)]
        p: usize,
        #[command(flatten)]
        mesh: MeshArgs,
    },
    /// Assemble global mass and stiffness matrices
    Assemble {
        #[arg(long, default_value_t = 3)]
        p: usize,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Also time assembly on uniform meshes of these levels, e.g. 2..6
        #[arg(long, value_parser = parse_levels)]
        levels: Option<Levels>,
        /// Highest degree for the timing table
        #[arg(long)]
        pmax: Option<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Run the h/p convergence study for -Δu + νu = f with natural boundary conditions
    Solve(SolveArgs),
    /// Write the tables of counts, B, C/S matrices and assembly timings
    Tables {
        /// Levels for the mesh and dimension counts
        #[arg(long, value_parser = parse_levels, default_value = "2..7")]
        levels: Levels,
        /// Levels for the assembly timings
        #[arg(long, value_parser = parse_levels, default_value = "2..6")]
        timing_levels: Levels,
        #[arg(long, default_value_t = 5)]
        pmax: usize,
    },
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_parser = parse_levels, default_value = "1..5")]
    pub levels: Levels,
    #[arg(long, default_value_t = 5)]
    pub pmax: usize,
    /// Reaction coefficient
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,
    /// Relative residual for CG
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// CG gives up after this many iterations per unknown
    #[arg(long, default_value_t = 20)]
    pub max_iter_factor: usize,
    /// Degree of the reference solution (default pmax + 2)
    #[arg(long)]
    pub p_tilde: Option<usize>,
    /// Right-hand side f(x, y); defaults to the built-in manufactured problem
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Exact solution u(x, y), used for error measurement
    #[arg(long, allow_hyphen_values = true, requires_all = ["ux", "uy"])]
    pub u: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "u")]
    pub ux: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "u")]
    pub uy: Option<String>,
    /// Write (x, y, u_n) samples for every solve
    #[arg(long)]
    pub samples: bool,
    /// Samples per element and direction
    #[arg(long, default_value_t = 30)]
    pub sample_grid: usize,
    /// Domain x0,x1,y0,y1 for generated meshes
    #[arg(long, value_parser = parse_domain)]
    pub domain: Option<Rect>,
    /// Level-0 mesh file; level L refines it L times
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Write the level-0 mesh to a file
    #[arg(long)]
    pub save_mesh: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Basis1d { pmax, points } => basis::basis1d(g, pmax, points),
        Command::Basis2d { m, grid } => basis::basis2d(g, &m, grid),
        Command::Iso { p, grid } => demos::iso(g, p, grid),
        Command::GlobalDemo { grid, edge_samples } => demos::global_demo(g, grid, edge_samples),
        Command::Dofmap { p, mesh } => tables::dofmap(g, p, &mesh),
        Command::Assemble { p, mesh, levels, pmax, repeats } => assemble::assemble(g, p, &mesh, levels, pmax, repeats),
        Command::Solve(args) => solve::solve(g, &args),
        Command::Tables { levels, timing_levels, pmax } => tables::tables(g, levels, timing_levels, pmax),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
