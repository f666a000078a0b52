//! `helmtab` command-line driver.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use helmtab::bounds::{sweep_all, write_sweep_csv};
use helmtab::matfill::{bench_compare, generate_sphere_mesh, load_mesh, BenchOptions, QuadratureSpec, TriangleMesh};
use helmtab::{build_plan, Error, HashIndex, KernelEvaluator, KernelKind, KernelTable, Medium, SamplingConfig};

#[derive(Parser, Debug)]
#[command(name = "helmtab", version, about = "Table-driven Helmholtz kernel evaluation and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the sampling plan and kernel tables; print a summary.
    #[command(allow_negative_numbers = true)]
    BuildTable(BuildTableArgs),
    /// Compare interpolated and closed-form kernels on a uniform probe grid.
    #[command(allow_negative_numbers = true)]
    SweepError(SweepArgs),
    /// Fill a mesh's kernel matrix both ways and compare time and accuracy.
    #[command(allow_negative_numbers = true)]
    BenchFill(BenchArgs),
    /// Write an icosphere mesh in OFF format.
    #[command(allow_negative_numbers = true)]
    GenMesh(GenMeshArgs),
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Free-space wavelength in meters.
    #[arg(long, default_value_t = 1.0)]
    lambda0: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_r: f64,
    #[arg(long, default_value_t = 1.0)]
    mu_r: f64,
    #[arg(long, default_value_t = 1000)]
    samples_per_wavelength: u32,
    /// Smallest tabulated radius [default: 1e-4 * lambda0].
    #[arg(long)]
    r_min: Option<f64>,
    /// Largest tabulated radius [default: lambda0; sized from the mesh in bench-fill].
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long, default_value_t = 3)]
    lagrange_degree: usize,
    /// Extra samples around the zeros of the real and imaginary parts.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    refine: Switch,
    /// Half-width of each refinement window, in base intervals.
    #[arg(long, default_value_t = 2.0)]
    refine_halfwidth: f64,
    /// Refined spacing is the base interval divided by this.
    #[arg(long, default_value_t = 2)]
    refine_divisor: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kernel {
    /// exp(-jkr)
    Exp,
    /// exp(-jkr)/r
    Green,
}

impl From<Kernel> for KernelKind {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Exp => KernelKind::PlainExp,
            Kernel::Green => KernelKind::GreenOverR,
        }
    }
}

#[derive(Args, Debug)]
struct BuildTableArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Write the plan as CSV here (stdout when no dump is requested).
    #[arg(long)]
    dump_plan: Option<PathBuf>,
    /// Write the binary table of --kernel here.
    #[arg(long)]
    dump_table: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Kernel::Green)]
    kernel: Kernel,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, default_value_t = 10_000)]
    probes: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    table: TableArgs,
    /// OFF mesh to fill.
    #[arg(long, conflicts_with_all = ["sphere_subdiv", "sphere_radius"])]
    mesh: Option<PathBuf>,
    /// Icosphere subdivisions when no --mesh is given [default: 2].
    #[arg(long)]
    sphere_subdiv: Option<u32>,
    /// Icosphere radius in meters [default: 0.5 * lambda0].
    #[arg(long)]
    sphere_radius: Option<f64>,
    #[arg(long, default_value_t = 4)]
    outer_m: usize,
    #[arg(long, default_value_t = 3)]
    inner_n: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Time each fill this many times and keep the fastest.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, value_enum, default_value_t = Kernel::Green)]
    kernel: Kernel,
    /// Write the CSV here; the summary then goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenMeshArgs {
    #[arg(long, default_value_t = 2)]
    sphere_subdiv: u32,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    /// Write the mesh here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes map to exit codes 2 (usage) and 1 (runtime).
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::InvalidConfig(_) => Failure::Usage(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CliResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildTable(a) => build_table(a),
        Command::SweepError(a) => sweep_error(a),
        Command::BenchFill(a) => bench_fill(a),
        Command::GenMesh(a) => gen_mesh(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("helmtab: usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("helmtab: error: {e:#}");
            ExitCode::from(1)
        }
    }
}

impl TableArgs {
    fn medium(&self) -> Result<Medium, Failure> {
        Ok(Medium::new(self.lambda0, self.eps_r, self.mu_r)?)
    }

    fn config(&self, default_r_max: f64) -> SamplingConfig {
        SamplingConfig {
            r_min: self.r_min.unwrap_or(1e-4 * self.lambda0),
            r_max: self.r_max.unwrap_or(default_r_max),
            samples_per_wavelength: self.samples_per_wavelength,
            refine: self.refine == Switch::On,
            refine_divisor: self.refine_divisor,
            refine_halfwidth: self.refine_halfwidth,
            ..SamplingConfig::new(0.0, 0.0)
        }
    }
}

/// Output file, or stdout.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn build_table(a: BuildTableArgs) -> CliResult {
    let medium = a.table.medium()?;
    let plan = build_plan(&a.table.config(a.table.lambda0), &medium)?;
    let hash = HashIndex::build(&plan)?;
    let kind = KernelKind::from(a.kernel);

    if let Some(path) = &a.dump_table {
        let table = KernelTable::build(plan.clone().into(), kind, plan.k())?;
        let mut out = sink(Some(path))?;
        table.write_binary(&mut out)?;
        out.flush()?;
    }
    let to_stdout = a.dump_plan.is_none() && a.dump_table.is_none();
    if !to_stdout {
        if let Some(path) = &a.dump_plan {
            let mut out = sink(Some(path))?;
            plan.write_csv(&mut out)?;
            out.flush()?;
        }
        println!(
            "{} samples over [{:e}, {}] m, k = {:.12}, t = {:e} m, dr_min = {:e} m, {} zeros, {} buckets",
            plan.len(),
            plan.r_min(),
            plan.r_max(),
            plan.k(),
            plan.t(),
            plan.dr_min(),
            plan.zero_locations().len(),
            hash.buckets().len()
        );
    } else {
        let mut out = sink(None)?;
        plan.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn sweep_error(a: SweepArgs) -> CliResult {
    let medium = a.table.medium()?;
    let cfg = a.table.config(a.table.lambda0);
    let ev = KernelEvaluator::build(&cfg, &medium, a.table.lagrange_degree)?;
    let rows = sweep_all(&ev, a.probes)?;
    let mut out = sink(a.out.as_deref())?;
    write_sweep_csv(&rows, &mut out)?;
    out.flush()?;
    if a.out.is_some() {
        for row in &rows {
            println!(
                "{:<6} {:<10} max rel error re {:.3e} im {:.3e}",
                row.kind.name(),
                row.method,
                row.report.max_rel_error_re,
                row.report.max_rel_error_im
            );
        }
    }
    Ok(())
}

fn bench_mesh(a: &BenchArgs) -> Result<TriangleMesh, Failure> {
    match &a.mesh {
        Some(path) => {
            if !path.is_file() {
                return Err(Failure::Usage(anyhow!("mesh file {} does not exist", path.display())));
            }
            Ok(load_mesh(path)
                .map_err(|e| Failure::Runtime(anyhow!(e).context(format!("reading {}", path.display()))))?)
        }
        None => {
            let radius = a.sphere_radius.unwrap_or(0.5 * a.table.lambda0);
            Ok(generate_sphere_mesh(radius, a.sphere_subdiv.unwrap_or(2))?)
        }
    }
}

fn bench_fill(a: BenchArgs) -> CliResult {
    if a.table.r_max.is_some() {
        return Err(Failure::Usage(anyhow!("--r-max is sized from the mesh in bench-fill")));
    }
    let medium = a.table.medium()?;
    let mesh = bench_mesh(&a)?;
    let spec = QuadratureSpec::new(a.outer_m, a.inner_n)?;
    let options = BenchOptions {
        kind: a.kernel.into(),
        lagrange_degree: a.table.lagrange_degree,
        threads: a.threads,
        repeats: a.repeats,
    };
    info!("filling {} triangles, {} kernel calls per pair", mesh.len(), spec.points_per_pair());
    let report = bench_compare(&mesh, spec, &medium, &a.table.config(0.0), &options)?;
    let mut out = sink(a.out.as_deref())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    if a.out.is_some() {
        println!("{}", report.summary());
    }
    Ok(())
}

fn gen_mesh(a: GenMeshArgs) -> CliResult {
    let mesh = generate_sphere_mesh(a.radius, a.sphere_subdiv)?;
    let mut out = sink(a.out.as_deref())?;
    mesh.write_off(&mut out)?;
    out.flush()?;
    if let Some(path) = &a.out {
        println!("{} triangles, {} vertices -> {}", mesh.len(), mesh.vertices().len(), path.display());
    }
    Ok(())
}
