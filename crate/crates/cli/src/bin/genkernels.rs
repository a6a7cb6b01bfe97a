use std::path::PathBuf;
use std::process::ExitCode;

use bbdgemm_core::codegen::{write_generated, write_pressure_report, KernelManifest, MachineModel};
use bbdgemm_core::spec::DEFAULT_MAX_DIM;
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, ValueEnum)]
enum Machine {
    Riscv,
    X86_64,
}

/// Generate batched DGEMM kernels and their dispatch table from a manifest.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Manifest with one `<Layout> <N> <M> <K> <abc>` spec per line.
    #[arg(long)]
    manifest: PathBuf,
    /// Directory receiving kernels.rs, its parts and dispatch.rs.
    #[arg(long)]
    out_dir: PathBuf,
    /// Largest N, M or K accepted.
    #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
    max_dim: usize,
    /// Also write a register-pressure report to this CSV file.
    #[arg(long)]
    emit_report: Option<PathBuf>,
    /// Register file assumed by the pressure report.
    #[arg(long, value_enum, default_value = "riscv")]
    machine: Machine,
}

fn run(args: Args) -> bbdgemm_core::Result<()> {
    let manifest = KernelManifest::load(&args.manifest)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let files = write_generated(&manifest, &args.out_dir, args.max_dim)?;
    println!(
        "generated {} kernels into {} ({} part files)",
        files.kernel_count,
        args.out_dir.display(),
        files.parts
    );
    if let Some(path) = &args.emit_report {
        let model = match args.machine {
            Machine::Riscv => MachineModel::riscv(),
            Machine::X86_64 => MachineModel::x86_64(),
        };
        write_pressure_report(&manifest, model, path)?;
        println!("pressure report written to {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    bbdgemm_cli::init_logging();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("genkernels: {e}");
            ExitCode::FAILURE
        }
    }
}
