use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use bbdgemm_cli::Baseline;
use bbdgemm_core::bench::{emit_csv, run_suite, trend_warning, write_csv, BenchOptions};
use bbdgemm_core::codegen::KernelManifest;
use clap::Parser;

/// Batched kernels vs a loop of per-call GEMMs, with a correctness gate.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Specs to benchmark, one `<Layout> <N> <M> <K> <abc>` per line.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    batch: usize,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, value_enum, default_value = "naive")]
    baseline: Baseline,
    /// Write the report here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Benchmark specs without a generated kernel through the reference.
    #[arg(long)]
    allow_fallback: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Do not pin the benchmark thread to CPU 0.
    #[arg(long)]
    no_pin: bool,
}

fn run(args: Args) -> Result<bool, String> {
    if !args.no_pin && !bbdgemm_cli::pin_current_thread(0) {
        log::info!("could not pin to CPU 0, timings may be noisier");
    }
    let manifest = KernelManifest::load(&args.manifest).map_err(|e| e.to_string())?;
    let opts = BenchOptions {
        e_count: args.batch,
        reps: args.reps as usize,
        seed: args.seed,
        allow_fallback: args.allow_fallback,
        baseline: args.baseline.gemm()?,
        ..BenchOptions::default()
    };
    let dispatcher = bbdgemm_kernels::dispatcher();
    let report = run_suite(&dispatcher, &manifest.entries, &opts).map_err(|e| e.to_string())?;
    let records = report.records();

    match &args.csv {
        Some(path) => emit_csv(&records, path),
        None => write_csv(&records, io::stdout().lock()),
    }
    .map_err(|e| e.to_string())?;

    for r in &report.results {
        eprintln!(
            "{:<34} speedup {:>7.2}  batched {:>12.0} ns (sd {:.0})  per-call {:>12.0} ns (sd {:.0}){}",
            r.record.name,
            r.record.speedup,
            r.record.median_ns_batched,
            r.std_ns_batched,
            r.record.median_ns_percall,
            r.std_ns_percall,
            if r.record.fallback_used {
                "  [fallback]"
            } else {
                ""
            }
        );
    }
    if let Some(warning) = trend_warning(&records) {
        eprintln!("note: {warning}");
    }
    for r in &report.rejected {
        eprintln!("rejected {}: max_abs_diff {:e}", r.name, r.max_abs_diff);
    }
    Ok(report.rejected.is_empty())
}

fn main() -> ExitCode {
    bbdgemm_cli::init_logging();
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::FAILURE
        }
    }
}
