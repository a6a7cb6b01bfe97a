use std::path::PathBuf;
use std::process::ExitCode;

use bbdgemm_core::proxy::{
    compare_dumps, default_chain, load_chain, run_proxy, write_dump, Mode, ProxyConfig,
};
use clap::Parser;

/// Local-integration proxy: per-cell GEMM chain, scalar or batched.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    cells: u64,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    timesteps: u64,
    /// `scalar` loops over cells with the reference GEMM, `vector` makes
    /// one batched call per chain step.
    #[arg(long, default_value = "vector")]
    mode: Mode,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write every cell's dq_out to this file.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Chain file: `<Layout> <N> <M> <K> <abc> <A> <B> <C> <alpha> <beta>` per line.
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Compare the dump against this earlier dump (needs --dump).
    #[arg(long, requires = "dump")]
    compare: Option<PathBuf>,
    /// Tolerance for --compare.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn run(args: Args) -> bbdgemm_core::Result<bool> {
    let chain = match &args.chain {
        Some(path) => load_chain(path)?,
        None => default_chain(),
    };
    let config = ProxyConfig {
        cells: args.cells as usize,
        timesteps: args.timesteps as usize,
        chain,
        mode: args.mode,
        seed: args.seed,
        ..ProxyConfig::default()
    };
    let dispatcher = bbdgemm_kernels::dispatcher();
    let run = run_proxy(&config, &dispatcher)?;
    println!(
        "mode={:?} cells={} timesteps={} elapsed={:.3}s batched_calls={} fallbacks={}",
        config.mode,
        config.cells,
        config.timesteps,
        run.elapsed.as_secs_f64(),
        run.batched_calls,
        dispatcher.fallback_count()
    );
    let Some(dump) = &args.dump else {
        return Ok(true);
    };
    write_dump(&run.state, dump)?;
    println!("dump written to {}", dump.display());
    let Some(other) = &args.compare else {
        return Ok(true);
    };
    let cmp = compare_dumps(dump, other, args.tol)?;
    println!(
        "max_abs_diff={:e} tol={:e} {}",
        cmp.max_abs_diff,
        args.tol,
        if cmp.pass { "PASS" } else { "FAIL" }
    );
    Ok(cmp.pass)
}

fn main() -> ExitCode {
    bbdgemm_cli::init_logging();
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("proxy: {e}");
            ExitCode::FAILURE
        }
    }
}
