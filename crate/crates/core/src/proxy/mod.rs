//! Mini local-integration application: per-cell tensors updated by a short
//! GEMM chain, either cell by cell through the reference GEMM or with the
//! loops interchanged so that each chain step is one batched call.

mod config;
mod dump;
mod integration;
mod state;

pub use config::{
    default_chain, load_chain, parse_chain, Binding, ChainPlan, ChainStep, GlobalSlot, Mode, ProxyConfig,
    TensorId,
};
pub use dump::{
    compare, compare_dumps, read_dump, write_dump, Dump, DumpComparison, DUMP_MAGIC, DUMP_VERSION,
};
pub use integration::{
    compute_local_integration_batched, compute_local_integration_ref, run_proxy, run_timesteps, ProxyRun,
};
pub use state::ProxyState;
