//! Kernel source generation, dispatch-table emission and the static
//! register-pressure estimator.

mod emit;
mod manifest;
mod pressure;

pub use emit::{
    generate_dispatch_source, generate_kernel_source, generate_kernel_source_bounded, generate_kernels_file,
    write_atomic, write_generated, write_pressure_report, GeneratedFiles, DISPATCH_FILE, KERNELS_FILE,
};
pub use manifest::{parse_manifest, parse_manifest_from, KernelManifest};
pub(crate) use manifest::{parse_spec_tokens, tokenize};
pub use pressure::{estimate_pressure, MachineModel, PressureReport};
