use std::env;
use std::path::PathBuf;

use bbdgemm_core::codegen::{write_generated, KernelManifest};
use bbdgemm_core::spec::DEFAULT_MAX_DIM;

fn main() {
    let manifest_dir = PathBuf::from(env::var_os("CARGO_MANIFEST_DIR").unwrap());
    let manifest_path = manifest_dir.join("kernels.manifest");
    println!("cargo:rerun-if-changed={}", manifest_path.display());

    let manifest = KernelManifest::load(&manifest_path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", manifest_path.display()));
    let out_dir = PathBuf::from(env::var_os("OUT_DIR").unwrap());
    write_generated(&manifest, &out_dir, DEFAULT_MAX_DIM)
        .unwrap_or_else(|e| panic!("generating kernels: {e}"));
}
