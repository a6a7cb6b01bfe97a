//! Generated kernels for the benchmark shape set and the default proxy
//! chain. The list lives in `kernels.manifest`; `build.rs` turns it into
//! source at build time.

use bbdgemm_core::runtime::Dispatcher;

#[allow(non_snake_case, unused_parens, unused_variables, clippy::all)]
mod generated {
    include!(concat!(env!("OUT_DIR"), "/kernels.rs"));
    include!(concat!(env!("OUT_DIR"), "/dispatch.rs"));
}

pub use generated::{KERNELS, REGISTRY};

/// The manifest this crate was built from.
pub const MANIFEST: &str = include_str!("../kernels.manifest");

/// Dispatcher over every kernel in this crate.
pub fn dispatcher() -> Dispatcher {
    Dispatcher::new(KERNELS).expect("generated table holds valid kernel names")
}
