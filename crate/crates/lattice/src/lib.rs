//! Every kernel of the validation lattice: both layouts, all 27 access-kind
//! triples, shapes `{1,2,3,4}^3` plus `10_9_9` and `20_9_10`.

#[allow(non_snake_case, unused_parens, unused_variables, clippy::all)]
mod generated {
    include!(concat!(env!("OUT_DIR"), "/kernels.rs"));
    include!(concat!(env!("OUT_DIR"), "/dispatch.rs"));
}

pub use generated::{KERNELS, REGISTRY};
