//! Batched small-matrix DGEMM built from generated, fully unrolled,
//! shape-specialized kernels.
//!
//! A kernel is identified by a [`KernelSpec`] (layout, `N x M x K` shape and
//! the access kind of each operand) and named
//! `bbdgemm_<Layout>_<N>_<M>_<K>_<abc>`. [`codegen`] turns a manifest of
//! specs into Rust source that a downstream crate compiles; [`runtime`]
//! dispatches calls to those kernels and [`reference`] provides the naive
//! oracle they are checked against.

pub mod bench;
pub mod codegen;
mod error;
pub mod proxy;
pub mod reference;
pub mod runtime;
pub mod spec;

pub use error::{Error, Result};
pub use reference::{batched_ref, dgemm_ref, GemmScalars};
pub use runtime::{BatchedOperand, BatchedOperandMut, Dispatcher, ExecPath, KernelEntry};
pub use spec::{
    kernel_name, matrix_span, operand_dims, parse_kernel_name, AccessKind, KernelShape, KernelSpec, Layout,
    Operand, OperandDims,
};
