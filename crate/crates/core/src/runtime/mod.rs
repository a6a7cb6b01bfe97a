//! Batched operand descriptors, kernel dispatch, layout transformations and
//! scratch storage.

mod dispatch;
mod layout;
mod operand;
mod scratch;

pub use dispatch::{Dispatcher, ExecPath, KernelEntry, KernelFn};
pub use layout::{
    build_pointer_table, build_pointer_table_mut, pack_strided, unpack_strided, PackedBatch, TensorBatch,
};
pub use operand::{BatchedOperand, BatchedOperandMut};
pub use scratch::{ensure_scratch, ScratchBuffer};
