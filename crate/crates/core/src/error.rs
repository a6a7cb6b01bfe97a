use std::io;

use crate::spec::{AccessKind, Operand};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed kernel name `{name}`: {reason} (at `{token}`)")]
    MalformedName {
        name: String,
        token: String,
        reason: &'static str,
    },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension {dim} exceeds the configured maximum of {max}")]
    ShapeBound { dim: usize, max: usize },

    #[error("leading dimension of {operand} is {ld}, must be at least {min}")]
    LeadingDimension { operand: Operand, ld: usize, min: usize },

    #[error("operand {operand} has access kind {found:?}, kernel expects {expected:?}")]
    OperandKind {
        operand: Operand,
        expected: AccessKind,
        found: AccessKind,
    },

    #[error("operand {operand}: buffer holds {len} scalars, needs {needed}")]
    BufferTooShort {
        operand: Operand,
        needed: usize,
        len: usize,
    },

    #[error("operand {operand}: stride {span} is below the matrix span {min}")]
    SpanTooSmall {
        operand: Operand,
        span: usize,
        min: usize,
    },

    #[error("operand {operand}: pointer table has {found} entries, batch size is {expected}")]
    TableLength {
        operand: Operand,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate kernel `{0}` in manifest")]
    DuplicateSpec(String),

    #[error("component {component} out of range, tensor has components [0,{max}]")]
    ComponentOutOfRange { component: usize, max: usize },

    #[error("scratch buffer holds {capacity} scalars, {needed} required")]
    ScratchTooSmall { capacity: usize, needed: usize },

    #[error("invalid chain: {0}")]
    Chain(String),

    #[error("kernel `{0}` is not in the dispatch table and fallback is disabled")]
    FallbackDisallowed(String),

    #[error("dump format: {0}")]
    DumpFormat(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("allocation of {0} scalars failed")]
    Allocation(usize),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
