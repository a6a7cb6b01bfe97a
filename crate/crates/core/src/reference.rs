//! Naive GEMM oracle.
//!
//! Summation runs over `t = 0..k` in ascending order starting from zero,
//! then the sum is scaled by `alpha` and combined with `beta * C`. The
//! generated kernels perform exactly the same operations in the same
//! order, so results agree bit for bit.

use crate::error::{Error, Result};
use crate::runtime::{BatchedOperand, BatchedOperandMut};
use crate::spec::{KernelSpec, Layout, Operand, OperandDims};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GemmScalars {
    pub alpha: f64,
    pub beta: f64,
}

impl GemmScalars {
    pub fn new(alpha: f64, beta: f64) -> Self {
        GemmScalars { alpha, beta }
    }
}

impl Default for GemmScalars {
    fn default() -> Self {
        GemmScalars::new(1.0, 0.0)
    }
}

fn check_matrix(
    layout: Layout,
    which: Operand,
    rows: usize,
    cols: usize,
    len: usize,
    ld: usize,
) -> Result<()> {
    let dims = OperandDims::new(layout, rows, cols);
    if ld < dims.min_ld {
        return Err(Error::LeadingDimension {
            operand: which,
            ld,
            min: dims.min_ld,
        });
    }
    let needed = dims.extent(layout, ld);
    if len < needed {
        return Err(Error::BufferTooShort {
            operand: which,
            needed,
            len,
        });
    }
    Ok(())
}

/// `C := alpha * A * B + beta * C` with `A: n x k`, `B: k x m`, `C: n x m`.
///
/// With `beta == 0` the old contents of `C` are never read, so NaN or
/// infinite garbage in `C` does not leak into the result.
#[allow(clippy::too_many_arguments)]
pub fn dgemm_ref(
    layout: Layout,
    n: usize,
    m: usize,
    k: usize,
    alpha: f64,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    beta: f64,
    c: &mut [f64],
    ldc: usize,
) -> Result<()> {
    if n == 0 || m == 0 || k == 0 {
        return Err(Error::InvalidShape(format!(
            "{n}x{m}x{k}: dimensions must be >= 1"
        )));
    }
    check_matrix(layout, Operand::A, n, k, a.len(), lda)?;
    check_matrix(layout, Operand::B, k, m, b.len(), ldb)?;
    check_matrix(layout, Operand::C, n, m, c.len(), ldc)?;
    gemm_unchecked(layout, n, m, k, alpha, a, lda, b, ldb, beta, c, ldc);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn gemm_unchecked(
    layout: Layout,
    n: usize,
    m: usize,
    k: usize,
    alpha: f64,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    beta: f64,
    c: &mut [f64],
    ldc: usize,
) {
    for col in 0..m {
        for row in 0..n {
            let mut acc = 0.0f64;
            for t in 0..k {
                acc += a[layout.offset(row, t, lda)] * b[layout.offset(t, col, ldb)];
            }
            acc *= alpha;
            let idx = layout.offset(row, col, ldc);
            if beta != 0.0 {
                acc += c[idx] * beta;
            }
            c[idx] = acc;
        }
    }
}

/// Batched oracle: `e_count` sequential [`dgemm_ref`] calls, each operand
/// resolved per its access kind.
pub fn batched_ref(
    spec: &KernelSpec,
    e_count: usize,
    scalars: GemmScalars,
    a: &BatchedOperand<'_>,
    b: &BatchedOperand<'_>,
    c: &mut BatchedOperandMut<'_>,
) -> Result<()> {
    a.validate(spec, Operand::A, e_count)?;
    b.validate(spec, Operand::B, e_count)?;
    c.validate(spec, Operand::C, e_count)?;
    let (n, m, k) = (spec.shape.n(), spec.shape.m(), spec.shape.k());
    let (lda, ldb, ldc) = (a.ld(), b.ld(), c.ld());
    for e in 0..e_count {
        gemm_unchecked(
            spec.layout,
            n,
            m,
            k,
            scalars.alpha,
            a.matrix(e),
            lda,
            b.matrix(e),
            ldb,
            scalars.beta,
            c.matrix_mut(e),
            ldc,
        );
    }
    Ok(())
}
