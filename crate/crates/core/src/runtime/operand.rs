use crate::error::{Error, Result};
use crate::spec::{AccessKind, KernelSpec, Operand};

/// Read-only view of one operand across a batch.
#[derive(Debug, Clone)]
pub enum BatchedOperand<'a> {
    Constant { data: &'a [f64], ld: usize },
    Strided { data: &'a [f64], ld: usize, span: usize },
    Indexed { table: Vec<&'a [f64]>, ld: usize },
}

/// Writable view of the output operand across a batch.
///
/// `Indexed` tables hold exclusive borrows, so distinct output matrices
/// never alias. A `Constant` output is updated once per batch element in
/// ascending order.
#[derive(Debug)]
pub enum BatchedOperandMut<'a> {
    Constant {
        data: &'a mut [f64],
        ld: usize,
    },
    Strided {
        data: &'a mut [f64],
        ld: usize,
        span: usize,
    },
    Indexed {
        table: Vec<&'a mut [f64]>,
        ld: usize,
    },
}

#[cold]
#[inline(never)]
fn kind_mismatch(expected: AccessKind, found: AccessKind) -> ! {
    panic!("kernel expects a {expected:?} operand, got {found:?}")
}

impl<'a> BatchedOperand<'a> {
    pub fn constant(data: &'a [f64], ld: usize) -> Self {
        BatchedOperand::Constant { data, ld }
    }

    pub fn strided(data: &'a [f64], ld: usize, span: usize) -> Self {
        BatchedOperand::Strided { data, ld, span }
    }

    pub fn indexed(table: Vec<&'a [f64]>, ld: usize) -> Self {
        BatchedOperand::Indexed { table, ld }
    }

    pub fn kind(&self) -> AccessKind {
        match self {
            BatchedOperand::Constant { .. } => AccessKind::Constant,
            BatchedOperand::Strided { .. } => AccessKind::Strided,
            BatchedOperand::Indexed { .. } => AccessKind::Indexed,
        }
    }

    pub fn ld(&self) -> usize {
        match *self {
            BatchedOperand::Constant { ld, .. }
            | BatchedOperand::Strided { ld, .. }
            | BatchedOperand::Indexed { ld, .. } => ld,
        }
    }

    /// Matrix used by batch element `e`.
    pub fn matrix(&self, e: usize) -> &'a [f64] {
        match self {
            BatchedOperand::Constant { data, .. } => data,
            BatchedOperand::Strided { data, span, .. } => &data[e * span..],
            BatchedOperand::Indexed { table, .. } => table[e],
        }
    }

    pub fn constant_parts(&self) -> (&'a [f64], usize) {
        match *self {
            BatchedOperand::Constant { data, ld } => (data, ld),
            _ => kind_mismatch(AccessKind::Constant, self.kind()),
        }
    }

    pub fn strided_parts(&self) -> (&'a [f64], usize, usize) {
        match *self {
            BatchedOperand::Strided { data, ld, span } => (data, ld, span),
            _ => kind_mismatch(AccessKind::Strided, self.kind()),
        }
    }

    pub fn indexed_parts(&self) -> (&[&'a [f64]], usize) {
        match self {
            BatchedOperand::Indexed { table, ld } => (table, *ld),
            _ => kind_mismatch(AccessKind::Indexed, self.kind()),
        }
    }

    fn storage(&self) -> Storage {
        match self {
            BatchedOperand::Constant { data, ld } => Storage::Contiguous {
                len: data.len(),
                ld: *ld,
                span: None,
            },
            BatchedOperand::Strided { data, ld, span } => Storage::Contiguous {
                len: data.len(),
                ld: *ld,
                span: Some(*span),
            },
            BatchedOperand::Indexed { table, ld } => Storage::Table {
                shortest: table.iter().map(|m| m.len()).min(),
                count: table.len(),
                ld: *ld,
            },
        }
    }

    /// Checks kind, leading dimension and buffer sizes against `spec` for a
    /// batch of `e_count` elements.
    pub fn validate(&self, spec: &KernelSpec, which: Operand, e_count: usize) -> Result<()> {
        validate(spec, which, self.kind(), self.storage(), e_count)
    }
}

impl<'a> BatchedOperandMut<'a> {
    pub fn constant(data: &'a mut [f64], ld: usize) -> Self {
        BatchedOperandMut::Constant { data, ld }
    }

    pub fn strided(data: &'a mut [f64], ld: usize, span: usize) -> Self {
        BatchedOperandMut::Strided { data, ld, span }
    }

    pub fn indexed(table: Vec<&'a mut [f64]>, ld: usize) -> Self {
        BatchedOperandMut::Indexed { table, ld }
    }

    pub fn kind(&self) -> AccessKind {
        match self {
            BatchedOperandMut::Constant { .. } => AccessKind::Constant,
            BatchedOperandMut::Strided { .. } => AccessKind::Strided,
            BatchedOperandMut::Indexed { .. } => AccessKind::Indexed,
        }
    }

    pub fn ld(&self) -> usize {
        match *self {
            BatchedOperandMut::Constant { ld, .. }
            | BatchedOperandMut::Strided { ld, .. }
            | BatchedOperandMut::Indexed { ld, .. } => ld,
        }
    }

    pub fn matrix_mut(&mut self, e: usize) -> &mut [f64] {
        match self {
            BatchedOperandMut::Constant { data, .. } => data,
            BatchedOperandMut::Strided { data, span, .. } => &mut data[e * *span..],
            BatchedOperandMut::Indexed { table, .. } => table[e],
        }
    }

    pub fn matrix(&self, e: usize) -> &[f64] {
        match self {
            BatchedOperandMut::Constant { data, .. } => data,
            BatchedOperandMut::Strided { data, span, .. } => &data[e * span..],
            BatchedOperandMut::Indexed { table, .. } => table[e],
        }
    }

    pub fn constant_parts(&mut self) -> (&mut [f64], usize) {
        match self {
            BatchedOperandMut::Constant { data, ld } => (data, *ld),
            _ => kind_mismatch(AccessKind::Constant, self.kind()),
        }
    }

    pub fn strided_parts(&mut self) -> (&mut [f64], usize, usize) {
        match self {
            BatchedOperandMut::Strided { data, ld, span } => (data, *ld, *span),
            _ => kind_mismatch(AccessKind::Strided, self.kind()),
        }
    }

    pub fn indexed_parts(&mut self) -> (&mut [&'a mut [f64]], usize) {
        match self {
            BatchedOperandMut::Indexed { table, ld } => (table, *ld),
            _ => kind_mismatch(AccessKind::Indexed, self.kind()),
        }
    }

    /// Read-only copy of this descriptor, borrowing the same storage.
    pub fn as_input(&self) -> BatchedOperand<'_> {
        match self {
            BatchedOperandMut::Constant { data, ld } => BatchedOperand::constant(data, *ld),
            BatchedOperandMut::Strided { data, ld, span } => BatchedOperand::strided(data, *ld, *span),
            BatchedOperandMut::Indexed { table, ld } => {
                BatchedOperand::indexed(table.iter().map(|m| &**m).collect(), *ld)
            }
        }
    }

    pub fn validate(&self, spec: &KernelSpec, which: Operand, e_count: usize) -> Result<()> {
        let storage = match self {
            BatchedOperandMut::Constant { data, ld } => Storage::Contiguous {
                len: data.len(),
                ld: *ld,
                span: None,
            },
            BatchedOperandMut::Strided { data, ld, span } => Storage::Contiguous {
                len: data.len(),
                ld: *ld,
                span: Some(*span),
            },
            BatchedOperandMut::Indexed { table, ld } => Storage::Table {
                shortest: table.iter().map(|m| m.len()).min(),
                count: table.len(),
                ld: *ld,
            },
        };
        validate(spec, which, self.kind(), storage, e_count)
    }
}

enum Storage {
    Contiguous {
        len: usize,
        ld: usize,
        span: Option<usize>,
    },
    Table {
        shortest: Option<usize>,
        count: usize,
        ld: usize,
    },
}

fn validate(
    spec: &KernelSpec,
    which: Operand,
    kind: AccessKind,
    storage: Storage,
    e_count: usize,
) -> Result<()> {
    let expected = spec.access(which);
    if kind != expected {
        return Err(Error::OperandKind {
            operand: which,
            expected,
            found: kind,
        });
    }
    let dims = spec.dims(which);
    let ld = match &storage {
        Storage::Contiguous { ld, .. } | Storage::Table { ld, .. } => *ld,
    };
    if ld < dims.min_ld {
        return Err(Error::LeadingDimension {
            operand: which,
            ld,
            min: dims.min_ld,
        });
    }
    let extent = dims.extent(spec.layout, ld);
    match storage {
        Storage::Contiguous { len, span: None, .. } => {
            if e_count > 0 && len < extent {
                return Err(Error::BufferTooShort {
                    operand: which,
                    needed: extent,
                    len,
                });
            }
        }
        Storage::Contiguous {
            len,
            span: Some(span),
            ..
        } => {
            let min = dims.span(spec.layout, ld);
            if span < min {
                return Err(Error::SpanTooSmall {
                    operand: which,
                    span,
                    min,
                });
            }
            let needed = e_count * span;
            if len < needed {
                return Err(Error::BufferTooShort {
                    operand: which,
                    needed,
                    len,
                });
            }
        }
        Storage::Table { shortest, count, .. } => {
            if count != e_count {
                return Err(Error::TableLength {
                    operand: which,
                    expected: e_count,
                    found: count,
                });
            }
            if let Some(len) = shortest.filter(|&len| len < extent) {
                return Err(Error::BufferTooShort {
                    operand: which,
                    needed: extent,
                    len,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Layout;

    fn spec() -> KernelSpec {
        KernelSpec::from_parts(Layout::ColMajor, 2, 3, 4, "cis").unwrap()
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let a = vec![0.0; 8];
        let op = BatchedOperand::strided(&a, 2, 8);
        assert!(matches!(
            op.validate(&spec(), Operand::A, 1),
            Err(Error::OperandKind {
                expected: AccessKind::Constant,
                found: AccessKind::Strided,
                ..
            })
        ));
    }

    #[test]
    fn strided_bounds() {
        let c = vec![0.0; 6 * 3];
        let ok = BatchedOperand::strided(&c, 2, 6);
        let s = KernelSpec::from_parts(Layout::ColMajor, 2, 3, 4, "csc").unwrap();
        ok.validate(&s, Operand::B, 1).unwrap_err(); // B is 4x3, span 12 > 6
        let s = KernelSpec::from_parts(Layout::ColMajor, 2, 3, 4, "ccs").unwrap();
        ok.validate(&s, Operand::C, 3).unwrap();
        assert!(matches!(
            ok.validate(&s, Operand::C, 4),
            Err(Error::BufferTooShort {
                needed: 24,
                len: 18,
                ..
            })
        ));
        let narrow = BatchedOperand::strided(&c, 2, 5);
        assert!(matches!(
            narrow.validate(&s, Operand::C, 1),
            Err(Error::SpanTooSmall { span: 5, min: 6, .. })
        ));
    }

    #[test]
    fn indexed_table_must_match_batch() {
        let m = vec![0.0; 12];
        let op = BatchedOperand::indexed(vec![&m, &m], 4);
        op.validate(&spec(), Operand::B, 2).unwrap();
        assert!(matches!(
            op.validate(&spec(), Operand::B, 3),
            Err(Error::TableLength {
                expected: 3,
                found: 2,
                ..
            })
        ));
        let short = vec![0.0; 11];
        let op = BatchedOperand::indexed(vec![&m, &short], 4);
        assert!(matches!(
            op.validate(&spec(), Operand::B, 2),
            Err(Error::BufferTooShort {
                needed: 12,
                len: 11,
                ..
            })
        ));
    }

    #[test]
    fn empty_batch_skips_buffer_checks() {
        let op = BatchedOperand::constant(&[], 2);
        op.validate(&spec(), Operand::A, 0).unwrap();
        assert!(op.validate(&spec(), Operand::A, 1).is_err());
    }

    #[test]
    fn strided_matrix_resolution() {
        let data: Vec<f64> = (0..12).map(f64::from).collect();
        let op = BatchedOperand::strided(&data, 2, 4);
        assert_eq!(op.matrix(2)[0], 8.0);
        let op = BatchedOperand::constant(&data, 2);
        assert_eq!(op.matrix(5)[0], 0.0);
    }
}
