//! Data-layout transformations between per-cell tensors and batched
//! operands.

use super::operand::{BatchedOperand, BatchedOperandMut};
use crate::error::{Error, Result};
use crate::spec::{Layout, OperandDims};

/// Per-cell tensor: a fixed number of component matrices, each allocated
/// on its own so that the same component of different cells is never
/// contiguous in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBatch {
    layout: Layout,
    rows: usize,
    cols: usize,
    components: Vec<Box<[f64]>>,
}

impl TensorBatch {
    pub const DEFAULT_COMPONENTS: usize = 4;

    pub fn zeros(layout: Layout, components: usize, rows: usize, cols: usize) -> Self {
        TensorBatch {
            layout,
            rows,
            cols,
            components: (0..components)
                .map(|_| vec![0.0; rows * cols].into_boxed_slice())
                .collect(),
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn ld(&self) -> usize {
        OperandDims::new(self.layout, self.rows, self.cols).min_ld
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    fn check(&self, component: usize) -> Result<()> {
        if component >= self.components.len() {
            return Err(Error::ComponentOutOfRange {
                component,
                max: self.components.len().saturating_sub(1),
            });
        }
        Ok(())
    }

    pub fn component(&self, component: usize) -> Result<&[f64]> {
        self.check(component)?;
        Ok(&self.components[component])
    }

    pub fn component_mut(&mut self, component: usize) -> Result<&mut [f64]> {
        self.check(component)?;
        Ok(&mut self.components[component])
    }

    pub fn components(&self) -> impl Iterator<Item = &[f64]> {
        self.components.iter().map(|c| &**c)
    }

    pub fn components_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.components.iter_mut().map(|c| &mut **c)
    }

    /// Element `(row, col)` of a component.
    pub fn get(&self, component: usize, row: usize, col: usize) -> f64 {
        self.components[component][self.layout.offset(row, col, self.ld())]
    }
}

fn table_ld(cells: &[TensorBatch]) -> usize {
    cells.first().map_or(1, TensorBatch::ld)
}

/// Indexed operand whose `e`-th entry is component `component` of cell `e`.
/// No matrix data is copied.
pub fn build_pointer_table(cells: &[TensorBatch], component: usize) -> Result<BatchedOperand<'_>> {
    let table = cells
        .iter()
        .map(|cell| cell.component(component))
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchedOperand::indexed(table, table_ld(cells)))
}

/// Writable counterpart of [`build_pointer_table`].
pub fn build_pointer_table_mut(cells: &mut [TensorBatch], component: usize) -> Result<BatchedOperandMut<'_>> {
    let ld = table_ld(cells);
    let table = cells
        .iter_mut()
        .map(|cell| cell.component_mut(component))
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchedOperandMut::indexed(table, ld))
}

/// A batch of matrices copied back to back into one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedBatch {
    pub data: Vec<f64>,
    pub layout: Layout,
    pub rows: usize,
    pub cols: usize,
    pub ld: usize,
    pub span: usize,
    pub count: usize,
}

impl PackedBatch {
    pub fn operand(&self) -> BatchedOperand<'_> {
        BatchedOperand::strided(&self.data, self.ld, self.span)
    }

    pub fn operand_mut(&mut self) -> BatchedOperandMut<'_> {
        BatchedOperandMut::strided(&mut self.data, self.ld, self.span)
    }

    pub fn matrix(&self, e: usize) -> &[f64] {
        &self.data[e * self.span..(e + 1) * self.span]
    }
}

fn copy_matrix(
    layout: Layout,
    rows: usize,
    cols: usize,
    src: &[f64],
    ld_src: usize,
    dst: &mut [f64],
    ld_dst: usize,
) {
    let (outer, inner) = match layout {
        Layout::ColMajor => (cols, rows),
        Layout::RowMajor => (rows, cols),
    };
    for o in 0..outer {
        dst[o * ld_dst..o * ld_dst + inner].copy_from_slice(&src[o * ld_src..o * ld_src + inner]);
    }
}

/// Copies every matrix of an operand into one contiguous buffer with span
/// `span(dims, ld_out)`. Padding slots are zero.
pub fn pack_strided(
    source: &BatchedOperand<'_>,
    e_count: usize,
    layout: Layout,
    rows: usize,
    cols: usize,
    ld_out: usize,
) -> Result<PackedBatch> {
    let dims = OperandDims::new(layout, rows, cols);
    if ld_out < dims.min_ld || (e_count > 0 && source.ld() < dims.min_ld) {
        return Err(Error::LeadingDimension {
            operand: crate::spec::Operand::A,
            ld: ld_out.min(source.ld()),
            min: dims.min_ld,
        });
    }
    let extent = dims.extent(layout, source.ld().max(dims.min_ld));
    if let BatchedOperand::Indexed { table, .. } = source {
        if table.len() != e_count {
            return Err(Error::ShapeMismatch(format!(
                "pointer table has {} entries, batch size is {e_count}",
                table.len()
            )));
        }
    }
    for e in 0..e_count {
        let len = source.matrix(e).len();
        if len < extent {
            return Err(Error::ShapeMismatch(format!(
                "matrix {e} holds {len} scalars, needs {extent}"
            )));
        }
    }
    let span = dims.span(layout, ld_out);
    let total = span.checked_mul(e_count).ok_or(Error::Allocation(usize::MAX))?;
    let mut data = Vec::new();
    data.try_reserve_exact(total)
        .map_err(|_| Error::Allocation(total))?;
    data.resize(total, 0.0);
    for e in 0..e_count {
        copy_matrix(
            layout,
            rows,
            cols,
            source.matrix(e),
            source.ld(),
            &mut data[e * span..],
            ld_out,
        );
    }
    Ok(PackedBatch {
        data,
        layout,
        rows,
        cols,
        ld: ld_out,
        span,
        count: e_count,
    })
}

/// Writes the packed matrices back into `dest`, element `e` into matrix `e`.
/// Padding slots of the destination are left untouched.
pub fn unpack_strided(packed: &PackedBatch, dest: &mut BatchedOperandMut<'_>) -> Result<()> {
    let (layout, rows, cols) = (packed.layout, packed.rows, packed.cols);
    let dims = OperandDims::new(layout, rows, cols);
    let ld = dest.ld();
    if packed.count > 0 && ld < dims.min_ld {
        return Err(Error::LeadingDimension {
            operand: crate::spec::Operand::C,
            ld,
            min: dims.min_ld,
        });
    }
    if let BatchedOperandMut::Indexed { table, .. } = dest {
        if table.len() != packed.count {
            return Err(Error::ShapeMismatch(format!(
                "destination has {} matrices, packed batch has {}",
                table.len(),
                packed.count
            )));
        }
    }
    let extent = dims.extent(layout, ld);
    for e in 0..packed.count {
        let dst = dest.matrix_mut(e);
        if dst.len() < extent {
            return Err(Error::ShapeMismatch(format!(
                "destination matrix {e} holds {} scalars, needs {extent}",
                dst.len()
            )));
        }
        copy_matrix(layout, rows, cols, packed.matrix(e), packed.ld, dst, ld);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells(count: usize) -> Vec<TensorBatch> {
        (0..count)
            .map(|c| {
                let mut t = TensorBatch::zeros(Layout::ColMajor, 4, 2, 3);
                for (s, m) in t.components_mut().enumerate() {
                    for (i, x) in m.iter_mut().enumerate() {
                        *x = (c * 100 + s * 10 + i) as f64;
                    }
                }
                t
            })
            .collect()
    }

    #[test]
    fn pointer_table_in_cell_order() {
        let cs = cells(3);
        let op = build_pointer_table(&cs, 0).unwrap();
        let (table, ld) = op.indexed_parts();
        assert_eq!(ld, 2);
        assert_eq!(table.len(), 3);
        for (e, m) in table.iter().enumerate() {
            assert!(std::ptr::eq(*m, cs[e].component(0).unwrap()));
        }
    }

    #[test]
    fn component_out_of_range() {
        let cs = cells(2);
        assert!(matches!(
            build_pointer_table(&cs, 4),
            Err(Error::ComponentOutOfRange { component: 4, max: 3 })
        ));
    }

    #[test]
    fn permuted_cells_permute_table() {
        let cs = cells(3);
        let perm = vec![cs[2].clone(), cs[0].clone(), cs[1].clone()];
        let a = build_pointer_table(&cs, 1).unwrap();
        let b = build_pointer_table(&perm, 1).unwrap();
        assert_eq!(b.matrix(0), a.matrix(2));
        assert_eq!(b.matrix(1), a.matrix(0));
        assert_eq!(b.matrix(2), a.matrix(1));
    }

    #[test]
    fn pack_unpack_round_trip_with_padding() {
        let src = cells(5);
        let table = build_pointer_table(&src, 2).unwrap();
        let packed = pack_strided(&table, 5, Layout::ColMajor, 2, 3, 4).unwrap();
        assert_eq!(packed.span, 12);
        assert_eq!(packed.data.len(), 60);
        // padding rows are zero
        assert_eq!(&packed.matrix(1)[..4], &[120.0, 121.0, 0.0, 0.0]);

        let mut dst = cells(5);
        for t in &mut dst {
            for m in t.components_mut() {
                m.fill(f64::NAN);
            }
        }
        let mut out = build_pointer_table_mut(&mut dst, 2).unwrap();
        unpack_strided(&packed, &mut out).unwrap();
        drop(out);
        for (a, b) in src.iter().zip(&dst) {
            let a: Vec<u64> = a.component(2).unwrap().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = b.component(2).unwrap().iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_matrix_pack_is_the_matrix() {
        let src = cells(1);
        let table = build_pointer_table(&src, 3).unwrap();
        let packed = pack_strided(&table, 1, Layout::ColMajor, 2, 3, 2).unwrap();
        assert_eq!(packed.data.as_slice(), src[0].component(3).unwrap());
    }
}
