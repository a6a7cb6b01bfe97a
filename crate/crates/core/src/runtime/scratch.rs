use crate::error::{Error, Result};

/// Growable, 64-byte aligned scratch storage for intermediate matrices of a
/// batched kernel chain. Grows geometrically and never shrinks on its own.
#[derive(Debug, Default)]
pub struct ScratchBuffer {
    raw: Vec<f64>,
    offset: usize,
    capacity: usize,
    allocations: usize,
}

impl ScratchBuffer {
    pub const ALIGN: usize = 64;
    const PAD: usize = Self::ALIGN / std::mem::size_of::<f64>() - 1;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(scalars: usize) -> Result<Self> {
        let mut buf = Self::new();
        buf.grow_to(scalars)?;
        Ok(buf)
    }

    /// Usable scalar slots.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of reallocations performed so far.
    pub fn allocations(&self) -> usize {
        self.allocations
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.raw[self.offset..self.offset + self.capacity]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.raw[self.offset..self.offset + self.capacity]
    }

    /// Makes room for `e_count * per_element` scalars.
    pub fn ensure(&mut self, e_count: usize, per_element: usize) -> Result<()> {
        let needed = e_count
            .checked_mul(per_element)
            .ok_or(Error::Allocation(usize::MAX))?;
        if needed <= self.capacity {
            return Ok(());
        }
        self.grow_to(needed.max(self.capacity.saturating_mul(2)))
    }

    fn grow_to(&mut self, scalars: usize) -> Result<()> {
        if scalars == 0 {
            return Ok(());
        }
        let total = scalars.checked_add(Self::PAD).ok_or(Error::Allocation(scalars))?;
        let mut raw: Vec<f64> = Vec::new();
        raw.try_reserve_exact(total)
            .map_err(|_| Error::Allocation(scalars))?;
        raw.resize(total, 0.0);
        let offset = raw.as_ptr().align_offset(Self::ALIGN);
        debug_assert!(offset <= Self::PAD);
        self.raw = raw;
        self.offset = offset;
        self.capacity = scalars;
        self.allocations += 1;
        Ok(())
    }
}

pub fn ensure_scratch(buffer: &mut ScratchBuffer, e_count: usize, per_element: usize) -> Result<()> {
    buffer.ensure(e_count, per_element)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_ensure_is_free() {
        let mut buf = ScratchBuffer::new();
        ensure_scratch(&mut buf, 10_000, 180).unwrap();
        assert_eq!(buf.allocations(), 1);
        ensure_scratch(&mut buf, 10_000, 180).unwrap();
        assert_eq!(buf.allocations(), 1);
        assert!(buf.capacity() >= 1_800_000);
    }

    #[test]
    fn zero_elements() {
        let mut buf = ScratchBuffer::new();
        ensure_scratch(&mut buf, 0, 90).unwrap();
        assert_eq!(buf.allocations(), 0);
        assert!(buf.as_slice().is_empty());
    }

    #[test]
    fn aligned_and_growing_geometrically() {
        let mut buf = ScratchBuffer::new();
        buf.ensure(10, 9).unwrap();
        assert_eq!(buf.as_slice().as_ptr() as usize % ScratchBuffer::ALIGN, 0);
        buf.ensure(11, 9).unwrap();
        assert_eq!(buf.capacity(), 180);
        assert_eq!(buf.as_mut_slice().as_ptr() as usize % ScratchBuffer::ALIGN, 0);
        buf.ensure(1, 1).unwrap();
        assert_eq!(buf.capacity(), 180);
    }

    #[test]
    fn overflow_is_an_allocation_error() {
        let mut buf = ScratchBuffer::new();
        assert!(matches!(buf.ensure(usize::MAX, 2), Err(Error::Allocation(_))));
    }
}
