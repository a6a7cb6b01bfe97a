use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use super::operand::{BatchedOperand, BatchedOperandMut};
use crate::error::Result;
use crate::reference::{batched_ref, GemmScalars};
use crate::spec::{parse_kernel_name, KernelSpec, Operand};

/// Signature shared by every generated kernel.
pub type KernelFn = fn(usize, f64, &BatchedOperand<'_>, &BatchedOperand<'_>, f64, &mut BatchedOperandMut<'_>);

/// One row of a generated dispatch table.
#[derive(Clone, Copy)]
pub struct KernelEntry {
    pub name: &'static str,
    pub kernel: KernelFn,
}

impl fmt::Debug for KernelEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelEntry").field("name", &self.name).finish()
    }
}

/// Which implementation served a [`Dispatcher::run_batched`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecPath {
    Generated,
    Fallback,
    /// `E == 0`: nothing to do.
    Empty,
}

/// Immutable name-to-kernel registry with a reference fallback.
///
/// Kernels missing from the table are served by [`batched_ref`]; every such
/// call bumps [`fallback_count`](Dispatcher::fallback_count) so benchmarks can
/// tell when they did not measure a generated kernel.
pub struct Dispatcher {
    table: HashMap<KernelSpec, KernelFn>,
    registry: Vec<&'static str>,
    fallbacks: AtomicU64,
}

impl fmt::Debug for Dispatcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dispatcher")
            .field("kernels", &self.registry.len())
            .field("fallbacks", &self.fallback_count())
            .finish()
    }
}

impl Dispatcher {
    pub fn empty() -> Self {
        Dispatcher {
            table: HashMap::new(),
            registry: Vec::new(),
            fallbacks: AtomicU64::new(0),
        }
    }

    pub fn new(entries: &[KernelEntry]) -> Result<Self> {
        Self::from_tables(&[entries])
    }

    /// Merges several generated tables. The first occurrence of a name wins.
    pub fn from_tables(tables: &[&[KernelEntry]]) -> Result<Self> {
        let mut d = Dispatcher::empty();
        for entry in tables.iter().flat_map(|t| t.iter()) {
            let spec = parse_kernel_name(entry.name)?;
            if let std::collections::hash_map::Entry::Vacant(v) = d.table.entry(spec) {
                v.insert(entry.kernel);
                d.registry.push(entry.name);
            }
        }
        Ok(d)
    }

    pub fn lookup(&self, spec: &KernelSpec) -> Option<KernelFn> {
        self.table.get(spec).copied()
    }

    pub fn contains(&self, spec: &KernelSpec) -> bool {
        self.table.contains_key(spec)
    }

    /// Names of all registered kernels, in table order.
    pub fn registry(&self) -> &[&'static str] {
        &self.registry
    }

    pub fn len(&self) -> usize {
        self.registry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registry.is_empty()
    }

    pub fn fallback_count(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    /// Runs `e_count` GEMMs `C := alpha * A * B + beta * C` through the
    /// kernel registered for `spec`, or the reference if none is.
    #[allow(clippy::too_many_arguments)]
    pub fn run_batched(
        &self,
        spec: &KernelSpec,
        e_count: usize,
        alpha: f64,
        a: &BatchedOperand<'_>,
        b: &BatchedOperand<'_>,
        beta: f64,
        c: &mut BatchedOperandMut<'_>,
    ) -> Result<ExecPath> {
        a.validate(spec, Operand::A, e_count)?;
        b.validate(spec, Operand::B, e_count)?;
        c.validate(spec, Operand::C, e_count)?;
        if e_count == 0 {
            return Ok(ExecPath::Empty);
        }
        match self.lookup(spec) {
            Some(kernel) => {
                kernel(e_count, alpha, a, b, beta, c);
                Ok(ExecPath::Generated)
            }
            None => {
                self.fallbacks.fetch_add(1, Ordering::Relaxed);
                log::debug!("no generated kernel for {spec}, using reference");
                batched_ref(spec, e_count, GemmScalars::new(alpha, beta), a, b, c)?;
                Ok(ExecPath::Fallback)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::spec::Layout;

    fn scale_c(
        e: usize,
        alpha: f64,
        _a: &BatchedOperand<'_>,
        _b: &BatchedOperand<'_>,
        _beta: f64,
        c: &mut BatchedOperandMut<'_>,
    ) {
        let (c, _, span) = c.strided_parts();
        for x in &mut c[..e * span] {
            *x = alpha;
        }
    }

    static TABLE: &[KernelEntry] = &[KernelEntry {
        name: "bbdgemm_ColMajor_1_1_1_ccs",
        kernel: scale_c,
    }];

    #[test]
    fn table_hit_and_fallback() {
        let d = Dispatcher::new(TABLE).unwrap();
        assert_eq!(d.registry(), ["bbdgemm_ColMajor_1_1_1_ccs"]);
        let hit = KernelSpec::from_parts(Layout::ColMajor, 1, 1, 1, "ccs").unwrap();
        let a = [2.0];
        let b = [3.0];
        let mut c = [0.0; 3];
        let path = d
            .run_batched(
                &hit,
                3,
                7.0,
                &BatchedOperand::constant(&a, 1),
                &BatchedOperand::constant(&b, 1),
                0.0,
                &mut BatchedOperandMut::strided(&mut c, 1, 1),
            )
            .unwrap();
        assert_eq!(path, ExecPath::Generated);
        assert_eq!(c, [7.0; 3]);
        assert_eq!(d.fallback_count(), 0);

        let miss = KernelSpec::from_parts(Layout::RowMajor, 1, 1, 1, "ccs").unwrap();
        let path = d
            .run_batched(
                &miss,
                3,
                1.0,
                &BatchedOperand::constant(&a, 1),
                &BatchedOperand::constant(&b, 1),
                0.0,
                &mut BatchedOperandMut::strided(&mut c, 1, 1),
            )
            .unwrap();
        assert_eq!(path, ExecPath::Fallback);
        assert_eq!(c, [6.0; 3]);
        assert_eq!(d.fallback_count(), 1);
    }

    #[test]
    fn empty_batch_is_not_a_fallback() {
        let d = Dispatcher::empty();
        let spec = KernelSpec::from_parts(Layout::ColMajor, 2, 2, 2, "cis").unwrap();
        let mut c: [f64; 0] = [];
        let path = d
            .run_batched(
                &spec,
                0,
                1.0,
                &BatchedOperand::constant(&[], 2),
                &BatchedOperand::indexed(vec![], 2),
                0.0,
                &mut BatchedOperandMut::strided(&mut c, 2, 4),
            )
            .unwrap();
        assert_eq!(path, ExecPath::Empty);
        assert_eq!(d.fallback_count(), 0);
    }

    #[test]
    fn operand_kind_mismatch_is_an_error() {
        let d = Dispatcher::empty();
        let spec = KernelSpec::from_parts(Layout::ColMajor, 1, 1, 1, "cis").unwrap();
        let x = [1.0];
        let mut c = [0.0];
        let err = d
            .run_batched(
                &spec,
                1,
                1.0,
                &BatchedOperand::constant(&x, 1),
                &BatchedOperand::strided(&x, 1, 1),
                0.0,
                &mut BatchedOperandMut::strided(&mut c, 1, 1),
            )
            .unwrap_err();
        assert!(matches!(
            err,
            Error::OperandKind {
                operand: Operand::B,
                ..
            }
        ));
        assert_eq!(d.fallback_count(), 0);
    }

    #[test]
    fn bad_table_name_is_rejected() {
        static BAD: &[KernelEntry] = &[KernelEntry {
            name: "sgemm_1_1_1",
            kernel: scale_c,
        }];
        assert!(Dispatcher::new(BAD).is_err());
    }
}
