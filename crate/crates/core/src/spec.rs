//! Kernel vocabulary: layouts, access kinds, shapes and the naming scheme
//! `bbdgemm_<Layout>_<N>_<M>_<K>_<abc>` that identifies one generated kernel.
//!
//! Dimensions follow the batched API convention: `C` is `n x m`, `A` is
//! `n x k` and `B` is `k x m`. The access suffix always lists `A`, `B`, `C`
//! in that order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Upper bound on any single dimension accepted by the code generator.
pub const DEFAULT_MAX_DIM: usize = 64;

const NAME_PREFIX: &str = "bbdgemm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layout {
    ColMajor,
    RowMajor,
}

impl Layout {
    pub const ALL: [Layout; 2] = [Layout::ColMajor, Layout::RowMajor];

    pub fn as_str(self) -> &'static str {
        match self {
            Layout::ColMajor => "ColMajor",
            Layout::RowMajor => "RowMajor",
        }
    }

    /// Offset of element `(row, col)` in a matrix with leading dimension `ld`.
    #[inline(always)]
    pub fn offset(self, row: usize, col: usize, ld: usize) -> usize {
        match self {
            Layout::ColMajor => col * ld + row,
            Layout::RowMajor => row * ld + col,
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layout {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "ColMajor" => Ok(Layout::ColMajor),
            "RowMajor" => Ok(Layout::RowMajor),
            _ => Err(()),
        }
    }
}

/// How the matrices of one operand are reached across the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AccessKind {
    /// One matrix shared by every batch element.
    Constant,
    /// Batch elements stored back to back with a fixed span.
    Strided,
    /// Batch elements reached through a table of per-element matrices.
    Indexed,
}

impl AccessKind {
    pub const ALL: [AccessKind; 3] = [AccessKind::Constant, AccessKind::Strided, AccessKind::Indexed];

    pub fn letter(self) -> char {
        match self {
            AccessKind::Constant => 'c',
            AccessKind::Strided => 's',
            AccessKind::Indexed => 'i',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'c' => Some(AccessKind::Constant),
            's' => Some(AccessKind::Strided),
            'i' => Some(AccessKind::Indexed),
            _ => None,
        }
    }
}

/// One of the three GEMM operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    A,
    B,
    C,
}

impl Operand {
    pub const ALL: [Operand; 3] = [Operand::A, Operand::B, Operand::C];
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operand::A => "A",
            Operand::B => "B",
            Operand::C => "C",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelShape {
    n: usize,
    m: usize,
    k: usize,
}

impl KernelShape {
    pub fn new(n: usize, m: usize, k: usize) -> Result<Self> {
        for (label, v) in [("N", n), ("M", m), ("K", k)] {
            if v == 0 {
                return Err(Error::InvalidShape(format!("{label} must be >= 1")));
            }
        }
        Ok(KernelShape { n, m, k })
    }

    /// Rows of `C` and `A`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Columns of `C` and `B`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Columns of `A`, rows of `B`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn largest_dim(&self) -> usize {
        self.n.max(self.m).max(self.k)
    }

    pub fn check_bound(&self, max_dim: usize) -> Result<()> {
        let dim = self.largest_dim();
        if dim > max_dim {
            return Err(Error::ShapeBound { dim, max: max_dim });
        }
        Ok(())
    }

    /// Floating point operations of one GEMM of this shape.
    pub fn flops(&self) -> u64 {
        2 * (self.n * self.m * self.k) as u64
    }
}

/// Row/column counts of one operand plus the smallest legal leading dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperandDims {
    pub rows: usize,
    pub cols: usize,
    pub min_ld: usize,
}

impl OperandDims {
    pub fn new(layout: Layout, rows: usize, cols: usize) -> Self {
        let min_ld = match layout {
            Layout::ColMajor => rows,
            Layout::RowMajor => cols,
        };
        OperandDims { rows, cols, min_ld }
    }

    /// Smallest buffer length that holds the matrix at leading dimension `ld`.
    pub fn extent(&self, layout: Layout, ld: usize) -> usize {
        match layout {
            Layout::ColMajor => (self.cols - 1) * ld + self.rows,
            Layout::RowMajor => (self.rows - 1) * ld + self.cols,
        }
    }

    /// Scalar slots one matrix occupies when stored back to back.
    pub fn span(&self, layout: Layout, ld: usize) -> usize {
        match layout {
            Layout::ColMajor => self.cols * ld,
            Layout::RowMajor => self.rows * ld,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Identity of one generated kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelSpec {
    pub layout: Layout,
    pub shape: KernelShape,
    pub access_a: AccessKind,
    pub access_b: AccessKind,
    pub access_c: AccessKind,
}

impl KernelSpec {
    pub fn new(layout: Layout, shape: KernelShape, access: [AccessKind; 3]) -> Self {
        KernelSpec {
            layout,
            shape,
            access_a: access[0],
            access_b: access[1],
            access_c: access[2],
        }
    }

    /// `KernelSpec::from_parts(Layout::ColMajor, 2, 3, 4, "cis")`.
    pub fn from_parts(layout: Layout, n: usize, m: usize, k: usize, access: &str) -> Result<Self> {
        let shape = KernelShape::new(n, m, k)?;
        let access = parse_access(access)
            .ok_or_else(|| Error::InvalidShape(format!("bad access string `{access}`")))?;
        Ok(KernelSpec::new(layout, shape, access))
    }

    pub fn access(&self, which: Operand) -> AccessKind {
        match which {
            Operand::A => self.access_a,
            Operand::B => self.access_b,
            Operand::C => self.access_c,
        }
    }

    pub fn access_suffix(&self) -> String {
        [self.access_a, self.access_b, self.access_c]
            .iter()
            .map(|a| a.letter())
            .collect()
    }

    pub fn name(&self) -> String {
        kernel_name(self)
    }

    pub fn dims(&self, which: Operand) -> OperandDims {
        operand_dims(self, which)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{NAME_PREFIX}_{}_{}_{}_{}_{}",
            self.layout,
            self.shape.n,
            self.shape.m,
            self.shape.k,
            self.access_suffix()
        )
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_kernel_name(s)
    }
}

pub(crate) fn parse_access(s: &str) -> Option<[AccessKind; 3]> {
    let mut chars = s.chars();
    let mut out = [AccessKind::Constant; 3];
    for slot in &mut out {
        *slot = AccessKind::from_letter(chars.next()?)?;
    }
    chars.next().is_none().then_some(out)
}

pub fn kernel_name(spec: &KernelSpec) -> String {
    spec.to_string()
}

pub fn parse_kernel_name(name: &str) -> Result<KernelSpec> {
    let err = |token: &str, reason| Error::MalformedName {
        name: name.to_string(),
        token: token.to_string(),
        reason,
    };

    let fields: Vec<&str> = name.split('_').collect();
    if fields.len() != 6 {
        return Err(err(name, "expected 6 underscore-separated fields"));
    }
    if fields[0] != NAME_PREFIX {
        return Err(err(fields[0], "bad prefix"));
    }
    let layout: Layout = fields[1].parse().map_err(|_| err(fields[1], "unknown layout"))?;

    let mut dims = [0usize; 3];
    for (slot, token) in dims.iter_mut().zip(&fields[2..5]) {
        let canonical =
            !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) && !token.starts_with('0');
        if !canonical {
            return Err(err(token, "dimension is not a positive decimal integer"));
        }
        *slot = token.parse().map_err(|_| err(token, "dimension out of range"))?;
    }

    let suffix = fields[5];
    let mut access = [AccessKind::Constant; 3];
    let mut letters = suffix.chars();
    for slot in &mut access {
        let Some(c) = letters.next() else {
            return Err(err(suffix, "access suffix needs three letters"));
        };
        *slot = AccessKind::from_letter(c).ok_or_else(|| {
            let mut buf = [0u8; 4];
            err(c.encode_utf8(&mut buf), "unknown suffix letter")
        })?;
    }
    if letters.next().is_some() {
        return Err(err(suffix, "access suffix needs three letters"));
    }

    let shape = KernelShape::new(dims[0], dims[1], dims[2])?;
    Ok(KernelSpec::new(layout, shape, access))
}

pub fn operand_dims(spec: &KernelSpec, which: Operand) -> OperandDims {
    let KernelShape { n, m, k } = spec.shape;
    let (rows, cols) = match which {
        Operand::A => (n, k),
        Operand::B => (k, m),
        Operand::C => (n, m),
    };
    OperandDims::new(spec.layout, rows, cols)
}

/// Scalar slots one batch element occupies in a strided operand with
/// leading dimension `ld`.
pub fn matrix_span(spec: &KernelSpec, which: Operand, ld: usize) -> Result<usize> {
    let dims = operand_dims(spec, which);
    if ld < dims.min_ld {
        return Err(Error::LeadingDimension {
            operand: which,
            ld,
            min: dims.min_ld,
        });
    }
    Ok(dims.span(spec.layout, ld))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(layout: Layout, n: usize, m: usize, k: usize, acc: &str) -> KernelSpec {
        KernelSpec::from_parts(layout, n, m, k, acc).unwrap()
    }

    #[test]
    fn names_match_batched_api() {
        assert_eq!(
            kernel_name(&spec(Layout::ColMajor, 2, 3, 4, "cis")),
            "bbdgemm_ColMajor_2_3_4_cis"
        );
        assert_eq!(
            kernel_name(&spec(Layout::ColMajor, 2, 2, 2, "cis")),
            "bbdgemm_ColMajor_2_2_2_cis"
        );
        assert_eq!(
            kernel_name(&spec(Layout::RowMajor, 1, 1, 1, "sss")),
            "bbdgemm_RowMajor_1_1_1_sss"
        );
    }

    #[test]
    fn parse_sample_name() {
        let s = parse_kernel_name("bbdgemm_ColMajor_2_3_4_cis").unwrap();
        assert_eq!(s.layout, Layout::ColMajor);
        assert_eq!((s.shape.n(), s.shape.m(), s.shape.k()), (2, 3, 4));
        assert_eq!(s.access_a, AccessKind::Constant);
        assert_eq!(s.access_b, AccessKind::Indexed);
        assert_eq!(s.access_c, AccessKind::Strided);
    }

    fn malformed_token(name: &str) -> String {
        match parse_kernel_name(name) {
            Err(Error::MalformedName { token, .. }) => token,
            other => panic!("expected malformed-name error for {name}, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_name_the_token() {
        assert_eq!(malformed_token("bbdgemm_ColMajor_2_3_4_cix"), "x");
        assert_eq!(malformed_token("bbsgemm_ColMajor_2_3_4_cis"), "bbsgemm");
        assert_eq!(malformed_token("bbdgemm_Diag_2_3_4_cis"), "Diag");
        assert_eq!(malformed_token("bbdgemm_ColMajor_2_x_4_cis"), "x");
        assert_eq!(malformed_token("bbdgemm_ColMajor_2_03_4_cis"), "03");
        assert_eq!(malformed_token("bbdgemm_ColMajor_2_3_4_ci"), "ci");
        assert_eq!(malformed_token("bbdgemm_ColMajor_2_3_4_ciss"), "ciss");
        assert_eq!(
            malformed_token("bbdgemm_ColMajor_2_3_cis"),
            "bbdgemm_ColMajor_2_3_cis"
        );
        assert!(matches!(
            parse_kernel_name("bbdgemm_ColMajor_0_3_4_cis"),
            Err(Error::MalformedName { .. })
        ));
    }

    #[test]
    fn operand_dims_follow_layout() {
        let cm = spec(Layout::ColMajor, 2, 3, 4, "cis");
        assert_eq!(
            operand_dims(&cm, Operand::A),
            OperandDims {
                rows: 2,
                cols: 4,
                min_ld: 2
            }
        );
        assert_eq!(
            operand_dims(&cm, Operand::C),
            OperandDims {
                rows: 2,
                cols: 3,
                min_ld: 2
            }
        );
        let rm = spec(Layout::RowMajor, 2, 3, 4, "cis");
        assert_eq!(
            operand_dims(&rm, Operand::B),
            OperandDims {
                rows: 4,
                cols: 3,
                min_ld: 3
            }
        );
    }

    #[test]
    fn matrix_span_per_layout() {
        let s222 = spec(Layout::ColMajor, 2, 2, 2, "cis");
        assert_eq!(matrix_span(&s222, Operand::C, 2).unwrap(), 4);
        let s234 = spec(Layout::ColMajor, 2, 3, 4, "cis");
        assert_eq!(matrix_span(&s234, Operand::C, 2).unwrap(), 6);
        assert!(matches!(
            matrix_span(&s234, Operand::C, 1),
            Err(Error::LeadingDimension { ld: 1, min: 2, .. })
        ));
        let rm = spec(Layout::RowMajor, 2, 3, 4, "sss");
        assert_eq!(matrix_span(&rm, Operand::A, 5).unwrap(), 10);
    }

    #[test]
    fn shape_bound() {
        let shape = KernelShape::new(65, 1, 1).unwrap();
        assert!(matches!(
            shape.check_bound(DEFAULT_MAX_DIM),
            Err(Error::ShapeBound { dim: 65, max: 64 })
        ));
        assert!(KernelShape::new(1, 0, 1).is_err());
    }

    pub(crate) fn arb_spec(max_dim: usize) -> impl Strategy<Value = KernelSpec> {
        let layout = prop_oneof![Just(Layout::ColMajor), Just(Layout::RowMajor)];
        let kind = prop_oneof![
            Just(AccessKind::Constant),
            Just(AccessKind::Strided),
            Just(AccessKind::Indexed)
        ];
        (
            layout,
            1..=max_dim,
            1..=max_dim,
            1..=max_dim,
            [kind.clone(), kind.clone(), kind],
        )
            .prop_map(|(layout, n, m, k, access)| {
                KernelSpec::new(layout, KernelShape::new(n, m, k).unwrap(), access)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn name_round_trip(s in arb_spec(DEFAULT_MAX_DIM)) {
            prop_assert_eq!(parse_kernel_name(&kernel_name(&s)).unwrap(), s);
        }

        #[test]
        fn dims_are_gemm_conformant(s in arb_spec(16)) {
            let a = operand_dims(&s, Operand::A);
            let b = operand_dims(&s, Operand::B);
            let c = operand_dims(&s, Operand::C);
            prop_assert_eq!(a.cols, b.rows);
            prop_assert_eq!(a.rows, c.rows);
            prop_assert_eq!(b.cols, c.cols);
        }
    }
}
