use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::runtime::{BatchedOperand, BatchedOperandMut};
use crate::spec::{AccessKind, KernelSpec, Layout, Operand};

/// Owned storage behind one batched operand.
#[derive(Debug, Clone, PartialEq)]
pub enum OperandData {
    Constant {
        data: Vec<f64>,
        ld: usize,
    },
    Strided {
        data: Vec<f64>,
        ld: usize,
        span: usize,
    },
    /// One separately allocated matrix per element.
    Indexed {
        matrices: Vec<Vec<f64>>,
        ld: usize,
    },
}

impl OperandData {
    /// Random operand of `spec`'s kind for `which`, minimal leading
    /// dimension, values uniform in `[-1, 1]`.
    pub fn random(spec: &KernelSpec, which: Operand, e_count: usize, rng: &mut impl Rng) -> Self {
        let dims = spec.dims(which);
        let ld = dims.min_ld;
        let span = dims.span(spec.layout, ld);
        let mut fill = |len: usize| (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect::<Vec<f64>>();
        match spec.access(which) {
            AccessKind::Constant => OperandData::Constant { data: fill(span), ld },
            AccessKind::Strided => OperandData::Strided {
                data: fill(span * e_count),
                ld,
                span,
            },
            AccessKind::Indexed => OperandData::Indexed {
                matrices: (0..e_count).map(|_| fill(span)).collect(),
                ld,
            },
        }
    }

    pub fn view(&self) -> BatchedOperand<'_> {
        match self {
            OperandData::Constant { data, ld } => BatchedOperand::constant(data, *ld),
            OperandData::Strided { data, ld, span } => BatchedOperand::strided(data, *ld, *span),
            OperandData::Indexed { matrices, ld } => {
                BatchedOperand::indexed(matrices.iter().map(Vec::as_slice).collect(), *ld)
            }
        }
    }

    pub fn view_mut(&mut self) -> BatchedOperandMut<'_> {
        match self {
            OperandData::Constant { data, ld } => BatchedOperandMut::constant(data, *ld),
            OperandData::Strided { data, ld, span } => BatchedOperandMut::strided(data, *ld, *span),
            OperandData::Indexed { matrices, ld } => {
                BatchedOperandMut::indexed(matrices.iter_mut().map(Vec::as_mut_slice).collect(), *ld)
            }
        }
    }

    /// Every stored scalar, in storage order.
    pub fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            OperandData::Constant { data, .. } | OperandData::Strided { data, .. } => {
                Box::new(data.iter().copied())
            }
            OperandData::Indexed { matrices, .. } => Box::new(matrices.iter().flatten().copied()),
        }
    }
}

/// Random A, B and C for one spec and batch size.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub spec: KernelSpec,
    pub e_count: usize,
    pub a: OperandData,
    pub b: OperandData,
    pub c: OperandData,
}

impl Workload {
    pub fn random(spec: &KernelSpec, e_count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = OperandData::random(spec, Operand::A, e_count, &mut rng);
        let b = OperandData::random(spec, Operand::B, e_count, &mut rng);
        let c = OperandData::random(spec, Operand::C, e_count, &mut rng);
        Workload {
            spec: *spec,
            e_count,
            a,
            b,
            c,
        }
    }

    pub fn layout(&self) -> Layout {
        self.spec.layout
    }
}

/// Largest element-wise `|x - y|`; NaN if any difference is NaN.
pub fn max_abs_diff(x: &OperandData, y: &OperandData) -> f64 {
    let mut max = 0.0f64;
    for (p, q) in x.values().zip(y.values()) {
        let d = (p - q).abs();
        if d.is_nan() {
            return f64::NAN;
        }
        max = max.max(d);
    }
    max
}
