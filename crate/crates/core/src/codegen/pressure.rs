//! Static register-pressure heuristic for the unrolled kernel schema.
//!
//! Under vectorization across the batch every per-element value (`vA`,
//! `vB`, `rC`) occupies one vector register, except a constant `A` whose
//! elements are broadcast scalars. Peak liveness is the sum of all such
//! values; whatever exceeds the register file is counted as a spill. The
//! model ignores rematerialization and temporaries and only promises
//! monotonicity and the zero-spill regime for small shapes.

use crate::spec::{AccessKind, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineModel {
    pub vector_regs: usize,
    pub scalar_fp_regs: usize,
}

impl MachineModel {
    pub const fn new(vector_regs: usize, scalar_fp_regs: usize) -> Self {
        MachineModel {
            vector_regs,
            scalar_fp_regs,
        }
    }

    /// 32 vector and 32 scalar floating point registers.
    pub const fn riscv() -> Self {
        MachineModel::new(32, 32)
    }

    /// 32 vector and 16 scalar floating point registers.
    pub const fn x86_64() -> Self {
        MachineModel::new(32, 16)
    }
}

impl Default for MachineModel {
    fn default() -> Self {
        MachineModel::riscv()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PressureReport {
    pub scalar_live: usize,
    pub vector_live: usize,
    pub predicted_spills: usize,
}

pub fn estimate_pressure(spec: &KernelSpec, model: MachineModel) -> PressureReport {
    let (n, m, k) = (spec.shape.n(), spec.shape.m(), spec.shape.k());
    let (scalar_live, vector_live) = if spec.access_a == AccessKind::Constant {
        (n * k, k * m + n * m)
    } else {
        (0, n * k + k * m + n * m)
    };
    let predicted_spills =
        vector_live.saturating_sub(model.vector_regs) + scalar_live.saturating_sub(model.scalar_fp_regs);
    PressureReport {
        scalar_live,
        vector_live,
        predicted_spills,
    }
}
