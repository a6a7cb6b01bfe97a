use std::time::{Duration, Instant};

use super::config::{Binding, ChainPlan, ChainStep, Mode, ProxyConfig, TensorId};
use super::state::ProxyState;
use crate::error::{Error, Result};
use crate::reference::dgemm_ref;
use crate::runtime::{
    build_pointer_table, build_pointer_table_mut, ensure_scratch, BatchedOperand, BatchedOperandMut,
    Dispatcher, ScratchBuffer, TensorBatch,
};

/// Shared part of the state for one step. The step's output tensor, if it
/// has one, is split off mutably and is `None` here.
struct Inputs<'a> {
    plan: &'a ChainPlan,
    globals: &'a [Vec<f64>],
    tensors: [Option<&'a [TensorBatch]>; 2],
}

impl<'a> Inputs<'a> {
    fn tensor(&self, id: TensorId) -> &'a [TensorBatch] {
        self.tensors[id.index()].expect("a validated chain never reads its output")
    }

    fn global(&self, name: &str) -> (&'a [f64], usize) {
        let i = self.plan.global_index(name).expect("globals are planned");
        (&self.globals[i], self.plan.globals[i].dims.min_ld)
    }

    /// One cell's matrix and its leading dimension.
    fn matrix<'s>(
        &self,
        b: &Binding,
        cell: usize,
        comp: usize,
        scratch: &'s [f64],
    ) -> Result<(&'s [f64], usize)>
    where
        'a: 's,
    {
        Ok(match b {
            Binding::Global(name) => self.global(name),
            Binding::Tensor(id) => {
                let t = &self.tensor(*id)[cell];
                (t.component(comp)?, t.ld())
            }
            Binding::Scratch => (scratch, self.plan.scratch_ld()),
        })
    }

    /// All cells' matrices as one batched operand.
    fn operand<'s>(&self, b: &Binding, comp: usize, scratch: &'s [f64]) -> Result<BatchedOperand<'s>>
    where
        'a: 's,
    {
        Ok(match b {
            Binding::Global(name) => {
                let (data, ld) = self.global(name);
                BatchedOperand::constant(data, ld)
            }
            Binding::Tensor(id) => build_pointer_table(self.tensor(*id), comp)?,
            Binding::Scratch => {
                BatchedOperand::strided(scratch, self.plan.scratch_ld(), self.plan.scratch_per_element())
            }
        })
    }
}

fn split<'a>(state: &'a mut ProxyState, out: &Binding) -> (Inputs<'a>, Option<&'a mut [TensorBatch]>) {
    let [dq, dq_out] = &mut state.tensors;
    let (dq, dq_out) = (dq.as_mut_slice(), dq_out.as_mut_slice());
    let (tensors, out) = match out {
        Binding::Tensor(TensorId::Dq) => ([None, Some(&*dq_out)], Some(dq)),
        Binding::Tensor(TensorId::DqOut) => ([Some(&*dq), None], Some(dq_out)),
        _ => ([Some(&*dq), Some(&*dq_out)], None),
    };
    let inputs = Inputs {
        plan: &state.plan,
        globals: &state.globals,
        tensors,
    };
    (inputs, out)
}

/// Per-cell loop: cells outermost, then components, then the chain, each
/// GEMM through [`dgemm_ref`] with a scratch matrix private to the cell.
pub fn compute_local_integration_ref(config: &ProxyConfig, state: &mut ProxyState) -> Result<()> {
    let mut scratch = vec![0.0; state.plan.scratch_per_element()];
    let scratch_ld = state.plan.scratch_ld();
    for cell in 0..state.cells() {
        for comp in 0..state.components {
            for step in &config.chain {
                let (n, m, k) = (step.spec.shape.n(), step.spec.shape.m(), step.spec.shape.k());
                let layout = step.spec.layout;
                let (inputs, out) = split(state, &step.c);
                match out {
                    Some(out) => {
                        let t = &mut out[cell];
                        let ldc = t.ld();
                        let c = t.component_mut(comp)?;
                        let (a, lda) = inputs.matrix(&step.a, cell, comp, &scratch)?;
                        let (b, ldb) = inputs.matrix(&step.b, cell, comp, &scratch)?;
                        dgemm_ref(layout, n, m, k, step.alpha, a, lda, b, ldb, step.beta, c, ldc)?;
                    }
                    None => {
                        let (a, lda) = inputs.matrix(&step.a, cell, comp, &[])?;
                        let (b, ldb) = inputs.matrix(&step.b, cell, comp, &[])?;
                        dgemm_ref(
                            layout,
                            n,
                            m,
                            k,
                            step.alpha,
                            a,
                            lda,
                            b,
                            ldb,
                            step.beta,
                            &mut scratch,
                            scratch_ld,
                        )?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Loop-interchanged variant: components outermost, then the chain, with one
/// [`Dispatcher::run_batched`] call per step covering every cell. Returns the
/// number of batched calls made.
pub fn compute_local_integration_batched(
    config: &ProxyConfig,
    state: &mut ProxyState,
    scratch: &mut ScratchBuffer,
    dispatcher: &Dispatcher,
) -> Result<usize> {
    let cells = state.cells();
    let needed = cells * state.plan.scratch_per_element();
    if scratch.capacity() < needed {
        return Err(Error::ScratchTooSmall {
            capacity: scratch.capacity(),
            needed,
        });
    }
    let scratch = &mut scratch.as_mut_slice()[..needed];
    let mut calls = 0;
    for comp in 0..state.components {
        for step in &config.chain {
            run_step(step, state, comp, scratch, dispatcher)?;
            calls += 1;
        }
    }
    Ok(calls)
}

fn run_step(
    step: &ChainStep,
    state: &mut ProxyState,
    comp: usize,
    scratch: &mut [f64],
    dispatcher: &Dispatcher,
) -> Result<()> {
    let cells = state.cells();
    let (inputs, out) = split(state, &step.c);
    match out {
        Some(out) => {
            let a = inputs.operand(&step.a, comp, scratch)?;
            let b = inputs.operand(&step.b, comp, scratch)?;
            let mut c = build_pointer_table_mut(out, comp)?;
            dispatcher.run_batched(&step.spec, cells, step.alpha, &a, &b, step.beta, &mut c)?;
        }
        None => {
            let a = inputs.operand(&step.a, comp, &[])?;
            let b = inputs.operand(&step.b, comp, &[])?;
            let (ld, span) = (inputs.plan.scratch_ld(), inputs.plan.scratch_per_element());
            let mut c = BatchedOperandMut::strided(scratch, ld, span);
            dispatcher.run_batched(&step.spec, cells, step.alpha, &a, &b, step.beta, &mut c)?;
        }
    }
    Ok(())
}

/// Outcome of [`run_proxy`].
#[derive(Debug)]
pub struct ProxyRun {
    pub state: ProxyState,
    pub batched_calls: usize,
    pub scratch_allocations: usize,
    pub elapsed: Duration,
}

/// Initializes the state from `config` and integrates `config.timesteps`
/// timesteps in the configured mode.
pub fn run_proxy(config: &ProxyConfig, dispatcher: &Dispatcher) -> Result<ProxyRun> {
    let mut state = ProxyState::new(config)?;
    let mut scratch = ScratchBuffer::new();
    let start = Instant::now();
    let batched_calls = run_timesteps(config, &mut state, &mut scratch, dispatcher, config.timesteps)?;
    Ok(ProxyRun {
        state,
        batched_calls,
        scratch_allocations: scratch.allocations(),
        elapsed: start.elapsed(),
    })
}

/// Advances `state` by `timesteps` steps, carrying it over between calls.
pub fn run_timesteps(
    config: &ProxyConfig,
    state: &mut ProxyState,
    scratch: &mut ScratchBuffer,
    dispatcher: &Dispatcher,
    timesteps: usize,
) -> Result<usize> {
    let mut calls = 0;
    for t in 0..timesteps {
        match config.mode {
            Mode::Scalar => compute_local_integration_ref(config, state)?,
            Mode::Vector => {
                ensure_scratch(scratch, state.cells(), state.plan.scratch_per_element())?;
                calls += compute_local_integration_batched(config, state, scratch, dispatcher)?;
            }
        }
        log::trace!("timestep {t}: neighboring integration (no-op)");
    }
    Ok(calls)
}
