//! Proxy configuration: the GEMM chain run per cell and component, and the
//! storage each chain operand binds to.
//!
//! Chain file format, one step per line:
//!
//! ```text
//! # layout  N  M  K  abc  A       B     C       alpha beta
//! ColMajor  20 9  10 cis  kDivMT  dq    scratch 1     0
//! ColMajor  10 9  9  sci  scratch star  dq_out  1     1
//! ```
//!
//! `dq` and `dq_out` are per-cell tensors (indexed access), `scratch` is the
//! per-cell temporary (strided access); any other name is a global matrix
//! shared by all cells (constant access).

use std::fmt;
use std::fs;
use std::path::Path;

use crate::codegen::{parse_spec_tokens, tokenize};
use crate::error::{Error, Result};
use crate::runtime::TensorBatch;
use crate::spec::{AccessKind, KernelSpec, Layout, Operand, OperandDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TensorId {
    Dq,
    DqOut,
}

impl TensorId {
    pub const ALL: [TensorId; 2] = [TensorId::Dq, TensorId::DqOut];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TensorId::Dq => "dq",
            TensorId::DqOut => "dq_out",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Binding {
    /// One matrix shared by every cell.
    Global(String),
    /// A component of a per-cell tensor.
    Tensor(TensorId),
    /// The per-cell temporary.
    Scratch,
}

impl Binding {
    pub fn parse(name: &str) -> Self {
        match name {
            "dq" => Binding::Tensor(TensorId::Dq),
            "dq_out" => Binding::Tensor(TensorId::DqOut),
            "scratch" => Binding::Scratch,
            other => Binding::Global(other.to_string()),
        }
    }

    /// Access kind a batched kernel uses for this binding.
    pub fn access(&self) -> AccessKind {
        match self {
            Binding::Global(_) => AccessKind::Constant,
            Binding::Tensor(_) => AccessKind::Indexed,
            Binding::Scratch => AccessKind::Strided,
        }
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Global(name) => f.write_str(name),
            Binding::Tensor(t) => f.write_str(t.name()),
            Binding::Scratch => f.write_str("scratch"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    pub spec: KernelSpec,
    pub alpha: f64,
    pub beta: f64,
    pub a: Binding,
    pub b: Binding,
    pub c: Binding,
}

impl ChainStep {
    pub fn binding(&self, which: Operand) -> &Binding {
        match which {
            Operand::A => &self.a,
            Operand::B => &self.b,
            Operand::C => &self.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Per-cell loop with the reference GEMM.
    Scalar,
    /// Loop-interchanged variant with one batched call per step.
    Vector,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "scalar" => Ok(Mode::Scalar),
            "vector" => Ok(Mode::Vector),
            _ => Err(format!("unknown mode `{s}` (scalar or vector)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyConfig {
    pub cells: usize,
    pub timesteps: usize,
    pub components: usize,
    pub chain: Vec<ChainStep>,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        ProxyConfig {
            cells: 10_000,
            timesteps: 6,
            components: TensorBatch::DEFAULT_COMPONENTS,
            chain: default_chain(),
            mode: Mode::Vector,
            seed: 42,
        }
    }
}

/// Two steps per component: `scratch = kDivMT * dq[s]` (20x9x10) followed by
/// `dq_out[s] += scratch * star` (10x9x9, reading the top 10 rows of the
/// 20x9 scratch).
pub fn default_chain() -> Vec<ChainStep> {
    const TEXT: &str = "\
ColMajor 20 9 10 cis kDivMT dq scratch 1 0
ColMajor 10 9 9 sci scratch star dq_out 1 1
";
    parse_chain(TEXT).expect("default chain is well formed")
}

pub fn parse_chain(text: &str) -> Result<Vec<ChainStep>> {
    parse_chain_from(text, Path::new("<chain>"))
}

pub fn load_chain(path: impl AsRef<Path>) -> Result<Vec<ChainStep>> {
    let path = path.as_ref();
    parse_chain_from(&fs::read_to_string(path)?, path)
}

fn parse_chain_from(text: &str, source: &Path) -> Result<Vec<ChainStep>> {
    let mut steps = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let tokens = tokenize(raw.split('#').next().unwrap_or(""));
        if tokens.is_empty() {
            continue;
        }
        let syntax = |column: usize, message: String| Error::Syntax {
            path: source.display().to_string(),
            line: line_no + 1,
            column,
            message,
        };
        if tokens.len() != 10 {
            return Err(syntax(
                tokens[0].0,
                format!(
                    "expected `<Layout> <N> <M> <K> <abc> <A> <B> <C> <alpha> <beta>`, found {} fields",
                    tokens.len()
                ),
            ));
        }
        let spec = parse_spec_tokens(&tokens[..5], syntax)?;
        let scalar = |i: usize| -> Result<f64> {
            let (col, tok) = tokens[i];
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| syntax(col, format!("not a finite number: `{tok}`")))
        };
        steps.push(ChainStep {
            spec,
            a: Binding::parse(tokens[5].1),
            b: Binding::parse(tokens[6].1),
            c: Binding::parse(tokens[7].1),
            alpha: scalar(8)?,
            beta: scalar(9)?,
        });
    }
    Ok(steps)
}

/// Storage of one global matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSlot {
    pub name: String,
    pub dims: OperandDims,
}

/// Storage layout derived from a validated chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPlan {
    pub layout: Layout,
    /// Globals in order of first appearance.
    pub globals: Vec<GlobalSlot>,
    /// Dims of each tensor, `None` when the chain never touches it.
    pub tensors: [Option<OperandDims>; 2],
    /// Dims of one cell's scratch matrix, `None` when unused.
    pub scratch: Option<OperandDims>,
}

impl ChainPlan {
    pub fn scratch_per_element(&self) -> usize {
        self.scratch.map_or(0, |d| d.span(self.layout, d.min_ld))
    }

    pub fn scratch_ld(&self) -> usize {
        self.scratch.map_or(1, |d| d.min_ld)
    }

    pub fn tensor_dims(&self, id: TensorId) -> Option<OperandDims> {
        self.tensors[id.index()]
    }

    pub fn global_index(&self, name: &str) -> Option<usize> {
        self.globals.iter().position(|g| g.name == name)
    }
}

fn grow(slot: &mut Option<(usize, usize)>, rows: usize, cols: usize) {
    let (r, c) = slot.get_or_insert((0, 0));
    *r = (*r).max(rows);
    *c = (*c).max(cols);
}

impl ProxyConfig {
    /// Checks binding kinds, aliasing and scratch initialization, and sizes
    /// every storage slot to the largest view any step takes of it.
    pub fn plan(&self) -> Result<ChainPlan> {
        if self.components == 0 {
            return Err(Error::Chain("tensors need at least one component".into()));
        }
        let Some(first) = self.chain.first() else {
            return Err(Error::Chain("chain is empty".into()));
        };
        let layout = first.spec.layout;
        let mut globals: Vec<(String, Option<(usize, usize)>)> = Vec::new();
        let mut tensors: [Option<(usize, usize)>; 2] = [None, None];
        let mut scratch: Option<(usize, usize)> = None;
        let mut scratch_written: Option<(usize, usize)> = None;
        let mut writes_dq_out = false;

        for (i, step) in self.chain.iter().enumerate() {
            let err = |msg: String| Error::Chain(format!("step {}: {msg}", i + 1));
            if step.spec.layout != layout {
                return Err(err("all steps must share one layout".into()));
            }
            for which in Operand::ALL {
                let binding = step.binding(which);
                if step.spec.access(which) != binding.access() {
                    return Err(err(format!(
                        "operand {which} bound to `{binding}` needs access `{}`, kernel has `{}`",
                        binding.access().letter(),
                        step.spec.access(which).letter()
                    )));
                }
            }
            if step.c == step.a || step.c == step.b {
                return Err(err(format!("output `{}` aliases an input", step.c)));
            }
            if let Binding::Global(name) = &step.c {
                return Err(err(format!("output cannot be the global matrix `{name}`")));
            }

            for which in [Operand::A, Operand::B] {
                let d = step.spec.dims(which);
                match step.binding(which) {
                    Binding::Scratch => match scratch_written {
                        Some((r, c)) if d.rows <= r && d.cols <= c => {}
                        _ => {
                            return Err(err(format!(
                                "reads {}x{} of scratch before it is written",
                                d.rows, d.cols
                            )))
                        }
                    },
                    Binding::Global(name) => {
                        let idx = match globals.iter().position(|(g, _)| g == name) {
                            Some(idx) => idx,
                            None => {
                                globals.push((name.clone(), None));
                                globals.len() - 1
                            }
                        };
                        grow(&mut globals[idx].1, d.rows, d.cols);
                    }
                    Binding::Tensor(t) => grow(&mut tensors[t.index()], d.rows, d.cols),
                }
            }
            for which in Operand::ALL {
                if *step.binding(which) == Binding::Scratch {
                    let d = step.spec.dims(which);
                    grow(&mut scratch, d.rows, d.cols);
                }
            }

            let d = step.spec.dims(Operand::C);
            match &step.c {
                Binding::Scratch => {
                    if step.beta == 0.0 {
                        grow(&mut scratch_written, d.rows, d.cols);
                    } else if !matches!(scratch_written, Some((r, c)) if d.rows <= r && d.cols <= c) {
                        return Err(err("accumulates into scratch before it is written".into()));
                    }
                }
                Binding::Tensor(t) => {
                    grow(&mut tensors[t.index()], d.rows, d.cols);
                    writes_dq_out |= *t == TensorId::DqOut;
                }
                Binding::Global(_) => unreachable!(),
            }
        }
        if !writes_dq_out {
            return Err(Error::Chain("no step writes dq_out".into()));
        }

        let dims = |(r, c): (usize, usize)| OperandDims::new(layout, r, c);
        Ok(ChainPlan {
            layout,
            globals: globals
                .into_iter()
                .map(|(name, d)| GlobalSlot {
                    name,
                    dims: dims(d.expect("globals are sized on first use")),
                })
                .collect(),
            tensors: tensors.map(|t| t.map(dims)),
            scratch: scratch.map(dims),
        })
    }
}
