use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ChainPlan, ProxyConfig, TensorId};
use crate::error::Result;
use crate::runtime::TensorBatch;

/// Everything the proxy integrates over: shared global matrices plus the
/// per-cell `dq` and `dq_out` tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyState {
    pub(crate) plan: ChainPlan,
    pub(crate) components: usize,
    pub(crate) globals: Vec<Vec<f64>>,
    /// Indexed by `TensorId`, then by cell. Empty when the chain does not
    /// touch that tensor.
    pub(crate) tensors: [Vec<TensorBatch>; 2],
}

impl ProxyState {
    /// Fills every matrix from a ChaCha8 stream seeded with `config.seed`,
    /// uniform in `[-1, 1]`. Globals come first in order of appearance, then
    /// all of `dq`, then all of `dq_out`, cell by cell and component by
    /// component.
    pub fn new(config: &ProxyConfig) -> Result<Self> {
        let plan = config.plan()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut fill = |xs: &mut [f64]| {
            for x in xs {
                *x = rng.gen_range(-1.0..=1.0);
            }
        };

        let globals = plan
            .globals
            .iter()
            .map(|g| {
                let mut m = vec![0.0; g.dims.len()];
                fill(&mut m);
                m
            })
            .collect();

        let tensors = TensorId::ALL.map(|id| match plan.tensor_dims(id) {
            None => Vec::new(),
            Some(d) => (0..config.cells)
                .map(|_| {
                    let mut t = TensorBatch::zeros(plan.layout, config.components, d.rows, d.cols);
                    t.components_mut().for_each(&mut fill);
                    t
                })
                .collect(),
        });

        Ok(ProxyState {
            plan,
            components: config.components,
            globals,
            tensors,
        })
    }

    pub fn plan(&self) -> &ChainPlan {
        &self.plan
    }

    pub fn cells(&self) -> usize {
        self.tensor(TensorId::DqOut).len()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn global(&self, name: &str) -> Option<&[f64]> {
        self.plan.global_index(name).map(|i| self.globals[i].as_slice())
    }

    pub fn tensor(&self, id: TensorId) -> &[TensorBatch] {
        &self.tensors[id.index()]
    }

    pub fn tensor_mut(&mut self, id: TensorId) -> &mut [TensorBatch] {
        &mut self.tensors[id.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_bounded() {
        let cfg = ProxyConfig {
            cells: 3,
            ..ProxyConfig::default()
        };
        let a = ProxyState::new(&cfg).unwrap();
        let b = ProxyState::new(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells(), 3);
        assert_eq!(a.global("kDivMT").unwrap().len(), 200);
        assert_eq!(a.global("star").unwrap().len(), 81);
        let all = a
            .globals
            .iter()
            .flatten()
            .chain(a.tensors.iter().flatten().flat_map(|t| t.components()).flatten());
        assert!(all.into_iter().all(|x| (-1.0..=1.0).contains(x)));

        let c = ProxyState::new(&ProxyConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.globals, c.globals);
    }
}
