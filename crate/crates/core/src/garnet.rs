//! Random Garnet MDPs.
//!
//! Stream layout for a spec with seed `seed` (ChaCha8 keyed by `seed`):
//! first `n_states` rewards, each uniform in `(-1, 1)`; then, for every
//! `(s, a)` in state-major order, `branching` distinct successors drawn
//! without replacement, followed by `branching - 1` cut points uniform in
//! `(0, 1)`. A cut-point set with a repeated value is redrawn whole.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, QTable};
use crate::rng::{rng_from_seed, sample_without_replacement, uniform_open01};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GarnetSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GarnetSpec {
    pub fn new(n_states: usize, n_actions: usize, branching: usize, seed: u64) -> Self {
        Self {
            n_states,
            n_actions,
            branching,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::InvalidMdp("Garnet needs at least one state and action".into()));
        }
        if self.branching == 0 || self.branching > self.n_states {
            return Err(Error::InvalidGarnet {
                branching: self.branching,
                n_states: self.n_states,
            });
        }
        Ok(())
    }
}

/// Generates the Garnet described by `spec` with discount `gamma`.
///
/// Rewards depend on the state only and are replicated over actions;
/// `r_max` is declared as 1.
pub fn generate(spec: &GarnetSpec, gamma: f64) -> Result<FiniteMdp<f64>> {
    spec.validate()?;
    let GarnetSpec {
        n_states: ns,
        n_actions: na,
        branching: nb,
        ..
    } = *spec;
    let mut rng = rng_from_seed(spec.seed);

    let state_reward: Vec<f64> = (0..ns).map(|_| 2.0 * uniform_open01(&mut rng) - 1.0).collect();

    let mut transition = vec![0.0; ns * na * ns];
    for s in 0..ns {
        for a in 0..na {
            let successors = sample_without_replacement(&mut rng, ns, nb);
            let cuts = loop {
                let mut cuts: Vec<f64> = (0..nb - 1).map(|_| uniform_open01(&mut rng)).collect();
                cuts.sort_by(f64::total_cmp);
                if cuts.windows(2).all(|w| w[0] < w[1]) {
                    break cuts;
                }
            };
            let row = &mut transition[(s * na + a) * ns..(s * na + a + 1) * ns];
            let mut prev = 0.0;
            for (k, &next) in successors.iter().enumerate() {
                let p = if k + 1 < nb { cuts[k] } else { 1.0 };
                row[next] = p - prev;
                prev = p;
            }
        }
    }

    let reward = QTable::from_fn(ns, na, |s, _| state_reward[s]);
    FiniteMdp::new(ns, na, transition, reward, gamma)?.with_r_max(1.0)
}
