use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garnet::{generate, GarnetSpec};
use crate::mdp::{greedy, kernel_apply, sup_norm, FiniteMdp, QTable};
use crate::rng::{derive_seed, tags};
use crate::schemes::{movi_step, Backup, BetaSchedule, GenerativeModel, SchemeId, SchemeState};

/// Running-mean estimates `epsbar_{l,N}` of propagated sampling errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionTable {
    pub j: usize,
    pub l_values: Vec<usize>,
    pub n_max: usize,
    /// `epsbar[li][N - 1]` for `l = l_values[li]`.
    pub epsbar: Vec<Vec<f64>>,
    /// `replicates[li][n]`: the weighted error `P_{j+l:j+1,n} eps_{j,n}`.
    pub replicates: Vec<Vec<QTable<f64>>>,
}

impl AssumptionTable {
    /// `epsbar` recomputed from the stored replicate tables.
    pub fn recompute(&self) -> Vec<Vec<f64>> {
        self.replicates.iter().map(|reps| running_sup_means(reps)).collect()
    }

    /// `epsbar_{l,N}`, or `None` when `l` or `N` was not computed.
    pub fn get(&self, l: usize, n: usize) -> Option<f64> {
        let li = self.l_values.iter().position(|&x| x == l)?;
        self.epsbar[li].get(n.checked_sub(1)?).copied()
    }
}

fn running_sup_means(reps: &[QTable<f64>]) -> Vec<f64> {
    let Some(first) = reps.first() else {
        return Vec::new();
    };
    let mut sum = QTable::zeros(first.n_states(), first.n_actions());
    reps.iter()
        .enumerate()
        .map(|(n, w)| {
            sum.add_assign(w);
            sup_norm(&sum) / (n + 1) as f64
        })
        .collect()
}

/// Generates the Garnet for `spec` and runs [`assumption_check_on`].
pub fn assumption_check(
    spec: &GarnetSpec,
    gamma: f64,
    j: usize,
    l_values: &[usize],
    n_max: usize,
    seed: u64,
) -> Result<AssumptionTable> {
    let mdp = generate(spec, gamma)?;
    assumption_check_on(&mdp, j, l_values, n_max, seed)
}

/// Estimates `epsbar_{l,N} = max_{s,a} |(1/N) sum_n P_{j+l:j+1,n} eps_{j,n}(s,a)|`.
///
/// MoVI runs `j - 1` sampled steps from zero; that state is shared. Replicate
/// `n` then draws its own `eps_j` and `l - 1` further steps, which fix the
/// policies `pi_{j+1}, ..., pi_{j+l}`. A single realization serves every `l`.
pub fn assumption_check_on(
    mdp: &FiniteMdp<f64>,
    j: usize,
    l_values: &[usize],
    n_max: usize,
    seed: u64,
) -> Result<AssumptionTable> {
    if j == 0 {
        return Err(Error::Domain("j must be at least 1".into()));
    }
    if l_values.is_empty() || n_max == 0 {
        return Err(Error::Domain("need at least one l value and one replicate".into()));
    }
    let beta = BetaSchedule::EmpiricalMean;
    let mut snapshot = SchemeState::zeros(SchemeId::Movi, mdp.n_states(), mdp.n_actions());
    let mut gen = GenerativeModel::new(mdp, derive_seed(seed, tags::SAMPLES, 0));
    for _ in 1..j {
        let samples = gen.draw();
        movi_step(mdp, &mut snapshot, Backup::Sampled(&samples), beta)?;
    }

    let l_max = *l_values.iter().max().unwrap();
    let per_replicate: Vec<Vec<QTable<f64>>> = (0..n_max)
        .into_par_iter()
        .map(|n| -> Result<Vec<QTable<f64>>> {
            let mut gen = GenerativeModel::new(mdp, derive_seed(seed, tags::REPLICATE, n as u64));
            let mut state = snapshot.clone();
            let samples = gen.draw();
            movi_step(mdp, &mut state, Backup::Sampled(&samples), beta)?;
            let mut w = state.epsilon_last.clone();
            let mut weighted = vec![None; l_max + 1];
            weighted[0] = Some(w.clone());
            for l in 1..=l_max {
                w = kernel_apply(mdp, &greedy(&state.h), &w);
                weighted[l] = Some(w.clone());
                if l < l_max {
                    let samples = gen.draw();
                    movi_step(mdp, &mut state, Backup::Sampled(&samples), beta)?;
                }
            }
            Ok(l_values.iter().map(|&l| weighted[l].clone().unwrap()).collect())
        })
        .collect::<Result<_>>()?;

    let replicates: Vec<Vec<QTable<f64>>> = (0..l_values.len())
        .map(|li| per_replicate.iter().map(|r| r[li].clone()).collect())
        .collect();
    let epsbar = replicates.iter().map(|reps| running_sup_means(reps)).collect();
    Ok(AssumptionTable {
        j,
        l_values: l_values.to_vec(),
        n_max,
        epsbar,
        replicates,
    })
}
