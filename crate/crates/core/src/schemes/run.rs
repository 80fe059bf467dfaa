use serde::{Deserialize, Serialize};

use crate::analysis::ErrorLedger;
use crate::error::{Error, Result};
use crate::mdp::{DeterministicPolicy, FiniteMdp, QTable};
use crate::scalar::Scalar;

use super::generative::{Backup, GenerativeModel};
use super::steps::{step, SchemeState};
use super::{BetaSchedule, SchemeId};

pub const DEFAULT_LEDGER_CAP_BYTES: u64 = 2 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec<T> {
    pub scheme: SchemeId,
    pub iterations: usize,
    pub beta: BetaSchedule,
    /// Generative-model backups when set, exact operators otherwise.
    pub sampled: bool,
    pub seed: u64,
    pub track_ledger: bool,
    pub memory_cap_bytes: u64,
    /// Iteration counts after which the output policy is recorded.
    pub checkpoints: Vec<usize>,
    /// Initial table; zero when absent.
    pub q0: Option<QTable<T>>,
}

impl<T: Scalar> RunSpec<T> {
    pub fn new(scheme: SchemeId, iterations: usize) -> Self {
        Self {
            scheme,
            iterations,
            beta: BetaSchedule::EmpiricalMean,
            sampled: true,
            seed: 0,
            track_ledger: false,
            memory_cap_bytes: DEFAULT_LEDGER_CAP_BYTES,
            checkpoints: Vec::new(),
            q0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub iteration: usize,
    pub policy: DeterministicPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRun<T> {
    pub state: SchemeState<T>,
    pub ledger: Option<ErrorLedger<T>>,
    pub checkpoints: Vec<PolicyCheckpoint>,
}

/// Rough heap footprint of a ledger with `iterations` entries.
pub fn ledger_bytes_estimate<T>(n_states: usize, n_actions: usize, iterations: usize) -> u64 {
    let per_entry = n_states * n_actions * std::mem::size_of::<T>()
        + n_states * std::mem::size_of::<usize>()
        + 2 * std::mem::size_of::<Vec<u8>>()
        + 2 * std::mem::size_of::<usize>();
    per_entry as u64 * iterations as u64
}

/// Runs `spec.iterations` steps of `spec.scheme` on `mdp`.
pub fn run_scheme<T: Scalar>(mdp: &FiniteMdp<T>, spec: &RunSpec<T>) -> Result<SchemeRun<T>> {
    run_scheme_observed(mdp, spec, |_| {})
}

/// As [`run_scheme`], calling `observer` after every step.
pub fn run_scheme_observed<T: Scalar>(
    mdp: &FiniteMdp<T>,
    spec: &RunSpec<T>,
    mut observer: impl FnMut(&SchemeState<T>),
) -> Result<SchemeRun<T>> {
    if spec.iterations == 0 {
        return Err(Error::Domain("a run needs at least one iteration".into()));
    }
    if !spec.beta.is_valid() {
        return Err(Error::Domain(format!("invalid mixture rate {:?}", spec.beta)));
    }
    let (ns, na) = mdp.shape();
    let q0 = match &spec.q0 {
        Some(q0) => {
            mdp.check_table("RunSpec::q0", q0)?;
            q0.clone()
        }
        None => QTable::zeros(ns, na),
    };
    let mut ledger = if spec.track_ledger {
        let estimate = ledger_bytes_estimate::<T>(ns, na, spec.iterations);
        if estimate > spec.memory_cap_bytes {
            return Err(Error::LedgerTooLarge {
                estimate,
                cap: spec.memory_cap_bytes,
            });
        }
        Some(ErrorLedger::new(q0.clone()))
    } else {
        None
    };

    let mut state = SchemeState::new(spec.scheme, q0);
    let mut gen = spec.sampled.then(|| GenerativeModel::new(mdp, spec.seed));
    let mut checkpoints = Vec::new();
    let mut next_checkpoint = spec.checkpoints.iter().peekable();

    for _ in 0..spec.iterations {
        match gen.as_mut() {
            Some(gen) => {
                let samples = gen.draw();
                step(mdp, &mut state, Backup::Sampled(&samples), spec.beta)?;
            }
            None => step(mdp, &mut state, Backup::Exact, spec.beta)?,
        }
        if let Some(ledger) = ledger.as_mut() {
            ledger.push(state.epsilon_last.clone(), state.policy.clone(), &state.q)?;
        }
        while next_checkpoint.peek().is_some_and(|&&c| c <= state.k) {
            if *next_checkpoint.next().unwrap() == state.k {
                checkpoints.push(PolicyCheckpoint {
                    iteration: state.k,
                    policy: state.greedy_policy(),
                });
            }
        }
        observer(&state);
    }

    Ok(SchemeRun {
        state,
        ledger,
        checkpoints,
    })
}
