//! One-iteration updates.
//!
//! Indexing follows the schemes' own recursions: a step advances `k` to
//! `k + 1`, uses the policy `pi_{k+1}` (recorded in `state.policy`) and
//! records the iteration's error `eps_{k+1}` in `state.epsilon_last`.
//!
//! The recorded error is always the additive noise of the scheme's ψ-form
//! update: the q-update noise for AVI and MoVI, `k * (q-update noise)` for
//! SQL (whose ψ is `k q_k`), and the ψ-update noise for DPP.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mdp::{greedy, kernel_apply, DeterministicPolicy, FiniteMdp, QTable};
use crate::scalar::Scalar;

use super::generative::{backup_eval, sampled_eval_with, sampled_kernel_with, Backup};
use super::{BetaSchedule, SchemeId};

/// Iterates of a running scheme.
///
/// Fields a scheme does not use keep their initial values. `psi` and
/// `psi_prev` hold `(psi_k, psi_{k-1})` for DPP and for the ψ-form MoVI/SQL
/// recursions; the h/q-form steps do not touch them (except DPP, whose only
/// form is the ψ form).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeState<T> {
    pub scheme: SchemeId,
    pub k: usize,
    /// `q_k`
    pub q: QTable<T>,
    /// `h_k` (MoVI)
    pub h: QTable<T>,
    /// `q_{k-1}` (SQL); `q_{-1} = q_0`
    pub q_prev: QTable<T>,
    pub psi: QTable<T>,
    pub psi_prev: QTable<T>,
    /// Policy used by the latest step.
    pub policy: DeterministicPolicy,
    /// Policy used by the step before (ψ-form SQL).
    pub prev_policy: DeterministicPolicy,
    pub epsilon_last: QTable<T>,
}

impl<T: Scalar> SchemeState<T> {
    /// Fresh state with `q_0 = h_0 = q0`.
    ///
    /// ψ initialisation: MoVI `psi_0 = q_0`, `psi_{-1} = 0`; SQL `psi_0 = 0`,
    /// `psi_{-1} = -q_0`; DPP `psi_0 = q0` (zero by default).
    pub fn new(scheme: SchemeId, q0: QTable<T>) -> Self {
        let (ns, na) = q0.shape();
        let zeros = QTable::zeros(ns, na);
        let (psi, psi_prev) = match scheme {
            SchemeId::Movi | SchemeId::Avi | SchemeId::Dpp => (q0.clone(), zeros.clone()),
            SchemeId::Sql => (zeros.clone(), q0.map(|v| -v)),
        };
        let policy = greedy(&q0);
        Self {
            scheme,
            k: 0,
            h: q0.clone(),
            q_prev: q0.clone(),
            psi,
            psi_prev,
            prev_policy: policy.clone(),
            policy,
            epsilon_last: zeros,
            q: q0,
        }
    }

    pub fn zeros(scheme: SchemeId, n_states: usize, n_actions: usize) -> Self {
        Self::new(scheme, QTable::zeros(n_states, n_actions))
    }

    /// The quantity the scheme acts greedily on: `q` (AVI, SQL), `h` (MoVI),
    /// `psi` (DPP).
    pub fn driving(&self) -> &QTable<T> {
        match self.scheme {
            SchemeId::Avi | SchemeId::Sql => &self.q,
            SchemeId::Movi => &self.h,
            SchemeId::Dpp => &self.psi,
        }
    }

    /// Policy output after `k` iterations (the next greedy step's policy).
    pub fn greedy_policy(&self) -> DeterministicPolicy {
        greedy(self.driving())
    }
}

/// Advances `state` by one iteration of its own scheme (h/q forms).
pub fn step<T: Scalar>(
    mdp: &FiniteMdp<T>,
    state: &mut SchemeState<T>,
    backup: Backup<'_, T>,
    beta: BetaSchedule,
) -> Result<()> {
    match state.scheme {
        SchemeId::Avi => avi_step(mdp, state, backup),
        SchemeId::Movi => movi_step(mdp, state, backup, beta),
        SchemeId::Sql => sql_step(mdp, state, backup),
        SchemeId::Dpp => dpp_step(mdp, state, backup),
    }
}

/// `pi_{k+1} = G(q_k)`, `q_{k+1} = T_{pi_{k+1}} q_k + eps_{k+1}`.
pub fn avi_step<T: Scalar>(mdp: &FiniteMdp<T>, state: &mut SchemeState<T>, backup: Backup<'_, T>) -> Result<()> {
    let policy = greedy(&state.q);
    let (q, eps) = backup_eval(mdp, &policy, &state.q, backup)?;
    state.q = q;
    state.policy = policy;
    state.epsilon_last = eps;
    state.k += 1;
    Ok(())
}

/// `pi_{k+1} = G(h_k)`, `q_{k+1} = T_{pi_{k+1}} q_k + eps_{k+1}`,
/// `h_{k+1} = beta_{k+1} h_k + (1 - beta_{k+1}) q_{k+1}`.
pub fn movi_step<T: Scalar>(
    mdp: &FiniteMdp<T>,
    state: &mut SchemeState<T>,
    backup: Backup<'_, T>,
    beta: BetaSchedule,
) -> Result<()> {
    let policy = greedy(&state.h);
    let (q, eps) = backup_eval(mdp, &policy, &state.q, backup)?;
    let b: T = beta.at(state.k + 1);
    let mix = T::one() - b;
    for (h, &qv) in state.h.as_mut_slice().iter_mut().zip(q.as_slice()) {
        *h = b * *h + mix * qv;
    }
    state.q = q;
    state.policy = policy;
    state.epsilon_last = eps;
    state.k += 1;
    Ok(())
}

/// MoVI as a recursion on `psi_k = (k + 1) h_k`:
/// `psi_k = psi_{k-1} + T_{pi_k} psi_{k-1} - gamma P_{pi_k} psi_{k-2} + eps_k`
/// with `pi_k = G(psi_{k-1})`. Only valid for the empirical-mean schedule.
pub fn psi_movi_step<T: Scalar>(
    mdp: &FiniteMdp<T>,
    state: &mut SchemeState<T>,
    backup: Backup<'_, T>,
) -> Result<()> {
    mdp.check_table("psi_movi_step", &state.psi)?;
    let policy = greedy(&state.psi);
    let gamma = mdp.gamma();
    let p_psi = kernel_apply(mdp, &policy, &state.psi);
    let p_prev = kernel_apply(mdp, &policy, &state.psi_prev);
    // T_pi psi - gamma P_pi psi_prev
    let exact = QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        mdp.reward()[(s, a)] + gamma * (p_psi[(s, a)] - p_prev[(s, a)])
    });
    let (increment, noise) = psi_increment(mdp, &policy, &policy, &state.psi, &state.psi_prev, exact, backup)?;
    let next = state.psi.add(&increment);
    state.psi_prev = std::mem::replace(&mut state.psi, next);
    state.prev_policy = std::mem::replace(&mut state.policy, policy);
    state.epsilon_last = noise;
    state.k += 1;
    Ok(())
}

/// Speedy Q-learning:
/// `q_k = q_{k-1} + (T_* q_{k-2} - q_{k-1}) / k + (k-1)/k (T_* q_{k-1} - T_* q_{k-2})`,
/// both backups sharing the iteration's samples.
pub fn sql_step<T: Scalar>(mdp: &FiniteMdp<T>, state: &mut SchemeState<T>, backup: Backup<'_, T>) -> Result<()> {
    let k = state.k + 1;
    let kk = T::of_usize(k);
    let km1 = T::of_usize(k - 1);
    let policy = greedy(&state.q);
    let prev_greedy = greedy(&state.q_prev);
    let (latest, eps_latest) = backup_eval(mdp, &policy, &state.q, strip_injection(backup))?;
    let (older, eps_older) = backup_eval(mdp, &prev_greedy, &state.q_prev, strip_injection(backup))?;

    let mut next = QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        let q = state.q[(s, a)];
        q + (older[(s, a)] - q) / kk + km1 / kk * (latest[(s, a)] - older[(s, a)])
    });
    let noise = match backup {
        Backup::Injected(e) => {
            next.axpy(T::one() / kk, e);
            e.clone()
        }
        _ => {
            let km2 = kk - T::lit(2.0);
            eps_latest.zip_map(&eps_older, |l, o| km1 * l - km2 * o)
        }
    };
    state.q_prev = std::mem::replace(&mut state.q, next);
    state.policy = policy;
    state.epsilon_last = noise;
    state.k = k;
    Ok(())
}

/// SQL as a recursion on `psi_k = k q_k`:
/// `psi_k = psi_{k-1} + T_{pi_k} psi_{k-1} - gamma P_{pi_{k-1}} psi_{k-2} + eps_k`
/// with `pi_k = G(psi_{k-1})`.
pub fn psi_sql_step<T: Scalar>(
    mdp: &FiniteMdp<T>,
    state: &mut SchemeState<T>,
    backup: Backup<'_, T>,
) -> Result<()> {
    mdp.check_table("psi_sql_step", &state.psi)?;
    let policy = greedy(&state.psi);
    let prev_policy = state.prev_policy.clone();
    let gamma = mdp.gamma();
    let p_psi = kernel_apply(mdp, &policy, &state.psi);
    let p_prev = kernel_apply(mdp, &prev_policy, &state.psi_prev);
    let exact = QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        mdp.reward()[(s, a)] + gamma * (p_psi[(s, a)] - p_prev[(s, a)])
    });
    let (increment, noise) = psi_increment(mdp, &policy, &prev_policy, &state.psi, &state.psi_prev, exact, backup)?;
    let next = state.psi.add(&increment);
    state.psi_prev = std::mem::replace(&mut state.psi, next);
    state.prev_policy = policy.clone();
    state.policy = policy;
    state.epsilon_last = noise;
    state.k += 1;
    Ok(())
}

/// DPP-RL: `psi_k = psi_{k-1} + T_{pi_k} psi_{k-1} - <pi_k, psi_{k-1}> + eps_k`
/// with `pi_k = G(psi_{k-1})`.
pub fn dpp_step<T: Scalar>(mdp: &FiniteMdp<T>, state: &mut SchemeState<T>, backup: Backup<'_, T>) -> Result<()> {
    let policy = greedy(&state.psi);
    let (applied, eps) = backup_eval(mdp, &policy, &state.psi, backup)?;
    let psi = &state.psi;
    let next = QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        psi[(s, a)] + applied[(s, a)] - psi[(s, policy.action(s))]
    });
    state.psi_prev = std::mem::replace(&mut state.psi, next);
    state.policy = policy;
    state.epsilon_last = eps;
    state.k += 1;
    Ok(())
}

fn strip_injection<T>(backup: Backup<'_, T>) -> Backup<'_, T> {
    match backup {
        Backup::Injected(_) => Backup::Exact,
        other => other,
    }
}

/// Applied increment `T_pi psi - gamma P_pi' psi_prev` under `backup`, and its error.
///
/// Sampled increments are built from the samples directly rather than as
/// `exact + error`, so entries that are equal in exact arithmetic stay equal.
fn psi_increment<T: Scalar>(
    mdp: &FiniteMdp<T>,
    policy: &DeterministicPolicy,
    prev_policy: &DeterministicPolicy,
    psi: &QTable<T>,
    psi_prev: &QTable<T>,
    exact: QTable<T>,
    backup: Backup<'_, T>,
) -> Result<(QTable<T>, QTable<T>)> {
    Ok(match backup {
        Backup::Exact => {
            let zero = QTable::zeros(mdp.n_states(), mdp.n_actions());
            (exact, zero)
        }
        Backup::Injected(e) => {
            mdp.check_table("injected noise", e)?;
            (exact.add(e), e.clone())
        }
        Backup::Sampled(samples) => {
            let first = sampled_eval_with(mdp, samples, policy, psi);
            let second = sampled_kernel_with(mdp, samples, prev_policy, psi_prev);
            let applied = first.zip_map(&second, |f, g| f - mdp.gamma() * g);
            let noise = applied.sub(&exact);
            (applied, noise)
        }
    })
}
