//! Finite MDPs, state-action tables, policies and the exact operators on them.

mod ops;
mod solve;
mod types;

pub use ops::{
    apply_policy_kernel, bellman_eval, bellman_opt, greedy, sup_norm, weighted_l1_norm,
    weighted_lp_norm,
};
pub use solve::{
    exact_q_of_policy, occupancy, optimal_q, optimal_q_with_cap, resolvent, Resolvent,
    DEFAULT_OPTIMAL_TOL, OPTIMAL_Q_ITERATION_CAP, SOLVE_RESIDUAL_TOL,
};
pub use types::{DeterministicPolicy, DistributionSA, FiniteMdp, QTable, ROW_SUM_TOL};

pub(crate) use ops::kernel_apply;
pub(crate) use solve::occupancy_with;
