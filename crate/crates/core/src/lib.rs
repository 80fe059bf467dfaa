//! Tabular dynamic programming with momentum.
//!
//! Finite MDPs, exact and sampled Bellman operators, Garnet benchmark
//! generation, four approximate schemes (AVI, MoVI, SQL, DPP) and numerical
//! checks of their error-propagation bounds.
//!
//! Everything is generic over [`Scalar`], so the same code runs on `f32`,
//! `f64` and exact [`Rational`]s. The aliases below fix the usual choice.
//!
//! ```
//! use movi_core::{generate, run_scheme, GarnetSpec, RunSpec, SchemeId};
//!
//! let mdp = generate(&GarnetSpec::new(10, 2, 2, 7), 0.9).unwrap();
//! let mut spec = RunSpec::new(SchemeId::Movi, 100);
//! spec.seed = 1;
//! let run = run_scheme(&mdp, &spec).unwrap();
//! assert_eq!(run.state.k, 100);
//! ```

// Negated comparisons deliberately treat NaN as out of range.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod garnet;
pub mod linalg;
pub mod mdp;
pub mod rng;
pub mod scalar;
pub mod schemes;

pub use analysis::{
    assumption_check, assumption_check_on, concentrability, corollary1_rhs, cumulative_error,
    loss, movi_bound_report, prop1_rhs, sqldpp_rhs, sup_norm_rhs, theorem1_rhs,
    weighted_cumulative_error, weighted_cumulative_errors, AssumptionTable, BoundContext,
    BoundReport, Concentrability, ConcentrabilityMode, ErrorLedger,
};
pub use error::{Error, Result};
pub use garnet::{generate, GarnetSpec};
pub use mdp::{
    apply_policy_kernel, bellman_eval, bellman_opt, exact_q_of_policy, greedy, occupancy,
    optimal_q, sup_norm, weighted_l1_norm, weighted_lp_norm, DeterministicPolicy,
    DistributionSA, FiniteMdp, QTable,
};
pub use scalar::Scalar;
pub use schemes::{
    run_scheme, sampled_bellman_eval, sampled_bellman_opt, BetaSchedule, GenerativeModel,
    RunSpec, SchemeId, SchemeRun, SchemeState,
};

/// Exact rational scalar.
pub type Rational = num_rational::Rational64;

pub type Mdp = FiniteMdp<f64>;
pub type Q = QTable<f64>;
pub type Distribution = DistributionSA<f64>;
pub type Ledger = ErrorLedger<f64>;

pub type Mdp32 = FiniteMdp<f32>;
pub type Q32 = QTable<f32>;

pub type ExactMdp = FiniteMdp<Rational>;
pub type ExactQ = QTable<Rational>;
pub type ExactLedger = ErrorLedger<Rational>;
