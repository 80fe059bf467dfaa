//! Error bookkeeping and numerical checks of the error-propagation bounds.

mod assumption;
mod bounds;
mod concentrability;
mod ledger;

pub use assumption::{assumption_check, assumption_check_on, AssumptionTable};
pub use bounds::{
    corollary1_rhs, cumulative_error, error_terms, loss, movi_bound_report, prop1_rhs,
    sqldpp_rhs, sup_norm_rhs, theorem1_rhs, weighted_cumulative_error,
    weighted_cumulative_errors, BoundContext, BoundReport, ErrorTerms, BOUND_SLACK,
};
pub use concentrability::{concentrability, Concentrability, ConcentrabilityMode, ENUMERATION_LIMIT};
pub use ledger::ErrorLedger;
