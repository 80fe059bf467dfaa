//! AVI, MoVI, SQL and DPP, with exact, sampled or noise-injected backups.

mod generative;
mod run;
mod steps;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub use generative::{
    sampled_bellman_eval, sampled_bellman_opt, sampled_eval_with, sampled_kernel_with, Backup,
    GenerativeModel, SampleTable,
};
pub use run::{
    ledger_bytes_estimate, run_scheme, run_scheme_observed, PolicyCheckpoint, RunSpec, SchemeRun,
    DEFAULT_LEDGER_CAP_BYTES,
};
pub use steps::{
    avi_step, dpp_step, movi_step, psi_movi_step, psi_sql_step, sql_step, step, SchemeState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    Avi,
    Movi,
    Sql,
    Dpp,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [SchemeId::Avi, SchemeId::Movi, SchemeId::Sql, SchemeId::Dpp];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Avi => "avi",
            SchemeId::Movi => "movi",
            SchemeId::Sql => "sql",
            SchemeId::Dpp => "dpp",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "avi" => Ok(SchemeId::Avi),
            "movi" => Ok(SchemeId::Movi),
            "sql" => Ok(SchemeId::Sql),
            "dpp" => Ok(SchemeId::Dpp),
            other => Err(format!("unknown scheme {other:?} (expected avi, movi, sql or dpp)")),
        }
    }
}

/// Mixture rate of the MoVI average `h_k = beta_k h_{k-1} + (1 - beta_k) q_k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSchedule {
    /// `beta_k = k / (k + 1)`: `h_k` is the plain mean of `q_0..q_k`.
    #[default]
    EmpiricalMean,
    Constant(f64),
}

impl BetaSchedule {
    /// `beta_k` for `k >= 1`.
    pub fn at<T: Scalar>(&self, k: usize) -> T {
        match *self {
            BetaSchedule::EmpiricalMean => T::of_usize(k) / T::of_usize(k + 1),
            BetaSchedule::Constant(b) => T::lit(b),
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            BetaSchedule::EmpiricalMean => true,
            BetaSchedule::Constant(b) => (0.0..1.0).contains(&b),
        }
    }
}
