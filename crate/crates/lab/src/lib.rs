//! Experiment harness for momentum value iteration on Garnet MDPs.
//!
//! A run is described by a JSON [`ExperimentConfig`]. Each of its `n_mdps`
//! replicates draws a Garnet and a sample stream from seeds derived from
//! `master_seed`, so every output file except `timing.json` is a pure function
//! of the configuration.
//!
//! ```text
//! out/
//!   records/mdp_000.json   full record of one replicate
//!   per_mdp/mdp_000.csv    its CSV rows
//!   aggregate.csv          mean and std across replicates
//!   fig1.csv               figure data for the run's kind (if any)
//!   summary.json           config echo and headline numbers
//!   timing.json            wall time
//! ```

pub mod config;
pub mod error;
pub mod experiment;
pub mod figures;
pub mod record;
pub mod stats;

pub use config::{
    apply_override, validate_config, validate_str, validate_value, AssumptionParams, BoundsParams, ConfigErrors,
    EvalNorm, ExperimentConfig, ExperimentKind, FieldError, GarnetShape, OUTPUT_DIR_ENV,
};
pub use error::LabError;
pub use experiment::{compute_records, run_experiment, RunOutcome};
pub use figures::{emit_figure, figure_csv, load_records, FigureId};
pub use record::{aggregate_csv, BoundRow, CurvePoint, RecordResult, RecordSeeds, RunRecord};
