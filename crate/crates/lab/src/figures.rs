//! Long-format figure data from a set of run records.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use movi_core::SchemeId;

use crate::config::ExperimentKind;
use crate::error::{LabError, Result};
use crate::record::{aggregate_assumption, aggregate_curves, RunRecord};
use crate::stats::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    /// AVI against MoVI.
    Fig1,
    /// Propagated-error estimates against the number of replicates.
    Fig2,
    /// Every scheme of a comparison run.
    Fig3,
}

impl FigureId {
    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
        }
    }

    pub fn kind(self) -> ExperimentKind {
        match self {
            FigureId::Fig1 => ExperimentKind::Convergence,
            FigureId::Fig2 => ExperimentKind::Assumption,
            FigureId::Fig3 => ExperimentKind::Compare,
        }
    }

    pub fn for_kind(kind: ExperimentKind) -> Option<Self> {
        [FigureId::Fig1, FigureId::Fig2, FigureId::Fig3]
            .into_iter()
            .find(|f| f.kind() == kind)
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig1" => Ok(FigureId::Fig1),
            "fig2" => Ok(FigureId::Fig2),
            "fig3" => Ok(FigureId::Fig3),
            other => Err(format!("unknown figure {other:?} (expected fig1, fig2 or fig3)")),
        }
    }
}

pub fn figure_csv(records: &[RunRecord], fig: FigureId) -> Result<String> {
    let first = records
        .first()
        .ok_or_else(|| LabError::Records("no records to emit".into()))?;
    for r in records {
        if r.kind() != fig.kind() {
            return Err(LabError::KindMismatch {
                figure: fig.as_str(),
                expected: fig.kind(),
                found: r.kind(),
            });
        }
        if r.config != first.config {
            return Err(LabError::Records(format!(
                "record {} comes from a different configuration",
                r.mdp_index
            )));
        }
    }
    let mut out = String::new();
    match fig {
        FigureId::Fig1 | FigureId::Fig3 => {
            out.push_str("iteration,scheme,mean_error,std_error\n");
            for (it, scheme, a) in aggregate_curves(records) {
                if fig == FigureId::Fig1 && !matches!(scheme, SchemeId::Avi | SchemeId::Movi) {
                    continue;
                }
                out.push_str(&format!("{it},{scheme},{},{}\n", fmt_f64(a.mean), fmt_f64(a.std)));
            }
        }
        FigureId::Fig2 => {
            out.push_str("N,l,mean_epsbar,std_epsbar\n");
            for (l, n, a) in aggregate_assumption(records) {
                out.push_str(&format!("{n},{l},{},{}\n", fmt_f64(a.mean), fmt_f64(a.std)));
            }
        }
    }
    Ok(out)
}

/// Loads every `mdp_*.json` record from `dir`, or from `dir/records` when
/// `dir` is a run's output directory. Replicates must be complete.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let nested = dir.join("records");
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let mut records = Vec::new();
    for entry in fs::read_dir(&dir).map_err(LabError::io(&dir))? {
        let path = entry.map_err(LabError::io(&dir))?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if !(name.starts_with("mdp_") && name.ends_with(".json")) {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(LabError::io(&path))?;
        let record: RunRecord = serde_json::from_str(&text).map_err(|source| LabError::Json { path, source })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(LabError::Records(format!("no records found in {}", dir.display())));
    }
    records.sort_by_key(|r| r.mdp_index);
    for (i, r) in records.iter().enumerate() {
        if r.mdp_index != i {
            return Err(LabError::Records(format!("replicate {i} is missing from {}", dir.display())));
        }
    }
    Ok(records)
}

pub fn emit_figure(dir: &Path, fig: FigureId) -> Result<String> {
    figure_csv(&load_records(dir)?, fig)
}
