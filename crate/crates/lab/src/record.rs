//! Per-MDP run records, their CSV rows and the cross-MDP aggregates.

use std::collections::BTreeMap;

use movi_core::SchemeId;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::stats::{fmt_f64, fmt_opt, mean_std};

pub const VERSION: &str = concat!("movi-lab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSeeds {
    pub master: u64,
    pub garnet: u64,
    pub samples: u64,
}

/// Everything one Garnet replicate produced, plus what is needed to redo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub config: ExperimentConfig,
    pub mdp_index: usize,
    pub seeds: RecordSeeds,
    pub result: RecordResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RecordResult {
    Curves { points: Vec<CurvePoint> },
    Bounds {
        concentrability: f64,
        concentrability_exact: bool,
        rows: Vec<BoundRow>,
    },
    Assumption { l_values: Vec<usize>, epsbar: Vec<Vec<f64>> },
}

/// Loss of the output policy after `iteration` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub scheme: SchemeId,
    pub error: f64,
}

/// Realised loss against the applicable bounds after `iteration` steps.
///
/// Componentwise, weighted and high-probability bounds only exist for MoVI;
/// the other columns are empty for SQL and DPP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub iteration: usize,
    pub scheme: SchemeId,
    pub loss_sup: f64,
    pub loss_l1mu: f64,
    pub rhs_sup: f64,
    pub rhs_l1mu: Option<f64>,
    pub rhs_prop1: Option<f64>,
    pub slack_min: Option<f64>,
    pub holds: bool,
}

impl BoundRow {
    pub const QUANTITIES: [&'static str; 6] =
        ["loss_sup", "loss_l1mu", "rhs_sup", "rhs_l1mu", "rhs_prop1", "slack_min"];

    pub fn quantity(&self, name: &str) -> Option<f64> {
        match name {
            "loss_sup" => Some(self.loss_sup),
            "loss_l1mu" => Some(self.loss_l1mu),
            "rhs_sup" => Some(self.rhs_sup),
            "rhs_l1mu" => self.rhs_l1mu,
            "rhs_prop1" => self.rhs_prop1,
            "slack_min" => self.slack_min,
            _ => None,
        }
    }
}

impl RunRecord {
    pub fn kind(&self) -> ExperimentKind {
        self.config.kind
    }

    /// The per-MDP CSV; a pure function of the record.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.result {
            RecordResult::Curves { points } => {
                out.push_str("iteration,scheme,error\n");
                for p in points {
                    out.push_str(&format!("{},{},{}\n", p.iteration, p.scheme, fmt_f64(p.error)));
                }
            }
            RecordResult::Bounds { rows, .. } => {
                out.push_str("iteration,scheme,loss_sup,loss_l1mu,rhs_sup,rhs_l1mu,rhs_prop1,slack_min,holds\n");
                for r in rows {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{}\n",
                        r.iteration,
                        r.scheme,
                        fmt_f64(r.loss_sup),
                        fmt_f64(r.loss_l1mu),
                        fmt_f64(r.rhs_sup),
                        fmt_opt(r.rhs_l1mu),
                        fmt_opt(r.rhs_prop1),
                        fmt_opt(r.slack_min),
                        r.holds
                    ));
                }
            }
            RecordResult::Assumption { l_values, epsbar } => {
                out.push_str("N,l,epsbar\n");
                for (l, curve) in l_values.iter().zip(epsbar) {
                    for (i, v) in curve.iter().enumerate() {
                        out.push_str(&format!("{},{},{}\n", i + 1, l, fmt_f64(*v)));
                    }
                }
            }
        }
        out
    }
}

/// One aggregated cell: statistics over MDPs in replicate order.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        Self {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n: values.len(),
        }
    }
}

/// Curve statistics keyed by (iteration, scheme), schemes in config order.
pub fn aggregate_curves(records: &[RunRecord]) -> Vec<(usize, SchemeId, Aggregate)> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let schemes = &first.config.schemes;
    let mut cells: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for record in records {
        if let RecordResult::Curves { points } = &record.result {
            for p in points {
                let si = schemes.iter().position(|&s| s == p.scheme).unwrap_or(usize::MAX);
                cells.entry((p.iteration, si)).or_default().push(p.error);
            }
        }
    }
    cells
        .into_iter()
        .map(|((it, si), v)| (it, schemes[si], Aggregate::of(&v)))
        .collect()
}

/// `epsbar` statistics keyed by (l, N), l in config order.
pub fn aggregate_assumption(records: &[RunRecord]) -> Vec<(usize, usize, Aggregate)> {
    let mut cells: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut ls: Vec<usize> = Vec::new();
    for record in records {
        if let RecordResult::Assumption { l_values, epsbar } = &record.result {
            if cells.is_empty() {
                ls = l_values.clone();
                cells = epsbar.iter().map(|c| vec![Vec::new(); c.len()]).collect();
            }
            for (li, curve) in epsbar.iter().enumerate() {
                for (ni, v) in curve.iter().enumerate() {
                    cells[li][ni].push(*v);
                }
            }
        }
    }
    let mut out = Vec::new();
    for (li, per_n) in cells.iter().enumerate() {
        for (ni, v) in per_n.iter().enumerate() {
            out.push((ls[li], ni + 1, Aggregate::of(v)));
        }
    }
    out
}

/// Bound statistics keyed by (iteration, scheme, quantity); quantities a
/// scheme never reports are skipped.
pub fn aggregate_bounds(records: &[RunRecord]) -> Vec<(usize, SchemeId, &'static str, Aggregate)> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let schemes = &first.config.schemes;
    let mut cells: BTreeMap<(usize, usize, usize), Vec<f64>> = BTreeMap::new();
    for record in records {
        if let RecordResult::Bounds { rows, .. } = &record.result {
            for r in rows {
                let si = schemes.iter().position(|&s| s == r.scheme).unwrap_or(usize::MAX);
                for (qi, q) in BoundRow::QUANTITIES.iter().enumerate() {
                    if let Some(v) = r.quantity(q) {
                        cells.entry((r.iteration, si, qi)).or_default().push(v);
                    }
                }
            }
        }
    }
    cells
        .into_iter()
        .map(|((it, si, qi), v)| (it, schemes[si], BoundRow::QUANTITIES[qi], Aggregate::of(&v)))
        .collect()
}

/// The aggregate CSV for any record kind.
pub fn aggregate_csv(records: &[RunRecord]) -> String {
    let Some(first) = records.first() else {
        return String::new();
    };
    let mut out = String::new();
    match first.kind() {
        ExperimentKind::Convergence | ExperimentKind::Compare => {
            out.push_str("iteration,scheme,mean,std,n\n");
            for (it, s, a) in aggregate_curves(records) {
                out.push_str(&format!("{it},{s},{},{},{}\n", fmt_f64(a.mean), fmt_f64(a.std), a.n));
            }
        }
        ExperimentKind::Assumption => {
            out.push_str("N,l,mean,std,n\n");
            for (l, n, a) in aggregate_assumption(records) {
                out.push_str(&format!("{n},{l},{},{},{}\n", fmt_f64(a.mean), fmt_f64(a.std), a.n));
            }
        }
        ExperimentKind::Bounds => {
            out.push_str("iteration,scheme,quantity,mean,std,min,max,n\n");
            for (it, s, q, a) in aggregate_bounds(records) {
                out.push_str(&format!(
                    "{it},{s},{q},{},{},{},{},{}\n",
                    fmt_f64(a.mean),
                    fmt_f64(a.std),
                    fmt_f64(a.min),
                    fmt_f64(a.max),
                    a.n
                ));
            }
        }
    }
    out
}
