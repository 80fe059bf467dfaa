//! Seeded batch orchestration over Garnet replicates.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use movi_core::analysis::{
    assumption_check_on, concentrability, loss, movi_bound_report, sqldpp_rhs, BoundContext,
    ConcentrabilityMode, BOUND_SLACK, ENUMERATION_LIMIT,
};
use movi_core::rng::{derive_seed, tags};
use movi_core::{
    generate, optimal_q, run_scheme, sup_norm, weighted_l1_norm, DeterministicPolicy, Distribution, Mdp,
    RunSpec, SchemeId, SchemeRun, Q,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{EvalNorm, ExperimentConfig, ExperimentKind};
use crate::error::{LabError, Result};
use crate::figures::{figure_csv, FigureId};
use crate::record::{aggregate_assumption, aggregate_curves, BoundRow, CurvePoint, RecordResult, RecordSeeds, RunRecord, VERSION};

/// Tolerance of the value iteration that produces `q_*`.
pub const Q_STAR_TOL: f64 = 1e-12;

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub output_dir: PathBuf,
    /// Every file written, relative to `output_dir`.
    pub files: Vec<PathBuf>,
    pub wall_seconds: f64,
}

pub fn seeds_for(config: &ExperimentConfig, index: usize) -> RecordSeeds {
    let i = index as u64;
    RecordSeeds {
        master: config.master_seed,
        garnet: derive_seed(config.master_seed, tags::GARNET, i),
        samples: derive_seed(config.master_seed, tags::SAMPLES, i),
    }
}

/// Runs every replicate on a pool of `jobs` workers (all cores when `None`)
/// and writes the outputs under `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<RunOutcome> {
    let start = Instant::now();
    let records = compute_records(config, jobs)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let files = write_outputs(config, &records, wall_seconds)?;
    Ok(RunOutcome {
        records,
        output_dir: config.output_dir.clone(),
        files,
        wall_seconds,
    })
}

/// The records alone, in replicate order regardless of completion order.
pub fn compute_records(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<RunRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Pool(e.to_string()))?;
    pool.install(|| {
        (0..config.n_mdps)
            .into_par_iter()
            .map(|i| run_replicate(config, i))
            .collect()
    })
}

pub fn run_replicate(config: &ExperimentConfig, index: usize) -> Result<RunRecord> {
    let seeds = seeds_for(config, index);
    let mdp = generate(&config.garnet.with_seed(seeds.garnet), config.gamma)?;
    let result = match config.kind {
        ExperimentKind::Convergence | ExperimentKind::Compare => curves(config, &mdp, seeds)?,
        ExperimentKind::Bounds => bounds(config, &mdp, seeds, index)?,
        ExperimentKind::Assumption => {
            let a = &config.assumption;
            let table = assumption_check_on(&mdp, a.j, &a.l_values, a.n_max, seeds.samples)?;
            RecordResult::Assumption {
                l_values: table.l_values,
                epsbar: table.epsbar,
            }
        }
    };
    Ok(RunRecord {
        version: VERSION.to_string(),
        config: config.clone(),
        mdp_index: index,
        seeds,
        result,
    })
}

fn run_spec(config: &ExperimentConfig, scheme: SchemeId, seeds: RecordSeeds, ledger: bool) -> RunSpec<f64> {
    RunSpec {
        beta: config.beta,
        sampled: config.sampled,
        // Every scheme sees the same sample stream.
        seed: seeds.samples,
        track_ledger: ledger,
        memory_cap_bytes: config.bounds.memory_cap_bytes,
        checkpoints: config.checkpoints.clone(),
        ..RunSpec::new(scheme, config.iterations)
    }
}

fn run(mdp: &Mdp, spec: &RunSpec<f64>) -> Result<SchemeRun<f64>> {
    Ok(run_scheme(mdp, spec)?)
}

fn norm(config: &ExperimentConfig, uniform: &Distribution, q: &Q) -> f64 {
    match config.eval_norm {
        EvalNorm::L1Uniform => weighted_l1_norm(q, uniform),
        EvalNorm::Sup => sup_norm(q),
    }
}

fn curves(config: &ExperimentConfig, mdp: &Mdp, seeds: RecordSeeds) -> Result<RecordResult> {
    let q_star = optimal_q(mdp, Q_STAR_TOL)?;
    let uniform = Distribution::uniform(mdp.n_states(), mdp.n_actions());
    let mut per_scheme = Vec::with_capacity(config.schemes.len());
    for &scheme in &config.schemes {
        let run = run(mdp, &run_spec(config, scheme, seeds, false))?;
        let mut errors = Vec::with_capacity(run.checkpoints.len());
        let mut last: Option<(&DeterministicPolicy, f64)> = None;
        for cp in &run.checkpoints {
            let error = match last {
                Some((p, e)) if *p == cp.policy => e,
                _ => norm(config, &uniform, &loss(mdp, &q_star, &cp.policy)?),
            };
            last = Some((&cp.policy, error));
            errors.push(error);
        }
        per_scheme.push(errors);
    }
    let mut points = Vec::new();
    for (ci, &iteration) in config.checkpoints.iter().enumerate() {
        for (si, &scheme) in config.schemes.iter().enumerate() {
            points.push(CurvePoint {
                iteration,
                scheme,
                error: per_scheme[si][ci],
            });
        }
    }
    Ok(RecordResult::Curves { points })
}

fn bounds(config: &ExperimentConfig, mdp: &Mdp, seeds: RecordSeeds, index: usize) -> Result<RecordResult> {
    let (ns, na) = mdp.shape();
    let uniform = Distribution::uniform(ns, na);
    let policy_count = (na as f64).powi(ns as i32);
    let mode = if policy_count <= ENUMERATION_LIMIT as f64 {
        ConcentrabilityMode::Exact
    } else {
        ConcentrabilityMode::Sampled {
            n_policies: config.bounds.concentrability_samples,
            seed: derive_seed(config.master_seed, tags::POLICY_SAMPLING, index as u64),
        }
    };
    let conc = concentrability(mdp, &uniform, &uniform, mode)?;
    let ctx = BoundContext::new(mdp, Q_STAR_TOL, uniform.clone(), uniform.clone(), Some(conc.clone()), config.bounds.delta)?;

    let mut per_scheme = Vec::with_capacity(config.schemes.len());
    for &scheme in &config.schemes {
        let run = run(mdp, &run_spec(config, scheme, seeds, true))?;
        let ledger = run.ledger.as_ref().expect("ledger was requested");
        let mut rows = Vec::with_capacity(config.checkpoints.len());
        for cp in &run.checkpoints {
            let k = cp.iteration;
            let row = if scheme == SchemeId::Movi {
                let rep = movi_bound_report(ledger, &ctx, k)?;
                let l1_ok = if rep.concentrability_exact { rep.holds_l1mu().unwrap_or(true) } else { true };
                BoundRow {
                    iteration: k,
                    scheme,
                    loss_sup: rep.loss_sup,
                    loss_l1mu: rep.loss_l1mu,
                    rhs_sup: rep.rhs_sup,
                    rhs_l1mu: rep.rhs_l1mu,
                    rhs_prop1: Some(rep.rhs_prop1),
                    slack_min: Some(rep.slack_min),
                    holds: rep.holds_componentwise && rep.holds_sup() && rep.holds_prop1() && l1_ok,
                }
            } else {
                let l = loss(mdp, &ctx.q_star, &cp.policy)?;
                let loss_sup = sup_norm(&l);
                let rhs_sup = sqldpp_rhs(ledger, mdp, k)?;
                BoundRow {
                    iteration: k,
                    scheme,
                    loss_sup,
                    loss_l1mu: weighted_l1_norm(&l, &uniform),
                    rhs_sup,
                    rhs_l1mu: None,
                    rhs_prop1: None,
                    slack_min: None,
                    holds: rhs_sup - loss_sup >= -BOUND_SLACK,
                }
            };
            rows.push(row);
        }
        per_scheme.push(rows);
    }
    let mut rows = Vec::new();
    for ci in 0..config.checkpoints.len() {
        for scheme_rows in &per_scheme {
            rows.push(scheme_rows[ci]);
        }
    }
    Ok(RecordResult::Bounds {
        concentrability: conc.value,
        concentrability_exact: conc.exact,
        rows,
    })
}

pub fn record_stem(index: usize, n_mdps: usize) -> String {
    let width = n_mdps.saturating_sub(1).to_string().len().max(3);
    format!("mdp_{index:0width$}")
}

fn write(dir: &Path, rel: impl AsRef<Path>, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(rel.as_ref());
    fs::write(&path, contents).map_err(LabError::io(&path))?;
    files.push(rel.as_ref().to_path_buf());
    Ok(())
}

/// Removes `mdp_*` files a previous run left in `dir`.
fn clear_stale(dir: &Path) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(LabError::io(dir))? {
        let entry = entry.map_err(LabError::io(dir))?;
        let name = entry.file_name();
        if name.to_string_lossy().starts_with("mdp_") && entry.path().is_file() {
            fs::remove_file(entry.path()).map_err(LabError::io(entry.path()))?;
        }
    }
    Ok(())
}

/// Writes records, per-MDP CSVs, the aggregate CSV, the figure CSV and the
/// JSON summary. Everything except `timing.json` is a pure function of the
/// records.
pub fn write_outputs(config: &ExperimentConfig, records: &[RunRecord], wall_seconds: f64) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    let mut files = Vec::new();
    for sub in ["records", "per_mdp"] {
        let path = dir.join(sub);
        fs::create_dir_all(&path).map_err(LabError::io(&path))?;
        clear_stale(&path)?;
    }
    for record in records {
        let stem = record_stem(record.mdp_index, config.n_mdps);
        let json = serde_json::to_string_pretty(record).expect("records serialize") + "\n";
        write(dir, format!("records/{stem}.json"), &json, &mut files)?;
        write(dir, format!("per_mdp/{stem}.csv"), &record.to_csv(), &mut files)?;
    }
    write(dir, "aggregate.csv", &crate::record::aggregate_csv(records), &mut files)?;
    if let Some(fig) = FigureId::for_kind(config.kind) {
        write(dir, format!("{}.csv", fig.as_str()), &figure_csv(records, fig)?, &mut files)?;
    }
    let summary = serde_json::to_string_pretty(&summary(config, records)).expect("summary serializes") + "\n";
    write(dir, "summary.json", &summary, &mut files)?;
    let timing = json!({ "wall_seconds": wall_seconds, "n_mdps": records.len() });
    write(dir, "timing.json", &(serde_json::to_string_pretty(&timing).unwrap() + "\n"), &mut files)?;
    Ok(files)
}

fn summary(config: &ExperimentConfig, records: &[RunRecord]) -> serde_json::Value {
    let results = match config.kind {
        ExperimentKind::Convergence | ExperimentKind::Compare => {
            let last = config.checkpoints.last().copied();
            let finals: Vec<_> = aggregate_curves(records)
                .into_iter()
                .filter(|(it, _, _)| Some(*it) == last)
                .map(|(it, s, a)| json!({ "scheme": s, "iteration": it, "mean": a.mean, "std": a.std }))
                .collect();
            json!({ "final": finals })
        }
        ExperimentKind::Assumption => {
            let n_max = config.assumption.n_max;
            let finals: Vec<_> = aggregate_assumption(records)
                .into_iter()
                .filter(|(_, n, _)| *n == n_max)
                .map(|(l, n, a)| json!({ "l": l, "N": n, "mean": a.mean, "std": a.std }))
                .collect();
            json!({ "final": finals })
        }
        ExperimentKind::Bounds => {
            let mut violations = Vec::new();
            let mut all_exact = true;
            for r in records {
                if let RecordResult::Bounds { rows, concentrability_exact, .. } = &r.result {
                    all_exact &= concentrability_exact;
                    for row in rows.iter().filter(|row| !row.holds) {
                        violations.push(json!({ "mdp_index": r.mdp_index, "scheme": row.scheme, "iteration": row.iteration }));
                    }
                }
            }
            json!({ "violations": violations, "concentrability_exact": all_exact })
        }
    };
    json!({
        "version": VERSION,
        "kind": config.kind,
        "n_mdps": records.len(),
        "master_seed": config.master_seed,
        "config": config,
        "results": results,
    })
}
