use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use movi_lab::config::{default_checkpoints, parse_str};
use movi_lab::*;
use proptest::prelude::*;
use serde_json::{json, Value};

fn config(value: Value, dir: &Path) -> ExperimentConfig {
    let mut value = value;
    value["output_dir"] = json!(dir);
    validate_value(&value).unwrap()
}

fn small(kind: &str) -> Value {
    json!({
        "kind": kind,
        "garnet": { "n_states": 6, "n_actions": 2, "branching": 2 },
        "master_seed": 17,
        "n_mdps": 4,
        "iterations": 60,
    })
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["", "records", "per_mdp"] {
        for entry in fs::read_dir(dir.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn outputs_are_byte_identical_across_runs_and_pool_sizes() {
    for kind in ["compare", "assumption", "bounds"] {
        let mut value = small(kind);
        if kind == "compare" {
            value["schemes"] = json!(["avi", "movi", "sql", "dpp"]);
        }
        if kind == "assumption" {
            value["assumption"] = json!({ "j": 4, "l_values": [0, 2], "n_max": 10 });
        }
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(&config(value.clone(), a.path()), Some(1)).unwrap();
        run_experiment(&config(value, b.path()), Some(3)).unwrap();
        let (mut ta, mut tb) = (read_tree(a.path()), read_tree(b.path()));
        // Wall time is the only nondeterministic output.
        assert!(ta.remove("timing.json").is_some());
        assert!(tb.remove("timing.json").is_some());
        // The configs differ only in output_dir, which is echoed.
        let strip = |t: BTreeMap<String, Vec<u8>>, d: &Path| -> BTreeMap<String, String> {
            let needle = serde_json::to_string(d).unwrap();
            t.into_iter()
                .map(|(k, v)| (k, String::from_utf8(v).unwrap().replace(&needle, "\"DIR\"")))
                .collect()
        };
        assert_eq!(strip(ta, a.path()), strip(tb, b.path()), "{kind}");
    }
}

#[test]
fn aggregate_is_recomputable_from_per_mdp_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let mut value = small("compare");
    value["schemes"] = json!(["avi", "movi", "dpp"]);
    let cfg = config(value, dir.path());
    run_experiment(&cfg, None).unwrap();

    let mut cells: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    for i in 0..cfg.n_mdps {
        let text = fs::read_to_string(dir.path().join(format!("per_mdp/mdp_{i:03}.csv"))).unwrap();
        let (header, rows) = parse_csv(&text);
        assert_eq!(header, ["iteration", "scheme", "error"]);
        for r in rows {
            cells.entry((r[0].parse().unwrap(), r[1].clone())).or_default().push(r[2].parse().unwrap());
        }
    }
    let (header, rows) = parse_csv(&fs::read_to_string(dir.path().join("aggregate.csv")).unwrap());
    assert_eq!(header, ["iteration", "scheme", "mean", "std", "n"]);
    assert_eq!(rows.len(), cells.len());
    for r in rows {
        let v = &cells[&(r[0].parse().unwrap(), r[1].clone())];
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((r[2].parse::<f64>().unwrap() - mean).abs() <= 1e-12);
        assert!((r[3].parse::<f64>().unwrap() - var.sqrt()).abs() <= 1e-12);
        assert_eq!(r[4].parse::<usize>().unwrap(), v.len());
    }
}

#[test]
fn smallest_exact_run_has_one_row_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({
            "kind": "compare",
            "garnet": { "n_states": 3, "n_actions": 2, "branching": 1 },
            "schemes": ["avi", "movi", "sql", "dpp"],
            "master_seed": 0,
            "n_mdps": 1,
            "iterations": 1,
            "sampled": false,
        }),
        dir.path(),
    );
    run_experiment(&cfg, None).unwrap();
    for file in ["aggregate.csv", "per_mdp/mdp_000.csv", "fig3.csv"] {
        let (_, rows) = parse_csv(&fs::read_to_string(dir.path().join(file)).unwrap());
        assert_eq!(rows.len(), 4, "{file}");
        let schemes: Vec<_> = rows.iter().map(|r| r[1].as_str()).collect();
        assert_eq!(schemes, ["avi", "movi", "sql", "dpp"]);
        assert!(rows.iter().all(|r| r[0] == "1"));
    }
    // A single replicate has zero spread.
    let (_, rows) = parse_csv(&fs::read_to_string(dir.path().join("fig3.csv")).unwrap());
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn figure_cardinalities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(small("convergence"), dir.path());
    assert_eq!(cfg.checkpoints, default_checkpoints(60));
    run_experiment(&cfg, None).unwrap();
    let fig1 = emit_figure(dir.path(), FigureId::Fig1).unwrap();
    let (header, rows) = parse_csv(&fig1);
    assert_eq!(header, ["iteration", "scheme", "mean_error", "std_error"]);
    assert_eq!(rows.len(), cfg.checkpoints.len() * 2);
    assert_eq!(fig1, fs::read_to_string(dir.path().join("fig1.csv")).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let mut value = small("assumption");
    value["n_mdps"] = json!(1);
    value["assumption"] = json!({ "j": 3, "l_values": [0, 1, 2, 5], "n_max": 200 });
    run_experiment(&config(value, dir.path()), None).unwrap();
    let (header, rows) = parse_csv(&emit_figure(&dir.path().join("records"), FigureId::Fig2).unwrap());
    assert_eq!(header, ["N", "l", "mean_epsbar", "std_epsbar"]);
    assert_eq!(rows.len(), 4 * 200);
}

#[test]
fn emit_rejects_mismatched_or_incomplete_records() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config(small("convergence"), dir.path()), None).unwrap();
    for fig in [FigureId::Fig2, FigureId::Fig3] {
        assert!(matches!(emit_figure(dir.path(), fig), Err(LabError::KindMismatch { .. })));
    }
    fs::remove_file(dir.path().join("records/mdp_001.json")).unwrap();
    assert!(matches!(emit_figure(dir.path(), FigureId::Fig1), Err(LabError::Records(_))));
    let empty = tempfile::tempdir().unwrap();
    assert!(emit_figure(empty.path(), FigureId::Fig1).is_err());
}

#[test]
fn rerun_with_fewer_mdps_drops_stale_records() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config(small("convergence"), dir.path()), None).unwrap();
    let mut value = small("convergence");
    value["n_mdps"] = json!(2);
    run_experiment(&config(value, dir.path()), None).unwrap();
    assert_eq!(load_records(dir.path()).unwrap().len(), 2);
    assert_eq!(fs::read_dir(dir.path().join("per_mdp")).unwrap().count(), 2);
}

#[test]
fn bounds_rows_hold_on_a_small_batch() {
    let dir = tempfile::tempdir().unwrap();
    let mut value = small("bounds");
    value["schemes"] = json!(["movi", "sql", "dpp"]);
    value["iterations"] = json!(101);
    let cfg = config(value, dir.path());
    assert_eq!(cfg.checkpoints, [1, 10, 100]);
    let out = run_experiment(&cfg, None).unwrap();
    for record in &out.records {
        let RecordResult::Bounds { rows, concentrability_exact, .. } = &record.result else {
            panic!("expected bound rows");
        };
        assert!(*concentrability_exact);
        assert_eq!(rows.len(), 9);
        for row in rows {
            assert!(row.holds, "{row:?}");
            assert!(row.loss_sup <= row.rhs_sup + 1e-8);
            assert_eq!(row.slack_min.is_some(), row.scheme == movi_core::SchemeId::Movi);
        }
    }
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["results"]["violations"], json!([]));
}

#[test]
fn records_round_trip_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&config(small("compare"), dir.path()), None).unwrap();
    assert_eq!(load_records(dir.path()).unwrap(), out.records);
    for r in &out.records {
        assert_eq!(r.config.master_seed, 17);
        assert_eq!(r.seeds.master, 17);
    }
    assert_ne!(out.records[0].seeds.garnet, out.records[1].seeds.garnet);
}

#[test]
fn config_errors_name_every_field() {
    let err = validate_str(r#"{"kind": "compare", "gamma": 1.5, "iterations": 0, "garnet": {"n_states": 2, "n_actions": 2, "branching": 3}, "bogus": 1}"#)
        .unwrap_err();
    let fields: Vec<_> = err.fields().collect();
    for f in ["gamma", "iterations", "garnet.branching", "master_seed", "bogus"] {
        assert!(fields.contains(&f), "{f} missing from {fields:?}");
    }
    assert!(parse_str("").is_err());
    assert!(validate_str("not json").is_err());
}

fn arb_config() -> impl Strategy<Value = Value> {
    (
        prop_oneof![Just("convergence"), Just("compare"), Just("assumption"), Just("bounds")],
        (1usize..40, 1usize..5),
        0.0f64..0.999,
        1usize..5000,
        1usize..50,
        any::<u64>(),
        prop::option::of(0.0f64..0.999),
        any::<bool>(),
        prop_oneof![Just("l1_uniform"), Just("sup")],
    )
        .prop_map(|(kind, (ns, na), gamma, iterations, n_mdps, seed, beta, sampled, norm)| {
            let mut v = json!({
                "kind": kind,
                "garnet": { "n_states": ns, "n_actions": na, "branching": 1 + ns / 2 },
                "gamma": gamma,
                "iterations": iterations + 1,
                "n_mdps": n_mdps,
                "master_seed": seed,
                "sampled": sampled,
                "eval_norm": norm,
            });
            if let Some(b) = beta {
                v["beta"] = json!({ "constant": b });
            }
            v
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn validated_configs_round_trip(raw in arb_config()) {
        let cfg = validate_value(&raw).unwrap();
        let text = cfg.to_json_pretty();
        prop_assert_eq!(validate_str(&text).unwrap(), cfg.clone());
        let reparsed: ExperimentConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(reparsed, cfg);
    }
}
