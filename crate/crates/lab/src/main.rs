use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use movi_lab::config::{apply_override, read_config_value, validate_value, ConfigErrors, FieldError};
use movi_lab::{emit_figure, run_experiment, FigureId, LabError, OUTPUT_DIR_ENV};
use serde_json::Value;

/// Seeded Garnet experiments for momentum value iteration.
#[derive(Parser)]
#[command(name = "movi-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    ///
    /// Any config field can be overridden with `--field value`, using dots
    /// for nested fields (`--garnet.n_states 10`). Values are read as JSON
    /// and fall back to plain strings. The output directory is taken from
    /// `--output_dir`, then $MOVI_OUTPUT_DIR, then the config.
    Run {
        config: PathBuf,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--FIELD VALUE")]
        overrides: Vec<String>,
    },
    /// Print figure data (CSV) built from a directory of records.
    Emit {
        figure: FigureId,
        records_dir: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print it with defaults filled in.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(command: Command) -> Result<(), LabError> {
    match command {
        Command::Run { config, jobs, overrides } => {
            let (value, jobs) = prepare(&config, jobs, &overrides)?;
            let config = validate_value(&value)?;
            let outcome = run_experiment(&config, jobs)?;
            eprintln!(
                "{} run: {} MDPs, {} files in {} ({:.1} s)",
                config.kind,
                outcome.records.len(),
                outcome.files.len(),
                outcome.output_dir.display(),
                outcome.wall_seconds
            );
            Ok(())
        }
        Command::Emit { figure, records_dir, out } => {
            let csv = emit_figure(&records_dir, figure)?;
            match out {
                Some(path) => std::fs::write(&path, csv).map_err(|source| LabError::Io { path, source }),
                None => write_stdout(&csv),
            }
        }
        Command::Validate { config } => {
            let config = validate_value(&read_config_value(&config)?)?;
            write_stdout(&(config.to_json_pretty() + "\n"))
        }
    }
}

fn write_stdout(text: &str) -> Result<(), LabError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        // A closed pipe (`| head`) is not a failure.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(|source| LabError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

/// Reads the config and applies the environment and flag overrides, in
/// increasing order of precedence. `--jobs` may also appear among the
/// trailing flags.
fn prepare(path: &Path, mut jobs: Option<usize>, overrides: &[String]) -> Result<(Value, Option<usize>), LabError> {
    let mut value = read_config_value(path)?;
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            apply_override(&mut value, "output_dir", &serde_json::to_string(&dir).unwrap())?;
        }
    }
    let mut errors = Vec::new();
    let mut args = overrides.iter();
    while let Some(arg) = args.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            errors.push(FieldError {
                field: arg.clone(),
                message: "expected a --field flag".into(),
            });
            continue;
        };
        let (field, raw) = match flag.split_once('=') {
            Some((f, v)) => (f.to_string(), Some(v.to_string())),
            None => (flag.to_string(), args.next().cloned()),
        };
        let field = field.replace('-', "_");
        let Some(raw) = raw else {
            errors.push(FieldError {
                message: "flag needs a value".into(),
                field,
            });
            continue;
        };
        if field == "jobs" {
            match raw.parse() {
                Ok(n) => jobs = Some(n),
                Err(_) => errors.push(FieldError {
                    field,
                    message: format!("expected a thread count, got {raw:?}"),
                }),
            }
            continue;
        }
        if let Err(e) = apply_override(&mut value, &field, &raw) {
            errors.extend(e.0);
        }
    }
    if errors.is_empty() {
        Ok((value, jobs))
    } else {
        Err(ConfigErrors(errors).into())
    }
}
