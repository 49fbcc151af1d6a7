//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 bad
//! input data or config, 3 runtime failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dataset::{
    dataset_summary, generate_synthetic, load_manifest, validate_manifest, DatasetError, Dimension,
    SyntheticSpec,
};
use crate::labeling::GroundTruthScheme;
use crate::runner::{execute_run, render_report, ReportFormat, RunConfig, RunSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "emoeval", version, about = "Reproducible EEG emotion-recognition evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run { config: PathBuf },
    /// Write a synthetic dataset from a TOML or JSON spec.
    GenerateSynthetic { spec: PathBuf, out: PathBuf },
    /// Check a dataset's signal files and labels against its manifest.
    Validate { manifest: PathBuf },
    /// Print subject, trial, channel and class counts.
    Inspect {
        manifest: PathBuf,
        /// Rating used for the class distribution of dimensional datasets.
        #[arg(long, default_value = "valence")]
        dimension: String,
    },
    /// Render a run summary.
    Report {
        summary: PathBuf,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    }
}

/// Input problems are data errors; failing to write output is a runtime one.
fn dataset_failure(e: DatasetError) -> Failure {
    let code = match e {
        DatasetError::Io { .. } => EXIT_RUNTIME,
        _ => EXIT_DATA,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

/// Parse `args` (program name first) and execute. Normal output goes to
/// `out`, diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let line: Vec<&str> = f.message.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
            let _ = writeln!(err, "error: {}", line.join(" "));
            f.code
        }
    }
}

fn read_spec(path: &Path) -> Result<SyntheticSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| data(format!("{}: {e}", path.display())))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    let mut say = |s: String| {
        let _ = out.write_all(s.as_bytes());
    };
    match command {
        Command::Run { config } => {
            let config = RunConfig::load(&config).map_err(data)?;
            let artifacts = execute_run(&config).map_err(|e| Failure {
                code: if e.is_data_error() { EXIT_DATA } else { EXIT_RUNTIME },
                message: e.to_string(),
            })?;
            say(format!("run {}\n", artifacts.run_id));
            for (name, m) in &artifacts.aggregate.metrics {
                say(format!("{name:<16}{m}\n"));
            }
            say(format!("summary {}\n", artifacts.summary.display()));
            if let Some(p) = &artifacts.predictions {
                say(format!("predictions {}\n", p.display()));
            }
        }
        Command::GenerateSynthetic { spec, out } => {
            let spec = read_spec(&spec)?;
            let m = generate_synthetic(&spec, &out).map_err(dataset_failure)?;
            say(format!(
                "wrote {} trials for {} subjects to {}\n",
                m.n_trials(),
                m.subjects.len(),
                out.display()
            ));
        }
        Command::Validate { manifest } => {
            let m = load_manifest(&manifest).map_err(data)?;
            let report = validate_manifest(&m, &m.root);
            for f in &report.findings {
                say(format!("{f}\n"));
            }
            say(format!(
                "{} trials checked, {} findings\n",
                report.trials_checked,
                report.findings.len()
            ));
            if !report.ok {
                return Err(data(format!("{} failed validation", manifest.display())));
            }
        }
        Command::Inspect {
            manifest,
            dimension,
        } => {
            let m = load_manifest(&manifest).map_err(data)?;
            let dimension: Dimension = serde_json::from_value(serde_json::Value::String(dimension.clone()))
                .map_err(|_| data(format!("unknown dimension {dimension:?}")))?;
            let scheme = GroundTruthScheme::dataset_default(&m.dataset_name, dimension).or_else(|| {
                m.categorical_classes
                    .as_deref()
                    .map(GroundTruthScheme::categorical)
            });
            let stats = dataset_summary(&m, scheme.as_ref()).map_err(data)?;
            say(stats.to_string());
        }
        Command::Report { summary, format } => {
            let s = RunSummary::load(&summary).map_err(data)?;
            say(render_report(&s, format));
        }
    }
    Ok(())
}
