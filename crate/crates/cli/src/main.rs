use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use slitlab::experiment::{self, ExperimentError, ExperimentId};

/// Runs one named slit-domain experiment and writes its report and tables.
#[derive(Parser)]
#[command(name = "slitlab", version, about)]
struct Cli {
    #[command(subcommand)]
    experiment: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance identities and Taylor jets of a boundary graph.
    GeometryCheck(Common),
    /// Harmonic slit polynomials against closed forms.
    HarmonicBasis(Common),
    /// Scale-invariant bounds of the mollified distance and glued fields.
    Regularize(Common),
    /// Lower bounds for the barrier Laplacian.
    Barrier(Common),
    /// Second-order convergence of the slit Laplace solver.
    LaplaceConvergence(Common),
    /// Residual decay of u/U₀ and u/U expansions.
    HarnackGain(Common),
    /// Thin-obstacle solve, free boundary and optimal growth.
    Signorini(Common),
    /// Free-boundary slope against the gradient quotient.
    Bootstrap(Common),
    /// Improvement-of-flatness iteration on planted data.
    Flatness(Common),
}

/// Flags shared by every experiment; values in the config file take precedence.
#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid points per axis (odd).
    #[arg(long)]
    grid_n: Option<usize>,
}

impl Command {
    fn split(self) -> (ExperimentId, Common) {
        match self {
            Command::GeometryCheck(c) => (ExperimentId::GeometryCheck, c),
            Command::HarmonicBasis(c) => (ExperimentId::HarmonicBasis, c),
            Command::Regularize(c) => (ExperimentId::Regularize, c),
            Command::Barrier(c) => (ExperimentId::Barrier, c),
            Command::LaplaceConvergence(c) => (ExperimentId::LaplaceConvergence, c),
            Command::HarnackGain(c) => (ExperimentId::HarnackGain, c),
            Command::Signorini(c) => (ExperimentId::Signorini, c),
            Command::Bootstrap(c) => (ExperimentId::Bootstrap, c),
            Command::Flatness(c) => (ExperimentId::Flatness, c),
        }
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

fn build_config(id: ExperimentId, flags: Common) -> Result<experiment::ExperimentConfig, ExperimentError> {
    let mut value = json!({ "experiment": id.as_str() });
    if let Some(out) = flags.out {
        value["out_dir"] = json!(out);
    }
    if let Some(seed) = flags.seed {
        value["seed"] = json!(seed);
    }
    if let Some(n) = flags.grid_n {
        value["grid"] = json!({ "n": n });
    }
    if let Some(path) = flags.config {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ExperimentError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| ExperimentError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        if !file.is_object() {
            return Err(ExperimentError::ConfigInvalid("the configuration must be a JSON object".into()));
        }
        if let Some(named) = file.get("experiment").and_then(Value::as_str) {
            if named != id.as_str() {
                return Err(ExperimentError::ConfigInvalid(format!(
                    "configuration is for '{named}' but '{id}' was requested"
                )));
            }
        }
        merge(&mut value, file);
    }
    experiment::parse_config(&value.to_string())
}

fn main() -> ExitCode {
    let (id, flags) = Cli::parse().experiment.split();
    let outcome = build_config(id, flags).and_then(|cfg| experiment::run(&cfg));
    match outcome {
        Ok(report) => {
            for c in &report.checks {
                println!("{:<4} {}: {}", c.verdict.as_str(), c.name, c.detail);
            }
            println!("{} {} ({:.1} s)", report.overall().as_str(), id, report.wall_time_s);
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
