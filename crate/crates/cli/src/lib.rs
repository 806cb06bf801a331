//! Experiment orchestration behind the `ilm` binary: runs, p sweeps,
//! baseline manifests and architecture comparisons, written as CSV.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use ilm_core::ilm::{p_grid, run_batch, run_single, BatchResult};
use ilm_core::metrics::Baselines;
use ilm_core::IlmError;
use thiserror::Error;

pub use config::{Architecture, Experiment};
use output::ManifestInput;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<IlmError> for CliError {
    fn from(e: IlmError) -> Self {
        match e {
            IlmError::NonFiniteLoss => CliError::Divergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn baselines_for(exp: &Experiment) -> Result<Baselines, CliError> {
    let s = &exp.sim;
    Ok(Baselines::estimate(s.n1, s.n3, s.baseline_samples, s.baseline_seed)?)
}

/// Files written by a command.
#[derive(Debug, Clone)]
pub struct Written {
    pub files: Vec<PathBuf>,
    pub results: Vec<BatchResult>,
}

fn simulate(exp: &Experiment, grid: &[f64], baselines: &Baselines) -> Result<Vec<BatchResult>, CliError> {
    let sim = &exp.sim;
    match exp.run_index {
        Some(run) => grid
            .iter()
            .map(|&p| run_single(sim, p, run, sim.seed, baselines).map_err(CliError::from))
            .collect(),
        None => Ok(run_batch(sim, grid, exp.runs, sim.seed, baselines, exp.jobs)?),
    }
}

fn write_set(
    exp: &Experiment,
    command: &str,
    label: Option<&str>,
    out: &Path,
    results: Vec<BatchResult>,
    baselines: &Baselines,
    finals: bool,
) -> Result<Written, CliError> {
    let mut files = Vec::new();
    let mut emit = |name: &str, text: String| -> Result<(), CliError> {
        let path = out.join(name);
        write(&path, &text)?;
        files.push(path);
        Ok(())
    };
    emit("trajectories.csv", output::trajectories_csv(&results))?;
    if finals {
        emit("finals.csv", output::finals_csv(&results))?;
    }
    emit("summary.csv", output::summary_csv(&output::summarize(&results)))?;
    let echo = exp.echo();
    emit(
        "manifest.txt",
        output::manifest(&ManifestInput {
            command,
            label,
            echo: &echo,
            baselines,
            results: &results,
        }),
    )?;
    Ok(Written { files, results })
}

/// `runs` simulations at the configured p (or one, with `run_index`).
pub fn cmd_run(exp: &Experiment, out: &Path) -> Result<Written, CliError> {
    exp.validate()?;
    let baselines = baselines_for(exp)?;
    let results = simulate(exp, &[exp.sim.p], &baselines)?;
    write_set(exp, "run", None, out, results, &baselines, false)
}

pub fn sweep_grid(exp: &Experiment) -> Result<Vec<f64>, CliError> {
    Ok(p_grid(exp.p_min, exp.p_max, exp.p_step)?)
}

/// Every p on the grid, `runs` simulations each.
pub fn cmd_sweep(exp: &Experiment, out: &Path) -> Result<Written, CliError> {
    exp.validate()?;
    let grid = sweep_grid(exp)?;
    let baselines = baselines_for(exp)?;
    let results = simulate(exp, &grid, &baselines)?;
    write_set(exp, "sweep", None, out, results, &baselines, true)
}

/// Writes a baseline manifest and returns its text.
pub fn cmd_baseline(n1: usize, n3: usize, samples: usize, seed: u64, out: &Path) -> Result<String, CliError> {
    if samples < 100 {
        return Err(CliError::Config(format!(
            "`samples` must be at least 100 (got {samples})"
        )));
    }
    let baselines = Baselines::estimate(n1, n3, samples, seed)?;
    let text = format!(
        "# background values for {n1}-bit meanings and {n3}-bit signals\nversion = {}\ncommand = baseline\n{}",
        env!("CARGO_PKG_VERSION"),
        output::baseline_lines(&baselines)
    );
    write(&out.join("manifest.txt"), &text)?;
    Ok(text)
}

/// A sweep per architecture under `<out>/<label>/`, plus a merged `compare.csv`.
pub fn cmd_compare(exp: &Experiment, out: &Path) -> Result<Vec<(String, Written)>, CliError> {
    if exp.architectures.is_empty() {
        return Err(CliError::Config("`architectures` is empty".into()));
    }
    let mut per_arch = Vec::new();
    for arch in &exp.architectures {
        let sub = Experiment {
            sim: arch.apply(&exp.sim),
            ..exp.clone()
        };
        sub.validate()?;
        let label = arch.label();
        let grid = sweep_grid(&sub)?;
        let baselines = baselines_for(&sub)?;
        let results = simulate(&sub, &grid, &baselines)?;
        let written = write_set(&sub, "compare", Some(&label), &out.join(&label), results, &baselines, true)?;
        per_arch.push((label, written));
    }
    let merged: Vec<(String, Vec<BatchResult>)> = per_arch
        .iter()
        .map(|(l, w)| (l.clone(), w.results.clone()))
        .collect();
    write(&out.join("compare.csv"), &output::compare_csv(&merged))?;
    Ok(per_arch)
}
