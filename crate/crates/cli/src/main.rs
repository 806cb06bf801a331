use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ilm_cli::config::parse_pairs;
use ilm_cli::{cmd_baseline, cmd_compare, cmd_run, cmd_sweep, CliError, Experiment};

#[derive(Parser)]
#[command(name = "ilm", version, about = "Iterated learning simulations of language contact")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate `runs` languages at a single mixing weight p.
    Run {
        #[command(flatten)]
        common: Common,
        /// Re-run only this run index (reproduces the matching rows of a larger run or sweep).
        #[arg(long)]
        run_index: Option<usize>,
    },
    /// Sweep p over a grid and summarise the final generations.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the background values used for normalization.
    Baseline {
        #[arg(long, default_value_t = 10)]
        n1: usize,
        #[arg(long, default_value_t = 10)]
        n3: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep each agent architecture and merge the results.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated `n1xn2xn3:r` list.
        #[arg(long)]
        architectures: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["small", "large"])]
    preset: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_parser = ["iteration", "epoch"])]
    auto_per: Option<String>,
    #[arg(long, value_parser = ["mse", "bce"])]
    loss: Option<String>,
}

impl Common {
    fn experiment(&self, extra: &[(&str, Option<String>)]) -> Result<Experiment, CliError> {
        let mut exp = Experiment::default();
        let file_pairs = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                parse_pairs(&text)?
            }
            None => Vec::new(),
        };
        let preset = self
            .preset
            .clone()
            .or_else(|| file_pairs.iter().find(|(k, _)| k == "preset").map(|(_, v)| v.clone()));
        if let Some(preset) = preset {
            exp.set("preset", &preset)?;
        }
        for (k, v) in file_pairs.iter().filter(|(k, _)| k != "preset") {
            exp.set(k, v)?;
        }
        let flags = [
            ("p", self.p.map(|v| v.to_string())),
            ("runs", self.runs.map(|v| v.to_string())),
            ("generations", self.generations.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("jobs", self.jobs.map(|v| v.to_string())),
            ("auto_per", self.auto_per.clone()),
            ("loss", self.loss.clone()),
        ];
        for (k, v) in flags.iter().map(|(k, v)| (*k, v)).chain(extra.iter().map(|(k, v)| (*k, v))) {
            if let Some(v) = v {
                exp.set(k, v)?;
            }
        }
        Ok(exp)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { common, run_index } => {
            let exp = common.experiment(&[("run_index", run_index.map(|v| v.to_string()))])?;
            let written = cmd_run(&exp, &common.out)?;
            for f in written.files {
                println!("{}", f.display());
            }
        }
        Command::Sweep { common } => {
            let exp = common.experiment(&[])?;
            let written = cmd_sweep(&exp, &common.out)?;
            for f in written.files {
                println!("{}", f.display());
            }
        }
        Command::Baseline {
            n1,
            n3,
            samples,
            seed,
            out,
        } => {
            print!("{}", cmd_baseline(n1, n3, samples, seed, &out)?);
        }
        Command::Compare {
            common,
            architectures,
        } => {
            let exp = common.experiment(&[("architectures", architectures)])?;
            for (label, written) in cmd_compare(&exp, &common.out)? {
                println!("{label}: {} files", written.files.len());
            }
            println!("{}", common.out.join("compare.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ilm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
