//! Flat `key = value` experiment configuration.

use std::fmt;
use std::str::FromStr;

use ilm_core::{AutoPer, Loss, SimConfig};

use crate::CliError;

/// One agent architecture in a comparison, written `n1xn2xn3:r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub r: usize,
}

impl Architecture {
    pub fn label(&self) -> String {
        format!("{}x{}x{}", self.n1, self.n2, self.n3)
    }

    pub fn apply(&self, base: &SimConfig) -> SimConfig {
        SimConfig {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            r: self.r,
            ..base.clone()
        }
    }

    /// The four agents compared on the 10-bit family.
    pub fn default_list() -> Vec<Architecture> {
        [(10, 10, 10), (10, 12, 10), (9, 11, 12), (10, 15, 20)]
            .into_iter()
            .map(|(n1, n2, n3)| Architecture { n1, n2, n3, r: 15 })
            .collect()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.label(), self.r)
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (dims, r) = match s.split_once(':') {
            Some((d, r)) => (d, r.trim().parse::<usize>().map_err(|_| format!("bad r in `{s}`"))?),
            None => (s, 15),
        };
        let parts: Vec<usize> = dims
            .split('x')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("bad architecture `{s}`"))?;
        match parts[..] {
            [n1, n2, n3] => Ok(Architecture { n1, n2, n3, r }),
            _ => Err(format!("architecture `{s}` needs three sizes")),
        }
    }
}

/// Everything a command needs besides the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub sim: SimConfig,
    pub runs: usize,
    /// Worker threads; 0 means all available cores.
    pub jobs: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub p_step: f64,
    pub architectures: Vec<Architecture>,
    /// Restrict `run` to a single run index.
    pub run_index: Option<usize>,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            sim: SimConfig::small(),
            runs: 50,
            jobs: 0,
            p_min: 0.5,
            p_max: 1.0,
            p_step: 0.05,
            architectures: Architecture::default_list(),
            run_index: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "preset",
    "n1",
    "n2",
    "n3",
    "bottleneck_size",
    "auto_pool_size",
    "r",
    "epochs",
    "learning_rate",
    "threshold",
    "loss",
    "auto_per",
    "generations",
    "p",
    "seed",
    "runs",
    "jobs",
    "baseline_samples",
    "baseline_seed",
    "p_min",
    "p_max",
    "p_step",
    "architectures",
    "run_index",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{value}` for key `{key}`")))
}

impl Experiment {
    /// Sets one key. Unknown keys are a configuration error naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let sim = &mut self.sim;
        match key {
            "preset" => {
                let preset = SimConfig::preset(v)
                    .ok_or_else(|| CliError::Config(format!("unknown preset `{v}` for key `preset`")))?;
                *sim = SimConfig {
                    p: sim.p,
                    seed: sim.seed,
                    ..preset
                };
            }
            "n1" => sim.n1 = parse(key, v)?,
            "n2" => sim.n2 = parse(key, v)?,
            "n3" => sim.n3 = parse(key, v)?,
            "bottleneck_size" => sim.bottleneck_size = parse(key, v)?,
            "auto_pool_size" => sim.auto_pool_size = parse(key, v)?,
            "r" => sim.r = parse(key, v)?,
            "epochs" => sim.epochs = parse(key, v)?,
            "learning_rate" => sim.learning_rate = parse(key, v)?,
            "threshold" => sim.threshold = parse(key, v)?,
            "loss" => {
                sim.loss = Loss::parse(v)
                    .ok_or_else(|| CliError::Config(format!("invalid value `{v}` for key `loss`")))?
            }
            "auto_per" => {
                sim.auto_per = AutoPer::parse(v).ok_or_else(|| {
                    CliError::Config(format!("invalid value `{v}` for key `auto_per`"))
                })?
            }
            "generations" => sim.generations = parse(key, v)?,
            "p" => sim.p = parse(key, v)?,
            "seed" => sim.seed = parse(key, v)?,
            "baseline_samples" => sim.baseline_samples = parse(key, v)?,
            "baseline_seed" => sim.baseline_seed = parse(key, v)?,
            "runs" => self.runs = parse(key, v)?,
            "jobs" => self.jobs = parse(key, v)?,
            "p_min" => self.p_min = parse(key, v)?,
            "p_max" => self.p_max = parse(key, v)?,
            "p_step" => self.p_step = parse(key, v)?,
            "run_index" => self.run_index = Some(parse(key, v)?),
            "architectures" => {
                self.architectures = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<Architecture>().map_err(CliError::Config))
                    .collect::<Result<_, _>>()?;
            }
            _ => return Err(CliError::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a config file. `preset` is applied before the other keys
    /// wherever it appears.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let pairs = parse_pairs(text)?;
        for (k, v) in pairs.iter().filter(|(k, _)| k == "preset") {
            self.set(k, v)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.sim.validate()?;
        if self.runs == 0 {
            return Err(CliError::Config("`runs` must be at least 1".into()));
        }
        if let Some(i) = self.run_index {
            if i >= self.runs {
                return Err(CliError::Config(format!(
                    "`run_index` {i} must be below `runs` {}",
                    self.runs
                )));
            }
        }
        Ok(())
    }

    /// `key = value` lines describing the experiment.
    pub fn echo(&self) -> Vec<(String, String)> {
        let s = &self.sim;
        let mut out: Vec<(String, String)> = vec![
            ("n1".into(), s.n1.to_string()),
            ("n2".into(), s.n2.to_string()),
            ("n3".into(), s.n3.to_string()),
            ("bottleneck_size".into(), s.bottleneck_size.to_string()),
            ("auto_pool_size".into(), s.auto_pool_size.to_string()),
            ("r".into(), s.r.to_string()),
            ("epochs".into(), s.epochs.to_string()),
            ("learning_rate".into(), s.learning_rate.to_string()),
            ("threshold".into(), s.threshold.to_string()),
            ("loss".into(), s.loss.name().into()),
            ("auto_per".into(), s.auto_per.name().into()),
            ("generations".into(), s.generations.to_string()),
            ("p".into(), s.p.to_string()),
            ("seed".into(), s.seed.to_string()),
            ("baseline_samples".into(), s.baseline_samples.to_string()),
            ("baseline_seed".into(), s.baseline_seed.to_string()),
            ("runs".into(), self.runs.to_string()),
            ("p_min".into(), self.p_min.to_string()),
            ("p_max".into(), self.p_max.to_string()),
            ("p_step".into(), self.p_step.to_string()),
        ];
        let archs: Vec<String> = self.architectures.iter().map(|a| a.to_string()).collect();
        out.push(("architectures".into(), archs.join(",")));
        if let Some(i) = self.run_index {
            out.push(("run_index".into(), i.to_string()));
        }
        out
    }
}

/// Splits config text into `(key, value)` pairs, skipping blanks and `#` comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
