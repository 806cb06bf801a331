//! The generational engine.
//!
//! Each generation a fresh pupil is trained on a bottlenecked sample of the
//! tutor's language, its encoder is read out as the next language, and the
//! observables are recorded. Generation 0 is the mixture of the two parents.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bitlang::{
    mix_languages, random_compositional_language, write_bits, LanguageTable, MAX_MEANING_BITS,
};
use crate::error::{IlmError, Result};
use crate::metrics::{report, Baselines, MetricReport};
use crate::neuralnet::{Agent, Encoding, Loss, TrainHyper};

/// When the autoencoder presentations happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AutoPer {
    /// `r` presentations after every supervised iteration.
    #[default]
    Iteration,
    /// `r` presentations at the end of every epoch.
    Epoch,
}

impl AutoPer {
    pub fn name(&self) -> &'static str {
        match self {
            AutoPer::Iteration => "iteration",
            AutoPer::Epoch => "epoch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "iteration" => Some(AutoPer::Iteration),
            "epoch" => Some(AutoPer::Epoch),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    /// Meanings taught by the tutor each generation.
    pub bottleneck_size: usize,
    /// Meanings available for autoencoder practice each generation.
    pub auto_pool_size: usize,
    pub r: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub threshold: f64,
    pub loss: Loss,
    pub auto_per: AutoPer,
    /// Number of trained pupils; the trajectory has one more record.
    pub generations: usize,
    pub p: f64,
    pub seed: u64,
    /// Random tables drawn when estimating the background values.
    pub baseline_samples: usize,
    pub baseline_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::small()
    }
}

impl SimConfig {
    /// 10x10x10 agents, bottleneck 80, autoencoder pool 240, r = 15.
    pub fn small() -> Self {
        Self {
            n1: 10,
            n2: 10,
            n3: 10,
            bottleneck_size: 80,
            auto_pool_size: 240,
            r: 15,
            epochs: 20,
            learning_rate: 5.0,
            threshold: 0.5,
            loss: Loss::Mse,
            auto_per: AutoPer::Iteration,
            generations: 20,
            p: 0.5,
            seed: 1,
            baseline_samples: 1000,
            baseline_seed: 2024,
        }
    }

    /// 20x30x20 agents, bottleneck 185, autoencoder pool 555, r = 30.
    pub fn large() -> Self {
        Self {
            n1: 20,
            n2: 30,
            n3: 20,
            bottleneck_size: 185,
            auto_pool_size: 555,
            r: 30,
            baseline_samples: 100,
            ..Self::small()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "small" => Some(Self::small()),
            "large" => Some(Self::large()),
            _ => None,
        }
    }

    /// `n1 x n2 x n3` label, e.g. `10x15x20`.
    pub fn architecture(&self) -> String {
        format!("{}x{}x{}", self.n1, self.n2, self.n3)
    }

    pub fn hyper(&self) -> TrainHyper {
        TrainHyper {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            r: self.r,
            binarize_threshold: self.threshold,
            loss: self.loss,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n1 > MAX_MEANING_BITS {
            return Err(IlmError::BitLength(self.n1, MAX_MEANING_BITS));
        }
        if self.n2 == 0 {
            return Err(IlmError::ZeroDimension([self.n1, self.n2, self.n3]));
        }
        if self.n1 > self.n3 {
            return Err(IlmError::MeaningLongerThanSignal {
                n1: self.n1,
                n3: self.n3,
            });
        }
        let space = 1usize << self.n1;
        for k in [self.bottleneck_size, self.auto_pool_size] {
            if k > space {
                return Err(IlmError::SampleTooLarge { k, space });
            }
        }
        if self.bottleneck_size == 0 {
            return Err(IlmError::Config("bottleneck_size must be positive".into()));
        }
        if self.r > 0 && self.auto_pool_size == 0 {
            return Err(IlmError::Config("auto_pool_size must be positive when r > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(IlmError::Probability(self.p));
        }
        self.hyper().validate()
    }

    /// Closed-form step counts for one pupil.
    pub fn steps_per_pupil(&self) -> TrainingCounters {
        let supervised = self.epochs * self.bottleneck_size;
        let autoencoder = match self.auto_per {
            AutoPer::Iteration => supervised * self.r,
            AutoPer::Epoch => self.epochs * self.r,
        };
        TrainingCounters {
            decoder_steps: supervised,
            encoder_steps: supervised,
            autoencoder_steps: autoencoder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainingCounters {
    pub decoder_steps: usize,
    pub encoder_steps: usize,
    pub autoencoder_steps: usize,
}

impl std::ops::AddAssign for TrainingCounters {
    fn add_assign(&mut self, o: Self) {
        self.decoder_steps += o.decoder_steps;
        self.encoder_steps += o.encoder_steps;
        self.autoencoder_steps += o.autoencoder_steps;
    }
}

/// `k` distinct meanings drawn uniformly without replacement from `2^n1`.
pub fn sample_bottleneck<R: Rng + ?Sized>(rng: &mut R, n1: usize, k: usize) -> Result<Vec<u32>> {
    if n1 == 0 || n1 > MAX_MEANING_BITS {
        return Err(IlmError::BitLength(n1, MAX_MEANING_BITS));
    }
    let space = 1usize << n1;
    if k > space {
        return Err(IlmError::SampleTooLarge { k, space });
    }
    Ok(index::sample(rng, space, k)
        .into_iter()
        .map(|i| i as u32)
        .collect())
}

/// Trains a fresh pupil on `tutor`. Returns the agent and the steps it took.
pub fn train_pupil<R: Rng + ?Sized>(
    tutor: &LanguageTable,
    config: &SimConfig,
    rng: &mut R,
) -> Result<(Agent, TrainingCounters)> {
    if tutor.n1() != config.n1 || tutor.n3() != config.n3 {
        return Err(IlmError::shape(
            format!("{}x{} tutor", config.n1, config.n3),
            format!("{}x{}", tutor.n1(), tutor.n3()),
        ));
    }
    let (n1, n3) = (config.n1, config.n3);
    let hyper = config.hyper();
    let (eta, loss) = (hyper.learning_rate, hyper.loss);

    let mut agent = Agent::new(n1, config.n2, n3, rng)?;
    let bottleneck = sample_bottleneck(rng, n1, config.bottleneck_size)?;
    let pool = sample_bottleneck(rng, n1, config.auto_pool_size)?;

    let mut counters = TrainingCounters::default();
    let mut meaning = vec![0.0; n1];
    let mut signal = vec![0.0; n3];
    let mut buf = vec![0.0; n1];
    let mut autoencode = |agent: &mut Agent, rng: &mut R, counters: &mut TrainingCounters| {
        for _ in 0..hyper.r {
            let m = pool[rng.gen_range(0..pool.len())];
            write_bits(m, &mut buf);
            agent.autoencoder_step(&buf, eta, loss)?;
            counters.autoencoder_steps += 1;
        }
        Ok::<_, IlmError>(())
    };

    let mut first = bottleneck.clone();
    let mut second = bottleneck;
    for _ in 0..hyper.epochs {
        first.shuffle(rng);
        second.shuffle(rng);
        for (&bd, &be) in first.iter().zip(&second) {
            write_bits(tutor.get(bd), &mut signal);
            write_bits(bd, &mut meaning);
            agent.decoder.sgd_step(&signal, &meaning, eta, loss)?;
            counters.decoder_steps += 1;

            write_bits(be, &mut meaning);
            write_bits(tutor.get(be), &mut signal);
            agent.encoder.sgd_step(&meaning, &signal, eta, loss)?;
            counters.encoder_steps += 1;

            if config.auto_per == AutoPer::Iteration {
                autoencode(&mut agent, rng, &mut counters)?;
            }
        }
        if config.auto_per == AutoPer::Epoch {
            autoencode(&mut agent, rng, &mut counters)?;
        }
    }
    if !agent.is_finite() {
        return Err(IlmError::NonFiniteLoss);
    }
    Ok((agent, counters))
}

/// Reads the agent's language off its encoder, with binarized outputs.
pub fn extract_language(agent: &Agent, threshold: f64) -> LanguageTable {
    let mut enc = Encoding::new(&agent.encoder, threshold);
    LanguageTable::from_fn(agent.meaning_len(), agent.signal_len(), |m| enc.encode(m))
        .expect("agent dimensions were validated at construction")
}

/// The two languages mixed at generation 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Parents {
    pub a: LanguageTable,
    pub b: LanguageTable,
}

impl Parents {
    /// Two independently drawn compositional languages, `a` first.
    pub fn random<R: Rng + ?Sized>(n1: usize, n3: usize, rng: &mut R) -> Result<Self> {
        let a = random_compositional_language(n1, n3, rng)?.expand();
        let b = random_compositional_language(n1, n3, rng)?.expand();
        Ok(Self { a, b })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub metrics: MetricReport,
    pub checksum: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SimConfig,
    pub parent_a: u64,
    pub parent_b: u64,
    pub records: Vec<GenerationRecord>,
    pub steps: TrainingCounters,
    /// Seed of the freshly initialised pupil in each generation, from 1.
    pub generation_seeds: Vec<u64>,
}

impl Trajectory {
    pub fn last(&self) -> &MetricReport {
        &self.records.last().expect("trajectory has generation 0").metrics
    }
}

/// Mixes the parents with weight `config.p` and iterates learning for
/// `config.generations` pupils.
pub fn run_simulation<R: Rng + ?Sized>(
    config: &SimConfig,
    parents: &Parents,
    baselines: &Baselines,
    rng: &mut R,
) -> Result<Trajectory> {
    config.validate()?;
    parents.a.same_shape(&parents.b)?;
    let mut tutor = mix_languages(&parents.a, &parents.b, config.p, rng)?;
    let metrics = report(&tutor, None, &parents.a, &parents.b, baselines)?;
    let mut records = vec![GenerationRecord {
        generation: 0,
        metrics,
        checksum: Some(tutor.checksum()),
    }];
    let mut steps = TrainingCounters::default();
    let mut generation_seeds = Vec::with_capacity(config.generations);
    for generation in 1..=config.generations {
        let seed = rng.gen::<u64>();
        generation_seeds.push(seed);
        let mut gen_rng = ChaCha8Rng::seed_from_u64(seed);
        let (pupil, counters) = train_pupil(&tutor, config, &mut gen_rng)?;
        steps += counters;
        let language = extract_language(&pupil, config.threshold);
        let metrics = report(&language, Some(&tutor), &parents.a, &parents.b, baselines)?;
        if !metrics.is_finite() {
            return Err(IlmError::NonFiniteLoss);
        }
        records.push(GenerationRecord {
            generation,
            metrics,
            checksum: Some(language.checksum()),
        });
        tutor = language;
    }
    Ok(Trajectory {
        config: config.clone(),
        parent_a: parents.a.checksum(),
        parent_b: parents.b.checksum(),
        records,
        steps,
        generation_seeds,
    })
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one `(p, run)` cell. `p` enters at a resolution of 1e-6 so a
/// run can be reproduced from its p value alone.
pub fn sub_seed(master_seed: u64, p: f64, run: usize) -> u64 {
    let p_key = (p * 1e6).round() as u64;
    splitmix64(splitmix64(splitmix64(master_seed) ^ p_key) ^ run as u64)
}

/// Draws parents from the run's sub-seed and simulates it.
pub fn run_single(
    config: &SimConfig,
    p: f64,
    run: usize,
    master_seed: u64,
    baselines: &Baselines,
) -> Result<BatchResult> {
    let seed = sub_seed(master_seed, p, run);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = SimConfig {
        p,
        seed: master_seed,
        ..config.clone()
    };
    let parents = Parents::random(config.n1, config.n3, &mut rng)?;
    let trajectory = run_simulation(&config, &parents, baselines, &mut rng)?;
    Ok(BatchResult {
        p,
        run,
        sub_seed: seed,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub p: f64,
    pub run: usize,
    pub sub_seed: u64,
    pub trajectory: Trajectory,
}

/// Every `(p, run)` cell of the grid, in `(p, run)` order regardless of
/// `jobs`. `jobs = 0` uses all available cores.
pub fn run_batch(
    config: &SimConfig,
    p_grid: &[f64],
    runs_per_p: usize,
    master_seed: u64,
    baselines: &Baselines,
    jobs: usize,
) -> Result<Vec<BatchResult>> {
    if runs_per_p == 0 {
        return Err(IlmError::Config("runs per p must be at least 1".into()));
    }
    for &p in p_grid {
        SimConfig { p, ..config.clone() }.validate()?;
    }
    let tasks: Vec<(f64, usize)> = p_grid
        .iter()
        .flat_map(|&p| (0..runs_per_p).map(move |run| (p, run)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| IlmError::Config(e.to_string()))?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, run)| run_single(config, p, run, master_seed, baselines))
            .collect()
    })
}

/// `start, start + step, ..., end` with the endpoint included when it lies on the grid.
pub fn p_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || start > end || start < 0.0 || end > 1.0 {
        return Err(IlmError::Config(format!(
            "invalid p grid {start}..{end} step {step}"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitlang::identity_language;

    fn tiny() -> SimConfig {
        SimConfig {
            n1: 4,
            n2: 5,
            n3: 4,
            bottleneck_size: 8,
            auto_pool_size: 12,
            r: 3,
            epochs: 4,
            generations: 3,
            baseline_samples: 100,
            ..SimConfig::small()
        }
    }

    #[test]
    fn presets() {
        let s = SimConfig::small();
        assert_eq!((s.bottleneck_size, s.auto_pool_size, s.r, s.generations), (80, 240, 15, 20));
        let l = SimConfig::large();
        assert_eq!(l.architecture(), "20x30x20");
        assert_eq!((l.bottleneck_size, l.auto_pool_size, l.r), (185, 555, 30));
        assert!(SimConfig::preset("medium").is_none());
    }

    #[test]
    fn validation() {
        let bad = SimConfig { bottleneck_size: 17, ..tiny() };
        assert_eq!(bad.validate(), Err(IlmError::SampleTooLarge { k: 17, space: 16 }));
        let bad = SimConfig { p: -0.1, ..tiny() };
        assert!(bad.validate().is_err());
        let bad = SimConfig { n3: 3, ..tiny() };
        assert!(bad.validate().is_err());
        assert!(tiny().validate().is_ok());
    }

    #[test]
    fn bottleneck_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut all = sample_bottleneck(&mut rng, 4, 16).unwrap();
        all.sort_unstable();
        assert_eq!(all, (0..16).collect::<Vec<_>>());
        let mut b = sample_bottleneck(&mut rng, 10, 80).unwrap();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 80);
        assert!(b.iter().all(|&m| m < 1024));
        assert!(sample_bottleneck(&mut rng, 4, 17).is_err());
    }

    #[test]
    fn different_seeds_give_different_bottlenecks() {
        let same = (0..100u64)
            .filter(|&s| {
                let a = sample_bottleneck(&mut ChaCha8Rng::seed_from_u64(2 * s), 10, 80).unwrap();
                let b =
                    sample_bottleneck(&mut ChaCha8Rng::seed_from_u64(2 * s + 1), 10, 80).unwrap();
                a == b
            })
            .count();
        assert_eq!(same, 0);
    }

    #[test]
    fn schedule_accounting() {
        let config = tiny();
        let tutor = identity_language(4).unwrap();
        let (_, counters) = train_pupil(&tutor, &config, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(counters, config.steps_per_pupil());
        assert_eq!(counters.autoencoder_steps, 4 * 8 * 3);
        let small = SimConfig::small().steps_per_pupil();
        assert_eq!(small.encoder_steps, 1600);
        assert_eq!(small.autoencoder_steps, 24000);

        let epoch = SimConfig { auto_per: AutoPer::Epoch, ..config };
        let (_, counters) = train_pupil(&tutor, &epoch, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(counters.autoencoder_steps, 4 * 3);
    }

    #[test]
    fn train_pupil_rejects_wrong_tutor() {
        let tutor = identity_language(5).unwrap();
        assert!(train_pupil(&tutor, &tiny(), &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn extraction_is_deterministic() {
        let agent = Agent::new(6, 4, 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let a = extract_language(&agent, 0.5);
        let b = extract_language(&agent, 0.5);
        assert_eq!(a, b);
        assert_eq!((a.n1(), a.n3(), a.len()), (6, 7, 64));
    }

    #[test]
    fn trajectory_shape_and_seeding() {
        let config = tiny();
        let base = Baselines::analytic(4, 4, 0.1);
        let r1 = run_single(&config, 0.75, 2, 99, &base).unwrap();
        let r2 = run_single(&config, 0.75, 2, 99, &base).unwrap();
        assert_eq!(r1, r2);
        let t = &r1.trajectory;
        assert_eq!(t.records.len(), config.generations + 1);
        assert!(t.records.iter().enumerate().all(|(i, r)| r.generation == i));
        assert!(t.records[0].metrics.s.is_none());
        assert!(t.records[1..].iter().all(|r| r.metrics.s.is_some()));
        let mut expected = config.steps_per_pupil();
        expected.decoder_steps *= 3;
        expected.encoder_steps *= 3;
        expected.autoencoder_steps *= 3;
        assert_eq!(t.steps, expected);
        let other = run_single(&config, 0.75, 3, 99, &base).unwrap();
        assert_ne!(other.sub_seed, r1.sub_seed);
    }

    #[test]
    fn pure_parent_generation_zero() {
        let config = SimConfig { generations: 1, ..tiny() };
        let base = Baselines::analytic(4, 4, 0.1);
        let r = run_single(&config, 1.0, 0, 5, &base).unwrap();
        let g0 = &r.trajectory.records[0].metrics;
        assert_eq!((g0.x, g0.a), (1.0, 1.0));
        assert!((g0.c - 1.0).abs() < 1e-12);
        let r = run_single(&config, 0.0, 0, 5, &base).unwrap();
        assert_eq!(r.trajectory.records[0].metrics.b, 1.0);
    }

    #[test]
    fn pupil_init_depends_only_on_generation_seed() {
        let config = tiny();
        let base = Baselines::analytic(4, 4, 0.1);
        let r = run_single(&config, 0.5, 0, 11, &base).unwrap();
        let seed = r.trajectory.generation_seeds[1];
        let expected = Agent::new(4, 5, 4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fresh = Agent::new(4, 5, 4, &mut rng).unwrap();
        assert_eq!(fresh, expected);
    }

    #[test]
    fn batch_preserves_order_and_matches_isolated_runs() {
        let config = SimConfig { generations: 2, ..tiny() };
        let base = Baselines::analytic(4, 4, 0.1);
        let grid = [0.5, 0.75];
        let batch = run_batch(&config, &grid, 3, 42, &base, 2).unwrap();
        assert_eq!(batch.len(), 6);
        let cells: Vec<_> = batch.iter().map(|b| (b.p, b.run)).collect();
        assert_eq!(
            cells,
            vec![(0.5, 0), (0.5, 1), (0.5, 2), (0.75, 0), (0.75, 1), (0.75, 2)]
        );
        let single = run_single(&config, 0.75, 1, 42, &base).unwrap();
        assert_eq!(batch[4], single);
        let serial = run_batch(&config, &grid, 3, 42, &base, 1).unwrap();
        assert_eq!(serial, batch);
        assert!(run_batch(&config, &grid, 0, 42, &base, 1).is_err());
    }

    #[test]
    fn grid_construction() {
        let g = p_grid(0.5, 1.0, 0.05).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.5);
        assert_eq!(g[10], 1.0);
        assert_eq!(g[5], 0.75);
        assert!(p_grid(0.5, 1.0, 0.0).is_err());
    }
}
