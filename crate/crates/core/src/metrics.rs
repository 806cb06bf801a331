//! Language observables: expressivity, compositionality, stability and
//! similarity to the parent languages, each normalized against the value a
//! uniformly random language would score.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bitlang::{table_similarity_raw, LanguageTable};
use crate::error::{IlmError, Result};

/// Rescales `raw` so the background value maps to 0 and 1 stays 1.
pub fn normalize(raw: f64, baseline: f64) -> Result<f64> {
    if !(baseline < 1.0) {
        return Err(IlmError::Baseline(baseline));
    }
    Ok((raw - baseline) / (1.0 - baseline))
}

pub fn similarity(l1: &LanguageTable, l2: &LanguageTable, f0: f64) -> Result<f64> {
    normalize(table_similarity_raw(l1, l2)?, f0)
}

/// Distinct signals used, as a fraction of the number of meanings.
pub fn expressivity_raw(table: &LanguageTable) -> f64 {
    let mut signals = table.entries().to_vec();
    signals.sort_unstable();
    signals.dedup();
    signals.len() as f64 / table.len() as f64
}

/// Binary entropy in bits.
#[inline]
fn h2(q: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(q) + term(1.0 - q)
}

/// Bit `i` of every meaning index in word `w` of a 64-meaning-per-word bitset.
#[inline]
fn meaning_bit_word(i: usize, w: usize) -> u64 {
    const LOW: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    if i < 6 {
        LOW[i]
    } else if (w >> (i - 6)) & 1 == 1 {
        u64::MAX
    } else {
        0
    }
}

/// Mutual information (bits) between every meaning bit `i` and signal bit `j`,
/// over the uniform distribution on all meanings. Row-major `[i * n3 + j]`.
pub fn bit_mutual_information(table: &LanguageTable) -> Vec<f64> {
    let (n1, n3) = (table.n1(), table.n3());
    let n = table.len();
    let words = n.div_ceil(64);
    let valid = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };

    // one bitset over meanings per signal position
    let mut columns = vec![0u64; n3 * words];
    for (m, &s) in table.entries().iter().enumerate() {
        let (w, k) = (m / 64, m % 64);
        let mut rest = s;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            columns[j * words + w] |= 1u64 << k;
            rest &= rest - 1;
        }
    }

    let half = (n / 2) as f64;
    let mut mi = vec![0.0; n1 * n3];
    for j in 0..n3 {
        let col = &columns[j * words..(j + 1) * words];
        let ones: u64 = col.iter().map(|c| c.count_ones() as u64).sum();
        let h_s = h2(ones as f64 / n as f64);
        for i in 0..n1 {
            let both: u64 = col
                .iter()
                .enumerate()
                .map(|(w, c)| (c & meaning_bit_word(i, w) & valid).count_ones() as u64)
                .sum();
            let given_one = both as f64 / half;
            let given_zero = (ones - both) as f64 / half;
            let h_cond = 0.5 * h2(given_one) + 0.5 * h2(given_zero);
            mi[i * n3 + j] = (h_s - h_cond).max(0.0);
        }
    }
    mi
}

/// Mean over meaning bits of the best mutual information with any single signal bit.
pub fn compositionality_raw(table: &LanguageTable) -> f64 {
    let n3 = table.n3();
    let mi = bit_mutual_information(table);
    let best: f64 = mi
        .chunks(n3)
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .sum();
    best / table.n1() as f64
}

/// Probability that two independent uniform `n3`-bit signals coincide.
pub fn baseline_similarity(_n1: usize, n3: usize) -> f64 {
    (-(n3 as f64)).exp2()
}

/// Expected distinct-signal fraction of a uniformly random map.
pub fn baseline_expressivity(n1: usize, n3: usize) -> f64 {
    let signals = (n3 as f64).exp2();
    let meanings = (n1 as f64).exp2();
    let unused = (meanings * (-1.0 / signals).ln_1p()).exp();
    signals * (1.0 - unused) / meanings
}

/// Uniformly random table: every signal independent and uniform.
pub fn random_table<R: Rng + ?Sized>(n1: usize, n3: usize, rng: &mut R) -> Result<LanguageTable> {
    let m = if n3 >= 32 { u32::MAX } else { (1u32 << n3) - 1 };
    LanguageTable::from_fn(n1, n3, |_| rng.gen::<u32>() & m)
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    fn from_samples(values: &[f64], seed: u64) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / n).sqrt(),
            samples: values.len(),
            seed,
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.se
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 100 {
        return Err(IlmError::Config(format!(
            "baseline needs at least 100 samples (got {samples})"
        )));
    }
    Ok(())
}

pub fn mc_similarity<R: Rng + ?Sized>(
    n1: usize,
    n3: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (0..samples)
        .map(|_| {
            let a = random_table(n1, n3, rng)?;
            let b = random_table(n1, n3, rng)?;
            table_similarity_raw(&a, &b)
        })
        .collect()
}

pub fn mc_expressivity<R: Rng + ?Sized>(
    n1: usize,
    n3: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (0..samples)
        .map(|_| random_table(n1, n3, rng).map(|t| expressivity_raw(&t)))
        .collect()
}

pub fn mc_compositionality<R: Rng + ?Sized>(
    n1: usize,
    n3: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (0..samples)
        .map(|_| random_table(n1, n3, rng).map(|t| compositionality_raw(&t)))
        .collect()
}

/// Mean compositionality of `samples` uniformly random tables.
pub fn baseline_compositionality<R: Rng + ?Sized>(
    n1: usize,
    n3: usize,
    samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    check_samples(samples)?;
    Ok(McEstimate::from_samples(
        &mc_compositionality(n1, n3, samples, rng)?,
        0,
    ))
}

/// One background value and where it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineEntry {
    /// The value used for normalization.
    pub value: f64,
    pub analytic: Option<f64>,
    pub monte_carlo: Option<McEstimate>,
}

impl BaselineEntry {
    /// Analytic and Monte Carlo values agree within three standard errors.
    /// Entries without an analytic value trivially pass.
    pub fn consistent(&self) -> bool {
        match (self.analytic, self.monte_carlo) {
            (Some(a), Some(mc)) => mc.agrees_with(a, 3.0),
            _ => true,
        }
    }
}

/// Background values for similarity (`f0`), expressivity (`x0`) and
/// compositionality (`c0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baselines {
    pub n1: usize,
    pub n3: usize,
    pub f0: BaselineEntry,
    pub x0: BaselineEntry,
    pub c0: BaselineEntry,
}

impl Baselines {
    /// Analytic f0 and x0 with a Monte Carlo cross-check, Monte Carlo c0.
    /// Each metric draws from its own stream derived from `seed`.
    pub fn estimate(n1: usize, n3: usize, samples: usize, seed: u64) -> Result<Self> {
        check_samples(samples)?;
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        let f0 = baseline_similarity(n1, n3);
        let x0 = baseline_expressivity(n1, n3);
        let f_mc = McEstimate::from_samples(&mc_similarity(n1, n3, samples, &mut stream(1))?, seed);
        let x_mc =
            McEstimate::from_samples(&mc_expressivity(n1, n3, samples, &mut stream(2))?, seed);
        let c_mc =
            McEstimate::from_samples(&mc_compositionality(n1, n3, samples, &mut stream(3))?, seed);
        Ok(Self {
            n1,
            n3,
            f0: BaselineEntry {
                value: f0,
                analytic: Some(f0),
                monte_carlo: Some(f_mc),
            },
            x0: BaselineEntry {
                value: x0,
                analytic: Some(x0),
                monte_carlo: Some(x_mc),
            },
            c0: BaselineEntry {
                value: c_mc.mean,
                analytic: None,
                monte_carlo: Some(c_mc),
            },
        })
    }

    /// Baselines with a caller-supplied c0 and no Monte Carlo checks.
    pub fn analytic(n1: usize, n3: usize, c0: f64) -> Self {
        let exact = |v: f64| BaselineEntry {
            value: v,
            analytic: Some(v),
            monte_carlo: None,
        };
        Self {
            n1,
            n3,
            f0: exact(baseline_similarity(n1, n3)),
            x0: exact(baseline_expressivity(n1, n3)),
            c0: BaselineEntry {
                value: c0,
                analytic: None,
                monte_carlo: None,
            },
        }
    }

    pub fn entries(&self) -> [(&'static str, &BaselineEntry); 3] {
        [("f0", &self.f0), ("x0", &self.x0), ("c0", &self.c0)]
    }
}

/// Pre-normalization values of the observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawMetrics {
    pub x: f64,
    pub c: f64,
    pub s: Option<f64>,
    pub a: f64,
    pub b: f64,
}

/// Normalized observables for one language, with their raw counterparts.
/// `s` is absent when there is no previous generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub x: f64,
    pub c: f64,
    pub s: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub raw: RawMetrics,
}

impl MetricReport {
    pub fn is_finite(&self) -> bool {
        [self.x, self.c, self.a, self.b, self.s.unwrap_or(0.0)]
            .iter()
            .all(|v| v.is_finite())
    }
}

pub fn report(
    now: &LanguageTable,
    prev: Option<&LanguageTable>,
    parent_a: &LanguageTable,
    parent_b: &LanguageTable,
    baselines: &Baselines,
) -> Result<MetricReport> {
    now.same_shape(parent_a)?;
    now.same_shape(parent_b)?;
    if now.n1() != baselines.n1 || now.n3() != baselines.n3 {
        return Err(IlmError::shape(
            format!("baselines for {}x{}", now.n1(), now.n3()),
            format!("{}x{}", baselines.n1, baselines.n3),
        ));
    }
    let raw = RawMetrics {
        x: expressivity_raw(now),
        c: compositionality_raw(now),
        s: prev.map(|p| table_similarity_raw(now, p)).transpose()?,
        a: table_similarity_raw(now, parent_a)?,
        b: table_similarity_raw(now, parent_b)?,
    };
    let f0 = baselines.f0.value;
    Ok(MetricReport {
        x: normalize(raw.x, baselines.x0.value)?,
        c: normalize(raw.c, baselines.c0.value)?,
        s: raw.s.map(|s| normalize(s, f0)).transpose()?,
        a: normalize(raw.a, f0)?,
        b: normalize(raw.b, f0)?,
        raw,
    })
}
