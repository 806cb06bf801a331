//! Binary meaning and signal spaces, language tables, compositional languages and mixing.
//!
//! Bit vectors are packed into a `u32` with little-endian bit order: component 0
//! of the vector is the least significant bit of the integer index. The same
//! convention is used for table indexing and for the text serialization.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{IlmError, Result};

/// Largest supported meaning length. Tables are dense over all meanings.
pub const MAX_MEANING_BITS: usize = 20;
/// Largest supported signal length.
pub const MAX_SIGNAL_BITS: usize = 32;

fn mask(len: usize) -> u32 {
    if len >= 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

macro_rules! bit_vector {
    ($(#[$doc:meta])* $name:ident, $max:expr) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub struct $name {
            index: u32,
            len: u8,
        }

        impl $name {
            pub fn new(index: u32, len: usize) -> Result<Self> {
                if len == 0 || len > $max {
                    return Err(IlmError::BitLength(len, $max));
                }
                if index & !mask(len) != 0 {
                    return Err(IlmError::shape(
                        format!("index below 2^{len}"),
                        index,
                    ));
                }
                Ok(Self { index, len: len as u8 })
            }

            pub fn from_bits(bits: &[bool]) -> Result<Self> {
                let index = bits
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
                Self::new(index, bits.len())
            }

            #[inline]
            pub fn index(&self) -> u32 {
                self.index
            }

            #[inline]
            pub fn len(&self) -> usize {
                self.len as usize
            }

            #[inline]
            pub fn is_empty(&self) -> bool {
                self.len == 0
            }

            #[inline]
            pub fn bit(&self, i: usize) -> bool {
                (self.index >> i) & 1 == 1
            }

            pub fn to_bits(&self) -> Vec<bool> {
                (0..self.len()).map(|i| self.bit(i)).collect()
            }

            /// Real-valued 0/1 vector, the form the networks consume.
            pub fn to_real(&self) -> Vec<f64> {
                let mut out = vec![0.0; self.len()];
                write_bits(self.index, &mut out);
                out
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                for i in 0..self.len() {
                    f.write_str(if self.bit(i) { "1" } else { "0" })?;
                }
                Ok(())
            }
        }
    };
}

bit_vector!(
    /// A meaning: `n1` binary semantic facts.
    Meaning,
    MAX_MEANING_BITS
);
bit_vector!(
    /// A signal: `n3` binary morphemes.
    Signal,
    MAX_SIGNAL_BITS
);

/// Writes the low `out.len()` bits of `value` into `out` as 0.0/1.0.
#[inline]
pub fn write_bits(value: u32, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = ((value >> i) & 1) as f64;
    }
}

/// Packs a binary 0/1 slice (bit 0 first) into an integer.
#[inline]
pub fn pack_bits(bits: &[u8]) -> u32 {
    bits.iter()
        .enumerate()
        .fold(0u32, |acc, (i, &b)| acc | (((b & 1) as u32) << i))
}

/// A total map from all `2^n1` meanings to signals of length `n3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LanguageTable {
    n1: usize,
    n3: usize,
    entries: Vec<u32>,
}

impl LanguageTable {
    pub fn from_entries(n1: usize, n3: usize, entries: Vec<u32>) -> Result<Self> {
        check_meaning_bits(n1)?;
        check_signal_bits(n3)?;
        if entries.len() != 1usize << n1 {
            return Err(IlmError::shape(
                format!("{} entries", 1usize << n1),
                entries.len(),
            ));
        }
        let m = mask(n3);
        if let Some(bad) = entries.iter().find(|&&s| s & !m != 0) {
            return Err(IlmError::shape(format!("{n3}-bit signals"), bad));
        }
        Ok(Self { n1, n3, entries })
    }

    /// Builds a table by evaluating `f` on every meaning index in order.
    pub fn from_fn(n1: usize, n3: usize, f: impl FnMut(u32) -> u32) -> Result<Self> {
        check_meaning_bits(n1)?;
        let entries = (0..(1u32 << n1)).map(f).collect();
        Self::from_entries(n1, n3, entries)
    }

    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n3(&self) -> usize {
        self.n3
    }

    /// Number of meanings, `2^n1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, meaning: u32) -> u32 {
        self.entries[meaning as usize]
    }

    pub fn signal(&self, meaning: Meaning) -> Result<Signal> {
        if meaning.len() != self.n1 {
            return Err(IlmError::shape(self.n1, meaning.len()));
        }
        Signal::new(self.get(meaning.index()), self.n3)
    }

    pub fn same_shape(&self, other: &LanguageTable) -> Result<()> {
        if self.n1 != other.n1 || self.n3 != other.n3 {
            return Err(IlmError::shape(
                format!("{}x{}", self.n1, self.n3),
                format!("{}x{}", other.n1, other.n3),
            ));
        }
        Ok(())
    }

    /// FNV-1a hash over the entries; used to fingerprint generations.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in [self.n1 as u8, self.n3 as u8]
            .into_iter()
            .chain(self.entries.iter().flat_map(|e| e.to_le_bytes()))
        {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    /// Text form: a `n1=<v> n3=<v>` header, then one 0/1 string per meaning,
    /// bit 0 first.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + self.len() * (self.n3 + 1));
        out.push_str(&format!("n1={} n3={}\n", self.n1, self.n3));
        for &s in &self.entries {
            for j in 0..self.n3 {
                out.push(if (s >> j) & 1 == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| IlmError::Parse("empty input".into()))?;
        let mut n1 = None;
        let mut n3 = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| IlmError::Parse(format!("bad header field `{field}`")))?;
            let value: usize = value
                .parse()
                .map_err(|_| IlmError::Parse(format!("bad header value `{field}`")))?;
            match key {
                "n1" => n1 = Some(value),
                "n3" => n3 = Some(value),
                _ => return Err(IlmError::Parse(format!("unknown header key `{key}`"))),
            }
        }
        let (n1, n3) = match (n1, n3) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(IlmError::Parse("header needs n1 and n3".into())),
        };
        let mut entries = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let line = line.trim();
            if line.len() != n3 {
                return Err(IlmError::Parse(format!("signal `{line}` is not {n3} bits")));
            }
            let mut s = 0u32;
            for (j, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => s |= 1 << j,
                    _ => return Err(IlmError::Parse(format!("bad character `{ch}`"))),
                }
            }
            entries.push(s);
        }
        Self::from_entries(n1, n3, entries)
    }
}

fn check_meaning_bits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_MEANING_BITS {
        return Err(IlmError::BitLength(n, MAX_MEANING_BITS));
    }
    Ok(())
}

fn check_signal_bits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SIGNAL_BITS {
        return Err(IlmError::BitLength(n, MAX_SIGNAL_BITS));
    }
    Ok(())
}

/// Each meaning maps to the signal with identical bits.
pub fn identity_language(n: usize) -> Result<LanguageTable> {
    LanguageTable::from_fn(n, n, |m| m)
}

/// A perfectly compositional language: meaning bit `i` sets signal bit
/// `perm[i]` (negated when `flips[i]`), the remaining signal positions hold
/// constant filler values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionalLanguage {
    n1: usize,
    n3: usize,
    perm: Vec<usize>,
    flips: Vec<bool>,
    /// Filler values for the positions outside the image of `perm`, in
    /// ascending position order.
    filler: Vec<bool>,
}

impl CompositionalLanguage {
    pub fn new(
        n3: usize,
        perm: Vec<usize>,
        flips: Vec<bool>,
        filler: Vec<bool>,
    ) -> Result<Self> {
        let n1 = perm.len();
        check_meaning_bits(n1)?;
        check_signal_bits(n3)?;
        if n1 > n3 {
            return Err(IlmError::MeaningLongerThanSignal { n1, n3 });
        }
        if flips.len() != n1 {
            return Err(IlmError::shape(format!("{n1} flips"), flips.len()));
        }
        if filler.len() != n3 - n1 {
            return Err(IlmError::shape(format!("{} filler bits", n3 - n1), filler.len()));
        }
        let mut seen = vec![false; n3];
        for &j in &perm {
            if j >= n3 || seen[j] {
                return Err(IlmError::shape("injective map into signal positions", format!("{perm:?}")));
            }
            seen[j] = true;
        }
        Ok(Self { n1, n3, perm, flips, filler })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n3(&self) -> usize {
        self.n3
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn flips(&self) -> &[bool] {
        &self.flips
    }

    pub fn filler(&self) -> &[bool] {
        &self.filler
    }

    /// Signal positions not used by any meaning bit, ascending.
    pub fn filler_positions(&self) -> Vec<usize> {
        let mut used = vec![false; self.n3];
        for &j in &self.perm {
            used[j] = true;
        }
        (0..self.n3).filter(|&j| !used[j]).collect()
    }

    fn constant_part(&self) -> u32 {
        let mut base = 0u32;
        for (j, &v) in self.filler_positions().iter().zip(&self.filler) {
            base |= (v as u32) << j;
        }
        for (i, &f) in self.flips.iter().enumerate() {
            base |= (f as u32) << self.perm[i];
        }
        base
    }

    pub fn encode(&self, meaning: u32) -> u32 {
        let mut s = self.constant_part();
        for (i, &j) in self.perm.iter().enumerate() {
            s ^= ((meaning >> i) & 1) << j;
        }
        s
    }

    /// Inverse of [`encode`](Self::encode) on the meaning bits; filler bits are ignored.
    pub fn decode(&self, signal: u32) -> u32 {
        let mut m = 0u32;
        for (i, &j) in self.perm.iter().enumerate() {
            m |= (((signal >> j) & 1) ^ self.flips[i] as u32) << i;
        }
        m
    }

    pub fn expand(&self) -> LanguageTable {
        let base = self.constant_part();
        let entries = (0..(1u32 << self.n1))
            .map(|m| {
                let mut s = base;
                for (i, &j) in self.perm.iter().enumerate() {
                    s ^= ((m >> i) & 1) << j;
                }
                s
            })
            .collect();
        LanguageTable {
            n1: self.n1,
            n3: self.n3,
            entries,
        }
    }
}

/// A uniformly random compositionality-preserving shuffle of the identity language.
pub fn random_compositional_language<R: Rng + ?Sized>(
    n1: usize,
    n3: usize,
    rng: &mut R,
) -> Result<CompositionalLanguage> {
    check_meaning_bits(n1)?;
    check_signal_bits(n3)?;
    if n1 > n3 {
        return Err(IlmError::MeaningLongerThanSignal { n1, n3 });
    }
    let mut positions: Vec<usize> = (0..n3).collect();
    positions.shuffle(rng);
    let perm = positions[..n1].to_vec();
    let flips = (0..n1).map(|_| rng.gen::<bool>()).collect();
    let filler = (0..n3 - n1).map(|_| rng.gen::<bool>()).collect();
    CompositionalLanguage::new(n3, perm, flips, filler)
}

pub fn expand(cl: &CompositionalLanguage) -> LanguageTable {
    cl.expand()
}

/// Per meaning, takes `a`'s signal with probability `p`, otherwise `b`'s.
pub fn mix_languages<R: Rng + ?Sized>(
    a: &LanguageTable,
    b: &LanguageTable,
    p: f64,
    rng: &mut R,
) -> Result<LanguageTable> {
    a.same_shape(b)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(IlmError::Probability(p));
    }
    let entries = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(&sa, &sb)| if rng.gen_bool(p) { sa } else { sb })
        .collect();
    Ok(LanguageTable {
        n1: a.n1,
        n3: a.n3,
        entries,
    })
}

/// Fraction of meanings on which the two tables emit the same signal.
pub fn table_similarity_raw(l1: &LanguageTable, l2: &LanguageTable) -> Result<f64> {
    l1.same_shape(l2)?;
    let agree = l1
        .entries
        .iter()
        .zip(&l2.entries)
        .filter(|(x, y)| x == y)
        .count();
    Ok(agree as f64 / l1.len() as f64)
}
