//! Exponential codebooks generated lazily from a counter-based stream.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest index space a single simulation may enumerate.
pub const ENUMERATION_LIMIT: u64 = 1 << 24;

/// `Exp(1)` scores `T_key`, one per index in `0..index_count`.
///
/// The score of `key` is read from word position `2 * key` of a ChaCha8
/// stream selected by `(seed, stream)`, so random access and sequential
/// scans agree and nothing is materialized.
#[derive(Clone, Debug)]
pub struct Codebook {
    seed: u64,
    stream: u64,
    index_count: u64,
}

fn exp_score(word: u64) -> f64 {
    let u = (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    -(1.0 - u).ln()
}

impl Codebook {
    pub fn new(seed: u64, stream: u64, index_count: u64) -> Result<Self> {
        if index_count > ENUMERATION_LIMIT {
            return Err(Error::EnumerationBound { size: index_count as f64, limit: ENUMERATION_LIMIT as f64 });
        }
        if index_count == 0 {
            return Err(Error::InvalidInput("codebook needs at least one index".into()));
        }
        Ok(Codebook { seed, stream, index_count })
    }

    pub fn index_count(&self) -> u64 {
        self.index_count
    }

    fn rng_at(&self, key: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(2 * key as u128);
        rng
    }

    pub fn score(&self, key: u64) -> f64 {
        debug_assert!(key < self.index_count);
        exp_score(self.rng_at(key).next_u64())
    }

    /// Scores of keys `start, start + 1, ...` up to the end of the book.
    pub fn scores_from(&self, start: u64) -> impl Iterator<Item = f64> {
        let mut rng = self.rng_at(start);
        (start..self.index_count).map(move |_| exp_score(rng.next_u64()))
    }

    /// Scores of an ascending run of keys; short gaps are skipped by reading
    /// through the stream, long ones by seeking.
    pub fn scores_at<'a>(&'a self, keys: impl IntoIterator<Item = u64> + 'a) -> impl Iterator<Item = f64> + 'a {
        let mut rng: Option<ChaCha8Rng> = None;
        let mut next = 0u64;
        keys.into_iter().map(move |key| {
            debug_assert!(key < self.index_count);
            match rng.as_mut() {
                Some(r) if key >= next && key - next < SKIP_LIMIT => {
                    for _ in next..key {
                        r.next_u64();
                    }
                }
                _ => rng = Some(self.rng_at(key)),
            }
            next = key + 1;
            exp_score(rng.as_mut().expect("positioned above").next_u64())
        })
    }
}

/// Gap (in keys) beyond which seeking beats reading through.
const SKIP_LIMIT: u64 = 64;

/// Running `argmin score / weight` over positive weights.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ArgMin {
    pub key: u64,
    pub ratio: f64,
}

impl ArgMin {
    pub fn empty() -> Self {
        ArgMin { key: u64::MAX, ratio: f64::INFINITY }
    }

    pub fn offer(&mut self, key: u64, score: f64, weight: f64) {
        if weight > 0.0 {
            let r = score / weight;
            if r < self.ratio || (r == self.ratio && key < self.key) {
                self.key = key;
                self.ratio = r;
            }
        }
    }

    /// Same rule with a precomputed objective (e.g. a log-ratio).
    pub fn offer_value(&mut self, key: u64, value: f64) {
        if value < self.ratio || (value == self.ratio && key < self.key) {
            self.key = key;
            self.ratio = value;
        }
    }

    pub fn found(&self) -> bool {
        self.key != u64::MAX
    }
}
