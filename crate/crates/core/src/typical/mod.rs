//! Frequency-typical names and the combinatorics built on them.
//!
//! A name is a word over `0..K`. It is typical for `(q, ε)` when every symbol
//! frequency is within `ε` of `q`, boundary included.

mod codebook;
mod count;
mod packing;
mod trim;

pub use codebook::{
    build_injections, ChainCheck, CodeBook, FiberRanker, PackingBudget, CODEWORD_LIMIT, MAXIMAL_PACKING_LIMIT,
};
pub use count::{
    binomial, binomial_bound, count_compositions, count_fiber, count_typical, ln_big, stirling_window, typical_window,
    BinomialBound, StirlingWindow,
};
pub use packing::{
    covering_bound, enumerate_typical, greedy_packing, greedy_packing_limited, spread_packing, CoveringBound, LexPacker,
};
pub use trim::{choose_j, kept_frequencies};

use crate::error::{Error, Result};
use crate::probvec::ProbVec;

pub type NameWord = Vec<usize>;

/// Slack added to the membership bound to absorb rounding in decimal weights.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// True when a symbol seen `count` times in a word of length `n` is within
/// `eps` of frequency `q`.
pub fn within(count: usize, n: usize, q: f64, eps: f64) -> bool {
    ((count as f64) / (n as f64) - q).abs() <= eps + MEMBERSHIP_SLACK
}

/// Admissible counts of one symbol form an interval; `None` when empty.
pub fn count_range(n: usize, q: f64, eps: f64) -> Option<(usize, usize)> {
    let lo = (0..=n).find(|&c| within(c, n, q, eps))?;
    let hi = (lo..=n).rev().find(|&c| within(c, n, q, eps))?;
    Some((lo, hi))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypicalSpec {
    pub q: ProbVec,
    pub eps: f64,
    pub n: usize,
}

impl TypicalSpec {
    pub fn new(q: ProbVec, eps: f64, n: usize) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("eps must be >= 0, got {eps}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("name length must be positive".into()));
        }
        Ok(TypicalSpec { q, eps, n })
    }

    pub fn alphabet(&self) -> usize {
        self.q.len()
    }

    /// Per-symbol admissible count intervals.
    pub fn ranges(&self) -> Vec<Option<(usize, usize)>> {
        self.q.weights().iter().map(|&qt| count_range(self.n, qt, self.eps)).collect()
    }

    pub fn is_typical(&self, word: &[usize]) -> Result<bool> {
        if word.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: word.len() });
        }
        let counts = symbol_counts(word, self.alphabet())?;
        Ok(counts.iter().zip(self.q.weights()).all(|(&c, &qt)| within(c, self.n, qt, self.eps)))
    }
}

/// Symbol counts of a word over an alphabet of size `k`.
pub fn symbol_counts(word: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0; k];
    for &s in word {
        if s >= k {
            return Err(Error::SymbolOutOfRange { symbol: s, alphabet: k });
        }
        counts[s] += 1;
    }
    Ok(counts)
}

pub fn is_typical(word: &[usize], spec: &TypicalSpec) -> Result<bool> {
    spec.is_typical(word)
}

/// Number of positions below the shorter length where the words differ.
pub fn mismatches(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Normalized Hamming distance over the shorter word's length.
pub fn dbar(a: &[usize], b: &[usize]) -> Result<f64> {
    let k = a.len().min(b.len());
    if k == 0 {
        return Err(Error::EmptyWord);
    }
    Ok(mismatches(a, b) as f64 / k as f64)
}

/// True when `m` mismatches out of `k` positions give a distance above `rho`.
pub fn separated(m: usize, k: usize, rho: f64) -> bool {
    (m as f64) / (k as f64) > rho
}
