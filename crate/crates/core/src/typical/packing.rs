//! Lexicographic greedy packings of typical names under the d̄ metric.
//!
//! The greedy scan accepts a typical word when it is farther than ρ from every
//! word accepted so far. Instead of walking the whole typical set, the packer
//! finds each next accepted word directly with a pruned depth-first search in
//! lexicographic order, so long names stay tractable as long as few codewords
//! are requested. Past a few dozen codewords the DFS bound goes slack, so
//! long names use [`spread_packing`] instead.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::count::{binomial, count_typical, ln_big};
use super::{separated, NameWord, TypicalSpec};
use crate::error::{Error, Result};
use crate::probvec::floor_mul;

/// Search nodes allowed per call to [`LexPacker::next_word`].
pub const DEFAULT_NODE_BUDGET: u64 = 200_000_000;

pub struct LexPacker {
    k: usize,
    alphabet: usize,
    lo: Vec<usize>,
    hi: Vec<usize>,
    empty: bool,
    min_mismatch: usize,
    words: Vec<NameWord>,
    /// `suffix[w][i * alphabet + s]`: occurrences of `s` in `words[w][i..]`.
    suffix: Vec<Vec<u32>>,
    exhausted: bool,
    node_budget: u64,
}

struct Search<'a> {
    packer: &'a LexPacker,
    prev: Option<&'a [usize]>,
    prefix: Vec<usize>,
    counts: Vec<usize>,
    mism: Vec<usize>,
    nodes: u64,
}

impl LexPacker {
    pub fn new(spec: &TypicalSpec, rho: f64) -> Result<Self> {
        if !(rho >= 0.0) {
            return Err(Error::InvalidParameter(format!("rho must be >= 0, got {rho}")));
        }
        let k = spec.n;
        let ranges = spec.ranges();
        let empty = ranges.iter().any(|r| r.is_none())
            || ranges.iter().map(|r| r.map_or(0, |x| x.0)).sum::<usize>() > k
            || ranges.iter().map(|r| r.map_or(0, |x| x.1)).sum::<usize>() < k;
        let min_mismatch = (0..=k).find(|&m| separated(m, k, rho)).unwrap_or(k + 1);
        Ok(LexPacker {
            k,
            alphabet: spec.alphabet(),
            lo: ranges.iter().map(|r| r.map_or(0, |x| x.0)).collect(),
            hi: ranges.iter().map(|r| r.map_or(0, |x| x.1)).collect(),
            empty,
            min_mismatch,
            words: Vec::new(),
            suffix: Vec::new(),
            exhausted: false,
            node_budget: DEFAULT_NODE_BUDGET,
        })
    }

    pub fn with_node_budget(mut self, budget: u64) -> Self {
        self.node_budget = budget;
        self
    }

    pub fn words(&self) -> &[NameWord] {
        &self.words
    }

    pub fn into_words(self) -> Vec<NameWord> {
        self.words
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Accept and return the next word of the greedy scan, or `None` once the
    /// packing is maximal.
    pub fn next_word(&mut self) -> Result<Option<NameWord>> {
        if self.exhausted || self.empty {
            self.exhausted = true;
            return Ok(None);
        }
        let found = {
            let mut search = Search {
                packer: self,
                prev: self.words.last().map(|w| w.as_slice()),
                prefix: Vec::with_capacity(self.k),
                counts: vec![0; self.alphabet],
                mism: vec![0; self.words.len()],
                nodes: 0,
            };
            let tight = search.prev.is_some();
            if search.dfs(tight)? {
                Some(search.prefix)
            } else {
                None
            }
        };
        match found {
            Some(w) => {
                self.push(w.clone());
                Ok(Some(w))
            }
            None => {
                self.exhausted = true;
                Ok(None)
            }
        }
    }

    fn push(&mut self, w: NameWord) {
        let a = self.alphabet;
        let mut suf = vec![0u32; (self.k + 1) * a];
        for i in (0..self.k).rev() {
            for s in 0..a {
                suf[i * a + s] = suf[(i + 1) * a + s];
            }
            suf[i * a + w[i]] += 1;
        }
        self.suffix.push(suf);
        self.words.push(w);
    }
}

impl Search<'_> {
    fn feasible(&self) -> bool {
        let p = self.packer;
        let i = self.prefix.len();
        let rem = p.k - i;
        let mut need_total = 0;
        let mut room_total = 0;
        for s in 0..p.alphabet {
            if self.counts[s] > p.hi[s] {
                return false;
            }
            need_total += p.lo[s].saturating_sub(self.counts[s]);
            room_total += p.hi[s] - self.counts[s];
        }
        if need_total > rem || room_total < rem {
            return false;
        }
        for (w, suf) in p.suffix.iter().enumerate() {
            let row = &suf[i * p.alphabet..(i + 1) * p.alphabet];
            let mut forced = 0;
            for s in 0..p.alphabet {
                let need = p.lo[s].saturating_sub(self.counts[s]);
                forced += need.saturating_sub(rem - row[s] as usize);
            }
            if self.mism[w] + rem.saturating_sub(forced) < p.min_mismatch {
                return false;
            }
        }
        true
    }

    fn dfs(&mut self, tight: bool) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.packer.node_budget {
            return Err(Error::SizeCap(format!("packing search exceeded {} nodes", self.packer.node_budget)));
        }
        if !self.feasible() {
            return Ok(false);
        }
        let i = self.prefix.len();
        if i == self.packer.k {
            // A tight completion equals the previous accepted word.
            return Ok(!tight);
        }
        let start = if tight { self.prev.map_or(0, |p| p[i]) } else { 0 };
        for s in start..self.packer.alphabet {
            if self.counts[s] >= self.packer.hi[s] {
                continue;
            }
            self.prefix.push(s);
            self.counts[s] += 1;
            for (w, word) in self.packer.words.iter().enumerate() {
                if word[i] != s {
                    self.mism[w] += 1;
                }
            }
            let still_tight = tight && self.prev.is_some_and(|p| p[i] == s);
            if self.dfs(still_tight)? {
                return Ok(true);
            }
            for (w, word) in self.packer.words.iter().enumerate() {
                if word[i] != s {
                    self.mism[w] -= 1;
                }
            }
            self.counts[s] -= 1;
            self.prefix.pop();
        }
        Ok(false)
    }
}

/// Maximal lexicographic greedy packing of `L_{q,ε}^n` with pairwise d̄ > ρ.
pub fn greedy_packing(spec: &TypicalSpec, rho: f64) -> Result<Vec<NameWord>> {
    let mut packer = LexPacker::new(spec, rho)?;
    while packer.next_word()?.is_some() {}
    Ok(packer.into_words())
}

/// The first `limit` words of the greedy packing (fewer if it is maximal sooner).
pub fn greedy_packing_limited(spec: &TypicalSpec, rho: f64, limit: usize) -> Result<Vec<NameWord>> {
    let mut packer = LexPacker::new(spec, rho)?;
    while packer.words().len() < limit && packer.next_word()?.is_some() {}
    Ok(packer.into_words())
}

/// Candidate draws allowed per requested codeword in [`spread_packing`].
pub const SPREAD_ATTEMPTS: usize = 10_000;

/// A d̄-separated set of `count` typical words drawn as seeded shuffles of one
/// typical composition, each kept when it is farther than ρ from all kept
/// words. Deterministic for a given seed; not maximal.
pub fn spread_packing(spec: &TypicalSpec, rho: f64, count: usize, seed: u64) -> Result<Vec<NameWord>> {
    let packer = LexPacker::new(spec, rho)?;
    if packer.empty {
        return Ok(Vec::new());
    }
    let composition = central_composition(spec, &packer.lo, &packer.hi);
    let mut base: NameWord = composition.iter().enumerate().flat_map(|(s, &c)| std::iter::repeat_n(s, c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words: Vec<NameWord> = Vec::with_capacity(count);
    let mut attempts = 0;
    while words.len() < count {
        if attempts == SPREAD_ATTEMPTS * count.max(1) {
            return Err(Error::SizeCap(format!(
                "found only {} of {count} separated words in {attempts} draws",
                words.len()
            )));
        }
        attempts += 1;
        base.shuffle(&mut rng);
        let min = packer.min_mismatch;
        if words.iter().all(|w| super::mismatches(w, &base) >= min) {
            words.push(base.clone());
        }
    }
    Ok(words)
}

/// The admissible composition closest to `q·n`: start at the lower bounds and
/// hand out the rest to the symbols furthest below their share.
fn central_composition(spec: &TypicalSpec, lo: &[usize], hi: &[usize]) -> Vec<usize> {
    let n = spec.n;
    let mut c = lo.to_vec();
    let mut left = n - c.iter().sum::<usize>();
    let q = spec.q.weights();
    while left > 0 {
        let s = (0..c.len())
            .filter(|&s| c[s] < hi[s])
            .max_by(|&a, &b| {
                let da = q[a] * n as f64 - c[a] as f64;
                let db = q[b] * n as f64 - c[b] as f64;
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("nonempty typical set has room");
        c[s] += 1;
        left -= 1;
    }
    c
}

/// All typical words in lexicographic order.
pub fn enumerate_typical(spec: &TypicalSpec) -> Result<Vec<NameWord>> {
    let packer = LexPacker::new(spec, 0.0)?;
    let mut out = Vec::new();
    if packer.empty {
        return Ok(out);
    }
    let mut search = Search {
        packer: &packer,
        prev: None,
        prefix: Vec::with_capacity(spec.n),
        counts: vec![0; spec.alphabet()],
        mism: Vec::new(),
        nodes: 0,
    };
    collect_all(&mut search, &mut out);
    Ok(out)
}

fn collect_all(search: &mut Search<'_>, out: &mut Vec<NameWord>) {
    if !search.feasible() {
        return;
    }
    if search.prefix.len() == search.packer.k {
        out.push(search.prefix.clone());
        return;
    }
    for s in 0..search.packer.alphabet {
        if search.counts[s] >= search.packer.hi[s] {
            continue;
        }
        search.prefix.push(s);
        search.counts[s] += 1;
        collect_all(search, out);
        search.counts[s] -= 1;
        search.prefix.pop();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringBound {
    pub log_typical: f64,
    pub log_bound: f64,
    pub holds: bool,
}

/// `|L| ≤ |K|·C(n, ⌊ρn⌋)·|q|^{ρn}` in logarithms.
pub fn covering_bound(spec: &TypicalSpec, packing_size: usize, rho: f64) -> CoveringBound {
    let n = spec.n;
    let log_typical = ln_big(&count_typical(spec));
    let log_bound = (packing_size as f64).ln()
        + ln_big(&binomial(n, floor_mul(rho, n)))
        + rho * n as f64 * (spec.alphabet() as f64).ln();
    CoveringBound { log_typical, log_bound, holds: log_typical <= log_bound + 1e-9 }
}
