//! Injections from ξ-name fibers into a d̄-separated packing of q-names.
//!
//! `f_b(c)` is the packing word whose index equals the lexicographic rank of
//! `c` inside the fiber over `b`. Ranks are computed by counting completions,
//! so fibers are never materialized.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use super::count::{binomial, compositions_with, count_typical, ln_big, pascal};
use super::packing::{greedy_packing, spread_packing};
use super::{count_range, symbol_counts, NameWord, TypicalSpec};
use crate::error::{Error, Result};
use crate::probvec::{binary_entropy, coarsening_cond_entropy, floor_mul, rational_to_f64, Coarsening, ProbVec};

/// Typical sets at most this large get a maximal packing; larger ones are
/// packed only up to the required capacity.
pub const MAXIMAL_PACKING_LIMIT: u64 = 50_000;

/// Most codewords a single codebook will hold.
pub const CODEWORD_LIMIT: usize = 20_000;

/// Seed for packings of typical sets too large to pack maximally.
pub const PACKING_SEED: u64 = 0x5eed;

/// Cap on the number of β count profiles scanned for the largest fiber.
pub const PROFILE_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PackingBudget {
    pub delta: f64,
    #[serde(serialize_with = "rational_as_string")]
    pub r: BigRational,
    pub n: usize,
    pub k: usize,
    pub rho: f64,
}

fn rational_as_string<S: serde::Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl PackingBudget {
    /// Codeword length `k = ⌊r·n⌋`, separation `ρ = 20δ|q|`.
    pub fn new(delta: f64, r: BigRational, n: usize, q_len: usize) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let zero = BigRational::zero();
        if r <= zero || r > BigRational::from_integer(1.into()) {
            return Err(Error::InvalidParameter(format!("r must lie in (0,1], got {r}")));
        }
        let rho = 20.0 * delta * q_len as f64;
        if rho >= 0.5 {
            return Err(Error::InvalidParameter(format!("20δ|q| = {rho} is not below 1/2")));
        }
        let k = (&r * BigRational::from_integer(n.into())).floor().to_integer().to_usize().unwrap_or(0);
        if k == 0 {
            return Err(Error::InvalidParameter("codeword length ⌊r·n⌋ is zero".into()));
        }
        Ok(PackingBudget { delta, r, n, k, rho })
    }

    pub fn r_f64(&self) -> f64 {
        rational_to_f64(&self.r)
    }
}

/// Lexicographic ranking within the fiber of typical ξ-names over a β-name.
#[derive(Clone, Debug)]
pub struct FiberRanker {
    n: usize,
    block_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    ranges: Vec<Option<(usize, usize)>>,
    binom: Vec<Vec<BigUint>>,
}

impl FiberRanker {
    pub fn new(xi: &ProbVec, pi: &Coarsening, eps: f64, n: usize) -> Result<Self> {
        if pi.len() != xi.len() {
            return Err(Error::LengthMismatch { expected: xi.len(), got: pi.len() });
        }
        TypicalSpec::new(xi.clone(), eps, n)?;
        Ok(FiberRanker {
            n,
            block_of: pi.assignment(),
            members: pi.blocks().to_vec(),
            ranges: xi.weights().iter().map(|&w| count_range(n, w, eps)).collect(),
            binom: pascal(n),
        })
    }

    fn block_count(&self, block: usize, used: &[usize], rem: usize) -> BigUint {
        let sub: Vec<_> = self.members[block]
            .iter()
            .map(|&c| {
                let (lo, hi) = self.ranges[c]?;
                if used[c] > hi {
                    return None;
                }
                Some((lo.saturating_sub(used[c]), hi - used[c]))
            })
            .collect();
        compositions_with(&sub, rem, &self.binom)
    }

    fn check_b(&self, b: &[usize]) -> Result<Vec<usize>> {
        if b.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: b.len() });
        }
        symbol_counts(b, self.members.len())
    }

    pub fn fiber_size(&self, b: &[usize]) -> Result<BigUint> {
        let rem = self.check_b(b)?;
        let used = vec![0; self.block_of.len()];
        Ok((0..self.members.len()).map(|blk| self.block_count(blk, &used, rem[blk])).product())
    }

    pub fn rank(&self, b: &[usize], c: &[usize]) -> Result<BigUint> {
        let mut rem = self.check_b(b)?;
        if c.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: c.len() });
        }
        symbol_counts(c, self.block_of.len())?;
        let mut used = vec![0; self.block_of.len()];
        let mut factor: Vec<BigUint> =
            (0..self.members.len()).map(|blk| self.block_count(blk, &used, rem[blk])).collect();
        let mut rank = BigUint::zero();
        for i in 0..self.n {
            let blk = b[i];
            if self.block_of[c[i]] != blk {
                return Err(Error::InvalidParameter(format!(
                    "name symbol {} at {i} does not lie over β-symbol {blk}",
                    c[i]
                )));
            }
            let others: BigUint =
                factor.iter().enumerate().filter(|&(j, _)| j != blk).map(|(_, f)| f.clone()).product();
            for &s in self.members[blk].iter().filter(|&&s| s < c[i]) {
                used[s] += 1;
                rank += &others * self.block_count(blk, &used, rem[blk] - 1);
                used[s] -= 1;
            }
            used[c[i]] += 1;
            rem[blk] -= 1;
            factor[blk] = self.block_count(blk, &used, rem[blk]);
        }
        if factor.iter().any(|f| f.is_zero()) {
            return Err(Error::InvalidParameter("name is not typical".into()));
        }
        Ok(rank)
    }

    pub fn unrank(&self, b: &[usize], index: &BigUint) -> Result<NameWord> {
        let mut rem = self.check_b(b)?;
        let mut used = vec![0; self.block_of.len()];
        let mut factor: Vec<BigUint> =
            (0..self.members.len()).map(|blk| self.block_count(blk, &used, rem[blk])).collect();
        let total: BigUint = factor.iter().product();
        if index >= &total {
            return Err(Error::InvalidParameter(format!("index {index} beyond fiber size {total}")));
        }
        let mut idx = index.clone();
        let mut out = Vec::with_capacity(self.n);
        for &blk in b {
            let others: BigUint =
                factor.iter().enumerate().filter(|&(j, _)| j != blk).map(|(_, f)| f.clone()).product();
            let mut chosen = None;
            for &s in &self.members[blk] {
                used[s] += 1;
                let here = &others * self.block_count(blk, &used, rem[blk] - 1);
                if idx < here {
                    chosen = Some(s);
                    break;
                }
                idx -= here;
                used[s] -= 1;
            }
            let s = chosen.ok_or_else(|| Error::Invariant("unrank ran past fiber".into()))?;
            out.push(s);
            rem[blk] -= 1;
            factor[blk] = self.block_count(blk, &used, rem[blk]);
        }
        Ok(out)
    }

    /// Largest fiber over typical β-names, scanning β count profiles.
    pub fn max_fiber(&self, beta: &ProbVec, eps: f64) -> Result<BigUint> {
        let ranges: Vec<_> = beta.weights().iter().map(|&w| count_range(self.n, w, eps)).collect();
        if ranges.iter().any(|r| r.is_none()) {
            return Ok(BigUint::zero());
        }
        let ranges: Vec<(usize, usize)> = ranges.into_iter().map(|r| r.unwrap()).collect();
        let used = vec![0; self.block_of.len()];
        let mut cache: HashMap<(usize, usize), BigUint> = HashMap::new();
        let mut best = BigUint::zero();
        let mut profile = Vec::with_capacity(ranges.len());
        let mut visited = 0usize;
        self.scan_profiles(&ranges, self.n, &mut profile, &used, &mut cache, &mut best, &mut visited)?;
        Ok(best)
    }

    #[allow(clippy::too_many_arguments)]
    fn scan_profiles(
        &self,
        ranges: &[(usize, usize)],
        rem: usize,
        profile: &mut Vec<usize>,
        used: &[usize],
        cache: &mut HashMap<(usize, usize), BigUint>,
        best: &mut BigUint,
        visited: &mut usize,
    ) -> Result<()> {
        let j = profile.len();
        if j == ranges.len() {
            if rem != 0 {
                return Ok(());
            }
            *visited += 1;
            if *visited > PROFILE_LIMIT {
                return Err(Error::SizeCap(format!("more than {PROFILE_LIMIT} β profiles")));
            }
            let mut total = BigUint::from(1u32);
            for (blk, &m) in profile.iter().enumerate() {
                let f = cache.entry((blk, m)).or_insert_with(|| self.block_count(blk, used, m)).clone();
                total *= f;
            }
            if total > *best {
                *best = total;
            }
            return Ok(());
        }
        let tail_lo: usize = ranges[j + 1..].iter().map(|r| r.0).sum();
        let tail_hi: usize = ranges[j + 1..].iter().map(|r| r.1).sum();
        let (lo, hi) = ranges[j];
        for m in lo..=hi.min(rem) {
            let left = rem - m;
            if left < tail_lo || left > tail_hi {
                continue;
            }
            profile.push(m);
            self.scan_profiles(ranges, left, profile, used, cache, best, visited)?;
            profile.pop();
        }
        Ok(())
    }
}

/// One inequality from the capacity argument, with its two sides in logs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    /// Gating checks abort the construction when they fail.
    pub gating: bool,
}

impl ChainCheck {
    fn new(name: &str, lhs: f64, rhs: f64, gating: bool) -> Self {
        ChainCheck { name: name.into(), lhs, rhs, slack: rhs - lhs, holds: lhs <= rhs, gating }
    }

    fn strict(name: &str, lhs: f64, rhs: f64, gating: bool) -> Self {
        ChainCheck { name: name.into(), lhs, rhs, slack: rhs - lhs, holds: lhs < rhs, gating }
    }
}

#[derive(Clone, Debug)]
pub struct CodeBook {
    pub xi: ProbVec,
    pub pi: Coarsening,
    pub q: ProbVec,
    pub eps: f64,
    pub budget: PackingBudget,
    pub packing: Vec<NameWord>,
    pub maximal: bool,
    pub max_fiber: BigUint,
    pub chain: Vec<ChainCheck>,
    ranker: FiberRanker,
    index: HashMap<NameWord, usize>,
}

impl CodeBook {
    pub fn n(&self) -> usize {
        self.budget.n
    }

    pub fn k(&self) -> usize {
        self.budget.k
    }

    pub fn ranker(&self) -> &FiberRanker {
        &self.ranker
    }

    pub fn fiber_size(&self, b: &[usize]) -> Result<BigUint> {
        self.ranker.fiber_size(b)
    }

    /// `f_b(c)`.
    pub fn encode(&self, b: &[usize], c: &[usize]) -> Result<NameWord> {
        let rank = self.ranker.rank(b, c)?;
        let i = rank
            .to_usize()
            .filter(|&i| i < self.packing.len())
            .ok_or_else(|| Error::Capacity(format!("rank {rank} beyond packing")))?;
        Ok(self.packing[i].clone())
    }

    /// Inverse of `f_b` on its range; `None` when the word is not `f_b(c)` for any `c`.
    pub fn invert(&self, b: &[usize], code: &[usize]) -> Result<Option<NameWord>> {
        let Some(&i) = self.index.get(code) else {
            return Ok(None);
        };
        let idx = BigUint::from(i);
        if idx >= self.ranker.fiber_size(b)? {
            return Ok(None);
        }
        self.ranker.unrank(b, &idx).map(Some)
    }

    /// Packing words in the range of `f_b`.
    pub fn range_of(&self, b: &[usize]) -> Result<&[NameWord]> {
        let size = self.ranker.fiber_size(b)?.to_usize().unwrap_or(usize::MAX);
        Ok(&self.packing[..size.min(self.packing.len())])
    }

    /// Every `(c, f_b(c))` pair of one fiber.
    pub fn entries(&self, b: &[usize]) -> Result<Vec<(NameWord, NameWord)>> {
        let size = self.ranker.fiber_size(b)?.to_usize().unwrap_or(usize::MAX);
        (0..size.min(self.packing.len()))
            .map(|i| Ok((self.ranker.unrank(b, &BigUint::from(i))?, self.packing[i].clone())))
            .collect()
    }

    /// JSON objects `{"b": .., "entries": [{"c": .., "code": ..}]}` for the given β-names.
    pub fn to_json(&self, bs: &[NameWord]) -> Result<Value> {
        bs.iter()
            .map(|b| {
                let entries: Vec<Value> =
                    self.entries(b)?.into_iter().map(|(c, code)| json!({"c": c, "code": code})).collect();
                Ok(json!({"b": b, "fiber_size": self.fiber_size(b)?.to_string(), "entries": entries}))
            })
            .collect::<Result<Vec<_>>>()
            .map(Value::Array)
    }
}

/// Build the injection family for ξ over β (given by `pi`) into a packing of
/// `L_{q,ε}^k`. The exact capacity `max_b |fiber(b)| ≤ |K|` gates the
/// construction together with the entropy gap and the separation regime; the
/// exponential estimates that lead to capacity asymptotically are recorded
/// alongside without gating.
pub fn build_injections(
    xi: &ProbVec,
    pi: &Coarsening,
    q: &ProbVec,
    budget: &PackingBudget,
    eps: f64,
) -> Result<CodeBook> {
    let n = budget.n;
    let k = budget.k;
    let r = budget.r_f64();
    let delta = budget.delta;
    let rho = budget.rho;
    let h_cond = coarsening_cond_entropy(xi, pi)?;
    let h_q = q.entropy();
    let ln_q = (q.len() as f64).ln();

    let mut chain = vec![
        ChainCheck::strict("entropy gap: H(ξ|β) < r·H(q)", h_cond, r * h_q, true),
        ChainCheck::strict("separation regime: 20δ|q| < 1/2", rho, 0.5, true),
        ChainCheck::strict(
            "δ choice: H(ξ|β) < rH(q) − δ − rδ − 2rH(ρ) − ρ·r·log|q|",
            h_cond,
            r * h_q - delta - r * delta - 2.0 * r * binary_entropy(rho) - rho * r * ln_q,
            false,
        ),
    ];
    if let Some(c) = chain.iter().find(|c| c.gating && !c.holds) {
        return Err(Error::Capacity(format!("{}: {} vs {}", c.name, c.lhs, c.rhs)));
    }

    let ranker = FiberRanker::new(xi, pi, eps, n)?;
    let beta = xi.coarsen(pi)?;
    let max_fiber = ranker.max_fiber(&beta, eps)?;
    let need =
        max_fiber.to_usize().ok_or_else(|| Error::Capacity(format!("largest fiber {max_fiber} is not addressable")))?;
    if need > CODEWORD_LIMIT {
        return Err(Error::SizeCap(format!("largest fiber {need} needs more than {CODEWORD_LIMIT} codewords")));
    }

    let q_spec = TypicalSpec::new(q.clone(), eps, k)?;
    let typical_k = count_typical(&q_spec);
    let maximal = typical_k <= BigUint::from(MAXIMAL_PACKING_LIMIT);
    let packing =
        if maximal { greedy_packing(&q_spec, rho)? } else { spread_packing(&q_spec, rho, need, PACKING_SEED)? };

    let nf = n as f64;
    let kf = k as f64;
    chain.push(ChainCheck::new(
        "fiber window: log max|fiber| ≤ n·H(ξ|β) + n·δ",
        ln_big(&max_fiber),
        nf * h_cond + nf * delta,
        false,
    ));
    chain.push(ChainCheck::new(
        "typical window: k·H(q) − k·δ ≤ log|L_q^k|",
        kf * h_q - kf * delta,
        ln_big(&typical_k),
        false,
    ));
    chain.push(ChainCheck::new(
        "binomial: log C(k, ⌊ρk⌋) ≤ 2k·H(ρ)",
        ln_big(&binomial(k, floor_mul(rho, k))),
        2.0 * kf * binary_entropy(rho),
        false,
    ));
    if maximal {
        chain.push(ChainCheck::new(
            "covering: log|L_q^k| ≤ log|K| + log C(k, ⌊ρk⌋) + ρk·log|q|",
            ln_big(&typical_k),
            (packing.len() as f64).ln() + ln_big(&binomial(k, floor_mul(rho, k))) + rho * kf * ln_q,
            false,
        ));
    }
    let capacity = ChainCheck::new("capacity: max|fiber| ≤ |K|", ln_big(&max_fiber), (packing.len() as f64).ln(), true);
    let capacity_ok = need <= packing.len();
    chain.push(ChainCheck { holds: capacity_ok, ..capacity });
    if !capacity_ok {
        return Err(Error::Capacity(format!("capacity: largest fiber {need} exceeds packing size {}", packing.len())));
    }

    let index = packing.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Ok(CodeBook {
        xi: xi.clone(),
        pi: pi.clone(),
        q: q.clone(),
        eps,
        budget: budget.clone(),
        packing,
        maximal,
        max_fiber,
        chain,
        ranker,
        index,
    })
}
