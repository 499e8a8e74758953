//! Rank-based ternary prefix labels for partition cells, fiber by fiber.
//!
//! Within each fiber the cells are ranked by decreasing conditional mass
//! (ties by index) and the cell of rank `n` is labelled with the ternary
//! expansion of `n`.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::probvec::ProbVec;

/// Most-significant-digit-first base-3 expansion of `n`. `ternary(0)` is `[0]`.
pub fn ternary(n: u64) -> Vec<u8> {
    if n == 0 {
        return vec![0];
    }
    let mut digits = Vec::new();
    let mut x = n;
    while x > 0 {
        digits.push((x % 3) as u8);
        x /= 3;
    }
    digits.reverse();
    digits
}

/// `ternary` restricted to positive ranks.
pub fn ternary_rank(n: u64) -> Result<Vec<u8>> {
    if n == 0 {
        return Err(Error::InvalidParameter("ranks start at 1".into()));
    }
    Ok(ternary(n))
}

/// The `i`-th binary digit of `t`, with `i = 1` the least significant bit.
pub fn binary_digit(i: u32, t: u64) -> Result<u8> {
    if i == 0 {
        return Err(Error::InvalidParameter("digit index starts at 1".into()));
    }
    if i > 64 {
        return Ok(0);
    }
    Ok(((t >> (i - 1)) & 1) as u8)
}

/// Where cell ranks start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum RankBase {
    #[default]
    One,
    Zero,
}

impl RankBase {
    fn offset(self) -> u64 {
        match self {
            RankBase::One => 1,
            RankBase::Zero => 0,
        }
    }
}

/// Conditional distributions of one partition over the cells of another.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberDistribution {
    /// `ν(y)`.
    pub nu: ProbVec,
    /// `μ_y`, one per fiber, all over the same cells.
    pub mu: Vec<ProbVec>,
}

impl FiberDistribution {
    pub fn new(nu: ProbVec, mu: Vec<ProbVec>) -> Result<Self> {
        if nu.len() != mu.len() {
            return Err(Error::LengthMismatch { expected: nu.len(), got: mu.len() });
        }
        if let Some(first) = mu.first() {
            if let Some(bad) = mu.iter().find(|m| m.len() != first.len()) {
                return Err(Error::LengthMismatch { expected: first.len(), got: bad.len() });
            }
        }
        Ok(FiberDistribution { nu, mu })
    }

    pub fn single(mu: ProbVec) -> Self {
        FiberDistribution { nu: ProbVec::uniform(1).expect("one fiber"), mu: vec![mu] }
    }

    /// Fibers from two labelings on weighted points: one fiber per cell of
    /// `fiber`, masses of `cells` inside it. Cells are indexed by label.
    pub fn from_labelings(cells: &[usize], fiber: &[usize], weights: &[f64]) -> Result<Self> {
        crate::partition::check_len(cells.len(), fiber.len())?;
        crate::partition::check_len(cells.len(), weights.len())?;
        let nc = cells.iter().max().map_or(0, |m| m + 1);
        let nf = fiber.iter().max().map_or(0, |m| m + 1);
        let mut joint = vec![vec![0.0; nc]; nf];
        let mut nu = vec![0.0; nf];
        for ((&c, &f), &w) in cells.iter().zip(fiber).zip(weights) {
            joint[f][c] += w;
            nu[f] += w;
        }
        let mu = joint
            .into_iter()
            .zip(&nu)
            .map(|(row, &m)| {
                if m > 0.0 {
                    ProbVec::from_f64(row.into_iter().map(|x| x / m).collect())
                } else {
                    let mut e = vec![0.0; nc];
                    e[0] = 1.0;
                    ProbVec::from_f64(e)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        FiberDistribution::new(ProbVec::from_f64(nu)?, mu)
    }

    pub fn num_cells(&self) -> usize {
        self.mu.first().map_or(0, |m| m.len())
    }

    /// `Σ_y ν(y)·H(μ_y)`.
    pub fn cond_entropy(&self) -> f64 {
        self.nu.weights().iter().zip(&self.mu).map(|(&n, m)| n * m.entropy()).sum()
    }
}

/// Cells ordered by decreasing mass, ties by increasing index.
pub fn rank_order(mu: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&a, &b| mu[b].total_cmp(&mu[a]).then(a.cmp(&b)));
    order
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TernaryCode {
    pub base: RankBase,
    /// `words[y][cell]`.
    pub words: Vec<Vec<Vec<u8>>>,
}

impl TernaryCode {
    pub fn word(&self, fiber: usize, cell: usize) -> &[u8] {
        &self.words[fiber][cell]
    }

    /// One JSON object per fiber mapping cell index to a string over "012".
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.words
                .iter()
                .map(|fiber| {
                    let map: Map<String, Value> =
                        fiber.iter().enumerate().map(|(c, w)| (c.to_string(), Value::String(word_string(w)))).collect();
                    Value::Object(map)
                })
                .collect(),
        )
    }

    pub fn is_injective(&self) -> bool {
        self.words.iter().all(|fiber| {
            let mut ws: Vec<&Vec<u8>> = fiber.iter().collect();
            ws.sort();
            ws.windows(2).all(|p| p[0] != p[1])
        })
    }
}

pub fn word_string(w: &[u8]) -> String {
    w.iter().map(|d| char::from(b'0' + d)).collect()
}

pub fn build_code(fd: &FiberDistribution) -> TernaryCode {
    build_code_with(fd, RankBase::One)
}

pub fn build_code_with(fd: &FiberDistribution, base: RankBase) -> TernaryCode {
    let words = fd
        .mu
        .iter()
        .map(|mu| {
            let mut fiber = vec![Vec::new(); mu.len()];
            for (rank, cell) in rank_order(mu.weights()).into_iter().enumerate() {
                fiber[cell] = ternary(rank as u64 + base.offset());
            }
            fiber
        })
        .collect();
    TernaryCode { base, words }
}

/// Least integer above `exp(1 / (1 − log_3 e))`; beyond this rank a label is
/// never longer than `−log` of its cell's mass.
pub fn rank_threshold() -> u64 {
    let log3_e = 1.0 / 3f64.ln();
    (1.0 / (1.0 - log3_e)).exp().floor() as u64 + 1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LengthBound {
    pub avg_len: f64,
    pub threshold: u64,
    pub threshold_len: usize,
    pub cond_entropy: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Average label length against `m·|t(m)| + H(ξ | fibers)`.
pub fn code_length_bound(fd: &FiberDistribution, code: &TernaryCode) -> Result<LengthBound> {
    if code.words.len() != fd.mu.len() {
        return Err(Error::LengthMismatch { expected: fd.mu.len(), got: code.words.len() });
    }
    let avg_len: f64 = fd
        .nu
        .weights()
        .iter()
        .zip(&fd.mu)
        .zip(&code.words)
        .map(|((&nu, mu), words)| nu * mu.weights().iter().zip(words).map(|(&m, w)| m * w.len() as f64).sum::<f64>())
        .sum();
    let threshold = rank_threshold();
    let threshold_len = ternary(threshold).len();
    let cond_entropy = fd.cond_entropy();
    let bound = threshold as f64 * threshold_len as f64 + cond_entropy;
    Ok(LengthBound { avg_len, threshold, threshold_len, cond_entropy, bound, holds: avg_len <= bound })
}

/// Ranks past the threshold whose label is longer than `−log` of the cell mass.
pub fn tail_violations(mu: &[f64]) -> Vec<usize> {
    let m = rank_threshold();
    rank_order(mu)
        .into_iter()
        .enumerate()
        .filter_map(|(i, cell)| {
            let rank = i as u64 + 1;
            let w = mu[cell];
            (rank > m && w > 0.0 && ternary(rank).len() as f64 > -w.ln()).then_some(rank as usize)
        })
        .collect()
}
