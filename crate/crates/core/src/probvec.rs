//! Probability vectors, Shannon entropy and coarsening.
//!
//! Weights are held as `f64` for entropy work. Vectors built from rationals
//! additionally keep the exact values, which the counting and decomposition
//! paths use. Entropies are in nats and treat `0 · log 0` as 0.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::partition::check_len;

/// Allowed deviation of a decimal vector's sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbVec {
    weights: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl ProbVec {
    pub fn from_f64(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidProbVec("empty vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidProbVec(format!("bad weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidProbVec(format!("weights sum to {sum}")));
        }
        Ok(ProbVec { weights, exact: None })
    }

    pub fn from_rationals(exact: Vec<BigRational>) -> Result<Self> {
        if exact.is_empty() {
            return Err(Error::InvalidProbVec("empty vector".into()));
        }
        if let Some(w) = exact.iter().find(|w| w.is_negative()) {
            return Err(Error::InvalidProbVec(format!("negative weight {w}")));
        }
        let sum: BigRational = exact.iter().sum();
        if !sum.is_one() {
            return Err(Error::InvalidProbVec(format!("weights sum to {sum}")));
        }
        let weights = exact.iter().map(rational_to_f64).collect();
        Ok(ProbVec { weights, exact: Some(exact) })
    }

    /// Exact vector proportional to nonnegative integer counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidProbVec("all counts zero".into()));
        }
        let den = BigInt::from(total);
        Self::from_rationals(counts.iter().map(|&c| BigRational::new(BigInt::from(c), den.clone())).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_counts(&vec![1; n])
    }

    /// Parse decimal or `num/den` strings. Any `/` switches the whole vector
    /// to exact mode, in which decimal entries are read exactly as well.
    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        if items.iter().any(|s| s.as_ref().contains('/')) {
            let exact = items.iter().map(|s| parse_rational(s.as_ref())).collect::<Result<Vec<_>>>()?;
            Self::from_rationals(exact)
        } else {
            let weights = items
                .iter()
                .map(|s| s.as_ref().trim().parse::<f64>().map_err(|e| Error::Parse(format!("{:?}: {e}", s.as_ref()))))
                .collect::<Result<Vec<_>>>()?;
            Self::from_f64(weights)
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.weights)
    }

    pub fn coarsen(&self, q: &Coarsening) -> Result<ProbVec> {
        check_len(q.len(), self.len())?;
        match &self.exact {
            Some(ex) => Self::from_rationals(q.blocks.iter().map(|b| b.iter().map(|&i| ex[i].clone()).sum()).collect()),
            None => Ok(ProbVec {
                weights: q.blocks.iter().map(|b| b.iter().map(|&i| self.weights[i]).sum()).collect(),
                exact: None,
            }),
        }
    }

    pub fn to_strings(&self) -> Vec<String> {
        match &self.exact {
            Some(ex) => ex.iter().map(|r| r.to_string()).collect(),
            None => self.weights.iter().map(|w| format!("{w}")).collect(),
        }
    }
}

impl fmt::Display for ProbVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

impl Serialize for ProbVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<String>::deserialize(d)?;
        ProbVec::parse(&items).map_err(serde::de::Error::custom)
    }
}

/// Parse `"3/8"`, `"2"` or `"0.375"` as an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(digits, den);
    Ok(if neg { -r } else { r })
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a scaled division for values whose parts overflow f64.
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Shannon entropy in nats of nonnegative weights.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&w| w > 0.0).map(|&w| -w * w.ln()).sum()
}

/// H(d, 1 − d).
pub fn binary_entropy(d: f64) -> f64 {
    entropy(&[d, 1.0 - d])
}

/// A partition of the index set `0..len` into blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Coarsening {
    blocks: Vec<Vec<usize>>,
    #[serde(skip)]
    len: usize,
}

impl Coarsening {
    pub fn new(blocks: Vec<Vec<usize>>, len: usize) -> Result<Self> {
        let mut seen = vec![false; len];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidCoarsening("empty block".into()));
            }
            for &i in b {
                if i >= len {
                    return Err(Error::InvalidCoarsening(format!("index {i} out of range")));
                }
                if seen[i] {
                    return Err(Error::InvalidCoarsening(format!("index {i} repeated")));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidCoarsening(format!("index {i} missing")));
        }
        Ok(Coarsening { blocks, len })
    }

    /// Blocks from an index → block assignment; blocks are numbered as given.
    pub fn from_assignment(assign: &[usize]) -> Result<Self> {
        let k = assign.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in assign.iter().enumerate() {
            blocks[b].push(i);
        }
        Self::new(blocks, assign.len())
    }

    pub fn singletons(len: usize) -> Self {
        Coarsening { blocks: (0..len).map(|i| vec![i]).collect(), len }
    }

    pub fn full(len: usize) -> Self {
        Coarsening { blocks: vec![(0..len).collect()], len }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Size of the underlying index set.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Block index of every element.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![0; self.len];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                out[i] = b;
            }
        }
        out
    }
}

/// H(a | b) = Σ_B w(B)·H(a restricted to B), for labelings on weighted points.
pub fn cond_entropy(a: &[usize], b: &[usize], w: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    check_len(a.len(), w.len())?;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut marginal: HashMap<usize, f64> = HashMap::new();
    for ((&x, &y), &wt) in a.iter().zip(b).zip(w) {
        *joint.entry((x, y)).or_insert(0.0) += wt;
        *marginal.entry(y).or_insert(0.0) += wt;
    }
    let mut keys: Vec<_> = joint.keys().copied().collect();
    keys.sort_unstable();
    Ok(keys
        .into_iter()
        .map(|k| {
            let m = joint[&k];
            if m > 0.0 {
                -m * (m / marginal[&k.1]).ln()
            } else {
                0.0
            }
        })
        .sum())
}

/// H(p | Q) for a coarsening Q: Σ_j Σ_{i∈Q_j} −p_i·log(p_i / q_j).
pub fn coarsening_cond_entropy(p: &ProbVec, q: &Coarsening) -> Result<f64> {
    check_len(q.len(), p.len())?;
    let w = p.weights();
    Ok(q.blocks
        .iter()
        .map(|b| {
            let mass: f64 = b.iter().map(|&i| w[i]).sum();
            b.iter().filter(|&&i| w[i] > 0.0).map(|&i| -w[i] * (w[i] / mass).ln()).sum::<f64>()
        })
        .sum())
}

/// `⌊x·n⌋`, tolerant of `x` sitting just below a grid point.
pub fn floor_mul(x: f64, n: usize) -> usize {
    (x * n as f64 + 1e-9).floor().max(0.0) as usize
}

/// Entropy of a labeling's cell distribution.
pub fn labeling_entropy(a: &[usize], w: &[f64]) -> Result<f64> {
    cond_entropy(a, &vec![0; a.len()], w)
}

/// Convex decomposition of an exact vector into vectors with a common
/// denominator `n`, each entrywise close to the input.
#[derive(Clone, Debug, PartialEq)]
pub struct RatDecomposition {
    pub n: u64,
    /// `vectors[j][i]`, in the input's coordinates; every entry is a multiple of `1/n`.
    pub vectors: Vec<Vec<BigRational>>,
    pub mixing: Vec<BigRational>,
    /// Coordinate holding the last positive entry; it absorbs the remainder.
    pub pivot: usize,
    /// Non-pivot coordinates in stably sorted λ order.
    pub order: Vec<usize>,
    /// λ for each coordinate in `order`.
    pub lambdas: Vec<BigRational>,
    /// ⌊n·a_i⌋ for each coordinate in `order`.
    pub floors: Vec<BigInt>,
}

impl RatDecomposition {
    /// Σ_j c_j · r^j.
    pub fn reconstruct(&self) -> Vec<BigRational> {
        let len = self.vectors.first().map_or(0, |v| v.len());
        let mut out = vec![BigRational::zero(); len];
        for (c, r) in self.mixing.iter().zip(&self.vectors) {
            for (o, x) in out.iter_mut().zip(r) {
                *o += c * x;
            }
        }
        out
    }

    pub fn vector(&self, j: usize) -> Result<ProbVec> {
        ProbVec::from_rationals(self.vectors[j].clone())
    }

    pub fn mixing_vec(&self) -> Result<ProbVec> {
        ProbVec::from_rationals(self.mixing.clone())
    }
}

/// Decompose `a` as a convex combination of vectors with denominator `n`,
/// each within `eps` of `a` in every coordinate. `n` is the least integer
/// with `n > (|a|−1)/eps` and `n > 2(|a|−1)/a_p`, where `a_p` is the last
/// positive entry.
pub fn ratcomb_decompose(a: &ProbVec, eps: f64) -> Result<RatDecomposition> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let a = a.exact().ok_or(Error::NotExact)?;
    let eps_q = BigRational::from_float(eps).expect("finite");
    let p = a.len();
    let pivot =
        a.iter().rposition(|x| x.is_positive()).ok_or_else(|| Error::InvalidProbVec("no positive entry".into()))?;
    let others: Vec<usize> = (0..p).filter(|&i| i != pivot).collect();
    let pm1 = BigRational::from_integer(BigInt::from(p - 1));

    let n1: BigInt = (&pm1 / &eps_q).floor().to_integer() + 1;
    let n2: BigInt = (BigRational::from_integer(BigInt::from(2)) * &pm1 / &a[pivot]).floor().to_integer() + 1;
    let n_big = n1.max(n2);
    let n = n_big.to_u64().ok_or_else(|| Error::InvalidParameter("denominator overflows u64".into()))?;
    let n_q = BigRational::from_integer(n_big.clone());

    let mut on_grid = vec![false; p];
    let mut entries: Vec<(usize, BigRational, BigInt)> = others
        .iter()
        .map(|&i| {
            let na = &n_q * &a[i];
            on_grid[i] = na.is_integer();
            let k = na.floor().to_integer();
            let lambda = BigRational::from_integer(&k + 1) - na;
            (i, lambda, k)
        })
        .collect();
    entries.sort_by(|x, y| x.1.cmp(&y.1));

    let mut mixing = Vec::with_capacity(p);
    let mut prev = BigRational::zero();
    for (_, lambda, _) in &entries {
        mixing.push(lambda - &prev);
        prev = lambda.clone();
    }
    mixing.push(BigRational::one() - prev);

    let mut vectors = Vec::with_capacity(p);
    for j in 1..=p {
        let mut r = vec![BigRational::zero(); p];
        let mut rest = BigRational::one();
        for (s, (i, _, k)) in entries.iter().enumerate() {
            // coordinates already on the grid stay put in every vector
            let num = if j <= s + 1 || on_grid[*i] { k.clone() } else { k + 1 };
            let v = BigRational::new(num, n_big.clone());
            rest -= &v;
            r[*i] = v;
        }
        r[pivot] = rest;
        vectors.push(r);
    }

    let dec = RatDecomposition {
        n,
        vectors,
        mixing,
        pivot,
        order: entries.iter().map(|e| e.0).collect(),
        lambdas: entries.iter().map(|e| e.1.clone()).collect(),
        floors: entries.iter().map(|e| e.2.clone()).collect(),
    };
    if dec.reconstruct() != a {
        return Err(Error::Invariant("decomposition does not reconstruct input".into()));
    }
    for r in &dec.vectors {
        for (x, y) in r.iter().zip(a) {
            if x.is_negative() || (x - y).abs().cmp(&eps_q) != Ordering::Less {
                return Err(Error::Invariant(format!("entry {x} not within eps of {y}")));
            }
        }
    }
    Ok(dec)
}

/// Greatest common divisor of a list of counts (0 for an empty or all-zero list).
pub fn gcd_all(xs: &[u64]) -> u64 {
    xs.iter().fold(0, |g, &x| g.gcd(&x))
}
