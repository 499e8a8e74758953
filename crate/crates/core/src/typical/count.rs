//! Exact counting of typical names and fibers, and the exponential windows
//! around those counts.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::{symbol_counts, TypicalSpec};
use crate::error::{Error, Result};
use crate::probvec::{binary_entropy, coarsening_cond_entropy, floor_mul, Coarsening, ProbVec};

/// Rows `0..=m` of Pascal's triangle.
pub(crate) fn pascal(m: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(m + 1);
    for n in 0..=m {
        let mut row = vec![BigUint::one(); n + 1];
        for k in 1..n {
            row[k] = &rows[n - 1][k - 1] + &rows[n - 1][k];
        }
        rows.push(row);
    }
    rows
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of words of length `m` in which symbol `t` occurs a number of
/// times inside `ranges[t]`. A `None` range admits no count at all.
pub fn count_compositions(ranges: &[Option<(usize, usize)>], m: usize) -> BigUint {
    compositions_with(ranges, m, &pascal(m))
}

/// [`count_compositions`] with a precomputed Pascal triangle of at least `m + 1` rows.
pub(crate) fn compositions_with(ranges: &[Option<(usize, usize)>], m: usize, binom: &[Vec<BigUint>]) -> BigUint {
    let mut f = vec![BigUint::zero(); m + 1];
    f[0] = BigUint::one();
    for range in ranges {
        let Some((lo, hi)) = *range else {
            return BigUint::zero();
        };
        let mut g = vec![BigUint::zero(); m + 1];
        for (s, gs) in g.iter_mut().enumerate() {
            for c in lo..=hi.min(s) {
                if !f[s - c].is_zero() {
                    *gs += &f[s - c] * &binom[s][c];
                }
            }
        }
        f = g;
    }
    f.swap_remove(m)
}

/// |L_{q,ε}^n|.
pub fn count_typical(spec: &TypicalSpec) -> BigUint {
    count_compositions(&spec.ranges(), spec.n)
}

/// Number of typical ξ-names of length `n` whose image under the coarsening
/// `pi` is the β-name `b`.
pub fn count_fiber(xi: &ProbVec, pi: &Coarsening, eps: f64, n: usize, b: &[usize]) -> Result<BigUint> {
    if b.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: b.len() });
    }
    if pi.len() != xi.len() {
        return Err(Error::LengthMismatch { expected: xi.len(), got: pi.len() });
    }
    let block_counts = symbol_counts(b, pi.num_blocks())?;
    let spec = TypicalSpec::new(xi.clone(), eps, n)?;
    let ranges = spec.ranges();
    let mut total = BigUint::one();
    for (block, &m) in pi.blocks().iter().zip(&block_counts) {
        let sub: Vec<_> = block.iter().map(|&c| ranges[c]).collect();
        total *= count_compositions(&sub, m);
        if total.is_zero() {
            break;
        }
    }
    Ok(total)
}

/// Natural logarithm of a big integer; `-inf` for zero.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 900;
    (x >> shift).to_f64().expect("fits in f64").ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StirlingWindow {
    pub n: usize,
    pub cond_entropy: f64,
    pub log_lower: f64,
    pub log_count: f64,
    pub log_upper: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(serialize_with = "crate::typical::count::big_as_string")]
    pub count: BigUint,
    pub holds: bool,
}

pub(crate) fn big_as_string<S: serde::Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_str_radix(10))
}

/// Compare the fiber count over `b` with `exp(n·H(ξ|β) ± n·δ)`.
pub fn stirling_window(
    xi: &ProbVec,
    pi: &Coarsening,
    delta: f64,
    eps: f64,
    n: usize,
    b: &[usize],
) -> Result<StirlingWindow> {
    let beta = xi.coarsen(pi)?;
    if !TypicalSpec::new(beta, eps, n)?.is_typical(b)? {
        return Err(Error::Precondition("β-name is not typical".into()));
    }
    let h = coarsening_cond_entropy(xi, pi)?;
    let count = count_fiber(xi, pi, eps, n, b)?;
    let nf = n as f64;
    let log_lower = nf * (h - delta);
    let log_upper = nf * (h + delta);
    let log_count = ln_big(&count);
    Ok(StirlingWindow {
        n,
        cond_entropy: h,
        log_lower,
        log_count,
        log_upper,
        lower: log_lower.exp(),
        upper: log_upper.exp(),
        holds: log_lower <= log_count && log_count <= log_upper,
        count,
    })
}

/// The window around `|L_{q,ε}^n|` obtained with a one-cell β.
pub fn typical_window(q: &ProbVec, delta: f64, eps: f64, n: usize) -> Result<StirlingWindow> {
    stirling_window(q, &Coarsening::full(q.len()), delta, eps, n, &vec![0; n])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinomialBound {
    pub n: usize,
    pub k: usize,
    pub log_binomial: f64,
    pub log_bound: f64,
    pub holds: bool,
}

/// `C(n, ⌊δn⌋) ≤ exp(2n·H(δ, 1−δ))` with an exact binomial.
pub fn binomial_bound(delta: f64, n: usize) -> Result<BinomialBound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0,1), got {delta}")));
    }
    let k = floor_mul(delta, n);
    let log_binomial = ln_big(&binomial(n, k));
    let log_bound = 2.0 * n as f64 * binary_entropy(delta);
    Ok(BinomialBound { n, k, log_binomial, log_bound, holds: log_binomial <= log_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(w: &[f64]) -> ProbVec {
        ProbVec::from_f64(w.to_vec()).unwrap()
    }

    #[test]
    fn typical_counts() {
        let s = TypicalSpec::new(pv(&[0.5, 0.5]), 0.0, 4).unwrap();
        assert_eq!(count_typical(&s), BigUint::from(6u32));
        let s = TypicalSpec::new(pv(&[0.5, 0.5]), 0.25, 4).unwrap();
        assert_eq!(count_typical(&s), BigUint::from(14u32));
        let s = TypicalSpec::new(pv(&[1.0]), 0.0, 9).unwrap();
        assert_eq!(count_typical(&s), BigUint::one());
    }

    #[test]
    fn fiber_counts() {
        let xi = pv(&[0.25; 4]);
        let pi = Coarsening::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        assert_eq!(count_fiber(&xi, &pi, 0.25, 4, &[0, 0, 1, 1]).unwrap(), BigUint::from(16u32));
        let id = Coarsening::singletons(2);
        let h = pv(&[0.5, 0.5]);
        assert_eq!(count_fiber(&h, &id, 0.0, 2, &[0, 1]).unwrap(), BigUint::one());
        assert_eq!(count_fiber(&h, &id, 0.0, 2, &[0, 0]).unwrap(), BigUint::zero());
        assert!(count_fiber(&h, &id, 0.0, 2, &[0, 2]).is_err());
    }

    #[test]
    fn windows() {
        let w = typical_window(&pv(&[0.5, 0.5]), 0.2, 0.05, 60).unwrap();
        assert!(w.holds);
        let w = typical_window(&pv(&[1.0]), 0.1, 0.0, 30).unwrap();
        assert_eq!(w.count, BigUint::one());
        assert!(w.holds);
        for n in 50..=200 {
            assert!(binomial_bound(0.1, n).unwrap().holds);
        }
    }

    #[test]
    fn binomial_matches_pascal() {
        let rows = pascal(20);
        for n in 0..=20 {
            for k in 0..=n {
                assert_eq!(binomial(n, k), rows[n][k]);
            }
        }
        assert_eq!(binomial(3, 4), BigUint::zero());
    }

    #[test]
    fn ln_big_large() {
        let x = BigUint::one() << 3000usize;
        assert!((ln_big(&x) - 3000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }
}
