use super::{symbol_counts, NameWord};
use crate::error::{Error, Result};
use crate::probvec::ProbVec;

/// Indices to drop from a typical name so that every symbol's kept frequency
/// falls strictly below `min((q_t + ε)(1 − δ), q_t)`. Positions in `reserved`
/// are never chosen and never counted as kept. Each overfull symbol class is
/// trimmed from its lowest indices upward.
pub fn choose_j(word: &[usize], q: &ProbVec, reserved: &[usize], delta: f64, eps: f64) -> Result<Vec<usize>> {
    let n = word.len();
    if !(eps < delta && delta < 1.0) || eps < 0.0 {
        return Err(Error::Precondition(format!("need 0 <= eps < delta < 1, got eps={eps}, delta={delta}")));
    }
    if delta * n as f64 <= 1.0 {
        return Err(Error::Precondition(format!("need delta*n > 1, got {}", delta * n as f64)));
    }
    symbol_counts(word, q.len())?;
    let mut is_reserved = vec![false; n];
    for &i in reserved {
        if i >= n {
            return Err(Error::InvalidSet(format!("reserved index {i} beyond length {n}")));
        }
        is_reserved[i] = true;
    }
    let mut j: Vec<usize> = Vec::new();
    for (t, &qt) in q.weights().iter().enumerate() {
        let bound = ((qt + eps) * (1.0 - delta)).min(qt) * n as f64;
        let kept: Vec<usize> = (0..n).filter(|&i| word[i] == t && !is_reserved[i]).collect();
        let mut remaining = kept.len();
        for &i in &kept {
            if (remaining as f64) < bound {
                break;
            }
            j.push(i);
            remaining -= 1;
        }
    }
    j.sort_unstable();
    let limit = 3.0 * delta * q.len() as f64 * n as f64;
    if (j.len() as f64) >= limit {
        return Err(Error::Invariant(format!("|J| = {} not below 3δ|q|n = {limit}", j.len())));
    }
    Ok(j)
}

/// Kept frequency of each symbol once `removed` positions are excluded.
pub fn kept_frequencies(word: &NameWord, alphabet: usize, removed: &[usize]) -> Vec<f64> {
    let mut skip = vec![false; word.len()];
    for &i in removed {
        skip[i] = true;
    }
    let mut counts = vec![0usize; alphabet];
    for (i, &s) in word.iter().enumerate() {
        if !skip[i] {
            counts[s] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / word.len() as f64).collect()
}
