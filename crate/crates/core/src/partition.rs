//! Labelings of a finite point set.
//!
//! A labeling assigns every point a cell index; two labelings describe the
//! same partition when they agree after [`normalize`]. Finite σ-algebras are
//! represented by their atoms, so a labeling doubles as an algebra.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Relabel cells in order of first occurrence.
pub fn normalize(labels: &[usize]) -> Vec<usize> {
    let mut map: HashMap<usize, usize> = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

pub fn num_cells(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Common refinement of two labelings, normalized.
pub fn join(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    check_len(a.len(), b.len())?;
    let mut map: HashMap<(usize, usize), usize> = HashMap::new();
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let next = map.len();
            *map.entry((x, y)).or_insert(next)
        })
        .collect())
}

pub fn join_all(parts: &[&[usize]], n_points: usize) -> Result<Vec<usize>> {
    let mut acc = vec![0; n_points];
    for p in parts {
        acc = join(&acc, p)?;
    }
    Ok(normalize(&acc))
}

/// True when every cell of `fine` lies inside a single cell of `coarse`.
pub fn refines(fine: &[usize], coarse: &[usize]) -> Result<bool> {
    check_len(fine.len(), coarse.len())?;
    let mut image: HashMap<usize, usize> = HashMap::new();
    for (&f, &c) in fine.iter().zip(coarse) {
        if *image.entry(f).or_insert(c) != c {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && normalize(a) == normalize(b)
}

/// Cells as sorted point lists, ordered by their smallest point.
pub fn cells(labels: &[usize]) -> Vec<Vec<usize>> {
    let norm = normalize(labels);
    let k = norm.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); k];
    for (x, &l) in norm.iter().enumerate() {
        out[l].push(x);
    }
    out
}

/// Build a labeling from explicit cells that must cover `0..n_points` exactly once.
pub fn from_cells(n_points: usize, cells: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut labels = vec![usize::MAX; n_points];
    for (c, cell) in cells.iter().enumerate() {
        for &x in cell {
            if x >= n_points {
                return Err(Error::InvalidSet(format!("point {x} out of range")));
            }
            if labels[x] != usize::MAX {
                return Err(Error::InvalidSet(format!("point {x} in two cells")));
            }
            labels[x] = c;
        }
    }
    if let Some(x) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(Error::InvalidSet(format!("point {x} not covered")));
    }
    Ok(labels)
}

/// Two-cell labeling: 1 on `set`, 0 elsewhere.
pub fn indicator(n_points: usize, set: &[usize]) -> Result<Vec<usize>> {
    let mut labels = vec![0; n_points];
    for &x in set {
        if x >= n_points {
            return Err(Error::InvalidSet(format!("point {x} out of range")));
        }
        labels[x] = 1;
    }
    Ok(labels)
}

/// Total weight of each label value `0..=max label`.
pub fn masses(labels: &[usize], weights: &[f64]) -> Result<Vec<f64>> {
    check_len(weights.len(), labels.len())?;
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![0.0; k];
    for (&l, &w) in labels.iter().zip(weights) {
        out[l] += w;
    }
    Ok(out)
}

/// Visit every partition of `0..n` into at most `k_max` cells as a
/// restricted-growth labeling (first occurrences in increasing order).
pub fn for_each_set_partition<F: FnMut(&[usize])>(n: usize, k_max: usize, mut visit: F) {
    fn go<F: FnMut(&[usize])>(labels: &mut Vec<usize>, used: usize, n: usize, k_max: usize, visit: &mut F) {
        if labels.len() == n {
            visit(labels);
            return;
        }
        let top = if used < k_max { used + 1 } else { used };
        for l in 0..top {
            labels.push(l);
            go(labels, used.max(l + 1), n, k_max, visit);
            labels.pop();
        }
    }
    if n == 0 {
        visit(&[]);
        return;
    }
    if k_max == 0 {
        return;
    }
    go(&mut Vec::with_capacity(n), 0, n, k_max, &mut visit);
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_orders_by_first_occurrence() {
        assert_eq!(normalize(&[7, 7, 3, 9, 3]), vec![0, 0, 1, 2, 1]);
    }

    #[test]
    fn set_partition_counts() {
        // Bell numbers, and Stirling sums for capped cell counts
        let count = |n, k| {
            let mut c = 0;
            for_each_set_partition(n, k, |_| c += 1);
            c
        };
        assert_eq!(count(4, 4), 15);
        assert_eq!(count(6, 6), 203);
        assert_eq!(count(4, 2), 8);
        assert_eq!(count(0, 3), 1);
        let mut seen = Vec::new();
        for_each_set_partition(3, 3, |l| seen.push(l.to_vec()));
        assert_eq!(seen[0], vec![0, 0, 0]);
        assert!(seen.iter().all(|l| normalize(l) == *l));
    }

    #[test]
    fn join_and_refines() {
        let a = [0, 0, 1, 1];
        let b = [0, 1, 0, 1];
        let j = join(&a, &b).unwrap();
        assert_eq!(num_cells(&j), 4);
        assert!(refines(&j, &a).unwrap());
        assert!(!refines(&a, &b).unwrap());
    }

    #[test]
    fn cells_round_trip() {
        let l = [2, 0, 2, 1];
        let cs = cells(&l);
        assert_eq!(cs, vec![vec![0, 2], vec![1], vec![3]]);
        assert!(same_partition(&from_cells(4, &cs).unwrap(), &l));
    }

    #[test]
    fn from_cells_rejects_overlap_and_gaps() {
        assert!(from_cells(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(from_cells(3, &[vec![0, 1]]).is_err());
    }
}
