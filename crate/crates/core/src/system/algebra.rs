use super::{set_mask, FiniteSystem};
use crate::error::{Error, Result};
use crate::partition::{self, check_len};

/// An invariant partition, stored as a normalized labeling of its atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GAlgebra {
    labels: Vec<usize>,
}

impl GAlgebra {
    /// Wrap a labeling, checking that every generator maps cells onto cells.
    pub fn new(sys: &FiniteSystem, labels: &[usize]) -> Result<Self> {
        check_len(sys.n(), labels.len())?;
        let alg = GAlgebra { labels: partition::normalize(labels) };
        if !alg.is_invariant_under(sys.generators()) {
            return Err(Error::Invariant("labeling is not invariant under the generators".into()));
        }
        Ok(alg)
    }

    pub fn trivial(n: usize) -> Self {
        GAlgebra { labels: vec![0; n] }
    }

    pub fn discrete(n: usize) -> Self {
        GAlgebra { labels: (0..n).collect() }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_cells(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn cells(&self) -> Vec<Vec<usize>> {
        partition::cells(&self.labels)
    }

    /// True when `set` is a union of cells.
    pub fn contains_set(&self, set: &[usize]) -> Result<bool> {
        let mask = set_mask(self.labels.len(), set)?;
        let mut cell_in = vec![None; self.num_cells()];
        for (x, &c) in self.labels.iter().enumerate() {
            match cell_in[c] {
                None => cell_in[c] = Some(mask[x]),
                Some(v) if v != mask[x] => return Ok(false),
                _ => {}
            }
        }
        Ok(true)
    }

    pub fn is_invariant_under(&self, perms: &[Vec<usize>]) -> bool {
        perms.iter().all(|g| {
            let mut image = vec![usize::MAX; self.num_cells()];
            self.labels.iter().enumerate().all(|(x, &c)| {
                let target = self.labels[g[x]];
                if image[c] == usize::MAX {
                    image[c] = target;
                }
                image[c] == target
            })
        })
    }

    pub fn refines(&self, labels: &[usize]) -> Result<bool> {
        partition::refines(&self.labels, labels)
    }
}

/// Coarsest partition refining every seed labeling and closed under `perms`:
/// refine by the translate `x ↦ label(g x)` until nothing changes.
pub fn generated_algebra_by(n: usize, perms: &[Vec<usize>], seeds: &[&[usize]]) -> Result<Vec<usize>> {
    for p in perms {
        check_len(n, p.len())?;
    }
    let mut cur = partition::join_all(seeds, n)?;
    let mut count = partition::num_cells(&cur);
    loop {
        for g in perms {
            let moved: Vec<usize> = g.iter().map(|&y| cur[y]).collect();
            cur = partition::join(&cur, &moved)?;
        }
        let next = partition::num_cells(&cur);
        if next == count {
            return Ok(partition::normalize(&cur));
        }
        count = next;
    }
}

pub fn generated_algebra(sys: &FiniteSystem, seeds: &[&[usize]]) -> Result<GAlgebra> {
    let labels = generated_algebra_by(sys.n(), sys.generators(), seeds)?;
    Ok(GAlgebra { labels })
}

/// Seeds given as point sets rather than labelings.
pub fn generated_algebra_of_sets(sys: &FiniteSystem, sets: &[Vec<usize>]) -> Result<GAlgebra> {
    let labelings = sets.iter().map(|s| partition::indicator(sys.n(), s)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[usize]> = labelings.iter().map(Vec::as_slice).collect();
    generated_algebra(sys, &refs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let z4 = FiniteSystem::cyclic(4).unwrap();
        assert_eq!(generated_algebra_of_sets(&z4, &[vec![0, 1, 2, 3]]).unwrap().num_cells(), 1);
        assert_eq!(generated_algebra_of_sets(&z4, &[vec![0]]).unwrap(), GAlgebra::discrete(4));
        let z6 = FiniteSystem::cyclic(6).unwrap();
        let a = generated_algebra_of_sets(&z6, &[vec![0, 3]]).unwrap();
        assert_eq!(a.cells(), vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
        assert!(a.contains_set(&[1, 4, 2, 5]).unwrap());
        assert!(!a.contains_set(&[1]).unwrap());
        assert!(GAlgebra::new(&z6, a.labels()).is_ok());
        assert!(GAlgebra::new(&z6, &[0, 0, 1, 1, 1, 1]).is_err());
    }
}
