use std::collections::HashMap;

use serde_json::{json, Value};

use super::algebra::GAlgebra;
use super::{concat_words, invert_word, set_mask, FiniteSystem, Word};
use crate::error::{Error, Result};

/// Partial bijection of the points in which every domain point carries a
/// generator word taking it to its image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoMap {
    map: Vec<Option<usize>>,
    words: Vec<Option<Word>>,
}

impl PseudoMap {
    pub fn empty(n: usize) -> Self {
        PseudoMap { map: vec![None; n], words: vec![None; n] }
    }

    pub fn identity(n: usize, set: &[usize]) -> Result<Self> {
        let mask = set_mask(n, set)?;
        Ok(PseudoMap {
            map: (0..n).map(|x| mask[x].then_some(x)).collect(),
            words: (0..n).map(|x| mask[x].then(Vec::new)).collect(),
        })
    }

    /// The same word applied on all of `set`.
    pub fn from_word(sys: &FiniteSystem, set: &[usize], word: &[super::Letter]) -> Result<Self> {
        sys.check_word(word)?;
        let pairs = set.iter().map(|&x| (x, word.to_vec())).collect();
        PseudoMap::from_words(sys, pairs)
    }

    /// Images computed from per-point words; fails unless injective.
    pub fn from_words(sys: &FiniteSystem, pairs: Vec<(usize, Word)>) -> Result<Self> {
        let n = sys.n();
        let mut out = PseudoMap::empty(n);
        let mut hit = vec![false; n];
        for (x, w) in pairs {
            if x >= n || out.map[x].is_some() {
                return Err(Error::InvalidSet(format!("domain point {x} invalid or repeated")));
            }
            sys.check_word(&w)?;
            let y = sys.apply_word(&w, x);
            if hit[y] {
                return Err(Error::DomainMismatch(format!("two points map to {y}")));
            }
            hit[y] = true;
            out.map[x] = Some(y);
            out.words[x] = Some(w);
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, x: usize) -> Option<usize> {
        self.map.get(x).copied().flatten()
    }

    pub fn word(&self, x: usize) -> Option<&Word> {
        self.words.get(x).and_then(Option::as_ref)
    }

    pub fn map(&self) -> &[Option<usize>] {
        &self.map
    }

    pub fn domain(&self) -> Vec<usize> {
        (0..self.n()).filter(|&x| self.map[x].is_some()).collect()
    }

    pub fn range(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.map.iter().flatten().copied().collect();
        r.sort_unstable();
        r
    }

    pub fn len(&self) -> usize {
        self.map.iter().filter(|m| m.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Words reproduce the map and the map is injective.
    pub fn check(&self, sys: &FiniteSystem) -> Result<()> {
        if self.n() != sys.n() {
            return Err(Error::LengthMismatch { expected: sys.n(), got: self.n() });
        }
        let mut hit = vec![false; self.n()];
        for x in 0..self.n() {
            match (self.map[x], &self.words[x]) {
                (None, None) => {}
                (Some(y), Some(w)) => {
                    sys.check_word(w)?;
                    if sys.apply_word(w, x) != y {
                        return Err(Error::Invariant(format!("word at {x} does not reach {y}")));
                    }
                    if hit[y] {
                        return Err(Error::Invariant(format!("two points map to {y}")));
                    }
                    hit[y] = true;
                }
                _ => return Err(Error::Invariant(format!("map and words disagree at {x}"))),
            }
        }
        Ok(())
    }

    /// `self ∘ phi`; the range of `phi` must lie in the domain of `self`.
    pub fn compose(&self, phi: &PseudoMap) -> Result<PseudoMap> {
        if self.n() != phi.n() {
            return Err(Error::LengthMismatch { expected: self.n(), got: phi.n() });
        }
        let mut out = PseudoMap::empty(self.n());
        for x in 0..self.n() {
            let Some(y) = phi.map[x] else { continue };
            let Some(z) = self.map[y] else {
                return Err(Error::DomainMismatch(format!("{y} is in the range but not the domain")));
            };
            out.map[x] = Some(z);
            out.words[x] =
                Some(concat_words(phi.words[x].as_ref().expect("word"), self.words[y].as_ref().expect("word")));
        }
        Ok(out)
    }

    pub fn inverse(&self) -> PseudoMap {
        let mut out = PseudoMap::empty(self.n());
        for x in 0..self.n() {
            if let Some(y) = self.map[x] {
                out.map[y] = Some(x);
                out.words[y] = Some(invert_word(self.words[x].as_ref().expect("word")));
            }
        }
        out
    }

    pub fn restrict(&self, set: &[usize]) -> Result<PseudoMap> {
        let mask = set_mask(self.n(), set)?;
        let mut out = self.clone();
        for x in 0..self.n() {
            if !mask[x] {
                out.map[x] = None;
                out.words[x] = None;
            }
        }
        Ok(out)
    }

    /// Glue two maps with disjoint domains and disjoint ranges.
    pub fn union(&self, other: &PseudoMap) -> Result<PseudoMap> {
        if self.n() != other.n() {
            return Err(Error::LengthMismatch { expected: self.n(), got: other.n() });
        }
        let mut hit = vec![false; self.n()];
        for y in self.map.iter().flatten() {
            hit[*y] = true;
        }
        let mut out = self.clone();
        for x in 0..self.n() {
            if let Some(y) = other.map[x] {
                if out.map[x].is_some() {
                    return Err(Error::DomainMismatch(format!("domains overlap at {x}")));
                }
                if hit[y] {
                    return Err(Error::DomainMismatch(format!("ranges overlap at {y}")));
                }
                hit[y] = true;
                out.map[x] = Some(y);
                out.words[x] = other.words[x].clone();
            }
        }
        Ok(out)
    }

    /// `k`-fold composite; needs the range inside the domain.
    pub fn power(&self, k: usize) -> Result<PseudoMap> {
        let mut out = PseudoMap::identity(self.n(), &self.domain())?;
        for _ in 0..k {
            out = self.compose(&out)?;
        }
        Ok(out)
    }

    /// Point images under the `k`-fold composite, words ignored.
    pub fn map_power(&self, k: usize) -> Vec<Option<usize>> {
        (0..self.n())
            .map(|x| {
                let mut y = x;
                for _ in 0..k {
                    y = self.map[y]?;
                }
                self.map[x].map(|_| y)
            })
            .collect()
    }

    /// Points `x, θx, θ²x, …` up to the return to `x`.
    pub fn orbit(&self, x: usize) -> Result<Vec<usize>> {
        let mut out = vec![x];
        let mut y = self.get(x).ok_or(Error::Aperiodic(x))?;
        while y != x {
            if out.len() > self.n() {
                return Err(Error::Aperiodic(x));
            }
            out.push(y);
            y = self.get(y).ok_or(Error::Aperiodic(x))?;
        }
        Ok(out)
    }

    /// Orbits covering the domain, each listed from its least point.
    pub fn orbits(&self) -> Result<Vec<Vec<usize>>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for x in self.domain() {
            if !seen[x] {
                let o = self.orbit(x)?;
                for &y in &o {
                    seen[y] = true;
                }
                out.push(o);
            }
        }
        Ok(out)
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(x, m)| m.is_none_or(|y| y == x))
    }

    /// Image array with `null` off the domain.
    pub fn to_json(&self) -> Value {
        json!(self.map)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expressibility {
    /// A decomposition whose pieces are unions of cells.
    Yes(PseudoMap),
    No(String),
    /// The group enumeration was capped before a witness turned up.
    Unknown,
}

impl Expressibility {
    pub fn is_yes(&self) -> bool {
        matches!(self, Expressibility::Yes(_))
    }
}

/// Search for one group element per cell of `f` inside the domain that
/// agrees with `theta` on the whole cell.
pub fn is_expressible(sys: &FiniteSystem, theta: &PseudoMap, f: &GAlgebra) -> Result<Expressibility> {
    if theta.n() != sys.n() || f.labels().len() != sys.n() {
        return Err(Error::LengthMismatch { expected: sys.n(), got: theta.n() });
    }
    if !f.contains_set(&theta.domain())? {
        return Ok(Expressibility::No("domain is not a union of cells".into()));
    }
    if !f.contains_set(&theta.range())? {
        return Ok(Expressibility::No("range is not a union of cells".into()));
    }
    let group = sys.group();
    let mut pairs = Vec::with_capacity(theta.len());
    for cell in f.cells() {
        if theta.get(cell[0]).is_none() {
            continue;
        }
        let found = group.elements.iter().find(|g| cell.iter().all(|&x| theta.get(x) == Some(g.perm[x])));
        match found {
            Some(g) => pairs.extend(cell.iter().map(|&x| (x, g.word.clone()))),
            None if group.complete => {
                return Ok(Expressibility::No(format!("no group element agrees on cell of {}", cell[0])))
            }
            None => return Ok(Expressibility::Unknown),
        }
    }
    Ok(Expressibility::Yes(PseudoMap::from_words(sys, pairs)?))
}

/// Check that the words carried by `theta` form a decomposition over `f`:
/// the map is consistent, domain and range are unions of cells, and each
/// cell in the domain uses a single group element.
pub fn verify_certificate(sys: &FiniteSystem, theta: &PseudoMap, f: &GAlgebra) -> Result<bool> {
    theta.check(sys)?;
    if !f.contains_set(&theta.domain())? || !f.contains_set(&theta.range())? {
        return Ok(false);
    }
    let mut perm_ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut word_ids: HashMap<&Word, usize> = HashMap::new();
    let mut cell_elem: Vec<Option<usize>> = vec![None; f.num_cells()];
    for x in theta.domain() {
        let w = theta.word(x).expect("word");
        let id = match word_ids.get(w) {
            Some(&id) => id,
            None => {
                let next = perm_ids.len();
                let id = *perm_ids.entry(sys.word_perm(w)).or_insert(next);
                word_ids.insert(w, id);
                id
            }
        };
        let c = f.labels()[x];
        match cell_elem[c] {
            None => cell_elem[c] = Some(id),
            Some(prev) if prev != id => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::super::Letter;
    use super::*;

    const A: Letter = Letter { gen: 0, inv: false };

    #[test]
    fn identity_and_rotation_expressible() {
        let z4 = FiniteSystem::cyclic(4).unwrap();
        let triv = GAlgebra::trivial(4);
        let id = PseudoMap::identity(4, &[0, 1, 2, 3]).unwrap();
        assert!(is_expressible(&z4, &id, &triv).unwrap().is_yes());
        let rot = PseudoMap::from_word(&z4, &[0, 1, 2, 3], &[A]).unwrap();
        assert!(is_expressible(&z4, &rot, &triv).unwrap().is_yes());
        assert!(verify_certificate(&z4, &rot, &triv).unwrap());
    }

    #[test]
    fn cell_dependent_map_needs_finer_algebra() {
        let z4 = FiniteSystem::cyclic(4).unwrap();
        // swap 0 and 1, fix 2 and 3
        let words = vec![(0, vec![A]), (1, vec![A.inverse()]), (2, vec![]), (3, vec![])];
        let swap = PseudoMap::from_words(&z4, words).unwrap();
        let verdict = is_expressible(&z4, &swap, &GAlgebra::trivial(4)).unwrap();
        assert!(matches!(verdict, Expressibility::No(_)));
        assert!(!verify_certificate(&z4, &swap, &GAlgebra::trivial(4)).unwrap());
        assert!(verify_certificate(&z4, &swap, &GAlgebra::discrete(4)).unwrap());
    }

    #[test]
    fn compose_and_invert() {
        let z12 = FiniteSystem::cyclic(12).unwrap();
        let all: Vec<usize> = (0..12).collect();
        let r2 = PseudoMap::from_word(&z12, &all, &[A, A]).unwrap();
        let r3 = PseudoMap::from_word(&z12, &all, &[A, A, A]).unwrap();
        let r5 = r2.compose(&r3).unwrap();
        assert_eq!(r5.get(0), Some(5));
        assert_eq!(r5.word(0).unwrap().len(), 5);
        let back = r5.compose(&r5.inverse()).unwrap();
        assert!(back.is_identity());
        assert!(back.word(3).unwrap().is_empty());
        assert_eq!(r3.power(4).unwrap().map(), PseudoMap::identity(12, &all).unwrap().map());
        assert_eq!(r3.orbit(1).unwrap(), vec![1, 4, 7, 10]);
    }

    #[test]
    fn partial_maps() {
        let z6 = FiniteSystem::cyclic(6).unwrap();
        let a = PseudoMap::from_word(&z6, &[0, 1], &[A]).unwrap();
        let b = PseudoMap::from_word(&z6, &[3], &[A]).unwrap();
        let u = a.union(&b).unwrap();
        assert_eq!(u.range(), vec![1, 2, 4]);
        let clash = PseudoMap::from_word(&z6, &[3], &[A.inverse()]).unwrap();
        assert!(a.union(&clash).is_err());
        assert!(a.union(&a).is_err());
        assert!(a.compose(&a).is_err());
        assert!(u.orbit(0).is_err());
        assert_eq!(u.restrict(&[1]).unwrap().domain(), vec![1]);
    }
}
