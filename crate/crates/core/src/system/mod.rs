//! Finite permutation systems: weighted points acted on by named generators.
//!
//! Group elements are carried as generator words. A word is applied letter
//! by letter, first letter first, so `[a, b]·x = b(a(x))`.

mod algebra;
mod mixing;
mod pseudomap;
mod tower;

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::probvec::{parse_rational, rational_to_f64};

pub use algebra::{generated_algebra, generated_algebra_by, generated_algebra_of_sets, GAlgebra};
pub use mixing::{
    avgmix, avgmix_functions, avgmix_with, cyclic_permute, make_equal_partition, simplemix, AvgMix, AvgRoute,
};
pub use pseudomap::{is_expressible, verify_certificate, Expressibility, PseudoMap};
pub use tower::{build_tower, min_tower_eps, name, side_channel_len, Tower, TowerAudit, TowerParams};

/// Default ceiling on enumerated group elements.
pub const ELEMENT_CAP: usize = 50_000;
/// Enumerated permutations are kept under this many stored entries in total.
const ELEMENT_BUDGET: usize = 4_000_000;

/// A generator or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        Letter { gen: self.gen, inv: !self.inv }
    }
}

pub type Word = Vec<Letter>;

/// Cancel adjacent letter/inverse pairs.
pub fn reduce_word(word: &[Letter]) -> Word {
    let mut out: Word = Vec::with_capacity(word.len());
    for &l in word {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

pub fn invert_word(word: &[Letter]) -> Word {
    word.iter().rev().map(|l| l.inverse()).collect()
}

/// `first` then `second`, reduced.
pub fn concat_words(first: &[Letter], second: &[Letter]) -> Word {
    let mut w = first.to_vec();
    w.extend_from_slice(second);
    reduce_word(&w)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    pub perm: Vec<usize>,
    pub word: Word,
}

/// Breadth-first listing of group elements: identity, then each generator
/// and its inverse in declaration order, then longer words length-lex.
/// Elements are deduplicated by permutation, so each carries a shortest word.
#[derive(Clone, Debug)]
pub struct GroupEnumeration {
    pub elements: Vec<GroupElement>,
    /// False when a cap stopped the search before the group closed.
    pub complete: bool,
    index: HashMap<Vec<usize>, usize>,
}

impl GroupEnumeration {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, perm: &[usize]) -> Option<usize> {
        self.index.get(perm).copied()
    }
}

#[derive(Clone, Debug)]
pub struct FiniteSystem {
    n: usize,
    weights: Vec<BigRational>,
    weights_f64: Vec<f64>,
    names: Vec<String>,
    gens: Vec<Vec<usize>>,
    invs: Vec<Vec<usize>>,
    element_cap: usize,
    group: OnceLock<GroupEnumeration>,
}

impl FiniteSystem {
    /// Validate and build. Weights default to uniform.
    pub fn new(n: usize, generators: Vec<(String, Vec<usize>)>, weights: Option<Vec<BigRational>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSystem("no points".into()));
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(Error::LengthMismatch { expected: n, got: w.len() });
                }
                if w.iter().any(|x| x.is_negative()) {
                    return Err(Error::InvalidSystem("negative weight".into()));
                }
                let total: BigRational = w.iter().sum();
                if !total.is_one() {
                    return Err(Error::InvalidSystem(format!("weights sum to {total}, not 1")));
                }
                w
            }
            None => vec![BigRational::new(BigInt::one(), BigInt::from(n)); n],
        };
        let mut names = Vec::with_capacity(generators.len());
        let mut gens = Vec::with_capacity(generators.len());
        let mut invs = Vec::with_capacity(generators.len());
        for (name, perm) in generators {
            if names.contains(&name) {
                return Err(Error::InvalidSystem(format!("duplicate generator {name}")));
            }
            if perm.len() != n {
                return Err(Error::InvalidSystem(format!("generator {name} has length {}, expected {n}", perm.len())));
            }
            let mut inv = vec![usize::MAX; n];
            for (x, &y) in perm.iter().enumerate() {
                if y >= n || inv[y] != usize::MAX {
                    return Err(Error::InvalidSystem(format!("generator {name} is not a permutation")));
                }
                inv[y] = x;
            }
            if (0..n).any(|x| weights[perm[x]] != weights[x]) {
                return Err(Error::InvalidSystem(format!("weights not invariant under {name}")));
            }
            names.push(name);
            gens.push(perm);
            invs.push(inv);
        }
        let weights_f64 = weights.iter().map(rational_to_f64).collect();
        let sys = FiniteSystem {
            n,
            weights,
            weights_f64,
            names,
            gens,
            invs,
            element_cap: ELEMENT_CAP,
            group: OnceLock::new(),
        };
        sys.check_transitive()?;
        Ok(sys)
    }

    fn check_transitive(&self) -> Result<()> {
        let support = self.support();
        let start = support[0];
        let mut seen = vec![false; self.n];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for g in &self.gens {
                if !seen[g[x]] {
                    seen[g[x]] = true;
                    stack.push(g[x]);
                }
            }
        }
        if support.iter().all(|&x| seen[x]) {
            Ok(())
        } else {
            Err(Error::InvalidSystem("generators are not transitive on the support".into()))
        }
    }

    /// Rotation `x ↦ x+1 mod n`, generator "a".
    pub fn cyclic(n: usize) -> Result<Self> {
        FiniteSystem::new(n, vec![("a".into(), (0..n).map(|x| (x + 1) % n).collect())], None)
    }

    /// Rotation "r" and reflection "s" of an `n`-gon.
    pub fn dihedral(n: usize) -> Result<Self> {
        FiniteSystem::new(
            n,
            vec![
                ("r".into(), (0..n).map(|x| (x + 1) % n).collect()),
                ("s".into(), (0..n).map(|x| (n - x) % n).collect()),
            ],
            None,
        )
    }

    /// `Z/a × Z/b` on points `i·b + j`, generators "a" and "b".
    pub fn torus(a: usize, b: usize) -> Result<Self> {
        let n = a * b;
        FiniteSystem::new(
            n,
            vec![
                ("a".into(), (0..n).map(|x| ((x / b + 1) % a) * b + x % b).collect()),
                ("b".into(), (0..n).map(|x| (x / b) * b + (x % b + 1) % b).collect()),
            ],
            None,
        )
    }

    pub fn with_element_cap(mut self, cap: usize) -> Self {
        self.element_cap = cap.max(1);
        self.group = OnceLock::new();
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        FiniteSystem::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let n = v
            .get("points")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("missing integer field \"points\"".into()))? as usize;
        let weights = match v.get("weights") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => Some(
                items
                    .iter()
                    .map(|w| match w {
                        Value::String(s) => parse_rational(s),
                        Value::Number(x) => parse_rational(&x.to_string()),
                        _ => Err(Error::Parse(format!("bad weight {w}"))),
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            Some(other) => return Err(Error::Parse(format!("bad weights {other}"))),
        };
        let gens = v
            .get("generators")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Parse("missing object field \"generators\"".into()))?;
        let mut generators = Vec::with_capacity(gens.len());
        for (name, perm) in gens {
            let perm = perm
                .as_array()
                .ok_or_else(|| Error::Parse(format!("generator {name} is not an array")))?
                .iter()
                .map(|x| x.as_u64().map(|x| x as usize))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Parse(format!("generator {name} has a non-integer entry")))?;
            generators.push((name.clone(), perm));
        }
        FiniteSystem::new(n, generators, weights)
    }

    pub fn to_json(&self) -> Value {
        let gens: Map<String, Value> = self.names.iter().zip(&self.gens).map(|(k, p)| (k.clone(), json!(p))).collect();
        let mut out = json!({ "points": self.n, "generators": gens });
        if !self.is_uniform() {
            out["weights"] = json!(self.weights.iter().map(|w| w.to_string()).collect::<Vec<_>>());
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn weights_f64(&self) -> &[f64] {
        &self.weights_f64
    }

    pub fn generator_names(&self) -> &[String] {
        &self.names
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.gens
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&x| !self.weights[x].is_zero()).collect()
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.windows(2).all(|w| w[0] == w[1])
    }

    pub fn require_uniform(&self) -> Result<()> {
        if self.is_uniform() {
            Ok(())
        } else {
            Err(Error::Precondition("uniform weights required".into()))
        }
    }

    pub fn set_weight(&self, set: &[usize]) -> BigRational {
        set.iter().map(|&x| &self.weights[x]).sum()
    }

    pub fn apply_letter(&self, l: Letter, x: usize) -> usize {
        if l.inv {
            self.invs[l.gen][x]
        } else {
            self.gens[l.gen][x]
        }
    }

    pub fn apply_word(&self, word: &[Letter], x: usize) -> usize {
        word.iter().fold(x, |y, &l| self.apply_letter(l, y))
    }

    pub fn word_perm(&self, word: &[Letter]) -> Vec<usize> {
        (0..self.n).map(|x| self.apply_word(word, x)).collect()
    }

    pub fn check_word(&self, word: &[Letter]) -> Result<()> {
        match word.iter().find(|l| l.gen >= self.gens.len()) {
            Some(l) => Err(Error::InvalidParameter(format!("unknown generator index {}", l.gen))),
            None => Ok(()),
        }
    }

    /// `a`, `a^-1`, `b`, ... for display.
    pub fn word_string(&self, word: &[Letter]) -> String {
        if word.is_empty() {
            return "e".into();
        }
        word.iter()
            .map(|l| if l.inv { format!("{}^-1", self.names[l.gen]) } else { self.names[l.gen].clone() })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn letters(&self) -> Vec<Letter> {
        (0..self.gens.len()).flat_map(|g| [Letter { gen: g, inv: false }, Letter { gen: g, inv: true }]).collect()
    }

    /// Cached enumeration, capped at words of length `2N` and an element budget.
    pub fn group(&self) -> &GroupEnumeration {
        self.group.get_or_init(|| self.enumerate())
    }

    fn enumerate(&self) -> GroupEnumeration {
        let cap = self.element_cap.min((ELEMENT_BUDGET / self.n).max(1000));
        let max_len = 2 * self.n;
        let letters = self.letters();
        let identity: Vec<usize> = (0..self.n).collect();
        let mut index = HashMap::new();
        index.insert(identity.clone(), 0);
        let mut elements = vec![GroupElement { perm: identity, word: Vec::new() }];
        let mut queue = VecDeque::from([0usize]);
        let mut complete = true;
        'bfs: while let Some(i) = queue.pop_front() {
            if elements[i].word.len() >= max_len {
                complete = false;
                break;
            }
            for &l in &letters {
                let perm: Vec<usize> = elements[i].perm.iter().map(|&y| self.apply_letter(l, y)).collect();
                if index.contains_key(&perm) {
                    continue;
                }
                if elements.len() >= cap {
                    complete = false;
                    break 'bfs;
                }
                let mut word = elements[i].word.clone();
                word.push(l);
                index.insert(perm.clone(), elements.len());
                queue.push_back(elements.len());
                elements.push(GroupElement { perm, word });
            }
        }
        GroupEnumeration { elements, complete, index }
    }

    /// A shortest enumerated word for the permutation `word` denotes, if any.
    pub fn canonical_word(&self, word: &[Letter]) -> Option<Word> {
        let perm = self.word_perm(word);
        self.group().position(&perm).map(|i| self.group().elements[i].word.clone())
    }
}

/// Membership mask of a point set, rejecting out-of-range and repeated points.
pub fn set_mask(n: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &x in set {
        if x >= n {
            return Err(Error::InvalidSet(format!("point {x} out of range {n}")));
        }
        if mask[x] {
            return Err(Error::InvalidSet(format!("point {x} repeated")));
        }
        mask[x] = true;
    }
    Ok(mask)
}

pub fn mask_to_set(mask: &[bool]) -> Vec<usize> {
    (0..mask.len()).filter(|&x| mask[x]).collect()
}
