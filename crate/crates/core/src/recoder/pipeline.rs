use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::probvec::{Coarsening, ProbVec};
use crate::system::{PseudoMap, Tower};
use crate::typical::{choose_j, is_typical, CodeBook, NameWord, TypicalSpec};

/// Everything read off one transversal point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitEntry {
    pub y: usize,
    pub orbit: Vec<usize>,
    /// Coarse name.
    pub b: NameWord,
    /// Fine name.
    pub c: NameWord,
    /// Codeword assigned to `c` in the fiber over `b`.
    pub code: NameWord,
    /// Positions below `k` whose point is reserved.
    pub reserved: Vec<usize>,
    /// Positions dropped to bring symbol frequencies under target.
    pub removed: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct RecodePlan {
    pub tower: Tower,
    pub codebook: CodeBook,
    pub entries: Vec<OrbitEntry>,
    pub delta: f64,
    pub eps: f64,
}

impl RecodePlan {
    pub fn k(&self) -> usize {
        self.codebook.k()
    }

    pub fn r_delta(&self) -> f64 {
        self.codebook.budget.r_f64() * self.delta
    }
}

/// Read the names along every tower class and map each to its codeword.
/// `fine` must refine `coarse`; both are labelings matching the codebook's
/// cell order.
pub fn encode_names(
    tower: Tower,
    fine: &[usize],
    coarse: &[usize],
    codebook: CodeBook,
    reserved: &[usize],
    delta: f64,
    eps: f64,
) -> Result<RecodePlan> {
    let n = codebook.n();
    let k = codebook.k();
    if tower.n != n {
        return Err(Error::LengthMismatch { expected: n, got: tower.n });
    }
    let n_pts = fine.len();
    let mut is_reserved = vec![false; n_pts];
    for &x in reserved {
        if x >= n_pts {
            return Err(Error::InvalidSet(format!("reserved point {x} out of range")));
        }
        is_reserved[x] = true;
    }
    let fine_spec = TypicalSpec::new(codebook.xi.clone(), eps, n)?;
    let beta = codebook.xi.coarsen(&codebook.pi)?;
    let coarse_spec = TypicalSpec::new(beta, eps, n)?;
    let code_spec = TypicalSpec::new(codebook.q.clone(), eps, k)?;
    let r_delta = codebook.budget.r_f64() * delta;

    let mut entries = Vec::with_capacity(tower.transversal.len());
    for &y in &tower.transversal {
        let orbit = tower.theta.orbit(y)?;
        let b: NameWord = orbit.iter().map(|&x| coarse[x]).collect();
        let c: NameWord = orbit.iter().map(|&x| fine[x]).collect();
        if !is_typical(&c, &fine_spec)? {
            return Err(Error::AtypicalName { point: y, detail: "fine name outside the typical set".into() });
        }
        if !is_typical(&b, &coarse_spec)? {
            return Err(Error::AtypicalName { point: y, detail: "coarse name outside the typical set".into() });
        }
        let code = codebook.encode(&b, &c)?;
        if !is_typical(&code, &code_spec)? {
            return Err(Error::Invariant(format!("codeword for {y} is not typical")));
        }
        let res: Vec<usize> = (0..k).filter(|&i| is_reserved[orbit[i]]).collect();
        if res.len() as f64 >= 2.0 * r_delta * n as f64 {
            return Err(Error::Precondition(format!(
                "{} reserved points on the orbit of {y}, limit 2rδn = {}",
                res.len(),
                2.0 * r_delta * n as f64
            )));
        }
        let removed = choose_j(&code, &codebook.q, &res, r_delta, eps)?;
        entries.push(OrbitEntry { y, orbit, b, c, code, reserved: res, removed });
    }
    Ok(RecodePlan { tower, codebook, entries, delta, eps })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthesis {
    /// Claimed cells, before completion.
    pub z: Vec<Vec<usize>>,
    /// Completed pre-partition at the coarse level: `Some(t)` on `A_t`.
    pub cells: Vec<Option<usize>>,
}

/// Exact point count `N·r·w`, or a divisibility error.
pub fn target_count(n_pts: usize, r: &BigRational, w: &BigRational) -> Result<usize> {
    let x = BigRational::from_integer(BigInt::from(n_pts)) * r * w;
    if !x.is_integer() {
        return Err(Error::Divisibility(format!("N·r·w = {x} is not an integer")));
    }
    Ok(x.to_integer().to_usize().expect("fits"))
}

/// Lay the kept codeword symbols onto their orbit points, then top each
/// cell up to exactly `N·r·q_t` points from the lowest unclaimed indices.
pub fn synthesize_prepartition(plan: &RecodePlan, n_pts: usize, q: &ProbVec, r: &BigRational) -> Result<Synthesis> {
    let exact = q.exact().ok_or(Error::NotExact)?;
    let targets = exact.iter().map(|w| target_count(n_pts, r, w)).collect::<Result<Vec<_>>>()?;
    let k = plan.k();
    let mut cells: Vec<Option<usize>> = vec![None; n_pts];
    let mut z = vec![Vec::new(); q.len()];
    for e in &plan.entries {
        let mut skip = vec![false; k];
        for &i in e.reserved.iter().chain(&e.removed) {
            skip[i] = true;
        }
        for i in (0..k).filter(|&i| !skip[i]) {
            let x = e.orbit[i];
            let t = e.code[i];
            cells[x] = Some(t);
            z[t].push(x);
        }
    }
    for (t, zt) in z.iter_mut().enumerate() {
        zt.sort_unstable();
        if zt.len() > targets[t] || (zt.len() == targets[t] && targets[t] > 0) {
            return Err(Error::Capacity(format!(
                "cell {t} claims {} points, not below its target {}",
                zt.len(),
                targets[t]
            )));
        }
    }
    let mut next = 0usize;
    for (t, &target) in targets.iter().enumerate() {
        let mut have = z[t].len();
        while have < target {
            while next < n_pts && cells[next].is_some() {
                next += 1;
            }
            if next == n_pts {
                return Err(Error::Capacity(format!("no room to complete cell {t}")));
            }
            cells[next] = Some(t);
            have += 1;
        }
    }
    Ok(Synthesis { z, cells })
}

/// Split each coarse cell, in increasing point order, into its fine cells
/// with `N·r·p_i` points each.
pub fn refine_to_p(
    cells: &[Option<usize>],
    p: &ProbVec,
    q_of_p: &Coarsening,
    r: &BigRational,
) -> Result<Vec<Option<usize>>> {
    let n_pts = cells.len();
    let exact = p.exact().ok_or(Error::NotExact)?;
    let mut out = vec![None; n_pts];
    for (t, block) in q_of_p.blocks().iter().enumerate() {
        let members: Vec<usize> = (0..n_pts).filter(|&x| cells[x] == Some(t)).collect();
        let mut it = members.into_iter();
        for &i in block {
            for _ in 0..target_count(n_pts, r, &exact[i])? {
                let x = it.next().ok_or_else(|| Error::Invariant(format!("cell {t} too small to refine")))?;
                out[x] = Some(i);
            }
        }
        if it.next().is_some() {
            return Err(Error::Invariant(format!("cell {t} larger than its refinement")));
        }
    }
    Ok(out)
}

/// Mismatches between a partial name and a full word; unlabeled positions
/// count against every word.
pub fn partial_mismatches(name: &[Option<usize>], word: &[usize]) -> usize {
    name.iter().zip(word).filter(|(a, b)| **a != Some(**b)).count()
}

/// Recover the fine labeling from a coarse pre-partition, the coarse
/// labeling and the tower classes. Each class's first `k` labels must sit
/// within `radius` of exactly one codeword in the fiber range of its coarse name.
pub fn decode(
    theta: &PseudoMap,
    transversal: &[usize],
    cells: &[Option<usize>],
    coarse: &[usize],
    codebook: &CodeBook,
    radius: f64,
) -> Result<Vec<usize>> {
    let n_pts = cells.len();
    let k = codebook.k();
    let mut out = vec![usize::MAX; n_pts];
    for &y in transversal {
        let orbit = theta.orbit(y)?;
        let b: NameWord = orbit.iter().map(|&x| coarse[x]).collect();
        let a: Vec<Option<usize>> = orbit[..k].iter().map(|&x| cells[x]).collect();
        let hits: Vec<&NameWord> =
            codebook.range_of(&b)?.iter().filter(|w| (partial_mismatches(&a, w) as f64) < radius * k as f64).collect();
        if hits.len() != 1 {
            return Err(Error::Decode { point: y, matches: hits.len() });
        }
        let c = codebook
            .invert(&b, hits[0])?
            .ok_or_else(|| Error::Invariant(format!("codeword at {y} outside the fiber")))?;
        for (&x, &s) in orbit.iter().zip(&c) {
            out[x] = s;
        }
    }
    if let Some(x) = out.iter().position(|&l| l == usize::MAX) {
        return Err(Error::Invariant(format!("point {x} lies on no decoded class")));
    }
    Ok(out)
}

/// Copy of `cells` with the first `count` labeled positions among the first
/// `k` of `y`'s class erased.
pub fn erase_labels(
    theta: &PseudoMap,
    cells: &[Option<usize>],
    y: usize,
    k: usize,
    count: usize,
) -> Result<Vec<Option<usize>>> {
    let orbit = theta.orbit(y)?;
    let mut out = cells.to_vec();
    for &x in orbit.iter().take(k).filter(|&&x| cells[x].is_some()).take(count) {
        out[x] = None;
    }
    Ok(out)
}

/// Largest normalized distance between a class's coarse labels and its codeword.
pub fn max_name_distance(plan: &RecodePlan, cells: &[Option<usize>]) -> f64 {
    let k = plan.k();
    plan.entries
        .iter()
        .map(|e| {
            let a: Vec<Option<usize>> = e.orbit[..k].iter().map(|&x| cells[x]).collect();
            partial_mismatches(&a, &e.code) as f64 / k as f64
        })
        .fold(0.0, f64::max)
}
