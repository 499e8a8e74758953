use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::algebra::{generated_algebra, GAlgebra};
use super::pseudomap::PseudoMap;
use super::{mask_to_set, set_mask, FiniteSystem};
use crate::error::{Error, Result};
use crate::partition;
use crate::probvec::{gcd_all, ratcomb_decompose, ProbVec};

fn require_support(sys: &FiniteSystem, mask: &[bool]) -> Result<()> {
    match (0..sys.n()).find(|&x| mask[x] && num_traits::Zero::is_zero(&sys.weights()[x])) {
        Some(x) => Err(Error::InvalidSet(format!("point {x} has zero weight"))),
        None => Ok(()),
    }
}

/// Injection of `a` into `b` by a greedy sweep over the enumerated group:
/// each element `g` in turn takes every still-unmatched `x ∈ a` with `g x`
/// still free in `b`.
pub fn simplemix(sys: &FiniteSystem, a: &[usize], b: &[usize]) -> Result<PseudoMap> {
    let in_a = set_mask(sys.n(), a)?;
    let in_b = set_mask(sys.n(), b)?;
    require_support(sys, &in_a)?;
    require_support(sys, &in_b)?;
    if a.is_empty() || a.len() > b.len() {
        return Err(Error::InsufficientRoom { a: a.len(), b: b.len() });
    }
    let mut free = in_b;
    let mut pending: Vec<usize> = mask_to_set(&in_a);
    let mut pairs = Vec::with_capacity(a.len());
    for g in &sys.group().elements {
        pending.retain(|&x| {
            let y = g.perm[x];
            if free[y] {
                free[y] = false;
                pairs.push((x, g.word.clone()));
                false
            } else {
                true
            }
        });
        if pending.is_empty() {
            return PseudoMap::from_words(sys, pairs);
        }
    }
    Err(Error::EnumerationExhausted)
}

/// Split `b` into `n` equal pieces, the first being `c`, each later piece the
/// image of `c` under a mixing map into what is left.
pub fn make_equal_partition(sys: &FiniteSystem, c: &[usize], b: &[usize], n: usize) -> Result<Vec<Vec<usize>>> {
    let in_b = set_mask(sys.n(), b)?;
    let in_c = set_mask(sys.n(), c)?;
    if n == 0 || c.len() * n != b.len() {
        return Err(Error::Divisibility(format!("|B| = {} is not {n} × |C| = {}", b.len(), c.len())));
    }
    if (0..sys.n()).any(|x| in_c[x] && !in_b[x]) {
        return Err(Error::InvalidSet("C is not inside B".into()));
    }
    let mut rest: Vec<bool> = (0..sys.n()).map(|x| in_b[x] && !in_c[x]).collect();
    let mut pieces = vec![mask_to_set(&in_c)];
    for _ in 1..n {
        let piece = simplemix(sys, &pieces[0], &mask_to_set(&rest))?.range();
        for &x in &piece {
            rest[x] = false;
        }
        pieces.push(piece);
    }
    Ok(pieces)
}

/// A map sending piece `k` onto piece `k+1` and the last back onto the first.
pub fn cyclic_permute(sys: &FiniteSystem, pieces: &[Vec<usize>]) -> Result<PseudoMap> {
    let Some(first) = pieces.first() else {
        return Err(Error::InvalidParameter("no pieces".into()));
    };
    let mut seen = vec![false; sys.n()];
    for p in pieces {
        if p.len() != first.len() || p.is_empty() {
            return Err(Error::InvalidSet("pieces must be nonempty and of equal size".into()));
        }
        for &x in p {
            if x >= sys.n() || seen[x] {
                return Err(Error::InvalidSet(format!("point {x} invalid or in two pieces")));
            }
            seen[x] = true;
        }
    }
    let n = pieces.len();
    if n == 1 {
        return PseudoMap::identity(sys.n(), first);
    }
    // phi[k] carries the first piece onto piece k
    let mut phi = vec![PseudoMap::identity(sys.n(), first)?];
    for p in &pieces[1..] {
        phi.push(simplemix(sys, first, p)?);
    }
    let mut theta = phi[1].clone();
    for k in 1..n - 1 {
        theta = theta.union(&phi[k + 1].compose(&phi[k].inverse())?)?;
    }
    theta.union(&phi[n - 1].inverse())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AvgRoute {
    /// Blocks weighted by a common-denominator convex decomposition.
    Ratcomb,
    /// One block whose classes reproduce the cell proportions exactly.
    ExactType,
}

#[derive(Clone, Debug)]
pub struct AvgMix {
    pub theta: PseudoMap,
    /// Class size.
    pub n: usize,
    /// `θ`-orbits, each listed from its transversal point.
    pub classes: Vec<Vec<usize>>,
    pub transversal: Vec<usize>,
    pub route: AvgRoute,
    /// Invariant algebra generated by the cells and `B`; `θ` is expressible over it.
    pub algebra: GAlgebra,
    /// Largest gap between a class frequency and the frequency in `B`.
    pub max_deviation: f64,
}

pub fn avgmix(sys: &FiniteSystem, b: &[usize], alpha: &[usize], eps: f64) -> Result<AvgMix> {
    avgmix_with(sys, b, alpha, eps, None)
}

/// Cut `b` into classes of one size whose cell frequencies track those of
/// `b`. Works on the atoms of the algebra generated by `alpha` and `b`,
/// which are translates of one another and so equal in size.
pub fn avgmix_with(
    sys: &FiniteSystem,
    b: &[usize],
    alpha: &[usize],
    eps: f64,
    route: Option<AvgRoute>,
) -> Result<AvgMix> {
    sys.require_uniform()?;
    partition::check_len(sys.n(), alpha.len())?;
    let in_b = set_mask(sys.n(), b)?;
    if b.is_empty() {
        return Err(Error::InvalidSet("empty B".into()));
    }
    let ind = partition::indicator(sys.n(), b)?;
    let algebra = generated_algebra(sys, &[alpha, &ind])?;
    let atoms: Vec<Vec<usize>> = algebra.cells().into_iter().filter(|c| in_b[c[0]]).collect();
    if atoms.iter().any(|a| a.len() != atoms[0].len()) {
        return Err(Error::Invariant("atoms inside B differ in size".into()));
    }

    // atoms grouped by cell, cells in increasing label order
    let mut labels: Vec<usize> = atoms.iter().map(|a| alpha[a[0]]).collect();
    labels.sort_unstable();
    labels.dedup();
    let mut pools: Vec<Vec<&Vec<usize>>> = vec![Vec::new(); labels.len()];
    for a in &atoms {
        let i = labels.binary_search(&alpha[a[0]]).expect("label");
        pools[i].push(a);
    }
    let kappa: Vec<u64> = pools.iter().map(|p| p.len() as u64).collect();
    let m = atoms.len() as u64;

    let ratcomb_blocks =
        if route == Some(AvgRoute::ExactType) || !(eps > 0.0) { None } else { ratcomb_blocks(&kappa, m, eps)? };
    if route == Some(AvgRoute::Ratcomb) && ratcomb_blocks.is_none() {
        return Err(Error::Divisibility("block sizes are not whole atom counts".into()));
    }
    // each block: (atoms per piece, pieces per cell)
    let (blocks, n, used_route) = match ratcomb_blocks {
        Some((blocks, n)) => (blocks, n, AvgRoute::Ratcomb),
        None => {
            let g = gcd_all(&kappa);
            let pieces: Vec<u64> = kappa.iter().map(|k| k / g).collect();
            (vec![(g, pieces)], (m / g) as usize, AvgRoute::ExactType)
        }
    };

    let mut cursor = vec![0usize; pools.len()];
    let mut theta = PseudoMap::empty(sys.n());
    let mut transversal = Vec::new();
    for (size, counts) in &blocks {
        let mut pieces: Vec<Vec<usize>> = Vec::new();
        for (i, &cnt) in counts.iter().enumerate() {
            for _ in 0..cnt {
                let mut piece = Vec::new();
                for _ in 0..*size {
                    piece.extend_from_slice(pools[i][cursor[i]]);
                    cursor[i] += 1;
                }
                piece.sort_unstable();
                pieces.push(piece);
            }
        }
        if pieces.is_empty() {
            continue;
        }
        transversal.extend_from_slice(&pieces[0]);
        theta = theta.union(&cyclic_permute(sys, &pieces)?)?;
    }
    transversal.sort_unstable();
    let classes = transversal.iter().map(|&t| theta.orbit(t)).collect::<Result<Vec<_>>>()?;

    let global: Vec<f64> = kappa.iter().map(|&k| k as f64 / m as f64).collect();
    let mut max_deviation: f64 = 0.0;
    for class in &classes {
        let mut counts = vec![0usize; labels.len()];
        for &x in class {
            counts[labels.binary_search(&alpha[x]).expect("label")] += 1;
        }
        for (c, g) in counts.iter().zip(&global) {
            max_deviation = max_deviation.max((*c as f64 / class.len() as f64 - g).abs());
        }
    }
    if max_deviation > eps.max(0.0) + 1e-12 {
        return Err(Error::Invariant(format!("class deviation {max_deviation} exceeds {eps}")));
    }
    Ok(AvgMix { theta, n, classes, transversal, route: used_route, algebra, max_deviation })
}

/// Block layout from a convex decomposition of `kappa / m`, or `None` when
/// some block would need a fractional number of atoms per piece.
#[allow(clippy::type_complexity)]
fn ratcomb_blocks(kappa: &[u64], m: u64, eps: f64) -> Result<Option<(Vec<(u64, Vec<u64>)>, usize)>> {
    let dec = ratcomb_decompose(&ProbVec::from_counts(kappa)?, eps)?;
    let n_q = BigRational::from_integer(BigInt::from(dec.n));
    let m_q = BigRational::from_integer(BigInt::from(m));
    let mut blocks = Vec::new();
    for (c, r) in dec.mixing.iter().zip(&dec.vectors) {
        let per_piece = c * &m_q / &n_q;
        if !per_piece.is_integer() {
            return Ok(None);
        }
        let size = per_piece.to_integer().to_u64().expect("fits");
        if size == 0 {
            continue;
        }
        let counts = r.iter().map(|x| (x * &n_q).to_integer().to_u64().expect("fits")).collect();
        blocks.push((size, counts));
    }
    Ok(Some((blocks, dec.n as usize)))
}

/// Averaging for a family of finite-valued functions on `b`: classes are
/// built over the joint level sets, and every class average must land within
/// `eps` of the mean over `b`. Falls back to exact proportions otherwise.
pub fn avgmix_functions(sys: &FiniteSystem, b: &[usize], fs: &[Vec<f64>], eps: f64) -> Result<AvgMix> {
    let in_b = set_mask(sys.n(), b)?;
    for f in fs {
        partition::check_len(sys.n(), f.len())?;
    }
    let mut profiles: Vec<Vec<u64>> = Vec::new();
    let mut labels = vec![0usize; sys.n()];
    for x in 0..sys.n() {
        if in_b[x] {
            let key: Vec<u64> = fs.iter().map(|f| f[x].to_bits()).collect();
            let id = match profiles.iter().position(|p| *p == key) {
                Some(i) => i,
                None => {
                    profiles.push(key);
                    profiles.len() - 1
                }
            };
            labels[x] = id + 1;
        }
    }
    let within = |mix: &AvgMix| {
        fs.iter().all(|f| {
            let mean = b.iter().map(|&x| f[x]).sum::<f64>() / b.len() as f64;
            mix.classes.iter().all(|c| {
                let avg = c.iter().map(|&x| f[x]).sum::<f64>() / c.len() as f64;
                (avg - mean).abs() <= eps + 1e-12
            })
        })
    };
    let mix = avgmix(sys, b, &labels, eps)?;
    if within(&mix) {
        return Ok(mix);
    }
    let mix = avgmix_with(sys, b, &labels, eps, Some(AvgRoute::ExactType))?;
    if within(&mix) {
        Ok(mix)
    } else {
        Err(Error::Invariant("class averages out of range".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{generated_algebra_of_sets, verify_certificate};

    #[test]
    fn simplemix_examples() {
        let z4 = FiniteSystem::cyclic(4).unwrap();
        let same = simplemix(&z4, &[1, 2], &[1, 2]).unwrap();
        assert!(same.is_identity());
        let single = simplemix(&z4, &[1], &[3]).unwrap();
        assert_eq!(single.get(1), Some(3));
        assert!(matches!(simplemix(&z4, &[0, 1], &[2]), Err(Error::InsufficientRoom { a: 2, b: 1 })));
        let f = generated_algebra_of_sets(&z4, &[vec![1], vec![3]]).unwrap();
        assert!(verify_certificate(&z4, &single, &f).unwrap());
    }

    #[test]
    fn equal_partition_and_cycle() {
        let z6 = FiniteSystem::cyclic(6).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let pieces = make_equal_partition(&z6, &[0, 3], &all, 3).unwrap();
        assert_eq!(pieces.len(), 3);
        assert_eq!(pieces[0], vec![0, 3]);
        let covered: usize = pieces.iter().map(Vec::len).sum();
        assert_eq!(covered, 6);
        assert!(matches!(make_equal_partition(&z6, &[0], &all, 4), Err(Error::Divisibility(_))));
        assert_eq!(make_equal_partition(&z6, &all, &all, 1).unwrap(), vec![all.clone()]);
        let theta = cyclic_permute(&z6, &pieces).unwrap();
        assert!(theta.power(3).unwrap().is_identity());
        assert!(!theta.power(1).unwrap().is_identity());
        for k in 0..3 {
            let image: Vec<usize> = {
                let mut v: Vec<usize> = pieces[k].iter().map(|&x| theta.get(x).unwrap()).collect();
                v.sort_unstable();
                v
            };
            assert_eq!(image, pieces[(k + 1) % 3]);
        }
    }

    #[test]
    fn swap_on_two_points() {
        let z2 = FiniteSystem::cyclic(2).unwrap();
        let theta = cyclic_permute(&z2, &[vec![0], vec![1]]).unwrap();
        assert_eq!(theta.map(), &[Some(1), Some(0)]);
        let id = cyclic_permute(&z2, &[vec![0, 1]]).unwrap();
        assert!(id.is_identity());
    }

    #[test]
    fn half_split_of_ten() {
        let z10 = FiniteSystem::cyclic(10).unwrap();
        let all: Vec<usize> = (0..10).collect();
        let alpha = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let mix = avgmix(&z10, &all, &alpha, 0.3).unwrap();
        assert_eq!(mix.route, AvgRoute::Ratcomb);
        assert_eq!(mix.n, 5);
        assert!(mix.max_deviation <= 0.3);
        assert!(mix.classes.iter().all(|c| c.len() == 5));
        assert!(mix.theta.power(5).unwrap().is_identity());
        assert!(verify_certificate(&z10, &mix.theta, &mix.algebra).unwrap());
    }

    #[test]
    fn trivial_cells_give_exact_frequencies() {
        let z8 = FiniteSystem::cyclic(8).unwrap();
        let mix = avgmix(&z8, &[0, 2, 4, 6], &[0; 8], 0.1).unwrap();
        assert_eq!(mix.max_deviation, 0.0);
        assert!(mix.classes.iter().all(|c| c.len() == mix.n));
    }

    #[test]
    fn exact_route_when_forced() {
        let z12 = FiniteSystem::cyclic(12).unwrap();
        let all: Vec<usize> = (0..12).collect();
        let alpha = vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        let mix = avgmix_with(&z12, &all, &alpha, 0.2, Some(AvgRoute::ExactType)).unwrap();
        assert_eq!(mix.n, 4);
        assert_eq!(mix.max_deviation, 0.0);
    }

    #[test]
    fn function_family() {
        let z10 = FiniteSystem::cyclic(10).unwrap();
        let all: Vec<usize> = (0..10).collect();
        let f: Vec<f64> = (0..10).map(|x| if x < 5 { 1.0 } else { 0.0 }).collect();
        let mix = avgmix_functions(&z10, &all, std::slice::from_ref(&f), 0.25).unwrap();
        for c in &mix.classes {
            let avg = c.iter().map(|&x| f[x]).sum::<f64>() / c.len() as f64;
            assert!((avg - 0.5).abs() <= 0.25);
        }
    }
}
