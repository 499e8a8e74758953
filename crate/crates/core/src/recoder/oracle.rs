use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{self, check_len};
use crate::probvec::{cond_entropy, labeling_entropy};
use crate::system::{generated_algebra, FiniteSystem, GAlgebra};

/// Largest system the exhaustive search accepts.
pub const ORACLE_MAX_POINTS: usize = 10;

/// Entropies closer than this count as equal when picking a witness.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub points: usize,
    pub k_max: usize,
    /// Minimum entropy over generating labelings, in nats.
    pub min_entropy: f64,
    /// Witness cells, each sorted, ordered by smallest point.
    pub witness: Vec<Vec<usize>>,
    pub labelings_checked: u64,
    pub generating: u64,
}

fn search(
    sys: &FiniteSystem,
    k_max: usize,
    side: Option<&[usize]>,
    mut score: impl FnMut(&[usize]) -> Result<f64>,
) -> Result<OracleResult> {
    let n = sys.n();
    if n > ORACLE_MAX_POINTS {
        return Err(Error::SizeCap(format!("{n} points, exhaustive search allows {ORACLE_MAX_POINTS}")));
    }
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be positive".into()));
    }
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    let mut checked = 0u64;
    let mut generating = 0u64;
    let mut err = None;
    partition::for_each_set_partition(n, k_max, |labels| {
        if err.is_some() {
            return;
        }
        checked += 1;
        let seeds: Vec<&[usize]> = match side {
            Some(f) => vec![labels, f],
            None => vec![labels],
        };
        let alg = match generated_algebra(sys, &seeds) {
            Ok(a) => a,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        if alg.num_cells() != n {
            return;
        }
        generating += 1;
        let h = match score(labels) {
            Ok(h) => h,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let better = match &best {
            None => true,
            Some((b, _)) if h < b - TIE_TOL => true,
            Some((b, cells)) if (h - b).abs() <= TIE_TOL => partition::cells(labels) < *cells,
            _ => false,
        };
        if better {
            best = Some((h, partition::cells(labels)));
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let (min_entropy, witness) = best.ok_or_else(|| {
        Error::Capacity(format!("no labeling with at most {k_max} cells generates the discrete algebra"))
    })?;
    Ok(OracleResult { points: n, k_max, min_entropy, witness, labelings_checked: checked, generating })
}

/// Least entropy of a labeling with at most `k_max` cells whose invariant
/// algebra separates points, by exhaustive search.
pub fn brute_force_generator_search(sys: &FiniteSystem, k_max: usize) -> Result<OracleResult> {
    let w = sys.weights_f64().to_vec();
    search(sys, k_max, None, |l| labeling_entropy(l, &w))
}

/// Least `H(α|F)` over labelings `α` that separate points together with `f`.
pub fn relative_generator_search(sys: &FiniteSystem, f: &GAlgebra, k_max: usize) -> Result<OracleResult> {
    check_len(sys.n(), f.labels().len())?;
    let w = sys.weights_f64().to_vec();
    let fl = f.labels().to_vec();
    search(sys, k_max, Some(&fl), |l| cond_entropy(l, &fl, &w))
}

/// Action on the cells of an invariant algebra, with summed weights.
pub fn factor_system(sys: &FiniteSystem, f: &GAlgebra) -> Result<FiniteSystem> {
    check_len(sys.n(), f.labels().len())?;
    if !f.is_invariant_under(sys.generators()) {
        return Err(Error::InvalidParameter("algebra is not invariant".into()));
    }
    let labels = partition::normalize(f.labels());
    let cells = partition::num_cells(&labels);
    let mut weights = vec![num_rational::BigRational::from_integer(0.into()); cells];
    for (x, &c) in labels.iter().enumerate() {
        weights[c] += &sys.weights()[x];
    }
    let gens = sys
        .generator_names()
        .iter()
        .zip(sys.generators())
        .map(|(name, g)| {
            let mut perm = vec![0; cells];
            for (x, &c) in labels.iter().enumerate() {
                perm[c] = labels[g[x]];
            }
            (name.clone(), perm)
        })
        .collect();
    FiniteSystem::new(cells, gens, Some(weights))
}

/// Compares the minimum over the whole system with the factor minimum
/// plus the relative minimum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubadditivityReport {
    pub whole: OracleResult,
    pub factor: OracleResult,
    pub relative: OracleResult,
    pub gap: f64,
    pub holds: bool,
}

pub fn subadditivity_check(sys: &FiniteSystem, f: &GAlgebra, k_max: usize) -> Result<SubadditivityReport> {
    let whole = brute_force_generator_search(sys, k_max)?;
    let factor = brute_force_generator_search(&factor_system(sys, f)?, k_max)?;
    let relative = relative_generator_search(sys, f, k_max)?;
    let gap = factor.min_entropy + relative.min_entropy - whole.min_entropy;
    Ok(SubadditivityReport { whole, factor, relative, gap, holds: gap >= -TIE_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_swap_needs_both_singletons() {
        let sys = FiniteSystem::cyclic(2).unwrap();
        let res = brute_force_generator_search(&sys, 2).unwrap();
        assert!((res.min_entropy - 2f64.ln()).abs() < 1e-12);
        assert_eq!(res.witness, vec![vec![0], vec![1]]);
    }

    #[test]
    fn one_point_is_free() {
        let sys = FiniteSystem::new(1, vec![], None).unwrap();
        let res = brute_force_generator_search(&sys, 1).unwrap();
        assert_eq!(res.min_entropy, 0.0);
        assert_eq!(res.witness, vec![vec![0]]);
    }

    #[test]
    fn size_cap() {
        let sys = FiniteSystem::cyclic(11).unwrap();
        assert!(matches!(brute_force_generator_search(&sys, 2), Err(Error::SizeCap(_))));
    }

    #[test]
    fn factor_of_rotation_by_parity() {
        let sys = FiniteSystem::cyclic(6).unwrap();
        let f = GAlgebra::new(&sys, &[0, 1, 0, 1, 0, 1]).unwrap();
        let fac = factor_system(&sys, &f).unwrap();
        assert_eq!(fac.n(), 2);
        assert_eq!(fac.generators()[0], vec![1, 0]);
        let rep = subadditivity_check(&sys, &f, 3).unwrap();
        assert!(rep.holds, "{rep:?}");
    }
}
