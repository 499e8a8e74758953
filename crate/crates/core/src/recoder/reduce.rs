use serde::Serialize;

use crate::coding::{build_code, FiberDistribution};
use crate::error::{Error, Result};
use crate::partition::{self, check_len};
use crate::probvec::{binary_entropy, cond_entropy};
use crate::system::{generated_algebra, mask_to_set, simplemix, FiniteSystem, GAlgebra, PseudoMap};

/// Multipliers tried against the starting `δ`, largest first; halving continues past the list.
const DELTA_STEPS: [f64; 12] = [0.99, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.025];

#[derive(Clone, Debug)]
pub struct AlphabetReduction {
    /// Reduced partition.
    pub alpha: Vec<usize>,
    pub delta: f64,
    /// First relocated digit position.
    pub cutoff: usize,
    /// Label length at each point.
    pub lengths: Vec<usize>,
    /// `tails[n-1]` = points whose label has at least `n` digits.
    pub tails: Vec<Vec<usize>>,
    /// Joint digit partition up to the cutoff.
    pub gamma: Vec<usize>,
    /// Relocation maps for positions `cutoff, cutoff+1, …`.
    pub relocations: Vec<PseudoMap>,
    /// 0 off the relocated set, `1 + digit` on it.
    pub relocated_digits: Vec<usize>,
    /// Images of points whose label continues past the relocated digit.
    pub continues: Vec<usize>,
    pub report: ReductionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionReport {
    pub eps: f64,
    pub delta: f64,
    pub cutoff: usize,
    pub tail_mass: f64,
    pub xi_cells: usize,
    pub gamma_cells: usize,
    pub alpha_cells: usize,
    pub cell_bound: usize,
    pub h_xi: f64,
    pub h_alpha: f64,
    pub algebra_equal: bool,
    pub entropy_ok: bool,
}

impl ReductionReport {
    pub fn passed(&self) -> bool {
        self.algebra_equal && self.entropy_ok && self.alpha_cells <= self.cell_bound
    }
}

/// Digit `n` (1-indexed) of every label with at least `n` digits.
fn digit_partition(words: &[Vec<u8>], n: usize) -> Vec<usize> {
    words.iter().map(|w| w.get(n - 1).map_or(0, |&d| 1 + d as usize)).collect()
}

/// Replace `ξ` by a finite partition generating the same invariant algebra
/// together with `f`, at an entropy cost below `eps`. Labels come from the
/// rank code within each cell of `f`; digits past a cutoff are moved by
/// mixing maps onto disjoint sets of small total mass.
pub fn reduce_alphabet(sys: &FiniteSystem, xi: &[usize], f: &GAlgebra, eps: f64) -> Result<AlphabetReduction> {
    check_len(sys.n(), xi.len())?;
    check_len(sys.n(), f.labels().len())?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let n_pts = sys.n();
    let w = sys.weights_f64();
    let xi = partition::normalize(xi);
    let fd = FiberDistribution::from_labelings(&xi, f.labels(), w)?;
    let code = build_code(&fd);
    let words: Vec<Vec<u8>> = (0..n_pts).map(|x| code.word(f.labels()[x], xi[x]).to_vec()).collect();
    let lengths: Vec<usize> = words.iter().map(Vec::len).collect();
    let max_len = lengths.iter().copied().max().unwrap_or(0);

    let delta0 = (0.25f64).min(eps / 2.0);
    let ok = |d: f64| binary_entropy(d) + d * 7f64.ln() < eps;
    let mut delta = None;
    for &s in &DELTA_STEPS {
        if ok(delta0 * s) {
            delta = Some(delta0 * s);
            break;
        }
    }
    let mut d = delta0 * DELTA_STEPS[DELTA_STEPS.len() - 1];
    while delta.is_none() {
        d /= 2.0;
        if d < 1e-300 {
            return Err(Error::InvalidParameter(format!("no δ fits eps = {eps}")));
        }
        if ok(d) {
            delta = Some(d);
        }
    }
    let delta = delta.expect("set");

    let tails: Vec<Vec<usize>> = (1..=max_len).map(|n| (0..n_pts).filter(|&x| lengths[x] >= n).collect()).collect();
    let mass = |set: &[usize]| set.iter().map(|&x| w[x]).sum::<f64>();
    let tail_sum = |n: usize| -> f64 { tails.iter().skip(n - 1).map(|t| mass(t)).sum() };
    let cutoff = (1..=max_len + 1).find(|&n| tail_sum(n) < delta).expect("empty tail qualifies");
    let tail_mass = tail_sum(cutoff);

    let mut gamma = vec![0usize; n_pts];
    for n in 1..=cutoff {
        gamma = partition::join(&gamma, &digit_partition(&words, n))?;
    }

    // moved digits land outside the cutoff tail and outside earlier images
    let mut blocked = vec![false; n_pts];
    if cutoff <= max_len {
        for &x in &tails[cutoff - 1] {
            blocked[x] = true;
        }
    }
    let mut relocations = Vec::new();
    let mut relocated_digits = vec![0usize; n_pts];
    let mut in_q = vec![false; n_pts];
    for n in cutoff..=max_len {
        let dom = &tails[n - 1];
        if dom.is_empty() {
            break;
        }
        let free: Vec<usize> = (0..n_pts).filter(|&x| !blocked[x]).collect();
        let theta = simplemix(sys, dom, &free).map_err(|e| match e {
            Error::InsufficientRoom { a, b } => {
                Error::Capacity(format!("digit {n}: {a} points to relocate but only {b} free points"))
            }
            other => other,
        })?;
        for &x in dom {
            let y = theta.get(x).expect("total on domain");
            blocked[y] = true;
            relocated_digits[y] = 1 + words[x][n - 1] as usize;
            if lengths[x] > n {
                in_q[y] = true;
            }
        }
        relocations.push(theta);
    }
    let continues = mask_to_set(&in_q);
    let q_labels: Vec<usize> = in_q.iter().map(|&b| usize::from(b)).collect();
    let alpha = partition::join_all(&[&gamma, &relocated_digits, &q_labels], n_pts)?;

    let h_xi = cond_entropy(&xi, f.labels(), w)?;
    let h_alpha = cond_entropy(&alpha, f.labels(), w)?;
    let gen_alpha = generated_algebra(sys, &[&alpha, f.labels()])?;
    let gen_xi = generated_algebra(sys, &[&xi, f.labels()])?;
    let gamma_cells = partition::num_cells(&gamma);
    let report = ReductionReport {
        eps,
        delta,
        cutoff,
        tail_mass,
        xi_cells: partition::num_cells(&xi),
        gamma_cells,
        alpha_cells: partition::num_cells(&alpha),
        cell_bound: 7 * gamma_cells,
        h_xi,
        h_alpha,
        algebra_equal: gen_alpha == gen_xi,
        entropy_ok: h_alpha < h_xi + eps,
    };
    Ok(AlphabetReduction {
        alpha,
        delta,
        cutoff,
        lengths,
        tails,
        gamma,
        relocations,
        relocated_digits,
        continues,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewed36() -> Vec<usize> {
        let sizes = [20, 6, 3, 2, 1, 1, 1, 1, 1];
        let mut xi = Vec::new();
        for (c, &s) in sizes.iter().enumerate() {
            xi.extend(std::iter::repeat_n(c, s));
        }
        // interleave so cells are not intervals
        let mut out = vec![0; 36];
        for (i, &c) in xi.iter().enumerate() {
            out[(i * 5) % 36] = c;
        }
        out
    }

    #[test]
    fn short_codes_need_no_relocation() {
        let sys = FiniteSystem::cyclic(8).unwrap();
        let xi = vec![0, 1, 0, 1, 1, 0, 0, 1];
        let red = reduce_alphabet(&sys, &xi, &GAlgebra::trivial(8), 0.5).unwrap();
        assert!(red.relocations.is_empty());
        assert!(partition::same_partition(&red.alpha, &xi));
        assert!(red.report.passed());
        assert_eq!(red.report.h_alpha, red.report.h_xi);
    }

    #[test]
    fn skewed_tail_is_relocated() {
        let sys = FiniteSystem::cyclic(36).unwrap();
        let red = reduce_alphabet(&sys, &skewed36(), &GAlgebra::trivial(36), 0.5).unwrap();
        assert!(!red.relocations.is_empty());
        assert!(red.report.passed(), "{:?}", red.report);
    }

    #[test]
    fn discrete_side_algebra() {
        let sys = FiniteSystem::cyclic(36).unwrap();
        let red = reduce_alphabet(&sys, &skewed36(), &GAlgebra::discrete(36), 0.3).unwrap();
        assert_eq!(red.report.h_alpha, 0.0);
        assert!(red.report.passed());
    }
}
