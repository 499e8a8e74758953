use std::collections::HashMap;

use fingen::partition;
use fingen::probvec::{cond_entropy, labeling_entropy, parse_rational, ratcomb_decompose, Coarsening, ProbVec};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

/// Conditional entropy straight from joint and marginal masses.
fn oracle_cond(a: &[usize], b: &[usize], w: &[f64]) -> f64 {
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut marg: HashMap<usize, f64> = HashMap::new();
    for i in 0..a.len() {
        *joint.entry((a[i], b[i])).or_default() += w[i];
        *marg.entry(b[i]).or_default() += w[i];
    }
    joint.iter().filter(|(_, &p)| p > 0.0).map(|(&(_, y), &p)| -p * (p / marg[&y]).ln()).sum()
}

fn labeled(
    max_points: usize,
    max_cells: usize,
) -> impl Strategy<Value = (Vec<f64>, Vec<usize>, Vec<usize>, Vec<usize>)> {
    (1..=max_points).prop_flat_map(move |n| {
        (
            prop::collection::vec(0u32..5, n),
            prop::collection::vec(0..max_cells, n),
            prop::collection::vec(0..max_cells, n),
            prop::collection::vec(0..max_cells, n),
        )
            .prop_filter_map("all-zero weights", |(raw, a, b, f)| {
                let total: u32 = raw.iter().sum();
                (total > 0).then(|| (raw.iter().map(|&x| x as f64 / total as f64).collect(), a, b, f))
            })
    })
}

/// Every coarsening of a labeling, by merging its cells.
fn coarsenings(labels: &[usize]) -> Vec<Vec<usize>> {
    let norm = partition::normalize(labels);
    let k = partition::num_cells(&norm);
    let mut out = Vec::new();
    partition::for_each_set_partition(k, k, |merge| out.push(norm.iter().map(|&c| merge[c]).collect()));
    out
}

#[test]
fn closed_forms() {
    let h = |w: &[f64]| ProbVec::from_f64(w.to_vec()).unwrap().entropy();
    assert_eq!(h(&[1.0]), 0.0);
    assert!((h(&[0.5, 0.5]) - 2f64.ln()).abs() < 1e-12);
    assert!((h(&[0.5, 0.25, 0.25]) - 1.5 * 2f64.ln()).abs() < 1e-12);
    // zero cells contribute nothing
    assert!((h(&[0.5, 0.0, 0.5]) - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn coarsen_examples() {
    let p = ProbVec::parse(&["0.2", "0.3", "0.5"]).unwrap();
    let q = p.coarsen(&Coarsening::new(vec![vec![0, 1], vec![2]], 3).unwrap()).unwrap();
    assert!((q.weights()[0] - 0.5).abs() < 1e-12 && (q.weights()[1] - 0.5).abs() < 1e-12);
    assert_eq!(p.coarsen(&Coarsening::singletons(3)).unwrap().weights(), p.weights());
    let u = ProbVec::uniform(4).unwrap();
    assert_eq!(u.coarsen(&Coarsening::full(4)).unwrap().to_strings(), vec!["1"]);
}

#[test]
fn independent_bits() {
    let w = [0.25; 4];
    let a = [0, 0, 1, 1];
    let b = [0, 1, 0, 1];
    assert!((cond_entropy(&a, &b, &w).unwrap() - 2f64.ln()).abs() < 1e-12);
    assert_eq!(cond_entropy(&a, &a, &w).unwrap(), 0.0);
    assert!((cond_entropy(&a, &[0; 4], &w).unwrap() - labeling_entropy(&a, &w).unwrap()).abs() < 1e-15);
}

#[test]
fn ratcomb_half_split() {
    let a = ProbVec::parse(&["1/2", "1/2"]).unwrap();
    let d = ratcomb_decompose(&a, 0.3).unwrap();
    assert_eq!(d.n, 5);
    let r = |s: &str| parse_rational(s).unwrap();
    assert_eq!(d.mixing, vec![r("1/2"), r("1/2")]);
    assert_eq!(d.vectors, vec![vec![r("2/5"), r("3/5")], vec![r("3/5"), r("2/5")]]);
    assert_eq!(d.reconstruct(), a.exact().unwrap());
}

#[test]
fn ratcomb_already_on_grid() {
    // least admissible n is 4, the common denominator
    let a = ProbVec::parse(&["1/4", "3/4"]).unwrap();
    let d = ratcomb_decompose(&a, 0.3).unwrap();
    assert_eq!(d.n, 4);
    for v in &d.vectors {
        assert_eq!(v, a.exact().unwrap());
    }
}

fn exact_vec() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec(0u32..20, 1..=5).prop_filter_map("zero vector", |raw| {
        let total: u32 = raw.iter().sum();
        (total > 0).then(|| raw.iter().map(|&x| BigRational::new(BigInt::from(x), BigInt::from(total))).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cond_entropy_matches_oracle((w, a, b, _f) in labeled(64, 6)) {
        let got = cond_entropy(&a, &b, &w).unwrap();
        prop_assert!((got - oracle_cond(&a, &b, &w)).abs() < 1e-10);
    }

    #[test]
    fn chain_rule_and_bounds((w, a, b, f) in labeled(64, 6)) {
        let af = partition::join(&a, &f).unwrap();
        let ab = partition::join(&a, &b).unwrap();
        let h_a = cond_entropy(&a, &f, &w).unwrap();
        let h_b = cond_entropy(&b, &f, &w).unwrap();
        let h_ab = cond_entropy(&ab, &f, &w).unwrap();
        let h_b_af = cond_entropy(&b, &af, &w).unwrap();
        prop_assert!(h_a <= (partition::num_cells(&a) as f64).ln() + 1e-10);
        prop_assert!((h_ab - h_a - h_b_af).abs() < 1e-10);
        prop_assert!(h_ab <= h_a + h_b + 1e-10);
        // refining the labeling raises, refining the condition lowers
        prop_assert!(h_a <= h_ab + 1e-10);
        let fb = partition::join(&f, &b).unwrap();
        prop_assert!(cond_entropy(&a, &fb, &w).unwrap() <= h_a + 1e-10);
    }

    #[test]
    fn extremal_forms((w, a, _b, f) in labeled(24, 4)) {
        let target = cond_entropy(&a, &f, &w).unwrap();
        let sup = coarsenings(&a).iter().map(|c| cond_entropy(c, &f, &w).unwrap()).fold(f64::MIN, f64::max);
        let inf = coarsenings(&f).iter().map(|c| cond_entropy(&a, c, &w).unwrap()).fold(f64::MAX, f64::min);
        prop_assert!((sup - target).abs() < 1e-10);
        prop_assert!((inf - target).abs() < 1e-10);
    }

    #[test]
    fn ratcomb_identity(exact in exact_vec(), eps in 0.05f64..0.9) {
        let a = ProbVec::from_rationals(exact.clone()).unwrap();
        let d = ratcomb_decompose(&a, eps).unwrap();
        prop_assert_eq!(d.reconstruct(), exact.clone());
        let n = BigRational::from_integer(BigInt::from(d.n));
        let eps_q = BigRational::from_float(eps).unwrap();
        for v in &d.vectors {
            for (x, y) in v.iter().zip(&exact) {
                prop_assert!((x * &n).is_integer());
                let diff = if x > y { x - y } else { y - x };
                prop_assert!(diff < eps_q);
            }
        }
        prop_assert!(d.mixing.iter().all(|c| *c >= BigRational::from_integer(0.into())));
    }
}
