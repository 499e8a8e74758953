use fingen::partition;
use fingen::probvec::{parse_rational, ProbVec};
use fingen::recoder::{krieger_recode, RecodeParams};
use fingen::system::{FiniteSystem, GAlgebra};
use fingen::Error;

fn rotation(n: usize, d: usize, period: usize, ones: &[usize]) -> (FiniteSystem, Vec<usize>, GAlgebra) {
    let sys = FiniteSystem::cyclic(n).unwrap();
    let f = GAlgebra::new(&sys, &(0..n).map(|x| x % d).collect::<Vec<_>>()).unwrap();
    let xi = (0..n).map(|x| usize::from(ones.contains(&(x % period)))).collect();
    (sys, xi, f)
}

fn params(p: &[&str], r: &str) -> RecodeParams {
    RecodeParams::new(ProbVec::parse(p).unwrap(), parse_rational(r).unwrap())
}

#[test]
fn half_split_round_trip() {
    let (sys, xi, f) = rotation(200, 5, 100, &[0]);
    let out = krieger_recode(&sys, &xi, &f, &params(&["1/2", "1/2"], "1")).unwrap();
    let cert = &out.certificate;
    assert!(cert.passed, "{cert:?}");
    assert_eq!(cert.mode, "assisted decode");
    assert_eq!(cert.cell_counts, vec![100, 100]);
    assert_eq!(out.decode_cells(&out.synthesis.cells).unwrap(), xi);
    assert!(cert.max_name_distance < cert.distance_bound);
    assert_eq!(cert.scan.last().unwrap().outcome, "ok");
}

#[test]
fn erasing_past_the_radius_breaks_decoding() {
    let (sys, xi, f) = rotation(200, 4, 100, &[0]);
    let out = krieger_recode(&sys, &xi, &f, &params(&["1/2", "1/2"], "1")).unwrap();
    for which in 0..out.plan.tower.transversal.len() {
        assert!(matches!(out.inject_fault(which).unwrap(), Some(Error::Decode { .. })));
    }
}

#[test]
fn partial_mass() {
    let (sys, xi, f) = rotation(400, 4, 200, &[0]);
    let mut p = params(&["1/2", "1/2"], "4/5");
    p.m = Some(200);
    let out = krieger_recode(&sys, &xi, &f, &p).unwrap();
    assert!(out.certificate.passed, "{:?}", out.certificate);
    assert_eq!(out.alpha.iter().flatten().count(), 320);
    assert_eq!(out.certificate.cell_counts, vec![160, 160]);
}

#[test]
fn searched_coarsening_of_three_cells() {
    let (sys, xi, f) = rotation(200, 5, 50, &[0]);
    let out = krieger_recode(&sys, &xi, &f, &params(&["1/4", "1/4", "1/2"], "1")).unwrap();
    let cert = &out.certificate;
    assert!(cert.passed, "{cert:?}");
    assert_eq!(cert.cell_counts, vec![50, 50, 100]);
    // the fewest blocks with enough entropy come first
    assert_eq!(cert.q_blocks.len(), 2);
    let coarse: Vec<usize> = out.alpha.iter().map(|a| out.q_of_p.assignment()[a.unwrap()]).collect();
    assert!(partition::refines(&out.alpha.iter().map(|a| a.unwrap()).collect::<Vec<_>>(), &coarse).unwrap());
}

#[test]
fn entropy_gap_is_required() {
    let sys = FiniteSystem::cyclic(200).unwrap();
    let xi: Vec<usize> = (0..200).map(|x| x % 2).collect();
    let err = krieger_recode(&sys, &xi, &GAlgebra::trivial(200), &params(&["1/2", "1/2"], "1")).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}

#[test]
fn masses_must_be_integral() {
    let (sys, xi, f) = rotation(200, 4, 100, &[0]);
    let err = krieger_recode(&sys, &xi, &f, &params(&["1/3", "2/3"], "1")).unwrap_err();
    assert!(matches!(err, Error::Divisibility(_)), "{err}");
}

#[test]
fn certificate_is_deterministic() {
    let (sys, xi, f) = rotation(200, 4, 100, &[0]);
    let a = krieger_recode(&sys, &xi, &f, &params(&["1/2", "1/2"], "1")).unwrap();
    let b = krieger_recode(&sys, &xi, &f, &params(&["1/2", "1/2"], "1")).unwrap();
    assert_eq!(a.certificate, b.certificate);
    assert_eq!(a.alpha, b.alpha);
}
