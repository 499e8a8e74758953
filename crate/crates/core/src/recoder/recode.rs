use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::pipeline::{
    decode, encode_names, erase_labels, max_name_distance, refine_to_p, synthesize_prepartition, target_count,
    RecodePlan, Synthesis,
};
use crate::error::{Error, Result};
use crate::partition::{self, check_len};
use crate::probvec::{cond_entropy, Coarsening, ProbVec};
use crate::system::{
    build_tower, generated_algebra_by, min_tower_eps, FiniteSystem, GAlgebra, TowerAudit, TowerParams,
};
use crate::typical::{build_injections, ChainCheck, PackingBudget};

/// Above this many target cells the coarsening search is skipped and `q` must be given.
pub const Q_SEARCH_LIMIT: usize = 8;

/// Margin by which the automatic `δ` clears its lower limits.
const DELTA_MARGIN: f64 = 1.01;

#[derive(Clone, Debug)]
pub struct RecodeParams {
    /// Target masses, exact.
    pub p: ProbVec,
    /// Blocks of `p` forming the codeword distribution; searched when absent.
    pub q: Option<Coarsening>,
    pub r: BigRational,
    /// Points kept out of the claimed cells.
    pub reserved: Vec<usize>,
    /// Column height; scanned over divisors of `N` when absent.
    pub m: Option<usize>,
    pub delta: Option<f64>,
    /// Typicality tolerance; the largest name deviation observed when absent.
    pub eps: Option<f64>,
}

impl RecodeParams {
    pub fn new(p: ProbVec, r: BigRational) -> Self {
        RecodeParams { p, q: None, r, reserved: Vec::new(), m: None, delta: None, eps: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub q_blocks: Vec<Vec<usize>>,
    pub m: usize,
    pub tower_eps: f64,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub outcome: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub mode: String,
    pub points: usize,
    pub r: String,
    pub p: Vec<String>,
    pub q: Vec<String>,
    pub q_blocks: Vec<Vec<usize>>,
    pub h_xi_given_f: f64,
    pub r_h_p: f64,
    pub r_h_q: f64,
    pub m: usize,
    pub tower_eps: f64,
    pub n: usize,
    pub k: usize,
    pub classes: usize,
    pub eps: f64,
    pub delta: f64,
    pub radius: f64,
    pub scan: Vec<ScanRow>,
    pub chain: Vec<ChainCheck>,
    pub tower: TowerAudit,
    pub cell_counts: Vec<usize>,
    pub masses_exact: bool,
    pub max_name_distance: f64,
    pub distance_bound: f64,
    pub max_reserved: usize,
    pub max_removed: usize,
    pub decode_exact: bool,
    pub algebra_refines: bool,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct RecodeOutcome {
    /// Pre-partition with `N·r·p_i` points in cell `i`.
    pub alpha: Vec<Option<usize>>,
    pub synthesis: Synthesis,
    pub plan: RecodePlan,
    /// Coarse labeling the decoder is given.
    pub beta: Vec<usize>,
    /// Fine cell → original label.
    pub fine_to_xi: Vec<usize>,
    pub q_of_p: Coarsening,
    pub certificate: Certificate,
}

impl RecodeOutcome {
    pub fn radius(&self) -> f64 {
        self.certificate.radius
    }

    /// Decode a coarse pre-partition back to the original labels.
    pub fn decode_cells(&self, cells: &[Option<usize>]) -> Result<Vec<usize>> {
        let t = &self.plan.tower;
        let fine = decode(&t.theta, &t.transversal, cells, &self.beta, &self.plan.codebook, self.radius())?;
        Ok(fine.into_iter().map(|c| self.fine_to_xi[c]).collect())
    }

    /// Erase just over the decoding radius of labels on the class of the
    /// `which`-th transversal point and decode; returns the decoder's error.
    pub fn inject_fault(&self, which: usize) -> Result<Option<Error>> {
        let y = *self
            .plan
            .tower
            .transversal
            .get(which)
            .ok_or_else(|| Error::InvalidParameter(format!("no transversal point {which}")))?;
        let k = self.plan.k();
        let count = (self.radius() * k as f64).floor() as usize + 1;
        let cells = erase_labels(&self.plan.tower.theta, &self.synthesis.cells, y, k, count)?;
        Ok(self.decode_cells(&cells).err())
    }
}

fn describe(blocks: &[Vec<usize>]) -> Vec<Vec<usize>> {
    blocks.to_vec()
}

/// Coarsenings of `p` with `r·H(q)` above `h`, fewest blocks first, then
/// largest `H(q)`.
fn coarsening_candidates(p: &ProbVec, r: f64, h: f64) -> Result<Vec<(Coarsening, ProbVec)>> {
    if p.len() > Q_SEARCH_LIMIT {
        return Err(Error::SizeCap(format!("{} target cells; give q explicitly", p.len())));
    }
    let mut out = Vec::new();
    let mut err = None;
    partition::for_each_set_partition(p.len(), p.len(), |labels| {
        if err.is_some() {
            return;
        }
        match Coarsening::from_assignment(labels).and_then(|c| p.coarsen(&c).map(|q| (c, q))) {
            Ok((c, q)) if r * q.entropy() > h => out.push((c, q)),
            Ok(_) => {}
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    out.sort_by(|a, b| {
        a.0.num_blocks()
            .cmp(&b.0.num_blocks())
            .then(b.1.entropy().total_cmp(&a.1.entropy()))
            .then(a.0.blocks().cmp(b.0.blocks()))
    });
    Ok(out)
}

/// Largest frequency gap between a class name and the global distribution,
/// over both the fine and the coarse labeling.
fn name_deviation(classes: &[Vec<usize>], labels: &[&[usize]]) -> f64 {
    let n_pts = labels[0].len() as f64;
    let mut worst: f64 = 0.0;
    for lab in labels {
        let k = lab.iter().copied().max().map_or(0, |m| m + 1);
        let mut global = vec![0usize; k];
        for &l in lab.iter() {
            global[l] += 1;
        }
        for c in classes {
            let mut local = vec![0usize; k];
            for &x in c {
                local[lab[x]] += 1;
            }
            for (a, g) in local.iter().zip(&global) {
                worst = worst.max((*a as f64 / c.len() as f64 - *g as f64 / n_pts).abs());
            }
        }
    }
    worst
}

/// Build a pre-partition with masses `r·p_i` from which `ξ` is recovered
/// given the coarse algebra `f`, the tower map and its transversal.
pub fn krieger_recode(sys: &FiniteSystem, xi: &[usize], f: &GAlgebra, params: &RecodeParams) -> Result<RecodeOutcome> {
    sys.require_uniform()?;
    let n_pts = sys.n();
    check_len(n_pts, xi.len())?;
    check_len(n_pts, f.labels().len())?;
    let r = params.r.clone();
    if r <= BigRational::zero() || r > BigRational::one() {
        return Err(Error::InvalidParameter(format!("r must lie in (0,1], got {r}")));
    }
    let r_f = crate::probvec::rational_to_f64(&r);
    let p = &params.p;
    if !p.is_exact() {
        return Err(Error::NotExact);
    }
    for w in p.exact().expect("exact") {
        target_count(n_pts, &r, w)?;
    }
    let w = sys.weights_f64();
    let beta = partition::normalize(f.labels());
    let h_xi_f = cond_entropy(xi, &beta, w)?;
    let r_h_p = r_f * p.entropy();
    if h_xi_f >= r_h_p {
        return Err(Error::Precondition(format!("H(ξ|F) = {h_xi_f} is not below r·H(p) = {r_h_p}")));
    }

    let fine = partition::join(xi, &beta)?;
    let n_fine = partition::num_cells(&fine);
    let mut fine_to_xi = vec![0; n_fine];
    let mut fine_to_beta = vec![0; n_fine];
    let mut counts = vec![0u64; n_fine];
    for x in 0..n_pts {
        fine_to_xi[fine[x]] = xi[x];
        fine_to_beta[fine[x]] = beta[x];
        counts[fine[x]] += 1;
    }
    let xi_pv = ProbVec::from_counts(&counts)?;
    let pi = Coarsening::from_assignment(&fine_to_beta)?;

    let candidates = match &params.q {
        Some(c) => vec![(c.clone(), p.coarsen(c)?)],
        None => coarsening_candidates(p, r_f, h_xi_f)?,
    };
    if candidates.is_empty() {
        return Err(Error::Capacity("no coarsening q of p has r·H(q) above H(ξ|F)".into()));
    }
    let heights: Vec<usize> = match params.m {
        Some(m) => vec![m],
        None => (1..=n_pts).filter(|m| n_pts % m == 0).collect(),
    };

    let mut scan = Vec::new();
    let mut found = None;
    'search: for (qc, q) in &candidates {
        let targets_ok = q.exact().expect("exact").iter().all(|w| target_count(n_pts, &r, w).is_ok());
        for &m in &heights {
            let Some(tower_eps) = min_tower_eps(m, 0, n_fine) else {
                continue;
            };
            let mut row = ScanRow {
                q_blocks: describe(qc.blocks()),
                m,
                tower_eps,
                n: None,
                k: None,
                eps: None,
                delta: None,
                outcome: String::new(),
            };
            if !targets_ok {
                row.outcome = "N·r·q_t not integral".into();
                scan.push(row);
                break;
            }
            let attempt = (|| -> Result<(RecodePlan, TowerAudit)> {
                let params_t = TowerParams { eps: tower_eps, n_min: 0, m: Some(m) };
                let tower = build_tower(sys, std::slice::from_ref(&fine), &params_t)?;
                let audit = tower.audit(sys)?;
                if !audit.passed() {
                    return Err(Error::Invariant(format!("tower audit failed: {audit:?}")));
                }
                let n = tower.n;
                row.n = Some(n);
                let k = (&r * BigRational::from_integer(n.into())).floor().to_integer();
                let k: usize = k.try_into().map_err(|_| Error::InvalidParameter("k overflow".into()))?;
                row.k = Some(k);
                if k == 0 {
                    return Err(Error::InvalidParameter("⌊r·n⌋ = 0".into()));
                }
                let eps = params.eps.unwrap_or_else(|| name_deviation(&tower.classes, &[&fine, &beta]));
                row.eps = Some(eps);
                let delta = params.delta.unwrap_or_else(|| (1.0 / (r_f * k as f64)).max(eps / r_f) * DELTA_MARGIN);
                row.delta = Some(delta);
                let budget = PackingBudget::new(delta, r.clone(), n, q.len())?;
                let codebook = build_injections(&xi_pv, &pi, q, &budget, eps)?;
                let plan = encode_names(tower, &fine, &beta, codebook, &params.reserved, delta, eps)?;
                Ok((plan, audit))
            })();
            match attempt {
                Ok(done) => {
                    row.outcome = "ok".into();
                    scan.push(row);
                    found = Some((qc.clone(), q.clone(), done));
                    break 'search;
                }
                Err(e) => {
                    row.outcome = e.to_string();
                    scan.push(row);
                }
            }
        }
    }
    let Some((q_of_p, q, (plan, tower_audit))) = found else {
        let last = scan.last().map_or("no admissible column height".into(), |r| r.outcome.clone());
        return Err(Error::Capacity(format!("feasibility scan found no parameters; last: {last}")));
    };

    let synthesis = synthesize_prepartition(&plan, n_pts, &q, &r)?;
    let alpha = refine_to_p(&synthesis.cells, p, &q_of_p, &r)?;
    let q_assign = q_of_p.assignment();
    if alpha.iter().zip(&synthesis.cells).any(|(a, c)| a.map(|i| q_assign[i]) != *c) {
        return Err(Error::Invariant("refinement does not coarsen back".into()));
    }
    let mut cell_counts = vec![0usize; p.len()];
    for i in alpha.iter().flatten() {
        cell_counts[*i] += 1;
    }
    let mut masses_exact = true;
    for (c, wt) in cell_counts.iter().zip(p.exact().expect("exact")) {
        masses_exact &= *c == target_count(n_pts, &r, wt)?;
    }

    let radius = 10.0 * plan.delta * q.len() as f64;
    let mut outcome = RecodeOutcome {
        alpha,
        synthesis,
        plan,
        beta,
        fine_to_xi,
        q_of_p,
        certificate: Certificate {
            mode: "assisted decode".into(),
            points: n_pts,
            r: r.to_string(),
            p: p.to_strings(),
            q: q.to_strings(),
            q_blocks: Vec::new(),
            h_xi_given_f: h_xi_f,
            r_h_p,
            r_h_q: r_f * q.entropy(),
            m: 0,
            tower_eps: 0.0,
            n: 0,
            k: 0,
            classes: 0,
            eps: 0.0,
            delta: 0.0,
            radius,
            scan,
            chain: Vec::new(),
            tower: tower_audit,
            cell_counts,
            masses_exact,
            max_name_distance: 0.0,
            distance_bound: radius,
            max_reserved: 0,
            max_removed: 0,
            decode_exact: false,
            algebra_refines: false,
            passed: false,
        },
    };

    let decoded = outcome.decode_cells(&outcome.synthesis.cells);
    let plan = &outcome.plan;
    let tower = &plan.tower;
    let theta: Vec<usize> = tower.theta.map().iter().map(|m| m.expect("tower map is total")).collect();
    let none = outcome.q_of_p.len();
    let alpha_labels: Vec<usize> = outcome.alpha.iter().map(|a| a.unwrap_or(none)).collect();
    let y_ind = partition::indicator(n_pts, &tower.transversal)?;
    let orbit_alg = generated_algebra_by(n_pts, &[theta], &[&alpha_labels, &outcome.beta, &y_ind])?;

    let cert = &mut outcome.certificate;
    cert.q_blocks = describe(outcome.q_of_p.blocks());
    cert.m = tower.m;
    cert.tower_eps = tower.eps;
    cert.n = tower.n;
    cert.k = plan.k();
    cert.classes = tower.transversal.len();
    cert.eps = plan.eps;
    cert.delta = plan.delta;
    cert.chain = plan.codebook.chain.clone();
    cert.max_name_distance = max_name_distance(plan, &outcome.synthesis.cells);
    cert.max_reserved = plan.entries.iter().map(|e| e.reserved.len()).max().unwrap_or(0);
    cert.max_removed = plan.entries.iter().map(|e| e.removed.len()).max().unwrap_or(0);
    cert.decode_exact = decoded.as_deref() == Ok(xi);
    cert.algebra_refines = partition::refines(&orbit_alg, xi)?;
    cert.passed = cert.decode_exact
        && cert.masses_exact
        && cert.algebra_refines
        && cert.max_name_distance < cert.distance_bound
        && cert.tower.passed()
        && cert.chain.iter().all(|c| !c.gating || c.holds);
    Ok(outcome)
}
