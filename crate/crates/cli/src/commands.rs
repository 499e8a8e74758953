use std::path::PathBuf;

use fingen::partition;
use fingen::probvec::{parse_rational, ratcomb_decompose, Coarsening, ProbVec};
use fingen::recoder::{
    brute_force_generator_search, krieger_recode, reduce_alphabet, subadditivity_check, RecodeParams,
};
use fingen::system::{build_tower, GAlgebra, TowerParams};
use fingen::typical::{build_injections, dbar, enumerate_typical, typical_window, PackingBudget, TypicalSpec};
use fingen::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{LabelRule, LabelSpec, SystemSpec};
use crate::CliError;

pub struct Ctx {
    pub seed: u64,
    pub base: Option<PathBuf>,
    pub max_points: usize,
}

impl Ctx {
    /// Independent stream for instance `id`.
    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }
}

pub struct Report {
    pub body: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub ok: bool,
}

fn fmt(x: f64) -> String {
    format!("{x:.12}")
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn random_rational_vec(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<String> {
    loop {
        let len = rng.gen_range(1..=max_len);
        let raw: Vec<u64> = (0..len).map(|_| rng.gen_range(0..10)).collect();
        let total: u64 = raw.iter().sum();
        if total > 0 {
            return raw.iter().map(|x| format!("{x}/{total}")).collect();
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountConfig {
    pub seed: Option<u64>,
    pub q: Vec<String>,
    pub eps: f64,
    pub delta: f64,
    pub n_from: usize,
    pub n_to: usize,
    /// Extra random `q` vectors drawn from the seed.
    pub random: usize,
}

impl Default for CountConfig {
    fn default() -> Self {
        CountConfig {
            seed: None,
            q: vec!["1/2".into(), "1/2".into()],
            eps: 0.05,
            delta: 0.2,
            n_from: 10,
            n_to: 60,
            random: 0,
        }
    }
}

pub fn count(cfg: &CountConfig, ctx: &Ctx) -> Result<Report, CliError> {
    if cfg.n_from == 0 || cfg.n_from > cfg.n_to {
        return Err(CliError::Usage(format!("bad n range {}..={}", cfg.n_from, cfg.n_to)));
    }
    let mut qs = vec![cfg.q.clone()];
    for i in 0..cfg.random {
        qs.push(random_rational_vec(&mut ctx.stream(i as u64 + 1), 3));
    }
    let mut rows = Vec::new();
    let mut windows = Vec::new();
    let mut ok = true;
    for (id, q) in qs.iter().enumerate() {
        let pv = ProbVec::parse(q)?;
        for n in cfg.n_from..=cfg.n_to {
            let w = typical_window(&pv, cfg.delta, cfg.eps, n)?;
            ok &= w.holds;
            rows.push(vec![
                id.to_string(),
                join(q),
                n.to_string(),
                cfg.eps.to_string(),
                cfg.delta.to_string(),
                w.count.to_string(),
                fmt(w.log_lower),
                fmt(w.log_count),
                fmt(w.log_upper),
                w.holds.to_string(),
            ]);
            windows.push(json!({"instance": id, "q": q, "window": to_value(&w)}));
        }
    }
    Ok(Report {
        body: json!({"config": to_value(cfg), "rows": windows}),
        header: vec!["instance", "q", "n", "eps", "delta", "count", "log_lower", "log_count", "log_upper", "holds"],
        rows,
        ok,
    })
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    pub seed: Option<u64>,
    pub a: Vec<String>,
    pub eps: f64,
    pub random: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig { seed: None, a: vec!["1/3".into(), "2/3".into()], eps: 0.4, random: 0 }
    }
}

pub fn decompose(cfg: &DecomposeConfig, ctx: &Ctx) -> Result<Report, CliError> {
    let mut vecs = vec![cfg.a.clone()];
    for i in 0..cfg.random {
        vecs.push(random_rational_vec(&mut ctx.stream(i as u64 + 1), 5));
    }
    let mut rows = Vec::new();
    let mut out = Vec::new();
    let mut ok = true;
    for (id, a) in vecs.iter().enumerate() {
        let pv = ProbVec::parse(a)?;
        let d = ratcomb_decompose(&pv, cfg.eps)?;
        let exact = pv.exact().ok_or(Error::NotExact)?;
        let identity = d.reconstruct() == exact;
        let max_dev = d
            .vectors
            .iter()
            .flat_map(|v| v.iter().zip(exact).map(|(x, y)| fingen::probvec::rational_to_f64(&(x - y)).abs()))
            .fold(0.0, f64::max);
        ok &= identity && max_dev < cfg.eps;
        for (j, (c, v)) in d.mixing.iter().zip(&d.vectors).enumerate() {
            rows.push(vec![
                id.to_string(),
                join(a),
                cfg.eps.to_string(),
                d.n.to_string(),
                j.to_string(),
                c.to_string(),
                join(v),
                identity.to_string(),
            ]);
        }
        out.push(json!({
            "instance": id,
            "a": a,
            "n": d.n,
            "mixing": d.mixing.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "vectors": d.vectors.iter().map(|v| v.iter().map(ToString::to_string).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "identity": identity,
            "max_deviation": max_dev,
        }));
    }
    Ok(Report {
        body: json!({"config": to_value(cfg), "decompositions": out}),
        header: vec!["instance", "a", "eps", "n", "j", "c_j", "r_j", "identity"],
        rows,
        ok,
    })
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookConfig {
    pub seed: Option<u64>,
    pub xi: Vec<String>,
    pub pi: Vec<Vec<usize>>,
    pub q: Vec<String>,
    pub r: String,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    /// Typical β-names whose fibers are listed.
    pub max_names: usize,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig {
            seed: None,
            xi: vec!["2/5".into(), "1/10".into(), "2/5".into(), "1/10".into()],
            pi: vec![vec![0, 1], vec![2, 3]],
            q: vec!["1/2".into(), "1/2".into()],
            r: "1".into(),
            n: 10,
            eps: 0.0,
            delta: 0.002,
            max_names: 4,
        }
    }
}

pub fn codebook(cfg: &CodebookConfig, _ctx: &Ctx) -> Result<Report, CliError> {
    let xi = ProbVec::parse(&cfg.xi)?;
    let pi = Coarsening::new(cfg.pi.clone(), xi.len())?;
    let q = ProbVec::parse(&cfg.q)?;
    let budget = PackingBudget::new(cfg.delta, parse_rational(&cfg.r)?, cfg.n, q.len())?;
    let book = build_injections(&xi, &pi, &q, &budget, cfg.eps)?;
    let beta = xi.coarsen(&pi)?;
    let names: Vec<_> =
        enumerate_typical(&TypicalSpec::new(beta, cfg.eps, cfg.n)?)?.into_iter().take(cfg.max_names).collect();
    let k_spec = TypicalSpec::new(q.clone(), cfg.eps, book.k())?;
    let xi_spec = TypicalSpec::new(xi.clone(), cfg.eps, cfg.n)?;
    let mut rows = Vec::new();
    let mut injective = true;
    let mut typical = true;
    let mut separated = true;
    for b in &names {
        let entries = book.entries(b)?;
        for (i, (c, code)) in entries.iter().enumerate() {
            typical &= k_spec.is_typical(code)? && xi_spec.is_typical(c)?;
            injective &= book.invert(b, code)?.as_ref() == Some(c);
            for (_, other) in &entries[i + 1..] {
                separated &= dbar(code, other)? > budget.rho;
            }
            rows.push(vec![join(b), join(c), join(code)]);
        }
    }
    let ok = injective && typical && separated && book.chain.iter().all(|c| !c.gating || c.holds);
    Ok(Report {
        body: json!({
            "config": to_value(cfg),
            "budget": to_value(&book.budget),
            "k": book.k(),
            "packing_size": book.packing.len(),
            "maximal_packing": book.maximal,
            "max_fiber": book.max_fiber.to_string(),
            "chain": to_value(&book.chain),
            "checks": {"injective": injective, "typical": typical, "separated": separated},
            "fibers": book.to_json(&names)?,
        }),
        header: vec!["b", "c", "code"],
        rows,
        ok,
    })
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TowerConfig {
    pub seed: Option<u64>,
    pub system: SystemSpec,
    pub labelings: Vec<LabelSpec>,
    pub eps: f64,
    pub n_min: usize,
    pub m: Option<usize>,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig {
            seed: None,
            system: SystemSpec::Cyclic(120),
            labelings: vec![LabelSpec::Rule(LabelRule::Marks { period: 11, marks: vec![0, 3, 5, 7] })],
            eps: 0.9,
            n_min: 0,
            m: Some(60),
        }
    }
}

pub fn tower(cfg: &TowerConfig, ctx: &Ctx) -> Result<Report, CliError> {
    let sys = cfg.system.build(ctx.base.as_deref(), ctx.max_points)?;
    let mut rng = ctx.stream(0);
    let family =
        cfg.labelings.iter().map(|l| l.build(sys.n(), ctx.base.as_deref(), &mut rng)).collect::<Result<Vec<_>, _>>()?;
    let params = TowerParams { eps: cfg.eps, n_min: cfg.n_min, m: cfg.m };
    let t = build_tower(&sys, &family, &params)?;
    let audit = t.audit(&sys)?;
    let row = vec![
        sys.n().to_string(),
        t.m.to_string(),
        t.k.to_string(),
        t.n.to_string(),
        t.ell.to_string(),
        t.eps.to_string(),
        t.s1.len().to_string(),
        t.s2.len().to_string(),
        fmt(audit.side_weight),
        fmt(audit.max_deviation),
        audit.decode_ok.to_string(),
        audit.expressible.to_string(),
        audit.passed().to_string(),
    ];
    Ok(Report {
        body: json!({
            "config": to_value(cfg),
            "system": sys.to_json(),
            "labelings": family,
            "tower": t.to_json(),
            "audit": to_value(&audit),
            "passed": audit.passed(),
        }),
        header: vec![
            "points",
            "m",
            "k",
            "n",
            "ell",
            "eps",
            "s1",
            "s2",
            "side_weight",
            "max_deviation",
            "decode_ok",
            "expressible",
            "passed",
        ],
        rows: vec![row],
        ok: audit.passed(),
    })
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceConfig {
    pub seed: Option<u64>,
    pub system: SystemSpec,
    pub xi: LabelSpec,
    pub f: LabelSpec,
    pub eps: f64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        // cell sizes 20, 6, 3, 2 and five singletons, spread around the circle
        let sizes = [20, 6, 3, 2, 1, 1, 1, 1, 1];
        let flat: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
        let mut xi = vec![0; 36];
        for (i, &c) in flat.iter().enumerate() {
            xi[(i * 5) % 36] = c;
        }
        ReduceConfig {
            seed: None,
            system: SystemSpec::Cyclic(36),
            xi: LabelSpec::Explicit(xi),
            f: LabelSpec::Rule(LabelRule::Mod(1)),
            eps: 0.5,
        }
    }
}

pub fn reduce(cfg: &ReduceConfig, ctx: &Ctx) -> Result<Report, CliError> {
    let sys = cfg.system.build(ctx.base.as_deref(), ctx.max_points)?;
    let mut rng = ctx.stream(0);
    let xi = cfg.xi.build(sys.n(), ctx.base.as_deref(), &mut rng)?;
    let f = GAlgebra::new(&sys, &cfg.f.build(sys.n(), ctx.base.as_deref(), &mut rng)?)?;
    let red = reduce_alphabet(&sys, &xi, &f, cfg.eps)?;
    let r = &red.report;
    let row = vec![
        sys.n().to_string(),
        r.eps.to_string(),
        fmt(r.delta),
        r.cutoff.to_string(),
        r.xi_cells.to_string(),
        r.gamma_cells.to_string(),
        r.alpha_cells.to_string(),
        fmt(r.h_xi),
        fmt(r.h_alpha),
        r.algebra_equal.to_string(),
        r.entropy_ok.to_string(),
        r.passed().to_string(),
    ];
    Ok(Report {
        body: json!({
            "config": to_value(cfg),
            "system": sys.to_json(),
            "xi": xi,
            "f": f.labels(),
            "alpha": red.alpha,
            "relocations": red.relocations.len(),
            "report": to_value(r),
            "passed": r.passed(),
        }),
        header: vec![
            "points",
            "eps",
            "delta",
            "cutoff",
            "xi_cells",
            "gamma_cells",
            "alpha_cells",
            "h_xi",
            "h_alpha",
            "algebra_equal",
            "entropy_ok",
            "passed",
        ],
        rows: vec![row],
        ok: r.passed(),
    })
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecodeConfig {
    pub seed: Option<u64>,
    pub system: SystemSpec,
    pub xi: LabelSpec,
    pub f: LabelSpec,
    pub p: Vec<String>,
    pub r: String,
    /// Blocks of `p` forming the codeword distribution.
    pub q: Option<Vec<Vec<usize>>>,
    pub m: Option<usize>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub reserved: Vec<usize>,
    /// Erase labels past the decoding radius on one class and expect a decode error.
    pub fault: bool,
}

impl Default for RecodeConfig {
    fn default() -> Self {
        RecodeConfig {
            seed: None,
            system: SystemSpec::Cyclic(200),
            xi: LabelSpec::Rule(LabelRule::Marks { period: 100, marks: vec![0] }),
            f: LabelSpec::Rule(LabelRule::Mod(5)),
            p: vec!["1/2".into(), "1/2".into()],
            r: "1".into(),
            q: None,
            m: None,
            delta: None,
            eps: None,
            reserved: Vec::new(),
            fault: true,
        }
    }
}

pub fn recode(cfg: &RecodeConfig, ctx: &Ctx) -> Result<Report, CliError> {
    let sys = cfg.system.build(ctx.base.as_deref(), ctx.max_points)?;
    let mut rng = ctx.stream(0);
    let xi = cfg.xi.build(sys.n(), ctx.base.as_deref(), &mut rng)?;
    let f = GAlgebra::new(&sys, &cfg.f.build(sys.n(), ctx.base.as_deref(), &mut rng)?)?;
    let p = ProbVec::parse(&cfg.p)?;
    let mut params = RecodeParams::new(p.clone(), parse_rational(&cfg.r)?);
    params.q = cfg.q.as_ref().map(|b| Coarsening::new(b.clone(), p.len())).transpose()?;
    params.m = cfg.m;
    params.delta = cfg.delta;
    params.eps = cfg.eps;
    params.reserved = cfg.reserved.clone();
    let out = krieger_recode(&sys, &xi, &f, &params)?;
    let cert = &out.certificate;
    let fault = if cfg.fault {
        let err = out.inject_fault(0)?;
        Some(json!({
            "class": 0,
            "raised": matches!(err, Some(Error::Decode { .. })),
            "error": err.map(|e| e.to_string()),
        }))
    } else {
        None
    };
    let fault_ok = fault.as_ref().is_none_or(|v| v["raised"] == json!(true));
    let ok = cert.passed && fault_ok;
    let alpha: Vec<Value> = out.alpha.iter().map(|a| a.map_or(Value::Null, |i| json!(i))).collect();
    let row = vec![
        sys.n().to_string(),
        cert.r.clone(),
        join(&cert.p),
        join(&cert.q),
        cert.m.to_string(),
        cert.n.to_string(),
        cert.k.to_string(),
        cert.eps.to_string(),
        cert.delta.to_string(),
        fmt(cert.h_xi_given_f),
        fmt(cert.r_h_p),
        fmt(cert.max_name_distance),
        join(&cert.cell_counts),
        cert.masses_exact.to_string(),
        cert.decode_exact.to_string(),
        cert.algebra_refines.to_string(),
        fault_ok.to_string(),
        ok.to_string(),
    ];
    Ok(Report {
        body: json!({
            "config": to_value(cfg),
            "system": sys.to_json(),
            "certificate": to_value(cert),
            "fault_injection": fault,
            "alpha": alpha,
            "passed": ok,
        }),
        header: vec![
            "points",
            "r",
            "p",
            "q",
            "m",
            "n",
            "k",
            "eps",
            "delta",
            "h_xi_given_f",
            "r_h_p",
            "max_name_distance",
            "cell_counts",
            "masses_exact",
            "decode_exact",
            "algebra_refines",
            "fault_raised",
            "passed",
        ],
        rows: vec![row],
        ok,
    })
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub seed: Option<u64>,
    pub system: SystemSpec,
    pub k_max: usize,
    /// Invariant labeling for the factor and relative searches.
    pub factor: Option<LabelSpec>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { seed: None, system: SystemSpec::Cyclic(4), k_max: 4, factor: None }
    }
}

pub fn oracle(cfg: &OracleConfig, ctx: &Ctx) -> Result<Report, CliError> {
    let sys = cfg.system.build(ctx.base.as_deref(), ctx.max_points)?;
    let res = brute_force_generator_search(&sys, cfg.k_max)?;
    let mut rows = vec![vec![
        "whole".to_string(),
        sys.n().to_string(),
        fmt(res.min_entropy),
        serde_json::to_string(&res.witness).expect("serializable"),
    ]];
    let mut body = json!({
        "config": to_value(cfg),
        "system": sys.to_json(),
        "result": to_value(&res),
    });
    if let Some(spec) = &cfg.factor {
        let mut rng = ctx.stream(0);
        let f = GAlgebra::new(&sys, &spec.build(sys.n(), ctx.base.as_deref(), &mut rng)?)?;
        let rep = subadditivity_check(&sys, &f, cfg.k_max)?;
        for (label, r) in [("factor", &rep.factor), ("relative", &rep.relative)] {
            rows.push(vec![
                label.to_string(),
                r.points.to_string(),
                fmt(r.min_entropy),
                serde_json::to_string(&r.witness).expect("serializable"),
            ]);
        }
        body["subadditivity"] = json!({
            "f": partition::normalize(f.labels()),
            "factor": to_value(&rep.factor),
            "relative": to_value(&rep.relative),
            "gap": rep.gap,
            "holds": rep.holds,
        });
    }
    // the subadditivity comparison is exploratory and never fails the run
    Ok(Report { body, header: vec!["search", "points", "min_entropy", "witness"], rows, ok: true })
}
