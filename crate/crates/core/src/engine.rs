//! Runs the checks of a spec document and compares their outputs with the
//! expected values, producing a report and a per-state table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::aggregation::{
    conglomerability_verdict, finite_d_analysis, grid_over, ltp_verdict, propriety_of_infinite_sum,
    range_hull, rival_probe, similarity_failure_analysis, theorem4_agreement, thm1_condition_check,
    thm2_rival_construction, thm3_no_dominance_probe, ProbeConfig, RivalKind, Thm2Construction,
};
use crate::charges::Rv;
use crate::coherence::{
    abstain_dominance, brier_projection_rival, dominance_verdict, improvement,
    incoherence1_certificate, Dominance,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::num::Num;
use crate::scoring::{
    check_uniform_similarity, check_uniform_spread, expected_score, log_score_demo,
    propriety_probe, LogMean,
};
use crate::seq::{Bound, Seq};
use crate::specfile::{CellSetup, Check, CheckSpec, Expected, Model, SpecError, SpecFile};
use crate::system::{Forecasts, System};

pub const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Indices per column shown in tables and scanned by case analyses.
    pub depth: u64,
    pub mode: Mode,
    /// Spacing of the rival grid.
    pub grid: Num,
    /// Factor shrinking the construction's margin, in (0, 1).
    pub safety: Num,
    pub max_candidates: usize,
    pub exec: Exec,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            depth: 64,
            mode: Mode::Exact,
            grid: Num::ratio(1, 16),
            safety: Num::ratio(9, 10),
            max_candidates: 1024,
            exec: Exec::default(),
        }
    }
}

/// A value a check produced.
#[derive(Clone, Debug, PartialEq)]
pub enum Output {
    Num(Num),
    Seq(Seq),
    Bool(bool),
    Text(String),
    Rv(Rv),
    Nums(Vec<Num>),
}

impl From<Num> for Output {
    fn from(v: Num) -> Self {
        Output::Num(v)
    }
}

impl From<bool> for Output {
    fn from(v: bool) -> Self {
        Output::Bool(v)
    }
}

impl From<usize> for Output {
    fn from(v: usize) -> Self {
        Output::Num(Num::int(v as i64))
    }
}

impl From<Bound> for Output {
    fn from(b: Bound) -> Self {
        match b {
            Bound::Finite(v) => Output::Num(v),
            Bound::PosInf => Output::Text("+inf".into()),
            Bound::NegInf => Output::Text("-inf".into()),
        }
    }
}

impl From<&str> for Output {
    fn from(v: &str) -> Self {
        Output::Text(v.into())
    }
}

pub fn render_num(n: &Num) -> Value {
    match n {
        Num::Exact(_) => json!({ "exact": n.to_string(), "decimal": n.to_decimal_string() }),
        Num::Approx(v) => json!({ "approx": format!("{v:e}") }),
    }
}

fn render(o: &Output) -> Value {
    match o {
        Output::Num(n) => render_num(n),
        Output::Seq(s) => json!({ "sequence": s.to_string() }),
        Output::Bool(b) => json!(b),
        Output::Text(t) => json!(t),
        Output::Rv(r) => {
            json!({ "columns": r.cols().iter().map(|c| c.to_string()).collect::<Vec<_>>() })
        }
        Output::Nums(v) => Value::Array(v.iter().map(render_num).collect()),
    }
}

fn render_expected(e: &Expected) -> Value {
    match e {
        Expected::Bool(b) => json!(b),
        Expected::Text(t) => json!(t),
        Expected::Value(s) => match s.as_constant() {
            Some(c) => render_num(&c),
            None => json!({ "sequence": s.to_string() }),
        },
    }
}

fn num_matches(a: &Num, b: &Num, mode: Mode) -> bool {
    match mode {
        Mode::Exact => a.is_exact() && a == b,
        Mode::Float => a.close_to(b, FLOAT_TOLERANCE),
    }
}

fn seq_matches(a: &Seq, b: &Seq, mode: Mode, depth: u64) -> bool {
    match mode {
        Mode::Exact => a.is_exact() && a == b,
        Mode::Float => {
            let last = a.last_exception().max(b.last_exception()).max(depth) + 1;
            (1..=last).all(|j| num_matches(&a.at(j), &b.at(j), mode))
                && match (a.limit(), b.limit()) {
                    (Some(x), Some(y)) => num_matches(&x, &y, mode),
                    (None, None) => true,
                    _ => false,
                }
        }
    }
}

fn matches(actual: &Output, expected: &Expected, mode: Mode, depth: u64) -> bool {
    match (actual, expected) {
        (Output::Bool(a), Expected::Bool(b)) => a == b,
        (Output::Text(a), Expected::Text(b)) => a == b,
        (Output::Num(a), Expected::Value(s)) => {
            s.as_constant().is_some_and(|c| num_matches(a, &c, mode))
        }
        (Output::Seq(a), Expected::Value(s)) => seq_matches(a, s, mode, depth),
        (Output::Rv(r), Expected::Value(s)) => {
            r.cols().iter().all(|c| seq_matches(c, s, mode, depth))
        }
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationResult {
    pub key: String,
    pub basis: &'static str,
    pub expected: Value,
    pub actual: Value,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub kind: &'static str,
    pub outputs: BTreeMap<String, Value>,
    pub expectations: Vec<ExpectationResult>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub title: String,
    pub mode: &'static str,
    pub depth: u64,
    pub checks: Vec<CheckReport>,
    pub passed: usize,
    pub failed: usize,
    pub result: &'static str,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn check(&self, id: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// A finished run: the report plus every per-state quantity produced.
#[derive(Clone, Debug)]
pub struct Run {
    pub report: Report,
    pub outputs: Vec<(String, BTreeMap<String, Output>)>,
    pub columns: usize,
    pub depth: u64,
}

impl Run {
    /// One row per state up to the depth, then a tail row per column with
    /// the eventual values.
    pub fn csv(&self) -> String {
        let tracked: Vec<(String, &Rv)> = self
            .outputs
            .iter()
            .flat_map(|(id, outs)| {
                outs.iter().filter_map(move |(k, o)| match o {
                    Output::Rv(r) => Some((format!("{id}.{k}"), r)),
                    _ => None,
                })
            })
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["column".to_string(), "index".into(), "state".into()];
        header.extend(tracked.iter().map(|(name, _)| name.clone()));
        w.write_record(&header).expect("in-memory write");
        for k in 0..self.columns {
            let col = (k + 1).to_string();
            for j in 1..=self.depth {
                let mut row = vec![col.clone(), j.to_string(), format!("({col},{j})")];
                row.extend(tracked.iter().map(|(_, r)| r.at((k, j)).to_string()));
                w.write_record(&row).expect("in-memory write");
            }
            let mut row = vec![col.clone(), "tail".into(), format!("({col},tail)")];
            row.extend(tracked.iter().map(|(_, r)| {
                r.col(k)
                    .limit()
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "diverges".into())
            }));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

type Outputs = BTreeMap<String, Output>;

struct Ctx<'a> {
    model: &'a Model,
    opts: &'a RunOptions,
}

fn put(out: &mut Outputs, key: &str, v: impl Into<Output>) {
    out.insert(key.to_string(), v.into());
}

fn constant_of(r: &Rv) -> Option<Num> {
    let first = r.col(0).as_constant()?;
    r.cols()
        .iter()
        .all(|c| c.as_constant().as_ref() == Some(&first))
        .then_some(first)
}

fn put_total(out: &mut Outputs, key: &str, r: Rv) -> Result<()> {
    if let Some(c) = constant_of(&r) {
        put(out, &format!("{key}_constant"), c);
    }
    for (k, c) in r.cols().iter().enumerate() {
        out.insert(format!("{key}_column{}", k + 1), Output::Seq(c.clone()));
    }
    put(out, &format!("{key}_inf"), r.infimum()?.value);
    put(out, &format!("{key}_sup"), r.supremum()?.value);
    out.insert(key.into(), Output::Rv(r));
    Ok(())
}

impl Ctx<'_> {
    fn probe_config(&self, lo: &Num, hi: &Num, prefix: usize) -> Result<ProbeConfig> {
        let mut cfg = ProbeConfig::new(grid_over(lo, hi, &self.opts.grid)?);
        cfg.prefix = prefix;
        cfg.max_candidates = self.opts.max_candidates;
        Ok(cfg)
    }

    fn system_config(&self, sys: &System, prefix: usize) -> Result<ProbeConfig> {
        let (lo, hi) = range_hull(sys)?;
        self.probe_config(&lo.to_exact(), &hi.to_exact(), prefix)
    }

    fn variable_config(&self, x: &Rv, prefix: usize) -> Result<ProbeConfig> {
        let lo = match x.infimum()?.value {
            Bound::Finite(v) => v,
            _ => return Err(Error::Invalid("variable is unbounded below".into())),
        };
        let hi = match x.supremum()?.value {
            Bound::Finite(v) => v,
            _ => return Err(Error::Invalid("variable is unbounded above".into())),
        };
        self.probe_config(&lo.to_exact(), &hi.to_exact(), prefix)
    }

    fn construction(&self, s: &CellSetup) -> Result<Thm2Construction> {
        let m = self.model;
        thm2_rival_construction(
            &m.charge,
            m.variable(&s.variable)?,
            m.partition(&s.partition)?,
            &m.single_rule(&s.rule)?,
            m.rule(&s.cells)?,
            &self.opts.safety,
        )
    }

    fn run(&self, check: &Check) -> Result<Outputs> {
        let m = self.model;
        let p = &m.charge;
        let exec = self.opts.exec;
        let mut out = Outputs::new();
        match check {
            Check::EventProbability { event } => {
                put(&mut out, "value", p.event_probability(m.event(event)?)?)
            }
            Check::Prevision { variable } => {
                put(&mut out, "value", p.prevision(m.variable(variable)?)?)
            }
            Check::ConditionalPrevision { variable, given } => put(
                &mut out,
                "value",
                p.conditional_prevision(m.variable(variable)?, m.event(given)?, None)?,
            ),
            Check::ExpectedScore {
                variable,
                rule,
                forecast,
            } => put(
                &mut out,
                "value",
                expected_score(p, m.variable(variable)?, &m.single_rule(rule)?, forecast)?,
            ),
            Check::ProprietyProbe {
                variable,
                rule,
                grid,
            } => {
                let r = propriety_probe(&m.single_rule(rule)?, p, m.variable(variable)?, grid)?;
                put(&mut out, "prevision", r.prevision);
                put(&mut out, "argmin", r.argmin);
                put(&mut out, "minimum", r.minimum);
                if let Some(g) = r.margin {
                    put(&mut out, "margin", g);
                }
                put(&mut out, "pass", r.pass);
            }
            Check::Conglomerability {
                variable,
                partition,
            } => {
                let v =
                    conglomerability_verdict(p, m.variable(variable)?, m.partition(partition)?)?;
                put(&mut out, "prevision", v.prevision);
                put(&mut out, "inf", v.inf);
                put(&mut out, "sup", v.sup);
                put(&mut out, "conglomerable", v.violation.is_none());
                if let Some((gap, side)) = v.violation {
                    put(&mut out, "gap", gap);
                    put(&mut out, "side", side.as_str());
                }
            }
            Check::TotalPrevisions {
                variable,
                partition,
            } => {
                let v = ltp_verdict(p, m.variable(variable)?, m.partition(partition)?)?;
                put(&mut out, "holds", v.holds());
                put(&mut out, "prevision", v.prevision);
                put(&mut out, "of_conditionals", v.of_conditionals);
            }
            Check::Agreement {
                variable,
                partition,
            } => {
                let a = theorem4_agreement(p, m.variable(variable)?, m.partition(partition)?)?;
                put(&mut out, "conglomerable", a.conglomerable);
                put(&mut out, "total_previsions", a.total_previsions);
                put(&mut out, "agrees", a.agrees());
            }
            Check::Combined {
                system,
                quantity,
                rival,
            } => {
                let mut sys = m.system(system)?.clone();
                if let Some(f) = rival {
                    sys = sys.with_forecasts(f)?;
                }
                let total = sys.total(*quantity)?;
                put(&mut out, "prevision", p.prevision(&total)?);
                put_total(&mut out, "total", total)?;
            }
            Check::Abstain { system } => {
                let loss = m.system(system)?.combined_fair_loss()?;
                let eps = abstain_dominance(&loss)?;
                put(&mut out, "dominated", eps.is_some());
                if let Some(e) = eps {
                    put(&mut out, "epsilon", e);
                }
                put_total(&mut out, "loss", loss)?;
            }
            Check::Dominance { system, rival } => {
                let sys = m.system(system)?;
                let a = sys.combined_score()?;
                let b = sys.with_forecasts(rival)?.combined_score()?;
                let verdict = dominance_verdict(&a, &b)?;
                put(&mut out, "verdict", verdict.as_str());
                if let Dominance::UniformStrict(e) = &verdict {
                    put(&mut out, "epsilon", e.clone());
                }
                put_total(&mut out, "difference", a.sub(&b))?;
                put_total(&mut out, "original", a)?;
                put_total(&mut out, "rival", b)?;
            }
            Check::Spread { rules, eps } => {
                let rs = rules
                    .iter()
                    .map(|r| Ok((r.clone(), m.any_rule(r)?)))
                    .collect::<Result<Vec<_>>>()?;
                let r = check_uniform_spread(&rs, eps)?;
                put(&mut out, "verdict", r.verdict.as_str());
                if let Some(d) = r.delta {
                    put(&mut out, "delta", d);
                }
                if let Some(u) = r.density_bound {
                    put(&mut out, "density_bound", u);
                }
                put(&mut out, "witnesses", r.witnesses.len());
                if let Some(w) = r.witnesses.first() {
                    put(&mut out, "witness_rule", w.rule.as_str());
                    put(&mut out, "witness_a", w.a.clone());
                    put(&mut out, "witness_b", w.b.clone());
                    put(&mut out, "witness_mass", w.mass.clone());
                    put(&mut out, "witness_barycenter", w.barycenter.clone());
                }
            }
            Check::Similarity {
                rules,
                reference,
                eps,
            } => {
                let rs = rules
                    .iter()
                    .map(|r| Ok((r.clone(), m.any_rule(r)?)))
                    .collect::<Result<Vec<_>>>()?;
                let r = check_uniform_similarity(&rs, &m.single_rule(reference)?, eps)?;
                put(&mut out, "verdict", r.verdict.as_str());
                if let Some(g) = r.gamma {
                    put(&mut out, "gamma", g);
                }
                if let Some(w) = r.witness {
                    put(&mut out, "witness_rule", w.rule.as_str());
                    put(&mut out, "witness_a", w.a);
                    put(&mut out, "witness_b", w.b);
                    put(&mut out, "witness_reference_mass", w.reference_mass);
                    put(&mut out, "witness_infimum_mass", w.infimum_mass);
                }
            }
            Check::LogScore { c1, c2, q } => match log_score_demo(c1, c2, q)? {
                LogMean::Infinite => put(&mut out, "value", "+inf"),
                LogMean::Finite(v) => put(&mut out, "value", v),
            },
            Check::Conditions { system, eps } => {
                let r = thm1_condition_check(p, m.system(system)?, eps)?;
                put(&mut out, "met", r.met());
                put(&mut out, "violations", r.violations.join(",").as_str());
                put(&mut out, "deviation", r.deviation);
                put(&mut out, "score", r.score);
                match r.spread {
                    Some(s) => {
                        put(&mut out, "spread", s.verdict.as_str());
                        if let Some(d) = s.delta {
                            put(&mut out, "spread_delta", d);
                        }
                    }
                    None => put(&mut out, "spread", "satisfied"),
                }
            }
            Check::DominatingRival { setup } => {
                let c = self.construction(setup)?;
                put(&mut out, "side", c.side.as_str());
                put(&mut out, "epsilon", c.epsilon);
                put(&mut out, "w0", c.w0);
                put(&mut out, "w1", c.w1);
                put(&mut out, "q_prime", c.q_prime);
                put(&mut out, "w2", c.w2);
                put(&mut out, "q_x", c.q_x);
                out.insert("q_cells".into(), Output::Seq(c.q_cells));
                put(&mut out, "delta", c.delta);
                put(&mut out, "alpha0", c.alpha0);
                put(&mut out, "alpha_cells", c.alpha_cells);
                put(&mut out, "verified", c.verified);
                put_total(&mut out, "improvement", c.improvement)?;
                put_total(&mut out, "fair_loss", c.fair_loss)?;
            }
            Check::NoDominance { setup, prefix } => {
                let x = m.variable(&setup.variable)?;
                let cfg = self.variable_config(x, *prefix)?;
                let t = thm3_no_dominance_probe(
                    p,
                    x,
                    m.partition(&setup.partition)?,
                    &m.single_rule(&setup.rule)?,
                    m.rule(&setup.cells)?,
                    &cfg,
                    exec,
                )?;
                put(&mut out, "prevision", t.total_previsions.prevision.clone());
                put(
                    &mut out,
                    "of_conditionals",
                    t.total_previsions.of_conditionals.clone(),
                );
                put(&mut out, "fair_zero", t.fair_zero());
                out.insert(
                    "fair_previsions".into(),
                    Output::Nums(t.fair_previsions.clone()),
                );
                probe_outputs(&mut out, &t.probe.outcomes);
            }
            Check::RivalProbe { system, prefix } => {
                let sys = m.system(system)?;
                let cfg = self.system_config(sys, *prefix)?;
                let r = rival_probe(sys, Some(p), &cfg, &[], exec)?;
                probe_outputs(&mut out, &r.outcomes);
            }
            Check::FiniteD { system, prefix } => {
                let sys = m.system(system)?;
                let cfg = self.system_config(sys, *prefix)?;
                let d = finite_d_analysis(sys, &cfg, exec)?;
                put(&mut out, "infinite", d.infinite);
                put(&mut out, "finite", d.finite);
                put(&mut out, "identical", d.identical);
                put(&mut out, "witnessed", d.witnessed);
            }
            Check::SimilarityFailure {
                variable,
                partition,
                prefix,
            } => {
                let x = m.variable(variable)?;
                let cfg = self.variable_config(x, *prefix)?;
                let a = similarity_failure_analysis(
                    p,
                    x,
                    m.partition(partition)?,
                    &cfg,
                    self.opts.depth,
                    exec,
                )?;
                put(&mut out, "rivals_half", a.rivals_half);
                put(&mut out, "identity_holds", a.identity_holds);
                put(&mut out, "rivals_other", a.rivals_other);
                put(&mut out, "bound_holds", a.bound_holds);
                put(&mut out, "dominated", a.dominated);
                let mut text = String::new();
                for (n, (qf, gap, j, col)) in a.thresholds.iter().enumerate() {
                    if n > 0 {
                        text.push_str("; ");
                    }
                    write!(text, "q_F={qf}: delta={gap}, j={j}, column={}", col + 1).unwrap();
                }
                put(&mut out, "thresholds", text.as_str());
            }
            Check::InfiniteSumPropriety {
                system,
                prefix,
                construction,
            } => {
                let sys = m.system(system)?;
                let cfg = self.system_config(sys, *prefix)?;
                let extra: Vec<Forecasts> = match construction {
                    Some(s) => match self.construction(s) {
                        Ok(c) => vec![c.rival()],
                        Err(Error::NotNonconglomerable | Error::SimilarityViolated(_)) => vec![],
                        Err(e) => return Err(e),
                    },
                    None => vec![],
                };
                let r = propriety_of_infinite_sum(p, sys, &cfg, &extra, exec)?;
                put(&mut out, "proper", r.proper());
                put(&mut out, "strict", r.strict);
                put(&mut out, "expected", r.expected);
                put(&mut out, "best_gap", r.best_gap);
                put(&mut out, "candidates", r.candidates);
                if let Some(w) = &r.witness {
                    put(
                        &mut out,
                        "witness_is_construction",
                        extra.first() == Some(w),
                    );
                    put(
                        &mut out,
                        "witness",
                        serde_json::to_string(w)
                            .expect("forecasts serialize")
                            .as_str(),
                    );
                }
            }
            Check::Incoherence { system } => {
                let sys = finite_system(m.system(system)?)?;
                match incoherence1_certificate(sys.entries())? {
                    Some(c) => {
                        put(&mut out, "incoherent", true);
                        put(&mut out, "verified", c.verify(sys.entries())?);
                        put(&mut out, "epsilon", c.epsilon);
                        out.insert("alpha".into(), Output::Nums(c.alpha));
                    }
                    None => put(&mut out, "incoherent", false),
                }
            }
            Check::BrierRival { system } => {
                let sys = finite_system(m.system(system)?)?;
                match brier_projection_rival(sys.entries())? {
                    Some(c) => {
                        put(&mut out, "dominated", true);
                        put(&mut out, "verified", c.verify(sys.entries())?);
                        put(&mut out, "epsilon", c.epsilon.clone());
                        put_total(
                            &mut out,
                            "improvement",
                            improvement(sys.entries(), &c.rival)?,
                        )?;
                        out.insert("rival".into(), Output::Nums(c.rival));
                    }
                    None => put(&mut out, "dominated", false),
                }
            }
        }
        Ok(out)
    }
}

fn finite_system(sys: &System) -> Result<&System> {
    if !sys.families().is_empty() {
        return Err(Error::PreconditionFailed(
            "finite certificates need a system without families".into(),
        ));
    }
    Ok(sys)
}

fn probe_outputs(out: &mut Outputs, outcomes: &[crate::aggregation::RivalOutcome]) {
    let count = |f: &dyn Fn(&RivalKind) -> bool| outcomes.iter().filter(|o| f(&o.kind)).count();
    put(out, "candidates", outcomes.len());
    put(out, "divergent", count(&|k| *k == RivalKind::Divergent));
    put(
        out,
        "not_dominated",
        count(&|k| matches!(k, RivalKind::NotDominated(_))),
    );
    put(out, "simple", count(&|k| *k == RivalKind::Simple));
    put(
        out,
        "uniform",
        count(&|k| matches!(k, RivalKind::Uniform(_))),
    );
    put(
        out,
        "none_dominates",
        !outcomes
            .iter()
            .any(|o| matches!(o.kind, RivalKind::Simple | RivalKind::Uniform(_))),
    );
}

fn evaluate(ctx: &Ctx, spec: &CheckSpec) -> (CheckReport, Outputs) {
    let (outputs, error) = match ctx.run(&spec.check) {
        Ok(o) => (o, None),
        Err(e) => {
            let mut o = Outputs::new();
            put(&mut o, "error", e.code());
            put(&mut o, "message", e.to_string().as_str());
            (o, Some(e))
        }
    };
    let expectations: Vec<ExpectationResult> = spec
        .expect
        .iter()
        .map(|e| {
            let actual = outputs.get(&e.key);
            ExpectationResult {
                key: e.key.clone(),
                basis: e.basis.as_str(),
                expected: render_expected(&e.value),
                actual: actual.map(render).unwrap_or(Value::Null),
                pass: actual.is_some_and(|a| matches(a, &e.value, ctx.opts.mode, ctx.opts.depth)),
            }
        })
        .collect();
    let error_expected = spec.expect.iter().any(|e| e.key == "error");
    let pass = expectations.iter().all(|e| e.pass) && (error.is_none() || error_expected);
    let report = CheckReport {
        id: spec.id.clone(),
        kind: spec.check.kind(),
        outputs: outputs
            .iter()
            .map(|(k, v)| (k.clone(), render(v)))
            .collect(),
        expectations,
        pass,
    };
    (report, outputs)
}

/// Resolve and run every check of `spec`.
pub fn run(spec: &SpecFile, opts: &RunOptions) -> std::result::Result<Run, SpecError> {
    if opts.depth == 0 {
        return Err(SpecError {
            path: "depth".into(),
            error: Error::OutOfRange("depth must be at least 1".into()),
        });
    }
    let exact = spec.resolve()?;
    let model = match opts.mode {
        Mode::Exact => exact,
        Mode::Float => exact.approximate(),
    };
    let ctx = Ctx {
        model: &model,
        opts,
    };
    let results = opts.exec.map(&spec.checks, |c| evaluate(&ctx, c));
    let failed = results.iter().filter(|(r, _)| !r.pass).count();
    let outputs = results
        .iter()
        .map(|(r, o)| (r.id.clone(), o.clone()))
        .collect();
    let checks: Vec<CheckReport> = results.into_iter().map(|(r, _)| r).collect();
    let report = Report {
        scenario: spec.name.clone(),
        title: spec.title.clone(),
        mode: opts.mode.as_str(),
        depth: opts.depth,
        passed: checks.len() - failed,
        failed,
        result: if failed == 0 { "PASS" } else { "FAIL" },
        checks,
    };
    Ok(Run {
        report,
        outputs,
        columns: model.columns,
        depth: opts.depth,
    })
}

/// Expectation bases, for summaries.
pub fn basis_counts(spec: &SpecFile) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for c in &spec.checks {
        for e in &c.expect {
            *m.entry(e.basis.as_str()).or_insert(0) += 1;
        }
    }
    m
}
