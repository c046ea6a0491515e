//! Countable combinations of forecasts: whether their totals behave, whether
//! conditional previsions stay inside their range, and constructive or
//! search-based evidence about dominating rival forecasts.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charges::{CellValues, Charge, Event, Partition, Rv, State};
use crate::coherence::{dominance_verdict, Dominance};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::num::Num;
use crate::scoring::{
    check_uniform_similarity, check_uniform_spread, Direction, LambdaMeasure, Rule, RuleFamily,
    SpreadReport, Verdict,
};
use crate::seq::{lift, Bound, Horizon, Kernel, Scalar, Seq, MAX_SCAN};
use crate::system::{Entry, Family, FamilyVariable, Forecasts, Quantity, Scope, System};

fn expected(p: &Charge, total: Result<Rv>) -> Result<Bound> {
    match total {
        Ok(rv) => Ok(Bound::Finite(p.prevision(&rv)?)),
        Err(Error::DivergentCombination(_)) => Ok(Bound::PosInf),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    /// Prevision of the summed absolute deviations.
    pub deviation: Bound,
    /// Prevision of the summed scores.
    pub score: Bound,
    pub spread: Option<SpreadReport>,
    pub violations: Vec<&'static str>,
}

impl ConditionReport {
    pub fn met(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Finite expected deviation, finite expected score, and uniform spread of
/// the rules at level `eps`.
pub fn thm1_condition_check(p: &Charge, sys: &System, eps: &Num) -> Result<ConditionReport> {
    let deviation = expected(p, sys.total(Quantity::Deviation))?;
    let score = expected(p, sys.total(Quantity::Score))?;
    let rules = sys.rules();
    let spread = if rules.is_empty() {
        None
    } else {
        Some(check_uniform_spread(&rules, eps)?)
    };
    let mut violations = Vec::new();
    if deviation == Bound::PosInf {
        violations.push("deviation");
    }
    if score == Bound::PosInf {
        violations.push("score");
    }
    if spread
        .as_ref()
        .is_some_and(|s| s.verdict != Verdict::Satisfied)
    {
        violations.push("spread");
    }
    Ok(ConditionReport {
        deviation,
        score,
        spread,
        violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Every conditional prevision exceeds the unconditional one.
    Inf,
    /// Every conditional prevision falls short of it.
    Sup,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Inf => "inf",
            Side::Sup => "sup",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conglomerability {
    pub prevision: Num,
    pub inf: Bound,
    pub sup: Bound,
    /// `Some((gap, side))` when the prevision escapes the range.
    pub violation: Option<(Num, Side)>,
}

impl Conglomerability {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn conglomerability_verdict(p: &Charge, x: &Rv, pi: &Partition) -> Result<Conglomerability> {
    let prevision = p.prevision(x)?;
    let cells = p.cell_previsions(x, pi)?;
    let (inf, sup) = (cells.infimum()?, cells.supremum()?);
    let violation = match (&inf, &sup) {
        (Bound::Finite(lo), _) if *lo > prevision => Some((lo - &prevision, Side::Inf)),
        (Bound::PosInf, _) => {
            return Err(Error::Invalid(
                "conditional previsions are unbounded".into(),
            ))
        }
        (_, Bound::Finite(hi)) if *hi < prevision => Some((&prevision - hi, Side::Sup)),
        _ => None,
    };
    Ok(Conglomerability {
        prevision,
        inf,
        sup,
        violation,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TotalPrevisions {
    pub prevision: Num,
    /// Prevision of `P(X | pi)`.
    pub of_conditionals: Num,
}

impl TotalPrevisions {
    pub fn holds(&self) -> bool {
        self.prevision == self.of_conditionals
    }
}

pub fn ltp_verdict(p: &Charge, x: &Rv, pi: &Partition) -> Result<TotalPrevisions> {
    let y = p.prevision_given_partition(x, pi)?;
    Ok(TotalPrevisions {
        prevision: p.prevision(x)?,
        of_conditionals: p.prevision(&y)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Agreement {
    pub conglomerable: bool,
    pub total_previsions: bool,
}

impl Agreement {
    pub fn agrees(&self) -> bool {
        self.conglomerable == self.total_previsions
    }
}

/// Both properties over the class `{X, X - P(X | pi)}`, which meets the
/// hypotheses under which they coincide.
pub fn theorem4_agreement(p: &Charge, x: &Rv, pi: &Partition) -> Result<Agreement> {
    let y = p.prevision_given_partition(x, pi)?;
    let class = [x.clone(), x.sub(&y)];
    let mut out = Agreement {
        conglomerable: true,
        total_previsions: true,
    };
    for v in &class {
        out.conglomerable &= conglomerability_verdict(p, v, pi)?.holds();
        out.total_previsions &= ltp_verdict(p, v, pi)?.holds();
    }
    Ok(out)
}

/// The system scoring `X` unconditionally with `rule0` and given each
/// cross-section cell `H_j` with member `j` of `cells`.
pub fn conditional_system(
    x: &Rv,
    p_x: Num,
    p_cells: Seq,
    rule0: &LambdaMeasure,
    cells: &RuleFamily,
    alpha0: Num,
    alpha_cells: Seq,
) -> Result<System> {
    let columns = x.columns();
    let entry = Entry {
        label: "unconditional".into(),
        variable: x.clone(),
        conditioning: Event::omega(columns),
        forecast: p_x,
        rule: rule0.clone(),
        alpha: alpha0,
    };
    let family = Family {
        label: "cells".into(),
        variable: FamilyVariable::Shared(x.clone()),
        scope: Scope::OnCell,
        forecast: p_cells,
        rule: cells.clone(),
        alpha: alpha_cells,
    };
    System::new(columns, vec![entry], vec![family])
}

fn cross_section_previsions(p: &Charge, x: &Rv, pi: &Partition) -> Result<Seq> {
    match p.cell_previsions(x, pi)? {
        CellValues::Indexed(s) => Ok(s),
        CellValues::Finite(_) => Err(Error::Invalid("needs a cross-section partition".into())),
    }
}

struct InvertKernel<'a> {
    family: &'a RuleFamily,
    anchor: &'a Seq,
    mass: &'a Num,
}

impl Kernel for InvertKernel<'_> {
    fn inputs(&self) -> Vec<&Seq> {
        let mut v = self.family.params();
        v.push(self.anchor);
        v
    }

    fn eval<T: Scalar>(&self, a: &[T], h: &Horizon) -> Result<T> {
        let n = self.family.param_count();
        self.family
            .rebuild(&a[..n])
            .invert(&a[n], &T::from_num(self.mass), Direction::Down, h)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thm2Construction {
    pub side: Side,
    pub epsilon: Num,
    pub w0: Num,
    pub w1: Num,
    pub q_prime: Num,
    pub w2: Num,
    pub q_x: Num,
    pub q_cells: Seq,
    pub delta: Num,
    /// Original minus rival total score, per state.
    pub improvement: Rv,
    pub improvement_inf: Bound,
    pub alpha0: Num,
    pub alpha_cells: Num,
    /// The fair-bet combination with the coefficients above.
    pub fair_loss: Rv,
    pub fair_loss_inf: Bound,
    pub verified: bool,
}

impl Thm2Construction {
    pub fn rival(&self) -> Forecasts {
        Forecasts {
            entries: vec![self.q_x.clone()],
            families: vec![self.q_cells.clone()],
        }
    }
}

/// Rival forecasts for `X` and its cell-conditional forecasts whose total
/// score beats the original by at least `delta` in every state, for a
/// partition in which `X` is nonconglomerable.
pub fn thm2_rival_construction(
    p: &Charge,
    x: &Rv,
    pi: &Partition,
    rule0: &LambdaMeasure,
    cells: &RuleFamily,
    safety: &Num,
) -> Result<Thm2Construction> {
    if !(safety.is_positive() && *safety < Num::one()) {
        return Err(Error::OutOfRange(format!(
            "safety factor {safety} must lie in (0, 1)"
        )));
    }
    let verdict = conglomerability_verdict(p, x, pi)?;
    let Some((epsilon, side)) = verdict.violation else {
        return Err(Error::NotNonconglomerable);
    };
    let p_x = verdict.prevision.clone();
    let p_cells = cross_section_previsions(p, x, pi)?;
    // The sup side is the inf side of -X under reflected rules.
    let (px, pc, r0, rc) = match side {
        Side::Inf => (p_x.clone(), p_cells.clone(), rule0.clone(), cells.clone()),
        Side::Sup => (-&p_x, p_cells.neg(), rule0.reflect(), cells.reflect()),
    };
    let top = &px + &epsilon;
    let w0 = &r0.interval_mass(&px, &top)? / &Num::int(2);
    let rules = vec![
        ("unconditional".to_string(), Rule::Single(r0.clone())),
        ("cells".to_string(), Rule::Family(rc.clone())),
    ];
    let sim = check_uniform_similarity(&rules, &r0, &w0)?;
    let w1 = match (sim.verdict, sim.gamma) {
        (Verdict::Satisfied, Some(g)) => g,
        _ => {
            let at = sim
                .witness
                .map(|w| format!("interval ({}, {})", w.a, w.b))
                .unwrap_or_else(|| "no lower bound".into());
            return Err(Error::SimilarityViolated(at));
        }
    };
    let q_prime = r0.invert_mass(&top, &w0, Direction::Down)?;
    let w2 = safety * &w0.clone().min(w1.clone());
    let q_cells = lift(&InvertKernel {
        family: &rc,
        anchor: &pc,
        mass: &w2,
    })?;
    let q_x = r0.invert_mass(&px, &w2, Direction::Up)?;
    let delta = &w2 * &(&q_prime - &q_x);
    let ordered = q_x < q_prime
        && match q_cells.infimum()?.value {
            Bound::Finite(v) => v > q_prime,
            _ => false,
        };
    let (q_x, q_prime, q_cells) = match side {
        Side::Inf => (q_x, q_prime, q_cells),
        Side::Sup => (-&q_x, -&q_prime, q_cells.neg()),
    };
    let (alpha0, alpha_cells) = match side {
        Side::Inf => (Num::one(), Num::int(-1)),
        Side::Sup => (Num::int(-1), Num::one()),
    };
    let sys = conditional_system(
        x,
        p_x,
        p_cells,
        rule0,
        cells,
        alpha0.clone(),
        Seq::constant(alpha_cells.clone()),
    )?;
    let rival = sys.with_forecasts(&Forecasts {
        entries: vec![q_x.clone()],
        families: vec![q_cells.clone()],
    })?;
    let improvement = sys.combined_score()?.sub(&rival.combined_score()?);
    let improvement_inf = improvement.infimum()?.value;
    let fair_loss = sys.combined_fair_loss()?;
    let fair_loss_inf = fair_loss.infimum()?.value;
    let verified = ordered
        && delta.is_positive()
        && matches!(&improvement_inf, Bound::Finite(v) if *v >= delta)
        && matches!(&fair_loss_inf, Bound::Finite(v) if *v >= epsilon);
    Ok(Thm2Construction {
        side,
        epsilon,
        w0,
        w1,
        q_prime,
        w2,
        q_x,
        q_cells,
        delta,
        improvement,
        improvement_inf,
        alpha0,
        alpha_cells,
        fair_loss,
        fair_loss_inf,
        verified,
    })
}

/// Candidate rival forecasts drawn from a grid: one value per single entry,
/// and for each family a prefix of grid values followed by a grid tail.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub grid: Vec<Num>,
    pub prefix: usize,
    pub max_candidates: usize,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(grid: Vec<Num>) -> Self {
        ProbeConfig {
            grid,
            prefix: 2,
            max_candidates: 1024,
            seed: 0x5eed,
        }
    }
}

/// `lo, lo + step, ..., hi`, with `hi` included even off the lattice.
pub fn grid_over(lo: &Num, hi: &Num, step: &Num) -> Result<Vec<Num>> {
    if !step.is_positive() || lo > hi {
        return Err(Error::OutOfRange(format!(
            "cannot grid [{lo}, {hi}] by {step}"
        )));
    }
    let mut out = Vec::new();
    let mut v = lo.clone();
    while v < *hi {
        out.push(v.clone());
        v = &v + step;
        if out.len() > 100_000 {
            return Err(Error::OutOfRange("grid has too many points".into()));
        }
    }
    out.push(hi.clone());
    Ok(out)
}

fn finite_or(b: Bound, fallback: Num) -> Num {
    match b {
        Bound::Finite(v) => v,
        _ => fallback,
    }
}

/// Smallest interval holding every variable value and forecast of a system.
pub fn range_hull(sys: &System) -> Result<(Num, Num)> {
    let mut seqs: Vec<Seq> = Vec::new();
    for e in sys.entries() {
        seqs.extend(e.variable.cols().iter().cloned());
        seqs.push(Seq::constant(e.forecast.clone()));
    }
    for f in sys.families() {
        match &f.variable {
            FamilyVariable::Shared(x) => seqs.extend(x.cols().iter().cloned()),
            FamilyVariable::Diagonal { on, off } => {
                seqs.extend(on.iter().cloned());
                seqs.push(off.clone());
            }
        }
        seqs.push(f.forecast.clone());
    }
    let mut lo: Option<Num> = None;
    let mut hi: Option<Num> = None;
    for s in &seqs {
        let a = finite_or(s.infimum()?.value, Num::zero());
        let b = finite_or(s.supremum()?.value, Num::zero());
        lo = Some(lo.map_or(a.clone(), |x| x.min(a)));
        hi = Some(hi.map_or(b.clone(), |x| x.max(b)));
    }
    Ok((lo.unwrap_or_else(Num::zero), hi.unwrap_or_else(Num::one)))
}

/// Grid candidates for a system, enumerated when few enough and sampled
/// deterministically otherwise.
pub fn candidates(sys: &System, cfg: &ProbeConfig) -> Result<Vec<Forecasts>> {
    let g = cfg.grid.len();
    if g == 0 {
        return Err(Error::OutOfRange("empty grid".into()));
    }
    let slots = sys.entries().len() + sys.families().len() * (cfg.prefix + 1);
    let space = (g as f64).powi(slots as i32);
    let build = |digits: &[usize]| {
        let mut it = digits.iter();
        let entries = sys
            .entries()
            .iter()
            .map(|_| cfg.grid[*it.next().unwrap()].clone())
            .collect();
        let families = sys
            .families()
            .iter()
            .map(|_| {
                let prefix: Vec<Num> = (0..cfg.prefix)
                    .map(|_| cfg.grid[*it.next().unwrap()].clone())
                    .collect();
                Seq::from_prefix(&prefix, cfg.grid[*it.next().unwrap()].clone())
            })
            .collect();
        Forecasts { entries, families }
    };
    if space <= cfg.max_candidates as f64 {
        let total = g.pow(slots as u32);
        return Ok((0..total)
            .map(|mut n| {
                let digits: Vec<usize> = (0..slots)
                    .map(|_| {
                        let d = n % g;
                        n /= g;
                        d
                    })
                    .collect();
                build(&digits)
            })
            .collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < cfg.max_candidates {
        let digits: Vec<usize> = (0..slots).map(|_| rng.gen_range(0..g)).collect();
        if seen.insert(digits.clone()) {
            out.push(build(&digits));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum RivalKind {
    /// The rival's total score diverges somewhere.
    Divergent,
    /// Some state where the rival does no better.
    NotDominated(State),
    Simple,
    Uniform(Num),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RivalOutcome {
    pub rival: Forecasts,
    pub kind: RivalKind,
    /// `P(rival total) - P(original total)`, when a charge is given.
    pub expected_gap: Option<Bound>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RivalProbe {
    pub outcomes: Vec<RivalOutcome>,
}

impl RivalProbe {
    pub fn count(&self, f: impl Fn(&RivalKind) -> bool) -> usize {
        self.outcomes.iter().filter(|o| f(&o.kind)).count()
    }

    pub fn dominating(&self) -> Option<&RivalOutcome> {
        self.outcomes
            .iter()
            .find(|o| matches!(o.kind, RivalKind::Simple | RivalKind::Uniform(_)))
    }

    pub fn none_dominates(&self) -> bool {
        self.dominating().is_none()
    }
}

fn evaluate(
    sys: &System,
    base: &Rv,
    base_expected: Option<&Num>,
    p: Option<&Charge>,
    rival: &Forecasts,
) -> Result<RivalOutcome> {
    let total = sys.with_forecasts(rival)?.combined_score();
    let expected_gap = match (p, base_expected) {
        (Some(p), Some(b)) => Some(match expected(p, total.clone())? {
            Bound::Finite(v) => Bound::Finite(&v - b),
            other => other,
        }),
        _ => None,
    };
    let kind = match total {
        Err(Error::DivergentCombination(_)) => RivalKind::Divergent,
        Err(e) => return Err(e),
        Ok(r) => match dominance_verdict(base, &r)? {
            Dominance::UniformStrict(e) => RivalKind::Uniform(e),
            Dominance::Simple => RivalKind::Simple,
            Dominance::None => {
                let st = base
                    .sub(&r)
                    .state_at_most(&Num::zero())?
                    .ok_or_else(|| Error::Invalid("no state witnesses non-dominance".into()))?;
                RivalKind::NotDominated(st)
            }
        },
    };
    Ok(RivalOutcome {
        rival: rival.clone(),
        kind,
        expected_gap,
    })
}

/// Scores every candidate rival exactly against the system's own forecasts.
pub fn rival_probe(
    sys: &System,
    p: Option<&Charge>,
    cfg: &ProbeConfig,
    extra: &[Forecasts],
    exec: Exec,
) -> Result<RivalProbe> {
    let base = sys.combined_score()?;
    let base_expected = match p {
        Some(p) => Some(p.prevision(&base)?),
        None => None,
    };
    let mut cands = candidates(sys, cfg)?;
    cands.extend(extra.iter().cloned());
    let outcomes = exec
        .map(&cands, |c| {
            evaluate(sys, &base, base_expected.as_ref(), p, c)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(RivalProbe { outcomes })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thm3Probe {
    pub total_previsions: TotalPrevisions,
    /// Previsions of the fair-bet combinations tried; all should be 0.
    pub fair_previsions: Vec<Num>,
    pub probe: RivalProbe,
}

impl Thm3Probe {
    pub fn fair_zero(&self) -> bool {
        self.fair_previsions.iter().all(Num::is_zero)
    }
}

/// Checks that fair bets on `X` and its cell-conditionals have prevision 0
/// and searches for rivals, given the law of total previsions holds.
pub fn thm3_no_dominance_probe(
    p: &Charge,
    x: &Rv,
    pi: &Partition,
    rule0: &LambdaMeasure,
    cells: &RuleFamily,
    cfg: &ProbeConfig,
    exec: Exec,
) -> Result<Thm3Probe> {
    let ltp = ltp_verdict(p, x, pi)?;
    if !ltp.holds() {
        return Err(Error::PreconditionFailed(format!(
            "total previsions fail: {} against {}",
            ltp.prevision, ltp.of_conditionals
        )));
    }
    let p_cells = cross_section_previsions(p, x, pi)?;
    let sys = conditional_system(
        x,
        ltp.prevision.clone(),
        p_cells,
        rule0,
        cells,
        Num::one(),
        Seq::constant(Num::one()),
    )?;
    let half = num_rational::BigRational::new(1.into(), 2.into());
    let alphas = [
        (Num::one(), Seq::constant(Num::one())),
        (Num::one(), Seq::constant(Num::int(-1))),
        (Num::int(-1), Seq::constant(Num::one())),
        (Num::int(2), Seq::geometric(Num::int(3), half)),
        (
            Num::ratio(1, 2),
            Seq::constant(Num::one()).sub(&Seq::geometric(
                Num::one(),
                num_rational::BigRational::new(1.into(), 2.into()),
            )),
        ),
    ];
    let fair_previsions = alphas
        .iter()
        .map(|(a0, ac)| {
            p.prevision(
                &sys.with_alphas(std::slice::from_ref(a0), std::slice::from_ref(ac))?
                    .combined_fair_loss()?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let probe = rival_probe(&sys, Some(p), cfg, &[], exec)?;
    Ok(Thm3Probe {
        total_previsions: ltp,
        fair_previsions,
        probe,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Propriety {
    pub expected: Num,
    /// Smallest rival expected total minus the original's.
    pub best_gap: Bound,
    pub witness: Option<Forecasts>,
    /// Every rival that differs from the original does strictly worse.
    pub strict: bool,
    pub candidates: usize,
}

impl Propriety {
    pub fn proper(&self) -> bool {
        self.witness.is_none()
    }
}

/// Whether announcing the system's forecasts minimises expected total score
/// among the grid rivals plus `extra`.
pub fn propriety_of_infinite_sum(
    p: &Charge,
    sys: &System,
    cfg: &ProbeConfig,
    extra: &[Forecasts],
    exec: Exec,
) -> Result<Propriety> {
    let probe = rival_probe(sys, Some(p), cfg, extra, exec)?;
    let own = sys.forecasts();
    let expected = p.prevision(&sys.combined_score()?)?;
    let mut best: Option<(Bound, &RivalOutcome)> = None;
    let mut strict = true;
    for o in &probe.outcomes {
        let gap = o.expected_gap.clone().expect("charge given");
        if let Bound::Finite(v) = &gap {
            if !v.is_positive() && o.rival != own {
                strict = false;
            }
        }
        let better = match (&best, &gap) {
            (None, _) => true,
            (Some((Bound::Finite(b), _)), Bound::Finite(v)) => v < b,
            (Some((Bound::PosInf, _)), Bound::Finite(_)) => true,
            _ => false,
        };
        if better {
            best = Some((gap, o));
        }
    }
    let (best_gap, at) = best.expect("at least one candidate");
    let improves =
        |o: &RivalOutcome| matches!(&o.expected_gap, Some(Bound::Finite(v)) if v.is_negative());
    // A supplied rival that improves is the preferred witness.
    let witness = probe.outcomes[probe.outcomes.len() - extra.len()..]
        .iter()
        .find(|o| improves(o))
        .or(improves(at).then_some(at))
        .map(|o| o.rival.clone());
    Ok(Propriety {
        expected,
        best_gap,
        witness,
        strict,
        candidates: probe.outcomes.len(),
    })
}

/// `(q_F = 1/2, check holds, dominated, threshold)` for one rival.
type CaseRow = (bool, bool, bool, Option<(Num, Num, u64, usize)>);

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityFailure {
    pub rivals_half: usize,
    pub identity_holds: bool,
    pub rivals_other: usize,
    pub bound_holds: bool,
    /// `(q_F, delta, first index past the threshold, column of the witness)`.
    pub thresholds: Vec<(Num, Num, u64, usize)>,
    pub dominated: usize,
}

/// Case analysis for an indicator `X` with `P(X) = 1/2`, every cell
/// prevision 1, Brier scoring unconditionally and `2^(-j-1)` times Brier
/// given `H_j`: no rival dominates, by the closed forms of the difference.
pub fn similarity_failure_analysis(
    p: &Charge,
    x: &Rv,
    pi: &Partition,
    cfg: &ProbeConfig,
    depth: u64,
    exec: Exec,
) -> Result<SimilarityFailure> {
    let p_x = p.prevision(x)?;
    let p_cells = cross_section_previsions(p, x, pi)?;
    if p_x != Num::ratio(1, 2) || p_cells != Seq::constant(Num::one()) {
        return Err(Error::PreconditionFailed(
            "needs P(X) = 1/2 and P(X | H_j) = 1".into(),
        ));
    }
    for k in 0..x.columns() {
        let c = x.col(k);
        if c.as_constant()
            .is_none_or(|v| v != Num::zero() && v != Num::one())
        {
            return Err(Error::PreconditionFailed(
                "X must be a column indicator".into(),
            ));
        }
    }
    let half = num_rational::BigRational::new(1.into(), 2.into());
    let weights = Seq::geometric(Num::ratio(1, 2), half);
    let sys = conditional_system(
        x,
        p_x,
        p_cells,
        &LambdaMeasure::brier(),
        &RuleFamily::scaled_brier(weights),
        Num::one(),
        Seq::constant(Num::one()),
    )?;
    let base = sys.combined_score()?;
    let mut cands: Vec<Forecasts> = candidates(&sys, cfg)?;
    // Every family candidate is also tried with q_F = 1/2.
    let halves: Vec<Forecasts> = cands
        .iter()
        .filter(|c| c.entries[0] != Num::ratio(1, 2))
        .map(|c| Forecasts {
            entries: vec![Num::ratio(1, 2)],
            families: c.families.clone(),
        })
        .collect();
    cands.extend(halves);
    cands.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    cands.dedup();
    let checks = exec.map(&cands, |c| -> Result<CaseRow> {
        let rival = sys.with_forecasts(c)?.combined_score()?;
        let diff = base.sub(&rival);
        let dominated = !matches!(dominance_verdict(&base, &rival)?, Dominance::None);
        let qf = &c.entries[0];
        let q = &c.families[0];
        if *qf == Num::ratio(1, 2) {
            let mut ok = true;
            for k in 0..x.columns() {
                let f = x.col(k).at(1);
                for j in (1..=depth).chain([q.last_exception() + 1]) {
                    let qj = q.at(j);
                    let closed = &(&Num::pow2_neg(j as u32) * &(&Num::one() - &qj))
                        * &(&(&(&Num::one() + &qj) / &Num::int(2)) - &f);
                    ok &= diff.at((k, j)) == closed;
                }
            }
            return Ok((true, ok, dominated, None));
        }
        let over_one = &(qf - &Num::one()) * &(qf - &Num::one());
        let over_zero = qf * qf;
        let gap = &over_one.clone().max(over_zero.clone()) - &Num::ratio(1, 4);
        let mut j = 1u64;
        while Num::pow2_neg(j as u32) >= gap {
            j += 1;
        }
        let target = if over_one >= over_zero {
            Num::one()
        } else {
            Num::zero()
        };
        let col = (0..x.columns())
            .find(|k| x.col(*k).at(1) == target)
            .ok_or_else(|| Error::PreconditionFailed("X never takes the required value".into()))?;
        let d = diff.at((col, j));
        let f = &target;
        let bound = &(&Num::ratio(1, 4) - &(&(qf - f) * &(qf - f))) + &Num::pow2_neg(j as u32);
        Ok((
            false,
            d <= bound && d.is_negative(),
            dominated,
            Some((qf.clone(), gap, j, col)),
        ))
    });
    let mut out = SimilarityFailure {
        rivals_half: 0,
        identity_holds: true,
        rivals_other: 0,
        bound_holds: true,
        thresholds: Vec::new(),
        dominated: 0,
    };
    for r in checks {
        let (is_half, ok, dominated, th) = r?;
        if is_half {
            out.rivals_half += 1;
            out.identity_holds &= ok;
        } else {
            out.rivals_other += 1;
            out.bound_holds &= ok;
        }
        out.dominated += dominated as usize;
        if let Some(t) = th {
            if !out.thresholds.iter().any(|u| u.0 == t.0) {
                out.thresholds.push(t);
            }
        }
    }
    out.thresholds.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDAnalysis {
    /// Rivals whose weighted squared forecasts `d` diverge.
    pub infinite: usize,
    pub finite: usize,
    /// Rivals equal to the original forecasts.
    pub identical: usize,
    /// Every finite-`d` rival scores strictly worse at the first state whose
    /// weighted forecast falls below `d / 2`.
    pub witnessed: bool,
}

/// Rival analysis for one weighted-Brier family of singleton indicators
/// forecast at 0: with `d` the weighted sum of squared rival forecasts,
/// either `d` is infinite or some state has the rival doing strictly worse.
pub fn finite_d_analysis(sys: &System, cfg: &ProbeConfig, exec: Exec) -> Result<FiniteDAnalysis> {
    let [fam] = sys.families() else {
        return Err(Error::PreconditionFailed("needs exactly one family".into()));
    };
    let weights = fam
        .rule
        .brier_weights()
        .ok_or_else(|| Error::PreconditionFailed("needs a weighted Brier family".into()))?;
    if !sys.entries().is_empty() || !fam.forecast.is_zero() {
        return Err(Error::PreconditionFailed(
            "needs forecasts identically 0".into(),
        ));
    }
    let base = sys.combined_score()?;
    let cands = candidates(sys, cfg)?;
    let rows = exec.map(&cands, |c| -> Result<(u8, bool)> {
        let q = &c.families[0];
        let d = match weights.mul(&q.mul(q)).series_sum() {
            Ok(d) => d,
            Err(Error::DivergentCombination(_)) => {
                let diverges = matches!(
                    sys.with_forecasts(c)?.combined_score(),
                    Err(Error::DivergentCombination(_))
                );
                return Ok((0, diverges));
            }
            Err(e) => return Err(e),
        };
        if d.is_zero() {
            return Ok((2, true));
        }
        let rival = sys.with_forecasts(c)?.combined_score()?;
        let half_d = &d / &Num::int(2);
        let j = (1..=MAX_SCAN)
            .find(|j| (&weights.at(*j) * &q.at(*j)).abs() < half_d)
            .ok_or_else(|| Error::Invalid("no index below d / 2".into()))?;
        let worse = (0..sys.columns()).all(|k| rival.at((k, j)) > base.at((k, j)));
        Ok((1, worse))
    });
    let mut out = FiniteDAnalysis {
        infinite: 0,
        finite: 0,
        identical: 0,
        witnessed: true,
    };
    for r in rows {
        let (kind, ok) = r?;
        match kind {
            0 => out.infinite += 1,
            1 => out.finite += 1,
            _ => out.identical += 1,
        }
        out.witnessed &= ok;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charges::ColumnCharge;
    use num_rational::BigRational;

    fn half() -> BigRational {
        BigRational::new(1.into(), 2.into())
    }

    fn dubins() -> Charge {
        Charge::new(vec![
            ColumnCharge {
                atoms: Seq::zero(),
                diffuse: Num::ratio(1, 2),
            },
            ColumnCharge {
                atoms: Seq::geometric(Num::ratio(1, 2), half()),
                diffuse: Num::zero(),
            },
        ])
        .unwrap()
    }

    fn control() -> Charge {
        Charge::new(vec![
            ColumnCharge {
                atoms: Seq::geometric(Num::ratio(1, 4), half()),
                diffuse: Num::zero(),
            },
            ColumnCharge {
                atoms: Seq::geometric(Num::ratio(3, 4), half()),
                diffuse: Num::zero(),
            },
        ])
        .unwrap()
    }

    fn f() -> Rv {
        Rv::new(vec![Seq::zero(), Seq::constant(Num::one())]).unwrap()
    }

    #[test]
    fn dubins_is_nonconglomerable() {
        let v = conglomerability_verdict(&dubins(), &f(), &Partition::cross_section()).unwrap();
        assert_eq!(v.violation, Some((Num::ratio(1, 2), Side::Inf)));
        let l = ltp_verdict(&dubins(), &f(), &Partition::cross_section()).unwrap();
        assert_eq!(
            (l.prevision, l.of_conditionals),
            (Num::ratio(1, 2), Num::one())
        );
        let a = theorem4_agreement(&dubins(), &f(), &Partition::cross_section()).unwrap();
        assert!(a.agrees() && !a.conglomerable);
    }

    #[test]
    fn control_is_conglomerable() {
        let pi = Partition::cross_section();
        assert!(conglomerability_verdict(&control(), &f(), &pi)
            .unwrap()
            .holds());
        assert!(ltp_verdict(&control(), &f(), &pi).unwrap().holds());
        let c = thm2_rival_construction(
            &control(),
            &f(),
            &pi,
            &LambdaMeasure::brier(),
            &LambdaMeasure::brier().as_family(),
            &Num::ratio(9, 10),
        );
        assert_eq!(c.unwrap_err(), Error::NotNonconglomerable);
    }

    #[test]
    fn construction_on_dubins() {
        let c = thm2_rival_construction(
            &dubins(),
            &f(),
            &Partition::cross_section(),
            &LambdaMeasure::brier(),
            &LambdaMeasure::brier().as_family(),
            &Num::ratio(9, 10),
        )
        .unwrap();
        assert_eq!(c.q_prime, Num::ratio(3, 4));
        assert_eq!(c.w2, Num::ratio(9, 20));
        assert_eq!(c.q_x, Num::ratio(29, 40));
        assert_eq!(c.q_cells, Seq::constant(Num::ratio(31, 40)));
        assert_eq!(c.delta, Num::ratio(9, 800));
        assert!(c.verified);
    }

    #[test]
    fn sup_side_construction_mirrors() {
        let x = f().neg();
        let c = thm2_rival_construction(
            &dubins(),
            &x,
            &Partition::cross_section(),
            &LambdaMeasure::brier(),
            &LambdaMeasure::brier().as_family(),
            &Num::ratio(9, 10),
        )
        .unwrap();
        assert_eq!(c.side, Side::Sup);
        assert_eq!(c.q_x, Num::ratio(-29, 40));
        assert_eq!(c.delta, Num::ratio(9, 800));
        assert!(c.verified);
    }

    #[test]
    fn fading_weights_break_the_construction() {
        let fading = RuleFamily::scaled_brier(Seq::geometric(Num::ratio(1, 2), half()));
        let c = thm2_rival_construction(
            &dubins(),
            &f(),
            &Partition::cross_section(),
            &LambdaMeasure::brier(),
            &fading,
            &Num::ratio(9, 10),
        );
        assert!(matches!(c, Err(Error::SimilarityViolated(_))));
    }

    #[test]
    fn grids_and_candidates() {
        let g = grid_over(&Num::zero(), &Num::one(), &Num::ratio(1, 4)).unwrap();
        assert_eq!(g.len(), 5);
        let sys = conditional_system(
            &f(),
            Num::ratio(3, 4),
            Seq::constant(Num::ratio(3, 4)),
            &LambdaMeasure::brier(),
            &LambdaMeasure::brier().as_family(),
            Num::one(),
            Seq::constant(Num::one()),
        )
        .unwrap();
        let mut cfg = ProbeConfig::new(g);
        cfg.prefix = 1;
        assert_eq!(candidates(&sys, &cfg).unwrap().len(), 125);
        cfg.max_candidates = 50;
        let c = candidates(&sys, &cfg).unwrap();
        assert_eq!(c.len(), 50);
        assert_eq!(c, candidates(&sys, &cfg).unwrap());
    }

    #[test]
    fn control_resists_rivals() {
        let mut cfg =
            ProbeConfig::new(grid_over(&Num::zero(), &Num::one(), &Num::ratio(1, 4)).unwrap());
        cfg.prefix = 1;
        let t = thm3_no_dominance_probe(
            &control(),
            &f(),
            &Partition::cross_section(),
            &LambdaMeasure::brier(),
            &LambdaMeasure::brier().as_family(),
            &cfg,
            Exec::Parallel,
        )
        .unwrap();
        assert!(t.fair_zero());
        assert!(t.probe.none_dominates());
    }

    fn diffuse_line() -> Charge {
        Charge::new(vec![ColumnCharge {
            atoms: Seq::zero(),
            diffuse: Num::one(),
        }])
        .unwrap()
    }

    fn geo(c: Num) -> Seq {
        Seq::geometric(c, half())
    }

    fn spread_counterexample() -> System {
        let two = BigRational::from_integer(2.into());
        let rule = RuleFamily::Piecewise {
            breakpoints: vec![geo(Num::ratio(1, 2))],
            densities: vec![Seq::constant(Num::int(2)), Seq::geometric(Num::int(4), two)],
        };
        let family = Family {
            label: "spiky".into(),
            variable: FamilyVariable::Diagonal {
                on: vec![geo(Num::ratio(1, 2)).sub(&Seq::constant(Num::one()))],
                off: geo(Num::one()),
            },
            scope: Scope::Everywhere,
            forecast: geo(Num::one()),
            rule,
            alpha: Seq::constant(Num::one()),
        };
        System::new(1, vec![], vec![family]).unwrap()
    }

    #[test]
    fn spread_counterexample_meets_two_of_three() {
        let sys = spread_counterexample();
        let r = thm1_condition_check(&diffuse_line(), &sys, &Num::one()).unwrap();
        assert_eq!(r.deviation, Bound::Finite(Num::one()));
        assert_eq!(r.score, Bound::Finite(Num::int(3)));
        assert_eq!(r.violations, vec!["spread"]);
        let rival = Forecasts {
            entries: vec![],
            families: vec![geo(Num::ratio(1, 2))],
        };
        let base = sys.combined_score().unwrap();
        let other = sys
            .with_forecasts(&rival)
            .unwrap()
            .combined_score()
            .unwrap();
        for j in 1..10u64 {
            assert_eq!(base.at((0, j)), &Num::int(3) + &Num::pow2_neg(j as u32 + 1));
            assert_eq!(
                other.at((0, j)),
                &Num::ratio(3, 2) - &Num::pow2_neg(j as u32 + 1)
            );
        }
        assert_eq!(
            dominance_verdict(&base, &other).unwrap(),
            Dominance::UniformStrict(Num::ratio(3, 2))
        );
    }

    fn example3(weights: Seq) -> System {
        let family = Family {
            label: "singletons".into(),
            variable: FamilyVariable::Diagonal {
                on: vec![Seq::constant(Num::one())],
                off: Seq::zero(),
            },
            scope: Scope::Everywhere,
            forecast: Seq::zero(),
            rule: RuleFamily::scaled_brier(weights),
            alpha: Seq::constant(Num::one()),
        };
        System::new(1, vec![], vec![family]).unwrap()
    }

    #[test]
    fn bounded_weights_resist_rivals() {
        let sys = example3(Seq::constant(Num::int(2)).sub(&geo(Num::one())));
        let r = thm1_condition_check(&diffuse_line(), &sys, &Num::one()).unwrap();
        assert!(r.met());
        assert_eq!(
            (r.deviation, r.score),
            (Bound::Finite(Num::one()), Bound::Finite(Num::int(2)))
        );
        let mut cfg =
            ProbeConfig::new(grid_over(&Num::int(-1), &Num::one(), &Num::ratio(1, 2)).unwrap());
        cfg.prefix = 2;
        let probe = rival_probe(&sys, Some(&diffuse_line()), &cfg, &[], Exec::Parallel).unwrap();
        assert!(probe.none_dominates());
        assert_eq!(probe.count(|k| *k == RivalKind::Divergent), 100);
        let d = finite_d_analysis(&sys, &cfg, Exec::Sequential).unwrap();
        assert_eq!((d.infinite, d.finite, d.identical), (100, 24, 1));
        assert!(d.witnessed);
        let prop =
            propriety_of_infinite_sum(&diffuse_line(), &sys, &cfg, &[], Exec::Parallel).unwrap();
        assert!(prop.proper() && prop.strict);
    }

    #[test]
    fn fading_weights_case_analysis() {
        let mut cfg =
            ProbeConfig::new(grid_over(&Num::zero(), &Num::one(), &Num::ratio(1, 8)).unwrap());
        cfg.prefix = 1;
        let a = similarity_failure_analysis(
            &dubins(),
            &f(),
            &Partition::cross_section(),
            &cfg,
            8,
            Exec::Parallel,
        )
        .unwrap();
        assert_eq!(a.rivals_half, 81);
        assert!(a.identity_holds && a.bound_holds);
        assert_eq!(a.dominated, 0);
        // q_F = 0: max gap 1 - 1/4, first 2^-j below it is j = 1.
        assert_eq!(a.thresholds[0], (Num::zero(), Num::ratio(3, 4), 1, 1));
    }

    #[test]
    fn corollaries() {
        let pi = Partition::cross_section();
        let mut cfg =
            ProbeConfig::new(grid_over(&Num::zero(), &Num::one(), &Num::ratio(1, 4)).unwrap());
        cfg.prefix = 1;
        let brier = LambdaMeasure::brier();
        let c = thm2_rival_construction(
            &dubins(),
            &f(),
            &pi,
            &brier,
            &brier.as_family(),
            &Num::ratio(9, 10),
        )
        .unwrap();
        let sys = conditional_system(
            &f(),
            Num::ratio(1, 2),
            Seq::constant(Num::one()),
            &brier,
            &brier.as_family(),
            Num::one(),
            Seq::constant(Num::one()),
        )
        .unwrap();
        let p =
            propriety_of_infinite_sum(&dubins(), &sys, &cfg, &[c.rival()], Exec::Parallel).unwrap();
        assert!(!p.proper());
        let ctl = conditional_system(
            &f(),
            Num::ratio(3, 4),
            Seq::constant(Num::ratio(3, 4)),
            &brier,
            &brier.as_family(),
            Num::one(),
            Seq::constant(Num::one()),
        )
        .unwrap();
        let p = propriety_of_infinite_sum(&control(), &ctl, &cfg, &[], Exec::Parallel).unwrap();
        assert!(p.proper() && p.strict);
    }
}
