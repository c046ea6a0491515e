//! Finite-system certificates: sure-loss combinations of fair bets found by
//! linear programming, dominating Brier rivals found by projection, and the
//! dominance comparison of two loss streams.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::charges::{Rv, State};
use crate::error::{Error, Result};
use crate::lp::{maximize, Cmp, Constraint, LpOutcome};
use crate::num::Num;
use crate::projection::min_norm_point;
use crate::seq::Bound;
use crate::system::{Entry, Forecasts, Quantity, System};

type Q = BigRational;

#[derive(Clone, Debug, PartialEq)]
pub enum Dominance {
    /// `a >= b + eps` everywhere.
    UniformStrict(Num),
    /// `a > b` everywhere but the gap is not bounded away from 0.
    Simple,
    None,
}

impl Dominance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dominance::UniformStrict(_) => "uniform_strict",
            Dominance::Simple => "simple",
            Dominance::None => "none",
        }
    }
}

/// How `loss_a` compares with `loss_b`: whether `b` dominates `a`.
pub fn dominance_verdict(loss_a: &Rv, loss_b: &Rv) -> Result<Dominance> {
    let m = loss_a.sub(loss_b).infimum()?;
    Ok(match m.value {
        Bound::Finite(v) if v.is_positive() => Dominance::UniformStrict(v),
        Bound::Finite(v) if v.is_zero() && !m.attained => Dominance::Simple,
        Bound::PosInf => Dominance::Simple,
        _ => Dominance::None,
    })
}

/// `Some(eps)` when a loss stream is at least `eps > 0` in every state, so
/// that abstaining beats it uniformly.
pub fn abstain_dominance(loss: &Rv) -> Result<Option<Num>> {
    Ok(
        match dominance_verdict(loss, &Rv::constant(Num::zero(), loss.columns()))? {
            Dominance::UniformStrict(e) => Some(e),
            _ => None,
        },
    )
}

fn gamble(e: &Entry) -> Rv {
    e.variable
        .sub(&Rv::constant(e.forecast.clone(), e.variable.columns()))
        .restrict(&e.conditioning)
}

/// States that represent every distinct payoff pattern of the entries.
pub fn representative_states(entries: &[Entry]) -> Result<Vec<State>> {
    let first = entries.first().ok_or(Error::EmptySystem)?;
    let columns = first.variable.columns();
    let mut out = Vec::new();
    for k in 0..columns {
        let mut idx = BTreeSet::new();
        for e in entries {
            for s in [e.variable.col(k), e.conditioning.indicator().col(k)] {
                if !s.is_eventually_constant() {
                    return Err(Error::PreconditionFailed(format!(
                        "entry {} is not eventually constant in column {k}",
                        e.label
                    )));
                }
                idx.extend(s.exception_indices());
            }
        }
        let past = idx.last().copied().unwrap_or(0) + 1;
        out.extend(idx.into_iter().map(|j| (k, j)));
        out.push((k, past));
    }
    Ok(out)
}

/// Payoff matrix: one row per represented state, one column per entry.
fn payoffs(entries: &[Entry], states: &[State]) -> Vec<Vec<Q>> {
    let gs: Vec<Rv> = entries.iter().map(gamble).collect();
    states
        .iter()
        .map(|s| gs.iter().map(|g| g.at(*s).rational()).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncoherenceCertificate {
    /// Coefficients with absolute values summing to 1.
    pub alpha: Vec<Num>,
    pub epsilon: Num,
}

impl IncoherenceCertificate {
    pub fn combination(&self, entries: &[Entry]) -> Result<Rv> {
        let first = entries.first().ok_or(Error::EmptySystem)?;
        let mut total = Rv::constant(Num::zero(), first.variable.columns());
        for (e, a) in entries.iter().zip(&self.alpha) {
            total = total.add(&gamble(e).scale(a));
        }
        Ok(total)
    }

    /// Re-evaluates the combination exactly over every state.
    pub fn verify(&self, entries: &[Entry]) -> Result<bool> {
        let norm: Num = self.alpha.iter().map(Num::abs).sum();
        let m = self.combination(entries)?.infimum()?;
        Ok(norm == Num::one()
            && self.epsilon.is_positive()
            && matches!(m.value, Bound::Finite(v) if v >= self.epsilon))
    }
}

/// A sure-loss combination of the entries' fair bets, if one exists.
pub fn incoherence1_certificate(entries: &[Entry]) -> Result<Option<IncoherenceCertificate>> {
    let states = representative_states(entries)?;
    let g = payoffs(entries, &states);
    let n = entries.len();
    let zero = Q::zero;
    let mut cons = Vec::new();
    for row in &g {
        let mut c: Vec<Q> = row.clone();
        c.extend(row.iter().map(|v| -v));
        c.push(-Q::one());
        c.push(Q::one());
        cons.push(Constraint::new(c, Cmp::Ge, zero()));
    }
    let mut norm = vec![Q::one(); 2 * n];
    norm.extend([zero(), zero()]);
    cons.push(Constraint::new(norm, Cmp::Eq, Q::one()));
    let mut obj = vec![zero(); 2 * n];
    obj.extend([Q::one(), -Q::one()]);
    let LpOutcome::Optimal { x, value } = maximize(&obj, &cons) else {
        return Err(Error::Invalid("sure-loss program has no optimum".into()));
    };
    if !value.is_positive() {
        return Ok(None);
    }
    let alpha: Vec<Q> = (0..n).map(|i| &x[i] - &x[n + i]).collect();
    let total: Q = alpha.iter().map(Q::abs).sum();
    let cert = IncoherenceCertificate {
        alpha: alpha.iter().map(|a| Num::Exact(a / &total)).collect(),
        epsilon: Num::zero(),
    };
    let eps = match cert.combination(entries)?.infimum()?.value {
        Bound::Finite(v) => v,
        other => {
            return Err(Error::Invalid(format!(
                "combination infimum {other} is not finite"
            )))
        }
    };
    Ok(Some(IncoherenceCertificate {
        epsilon: eps,
        ..cert
    }))
}

/// Weights `pi` on represented states under which every fair bet has zero
/// expectation; exists exactly when no sure-loss combination does.
pub fn coherence_witness(entries: &[Entry]) -> Result<Option<Vec<(State, Num)>>> {
    let states = representative_states(entries)?;
    let g = payoffs(entries, &states);
    let mut cons: Vec<Constraint> = (0..entries.len())
        .map(|i| Constraint::new(g.iter().map(|r| r[i].clone()).collect(), Cmp::Eq, Q::zero()))
        .collect();
    cons.push(Constraint::new(
        vec![Q::one(); states.len()],
        Cmp::Eq,
        Q::one(),
    ));
    match maximize(&vec![Q::zero(); states.len()], &cons) {
        LpOutcome::Optimal { x, .. } => Ok(Some(
            states
                .into_iter()
                .zip(x)
                .filter(|(_, v)| !v.is_zero())
                .map(|(s, v)| (s, Num::Exact(v)))
                .collect(),
        )),
        _ => Ok(None),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominanceCertificate {
    pub rival: Vec<Num>,
    pub epsilon: Num,
}

fn brier_system(entries: &[Entry]) -> Result<System> {
    let first = entries.first().ok_or(Error::EmptySystem)?;
    System::new(first.variable.columns(), entries.to_vec(), Vec::new())
}

/// `original - rival` total score, state by state.
pub fn improvement(entries: &[Entry], rival: &[Num]) -> Result<Rv> {
    let sys = brier_system(entries)?;
    let alt = sys.with_forecasts(&Forecasts {
        entries: rival.to_vec(),
        families: Vec::new(),
    })?;
    Ok(sys
        .total(Quantity::Score)?
        .sub(&alt.total(Quantity::Score)?))
}

impl DominanceCertificate {
    pub fn verify(&self, entries: &[Entry]) -> Result<bool> {
        let m = improvement(entries, &self.rival)?.infimum()?;
        Ok(self.epsilon.is_positive() && matches!(m.value, Bound::Finite(v) if v >= self.epsilon))
    }
}

/// Rival forecasts beating the entries' total Brier score in every state,
/// from the weighted projection onto the hull of realisable outcomes.
pub fn brier_projection_rival(entries: &[Entry]) -> Result<Option<DominanceCertificate>> {
    let weights = entries
        .iter()
        .map(|e| {
            e.rule
                .brier_weight()
                .map(|w| w.rational())
                .ok_or_else(|| Error::UnsupportedRule(e.label.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let states = representative_states(entries)?;
    let points = payoffs(entries, &states);
    let m = min_norm_point(&weights, &points);
    if m.point.iter().all(Q::is_zero) {
        return Ok(None);
    }
    let rival: Vec<Num> = entries
        .iter()
        .zip(&m.point)
        .map(|(e, d)| Num::Exact(&e.forecast.rational() + d))
        .collect();
    let eps = match improvement(entries, &rival)?.infimum()?.value {
        Bound::Finite(v) => v,
        other => {
            return Err(Error::Invalid(format!(
                "improvement infimum {other} is not finite"
            )))
        }
    };
    Ok(Some(DominanceCertificate {
        rival,
        epsilon: eps,
    }))
}

/// Per-column eventual values of a loss, for reports.
pub fn tails(rv: &Rv) -> Vec<Num> {
    (0..rv.columns()).map(|k| rv.limit(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charges::{ColumnSet, Event};
    use crate::scoring::LambdaMeasure;
    use crate::seq::Seq;

    fn n(a: i64, b: i64) -> Num {
        Num::ratio(a, b)
    }

    /// Event A is state (0, 1); its complement is everything else.
    fn event_pair(pa: Num, pb: Num) -> Vec<Entry> {
        let a = Event::new(vec![ColumnSet::Finite([1].into())]);
        let entry = |label: &str, ev: &Event, p: Num| Entry {
            label: label.into(),
            variable: ev.indicator(),
            conditioning: Event::omega(1),
            forecast: p,
            rule: LambdaMeasure::brier(),
            alpha: Num::one(),
        };
        vec![entry("a", &a, pa), entry("not_a", &a.complement(), pb)]
    }

    #[test]
    fn overpriced_pair_is_a_sure_loss() {
        let es = event_pair(n(3, 5), n(3, 5));
        let c = incoherence1_certificate(&es).unwrap().unwrap();
        assert_eq!(c.alpha, vec![n(-1, 2), n(-1, 2)]);
        assert_eq!(c.epsilon, n(1, 10));
        assert!(c.verify(&es).unwrap());
        assert!(coherence_witness(&es).unwrap().is_none());
    }

    #[test]
    fn overpriced_pair_has_a_brier_rival() {
        let es = event_pair(n(3, 5), n(3, 5));
        let c = brier_projection_rival(&es).unwrap().unwrap();
        assert_eq!(c.rival, vec![n(1, 2), n(1, 2)]);
        assert_eq!(c.epsilon, n(1, 50));
        assert!(c.verify(&es).unwrap());
    }

    #[test]
    fn fair_pair_is_coherent() {
        let es = event_pair(n(1, 4), n(3, 4));
        assert!(incoherence1_certificate(&es).unwrap().is_none());
        assert!(brier_projection_rival(&es).unwrap().is_none());
        assert!(coherence_witness(&es).unwrap().is_some());
    }

    #[test]
    fn constant_forecast_projects_to_its_value() {
        let e = Entry {
            label: "c".into(),
            variable: Rv::constant(n(1, 3), 1),
            conditioning: Event::omega(1),
            forecast: n(1, 2),
            rule: LambdaMeasure::brier(),
            alpha: Num::one(),
        };
        let c = brier_projection_rival(&[e]).unwrap().unwrap();
        assert_eq!(c.rival, vec![n(1, 3)]);
        assert_eq!(c.epsilon, n(1, 36));
    }

    #[test]
    fn dominance_kinds() {
        let a = Rv::new(vec![Seq::geometric(
            Num::one(),
            BigRational::new(1.into(), 2.into()),
        )])
        .unwrap();
        let zero = Rv::constant(Num::zero(), 1);
        assert_eq!(dominance_verdict(&a, &zero).unwrap(), Dominance::Simple);
        assert_eq!(dominance_verdict(&a, &a).unwrap(), Dominance::None);
        let b = Rv::constant(n(1, 8), 1);
        assert_eq!(
            dominance_verdict(
                &Rv::constant(n(5, 4), 1),
                &b.add(&Rv::constant(Num::one(), 1))
            )
            .unwrap(),
            Dominance::UniformStrict(n(1, 8))
        );
    }
}
