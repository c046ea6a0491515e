//! Forecast systems: finitely many single forecasts plus indexed families of
//! countably many, each scored or priced, and their exact per-state totals.

use serde::{Deserialize, Serialize};

use crate::charges::{Event, Rv};
use crate::error::{Error, Result};
use crate::num::Num;
use crate::scoring::{LambdaMeasure, RuleFamily};
use crate::seq::{lift, Horizon, Kernel, Scalar, Seq};

/// What a forecast contributes in a given state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `alpha * (x - p)` on the conditioning event.
    Fair,
    /// `g(x, p)` on the conditioning event.
    Score,
    /// `|x - p|` on the conditioning event.
    Deviation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub label: String,
    pub variable: Rv,
    pub conditioning: Event,
    pub forecast: Num,
    pub rule: LambdaMeasure,
    pub alpha: Num,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyVariable {
    /// Every member forecasts the same variable.
    Shared(Rv),
    /// Member `i` takes `on[k](i)` at state `(k, i)` and `off(i)` elsewhere.
    Diagonal { on: Vec<Seq>, off: Seq },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Member `j` is conditional on the cross-section cell `H_j`.
    OnCell,
    /// Members are unconditional.
    Everywhere,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub label: String,
    pub variable: FamilyVariable,
    pub scope: Scope,
    pub forecast: Seq,
    pub rule: RuleFamily,
    pub alpha: Seq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct System {
    columns: usize,
    entries: Vec<Entry>,
    families: Vec<Family>,
}

/// Forecasts for every entry and family of a system, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forecasts {
    #[serde(default)]
    pub entries: Vec<Num>,
    #[serde(default)]
    pub families: Vec<Seq>,
}

struct TermKernel<'a> {
    quantity: Quantity,
    rule: &'a RuleFamily,
    forecast: &'a Seq,
    alpha: &'a Seq,
    x: &'a Seq,
}

impl Kernel for TermKernel<'_> {
    fn inputs(&self) -> Vec<&Seq> {
        let mut v = self.rule.params();
        v.extend([self.forecast, self.alpha, self.x]);
        v
    }

    fn eval<T: Scalar>(&self, a: &[T], h: &Horizon) -> Result<T> {
        let n = self.rule.param_count();
        let (f, al, x) = (&a[n], &a[n + 1], &a[n + 2]);
        match self.quantity {
            Quantity::Fair => Ok(al.mul(&x.sub(f))),
            Quantity::Score => self.rule.rebuild(&a[..n]).score(x, f, h),
            Quantity::Deviation => Ok(x.sub(f).abs(h)),
        }
    }
}

fn term(q: Quantity, rule: &RuleFamily, forecast: &Seq, alpha: &Seq, x: &Seq) -> Result<Seq> {
    lift(&TermKernel {
        quantity: q,
        rule,
        forecast,
        alpha,
        x,
    })
}

fn divergent(what: &str, e: Error) -> Error {
    match e {
        Error::Invalid(m) | Error::DivergentCombination(m) => {
            Error::DivergentCombination(format!("{what}: {m}"))
        }
        other => other,
    }
}

impl Family {
    fn contribution(&self, q: Quantity, columns: usize) -> Result<Vec<Seq>> {
        let t = |x: &Seq| term(q, &self.rule, &self.forecast, &self.alpha, x);
        match (&self.variable, self.scope) {
            (FamilyVariable::Shared(x), Scope::OnCell) => x.cols().iter().map(t).collect(),
            (FamilyVariable::Diagonal { on, .. }, Scope::OnCell) => on.iter().map(t).collect(),
            (FamilyVariable::Diagonal { on, off }, Scope::Everywhere) => {
                let rest = t(off)?;
                let total = rest.series_sum().map_err(|_| {
                    Error::DivergentCombination(format!(
                        "{}: off-diagonal terms {rest} are not summable",
                        self.label
                    ))
                })?;
                let base = Seq::constant(total).sub(&rest);
                on.iter()
                    .take(columns)
                    .map(|s| Ok(base.add(&t(s)?)))
                    .collect()
            }
            (FamilyVariable::Shared(_), Scope::Everywhere) => Err(Error::Invalid(format!(
                "family {}: a shared variable needs cell scope",
                self.label
            ))),
        }
    }
}

impl System {
    pub fn new(columns: usize, entries: Vec<Entry>, families: Vec<Family>) -> Result<Self> {
        for e in &entries {
            if e.variable.columns() != columns || e.conditioning.columns() != columns {
                return Err(Error::Invalid(format!(
                    "entry {} does not fit {columns} columns",
                    e.label
                )));
            }
            if e.conditioning.is_empty() {
                return Err(Error::Invalid(format!(
                    "entry {} conditions on the empty event",
                    e.label
                )));
            }
            e.rule.validate()?;
        }
        for f in &families {
            match (&f.variable, f.scope) {
                (FamilyVariable::Shared(x), Scope::OnCell) if x.columns() == columns => {}
                (FamilyVariable::Diagonal { on, off }, _) if on.len() == columns => {
                    if !off.is_convergent() || on.iter().any(|s| !s.is_convergent()) {
                        return Err(Error::Invalid(format!(
                            "family {}: values must converge",
                            f.label
                        )));
                    }
                }
                (FamilyVariable::Shared(_), Scope::Everywhere) => {
                    return Err(Error::Invalid(format!(
                        "family {}: a shared variable needs cell scope",
                        f.label
                    )))
                }
                _ => {
                    return Err(Error::Invalid(format!(
                        "family {} does not fit {columns} columns",
                        f.label
                    )))
                }
            }
            f.rule.validate()?;
        }
        Ok(System {
            columns,
            entries,
            families,
        })
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn forecasts(&self) -> Forecasts {
        Forecasts {
            entries: self.entries.iter().map(|e| e.forecast.clone()).collect(),
            families: self.families.iter().map(|f| f.forecast.clone()).collect(),
        }
    }

    pub fn with_forecasts(&self, f: &Forecasts) -> Result<System> {
        if f.entries.len() != self.entries.len() || f.families.len() != self.families.len() {
            return Err(Error::Invalid(
                "forecast vector does not match the system".into(),
            ));
        }
        let mut s = self.clone();
        for (e, v) in s.entries.iter_mut().zip(&f.entries) {
            e.forecast = v.clone();
        }
        for (fam, v) in s.families.iter_mut().zip(&f.families) {
            if !v.is_convergent() {
                return Err(Error::Invalid(format!("forecasts {v} do not converge")));
            }
            fam.forecast = v.clone();
        }
        Ok(s)
    }

    pub fn with_alphas(&self, entries: &[Num], families: &[Seq]) -> Result<System> {
        if entries.len() != self.entries.len() || families.len() != self.families.len() {
            return Err(Error::Invalid(
                "coefficient vector does not match the system".into(),
            ));
        }
        let mut s = self.clone();
        for (e, a) in s.entries.iter_mut().zip(entries) {
            e.alpha = a.clone();
        }
        for (f, a) in s.families.iter_mut().zip(families) {
            f.alpha = a.clone();
        }
        Ok(s)
    }

    pub fn approximate(&self) -> System {
        let mut s = self.clone();
        for e in &mut s.entries {
            e.variable = e.variable.approximate();
            e.forecast = e.forecast.approximate();
            e.rule = e.rule.approximate();
            e.alpha = e.alpha.approximate();
        }
        for f in &mut s.families {
            f.variable = match &f.variable {
                FamilyVariable::Shared(x) => FamilyVariable::Shared(x.approximate()),
                FamilyVariable::Diagonal { on, off } => FamilyVariable::Diagonal {
                    on: on.iter().map(Seq::approximate).collect(),
                    off: off.approximate(),
                },
            };
            f.forecast = f.forecast.approximate();
            f.rule = f.rule.approximate();
            f.alpha = f.alpha.approximate();
        }
        s
    }

    /// Exact per-state total of `q` over every entry and family member.
    pub fn total(&self, q: Quantity) -> Result<Rv> {
        let mut cols = vec![Seq::zero(); self.columns];
        for e in &self.entries {
            let rule = e.rule.as_family();
            let (f, a) = (
                Seq::constant(e.forecast.clone()),
                Seq::constant(e.alpha.clone()),
            );
            let on = e.conditioning.indicator();
            for (k, c) in cols.iter_mut().enumerate() {
                let t = term(q, &rule, &f, &a, e.variable.col(k))?;
                *c = c.add(&t.mul(on.col(k)));
            }
        }
        for fam in &self.families {
            for (c, t) in cols.iter_mut().zip(fam.contribution(q, self.columns)?) {
                *c = c.add(&t);
            }
        }
        Rv::new(cols).map_err(|e| divergent("total", e))
    }

    pub fn combined_fair_loss(&self) -> Result<Rv> {
        self.total(Quantity::Fair)
    }

    pub fn combined_score(&self) -> Result<Rv> {
        self.total(Quantity::Score)
    }

    pub fn combined_deviation(&self) -> Result<Rv> {
        self.total(Quantity::Deviation)
    }

    /// Every single rule and family rule in the system, labelled.
    pub fn rules(&self) -> Vec<(String, crate::scoring::Rule)> {
        use crate::scoring::Rule;
        self.entries
            .iter()
            .map(|e| (e.label.clone(), Rule::Single(e.rule.clone())))
            .chain(
                self.families
                    .iter()
                    .map(|f| (f.label.clone(), Rule::Family(f.rule.clone()))),
            )
            .collect()
    }
}
