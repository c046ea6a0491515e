//! Declarative input documents (JSON) and their resolution into a model of
//! charges, variables, events, partitions, rules and forecast systems.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::charges::{Charge, ColumnCharge, ColumnSet, Event, Partition, Rv};
use crate::error::Error;
use crate::num::Num;
use crate::scoring::{LambdaMeasure, Measure, Rule, RuleFamily};
use crate::seq::Seq;
use crate::system::{Entry, Family, FamilyVariable, Forecasts, Quantity, Scope, System};

/// An error located at a field path inside a spec document.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {error}")]
pub struct SpecError {
    pub path: String,
    #[source]
    pub error: Error,
}

fn at<T>(path: impl fmt::Display, r: Result<T, Error>) -> Result<T, SpecError> {
    r.map_err(|error| SpecError {
        path: path.to_string(),
        error,
    })
}

fn is_zero_seq(s: &Seq) -> bool {
    s.is_zero()
}

fn is_zero_num(n: &Num) -> bool {
    n.is_zero()
}

fn is_one_num(n: &Num) -> bool {
    *n == Num::one()
}

fn is_one_seq(s: &Seq) -> bool {
    *s == Seq::constant(Num::one())
}

fn one_num() -> Num {
    Num::one()
}

fn one_seq() -> Seq {
    Seq::constant(Num::one())
}

fn omega() -> String {
    "omega".into()
}

fn is_omega(s: &String) -> bool {
    s == "omega"
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnChargeSpec {
    #[serde(default = "Seq::zero", skip_serializing_if = "is_zero_seq")]
    pub atoms: Seq,
    #[serde(default = "Num::zero", skip_serializing_if = "is_zero_num")]
    pub diffuse: Num,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Piecewise,
    Sqrt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub id: String,
    pub kind: MeasureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breakpoints: Vec<Seq>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub densities: Vec<Seq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Seq>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub id: String,
    pub measure: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub id: String,
    /// Values along each column.
    pub columns: Vec<Seq>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub id: String,
    pub columns: Vec<ColumnSet>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    CrossSection,
    Columns,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalSpec {
    pub cell: usize,
    pub charge: Vec<ColumnChargeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub id: String,
    pub kind: PartitionKind,
    /// Per-column weights inside cross-section cells of probability 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_cells: Option<Vec<Seq>>,
    /// Event ids, for explicit partitions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditionals: Vec<ConditionalSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub label: String,
    pub variable: String,
    #[serde(default = "omega", skip_serializing_if = "is_omega")]
    pub given: String,
    pub forecast: Num,
    pub rule: String,
    #[serde(default = "one_num", skip_serializing_if = "is_one_num")]
    pub alpha: Num,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyVariableSpec {
    Shared(String),
    Diagonal { on: Vec<Seq>, off: Seq },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub label: String,
    pub variable: FamilyVariableSpec,
    pub scope: Scope,
    pub forecast: Seq,
    pub rule: String,
    #[serde(default = "one_seq", skip_serializing_if = "is_one_seq")]
    pub alpha: Seq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<EntrySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<FamilySpec>,
}

/// How an expected value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Stated with the original example.
    Reported,
    /// Worked out independently from the definitions.
    Derived,
    /// Holds by construction.
    Identity,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Reported => "reported",
            Basis::Derived => "derived",
            Basis::Identity => "identity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Bool(bool),
    Value(Seq),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub key: String,
    pub value: Expected,
    pub basis: Basis,
}

/// The three rule ids of a forecast of `X` given every cross-section cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSetup {
    pub variable: String,
    pub partition: String,
    /// Rule for the unconditional forecast.
    pub rule: String,
    /// Rule family for the cell forecasts.
    pub cells: String,
}

fn default_eps() -> Num {
    Num::one()
}

fn default_prefix() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    EventProbability {
        event: String,
    },
    Prevision {
        variable: String,
    },
    ConditionalPrevision {
        variable: String,
        given: String,
    },
    ExpectedScore {
        variable: String,
        rule: String,
        forecast: Num,
    },
    ProprietyProbe {
        variable: String,
        rule: String,
        grid: Vec<Num>,
    },
    Conglomerability {
        variable: String,
        partition: String,
    },
    TotalPrevisions {
        variable: String,
        partition: String,
    },
    Agreement {
        variable: String,
        partition: String,
    },
    Combined {
        system: String,
        quantity: Quantity,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rival: Option<Forecasts>,
    },
    Abstain {
        system: String,
    },
    Dominance {
        system: String,
        rival: Forecasts,
    },
    Spread {
        rules: Vec<String>,
        #[serde(default = "default_eps")]
        eps: Num,
    },
    Similarity {
        rules: Vec<String>,
        reference: String,
        #[serde(default = "default_eps")]
        eps: Num,
    },
    LogScore {
        c1: Num,
        c2: Num,
        q: Num,
    },
    Conditions {
        system: String,
        #[serde(default = "default_eps")]
        eps: Num,
    },
    DominatingRival {
        #[serde(flatten)]
        setup: CellSetup,
    },
    NoDominance {
        #[serde(flatten)]
        setup: CellSetup,
        #[serde(default = "default_prefix")]
        prefix: usize,
    },
    RivalProbe {
        system: String,
        #[serde(default = "default_prefix")]
        prefix: usize,
    },
    FiniteD {
        system: String,
        #[serde(default = "default_prefix")]
        prefix: usize,
    },
    SimilarityFailure {
        variable: String,
        partition: String,
        #[serde(default = "default_prefix")]
        prefix: usize,
    },
    InfiniteSumPropriety {
        system: String,
        #[serde(default = "default_prefix")]
        prefix: usize,
        /// Adds the constructed dominating rival as a candidate.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        construction: Option<CellSetup>,
    },
    Incoherence {
        system: String,
    },
    BrierRival {
        system: String,
    },
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::EventProbability { .. } => "event_probability",
            Check::Prevision { .. } => "prevision",
            Check::ConditionalPrevision { .. } => "conditional_prevision",
            Check::ExpectedScore { .. } => "expected_score",
            Check::ProprietyProbe { .. } => "propriety_probe",
            Check::Conglomerability { .. } => "conglomerability",
            Check::TotalPrevisions { .. } => "total_previsions",
            Check::Agreement { .. } => "agreement",
            Check::Combined { .. } => "combined",
            Check::Abstain { .. } => "abstain",
            Check::Dominance { .. } => "dominance",
            Check::Spread { .. } => "spread",
            Check::Similarity { .. } => "similarity",
            Check::LogScore { .. } => "log_score",
            Check::Conditions { .. } => "conditions",
            Check::DominatingRival { .. } => "dominating_rival",
            Check::NoDominance { .. } => "no_dominance",
            Check::RivalProbe { .. } => "rival_probe",
            Check::FiniteD { .. } => "finite_d",
            Check::SimilarityFailure { .. } => "similarity_failure",
            Check::InfiniteSumPropriety { .. } => "infinite_sum_propriety",
            Check::Incoherence { .. } => "incoherence",
            Check::BrierRival { .. } => "brier_rival",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub id: String,
    #[serde(flatten)]
    pub check: Check,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expect: Vec<Expectation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub title: String,
    pub columns: usize,
    pub charge: Vec<ColumnChargeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measures: Vec<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<RuleSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variables: Vec<VariableSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partitions: Vec<PartitionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub systems: Vec<SystemSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckSpec>,
}

impl SpecFile {
    /// Parse a JSON document; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<SpecFile, SpecError> {
        serde_json::from_str(text).map_err(|e| SpecError {
            path: format!("line {}, column {}", e.line(), e.column()),
            error: Error::Invalid(e.to_string()),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec documents always serialize")
    }

    pub fn resolve(&self) -> Result<Model, SpecError> {
        Model::build(self)
    }
}

/// A resolved, validated spec document.
#[derive(Clone, Debug)]
pub struct Model {
    pub columns: usize,
    pub charge: Charge,
    pub rules: BTreeMap<String, RuleFamily>,
    pub variables: BTreeMap<String, Rv>,
    pub events: BTreeMap<String, Event>,
    pub partitions: BTreeMap<String, Partition>,
    pub systems: BTreeMap<String, System>,
}

fn charge_of(cols: &[ColumnChargeSpec], columns: usize) -> Result<Charge, Error> {
    if cols.len() != columns {
        return Err(Error::Invalid(format!(
            "expected {columns} columns, found {}",
            cols.len()
        )));
    }
    Charge::new(
        cols.iter()
            .map(|c| ColumnCharge {
                atoms: c.atoms.clone(),
                diffuse: c.diffuse.clone(),
            })
            .collect(),
    )
}

fn lookup<'a, T>(
    map: &'a BTreeMap<String, T>,
    kind: &'static str,
    id: &str,
) -> Result<&'a T, Error> {
    map.get(id).ok_or_else(|| Error::Unresolved {
        kind,
        id: id.into(),
    })
}

fn insert<T>(map: &mut BTreeMap<String, T>, path: String, id: &str, v: T) -> Result<(), SpecError> {
    if map.insert(id.to_string(), v).is_some() {
        return at(path, Err(Error::Invalid(format!("duplicate id `{id}`"))));
    }
    Ok(())
}

impl Model {
    fn build(spec: &SpecFile) -> Result<Model, SpecError> {
        if spec.columns == 0 {
            return at(
                "columns",
                Err(Error::Invalid("need at least one column".into())),
            );
        }
        let k = spec.columns;
        let charge = at("charge", charge_of(&spec.charge, k))?;
        let mut measures = BTreeMap::new();
        for (n, m) in spec.measures.iter().enumerate() {
            let path = format!("measures[{n}]");
            let built: RuleFamily = match m.kind {
                MeasureKind::Piecewise => Measure::Piecewise {
                    breakpoints: m.breakpoints.clone(),
                    densities: m.densities.clone(),
                },
                MeasureKind::Sqrt => Measure::Sqrt {
                    scale: at(
                        &path,
                        m.scale
                            .clone()
                            .ok_or_else(|| Error::Invalid("sqrt measure needs a scale".into())),
                    )?,
                },
            };
            at(&path, built.validate())?;
            insert(&mut measures, path, &m.id, built)?;
        }
        let mut rules = BTreeMap::new();
        for (n, r) in spec.rules.iter().enumerate() {
            let path = format!("rules[{n}]");
            let m = at(
                format!("{path}.measure"),
                lookup(&measures, "measure", &r.measure),
            )?;
            insert(&mut rules, path, &r.id, m.clone())?;
        }
        let mut variables = BTreeMap::new();
        for (n, v) in spec.variables.iter().enumerate() {
            let path = format!("variables[{n}]");
            if v.columns.len() != k {
                return at(
                    path,
                    Err(Error::Invalid(format!(
                        "expected {k} columns, found {}",
                        v.columns.len()
                    ))),
                );
            }
            let rv = at(&path, Rv::new(v.columns.clone()))?;
            insert(&mut variables, path, &v.id, rv)?;
        }
        let mut events = BTreeMap::new();
        events.insert("omega".to_string(), Event::omega(k));
        for (n, e) in spec.events.iter().enumerate() {
            let path = format!("events[{n}]");
            if e.columns.len() != k {
                return at(
                    path,
                    Err(Error::Invalid(format!(
                        "expected {k} columns, found {}",
                        e.columns.len()
                    ))),
                );
            }
            insert(&mut events, path, &e.id, Event::new(e.columns.clone()))?;
        }
        let mut partitions = BTreeMap::new();
        for (n, p) in spec.partitions.iter().enumerate() {
            let path = format!("partitions[{n}]");
            let mut conditionals = BTreeMap::new();
            for (c, cond) in p.conditionals.iter().enumerate() {
                let ch = at(
                    format!("{path}.conditionals[{c}]"),
                    charge_of(&cond.charge, k),
                )?;
                conditionals.insert(cond.cell, ch);
            }
            let built = match p.kind {
                PartitionKind::CrossSection => Partition::CrossSection {
                    null_cells: p.null_cells.clone(),
                },
                PartitionKind::Columns => Partition::Columns { conditionals },
                PartitionKind::Explicit => Partition::Explicit {
                    cells: p
                        .cells
                        .iter()
                        .enumerate()
                        .map(|(c, id)| {
                            at(
                                format!("{path}.cells[{c}]"),
                                lookup(&events, "event", id).cloned(),
                            )
                        })
                        .collect::<Result<_, _>>()?,
                    conditionals,
                },
            };
            at(&path, built.validate(k))?;
            insert(&mut partitions, path, &p.id, built)?;
        }
        let single = |path: &str, id: &str| -> Result<LambdaMeasure, SpecError> {
            let fam = at(path, lookup(&rules, "rule", id))?;
            at(path, fixed_rule(id, fam))
        };
        let mut systems = BTreeMap::new();
        for (n, s) in spec.systems.iter().enumerate() {
            let path = format!("systems[{n}]");
            let mut entries = Vec::new();
            for (e, es) in s.entries.iter().enumerate() {
                let ep = format!("{path}.entries[{e}]");
                entries.push(Entry {
                    label: es.label.clone(),
                    variable: at(
                        format!("{ep}.variable"),
                        lookup(&variables, "variable", &es.variable),
                    )?
                    .clone(),
                    conditioning: at(format!("{ep}.given"), lookup(&events, "event", &es.given))?
                        .clone(),
                    forecast: es.forecast.clone(),
                    rule: single(&format!("{ep}.rule"), &es.rule)?,
                    alpha: es.alpha.clone(),
                });
            }
            let mut families = Vec::new();
            for (f, fs) in s.families.iter().enumerate() {
                let fp = format!("{path}.families[{f}]");
                let variable = match &fs.variable {
                    FamilyVariableSpec::Shared(id) => FamilyVariable::Shared(
                        at(format!("{fp}.variable"), lookup(&variables, "variable", id))?.clone(),
                    ),
                    FamilyVariableSpec::Diagonal { on, off } => FamilyVariable::Diagonal {
                        on: on.clone(),
                        off: off.clone(),
                    },
                };
                families.push(Family {
                    label: fs.label.clone(),
                    variable,
                    scope: fs.scope,
                    forecast: fs.forecast.clone(),
                    rule: at(format!("{fp}.rule"), lookup(&rules, "rule", &fs.rule))?.clone(),
                    alpha: fs.alpha.clone(),
                });
            }
            let sys = at(&path, System::new(k, entries, families))?;
            insert(&mut systems, path, &s.id, sys)?;
        }
        let model = Model {
            columns: k,
            charge,
            rules,
            variables,
            events,
            partitions,
            systems,
        };
        for (n, c) in spec.checks.iter().enumerate() {
            at(
                format!("checks[{n}] ({})", c.id),
                model.check_refs(&c.check),
            )?;
        }
        let mut ids = std::collections::BTreeSet::new();
        for (n, c) in spec.checks.iter().enumerate() {
            if !ids.insert(&c.id) {
                return at(
                    format!("checks[{n}]"),
                    Err(Error::Invalid(format!("duplicate id `{}`", c.id))),
                );
            }
        }
        Ok(model)
    }

    pub fn rule(&self, id: &str) -> Result<&RuleFamily, Error> {
        lookup(&self.rules, "rule", id)
    }

    pub fn single_rule(&self, id: &str) -> Result<LambdaMeasure, Error> {
        fixed_rule(id, self.rule(id)?)
    }

    pub fn any_rule(&self, id: &str) -> Result<Rule, Error> {
        let fam = self.rule(id)?;
        Ok(match fixed_rule(id, fam) {
            Ok(m) => Rule::Single(m),
            Err(_) => Rule::Family(fam.clone()),
        })
    }

    pub fn variable(&self, id: &str) -> Result<&Rv, Error> {
        lookup(&self.variables, "variable", id)
    }

    pub fn event(&self, id: &str) -> Result<&Event, Error> {
        lookup(&self.events, "event", id)
    }

    pub fn partition(&self, id: &str) -> Result<&Partition, Error> {
        lookup(&self.partitions, "partition", id)
    }

    pub fn system(&self, id: &str) -> Result<&System, Error> {
        lookup(&self.systems, "system", id)
    }

    fn setup_refs(&self, s: &CellSetup) -> Result<(), Error> {
        self.variable(&s.variable)?;
        self.partition(&s.partition)?;
        self.single_rule(&s.rule)?;
        self.rule(&s.cells).map(|_| ())
    }

    /// Every id a check names must resolve.
    fn check_refs(&self, c: &Check) -> Result<(), Error> {
        match c {
            Check::EventProbability { event } => self.event(event).map(|_| ()),
            Check::Prevision { variable } => self.variable(variable).map(|_| ()),
            Check::ConditionalPrevision { variable, given } => {
                self.variable(variable)?;
                self.event(given).map(|_| ())
            }
            Check::ExpectedScore { variable, rule, .. }
            | Check::ProprietyProbe { variable, rule, .. } => {
                self.variable(variable)?;
                self.single_rule(rule).map(|_| ())
            }
            Check::Conglomerability {
                variable,
                partition,
            }
            | Check::TotalPrevisions {
                variable,
                partition,
            }
            | Check::Agreement {
                variable,
                partition,
            }
            | Check::SimilarityFailure {
                variable,
                partition,
                ..
            } => {
                self.variable(variable)?;
                self.partition(partition).map(|_| ())
            }
            Check::Combined { system, .. }
            | Check::Abstain { system }
            | Check::Dominance { system, .. }
            | Check::Conditions { system, .. }
            | Check::RivalProbe { system, .. }
            | Check::FiniteD { system, .. }
            | Check::Incoherence { system }
            | Check::BrierRival { system } => self.system(system).map(|_| ()),
            Check::InfiniteSumPropriety {
                system,
                construction,
                ..
            } => {
                self.system(system)?;
                construction.as_ref().map_or(Ok(()), |s| self.setup_refs(s))
            }
            Check::Spread { rules, .. } => rules.iter().try_for_each(|r| self.rule(r).map(|_| ())),
            Check::Similarity {
                rules, reference, ..
            } => {
                rules.iter().try_for_each(|r| self.rule(r).map(|_| ()))?;
                self.single_rule(reference).map(|_| ())
            }
            Check::LogScore { .. } => Ok(()),
            Check::DominatingRival { setup } | Check::NoDominance { setup, .. } => {
                self.setup_refs(setup)
            }
        }
    }

    /// Replace every exact number by its floating-point approximation.
    pub fn approximate(&self) -> Model {
        Model {
            columns: self.columns,
            charge: self.charge.approximate(),
            rules: self
                .rules
                .iter()
                .map(|(k, v)| (k.clone(), v.approximate()))
                .collect(),
            variables: self
                .variables
                .iter()
                .map(|(k, v)| (k.clone(), v.approximate()))
                .collect(),
            events: self.events.clone(),
            partitions: self.partitions.clone(),
            systems: self
                .systems
                .iter()
                .map(|(k, v)| (k.clone(), v.approximate()))
                .collect(),
        }
    }
}

fn fixed_rule(id: &str, fam: &RuleFamily) -> Result<LambdaMeasure, Error> {
    let params: Option<Vec<Num>> = fam.params().iter().map(|s| s.as_constant()).collect();
    params.map(|p| fam.rebuild(&p)).ok_or_else(|| {
        Error::Invalid(format!(
            "rule `{id}` varies with the index; a single forecast needs a fixed rule"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "name": "tiny",
        "columns": 2,
        "charge": [{"diffuse": "1/2"}, {"atoms": {"terms": [{"coef": "1/2", "ratio": "1/2"}]}}],
        "measures": [{"id": "two", "kind": "piecewise", "densities": ["2"]}],
        "rules": [{"id": "brier", "measure": "two"}],
        "variables": [{"id": "F", "columns": ["0", "1"]}],
        "partitions": [{"id": "cells", "kind": "cross_section"}],
        "systems": [{"id": "s", "entries": [{"label": "f", "variable": "F", "forecast": "1/2", "rule": "brier"}]}],
        "checks": [{"id": "p", "kind": "prevision", "variable": "F", "expect": [{"key": "value", "value": "0.5", "basis": "derived"}]}]
    }"#;

    #[test]
    fn parses_and_resolves() {
        let spec = SpecFile::from_json(DOC).unwrap();
        let model = spec.resolve().unwrap();
        assert_eq!(
            model
                .charge
                .prevision(model.variable("F").unwrap())
                .unwrap(),
            Num::ratio(1, 2)
        );
        let again = SpecFile::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn mass_must_normalize() {
        let doc = DOC.replace(r#"{"diffuse": "1/2"}"#, r#"{"diffuse": "0.4"}"#);
        let err = SpecFile::from_json(&doc).unwrap().resolve().unwrap_err();
        assert_eq!(err.path, "charge");
        assert!(err.to_string().contains("normalization"));
    }

    #[test]
    fn unknown_rule_is_unresolved() {
        let doc = DOC.replace(r#""rule": "brier""#, r#""rule": "log""#);
        let err = SpecFile::from_json(&doc).unwrap().resolve().unwrap_err();
        assert_eq!(err.error.code(), "unresolved");
        assert_eq!(err.path, "systems[0].entries[0].rule");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = SpecFile::from_json("{\n  \"name\": }").unwrap_err();
        assert!(err.path.starts_with("line 2"));
    }
}
