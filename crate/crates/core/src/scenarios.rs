//! Built-in scenarios: the worked examples and counterexamples, each as a
//! spec document with its expected results.

use std::collections::BTreeMap;

use crate::charges::ColumnSet;
use crate::error::{Error, Result};
use crate::num::Num;
use crate::seq::Seq;
use crate::specfile::{
    Basis, CellSetup, Check, CheckSpec, ColumnChargeSpec, EntrySpec, EventSpec, Expectation,
    Expected, FamilySpec, FamilyVariableSpec, MeasureKind, MeasureSpec, PartitionKind,
    PartitionSpec, RuleSpec, SpecFile, SystemSpec, VariableSpec,
};
use crate::system::{Forecasts, Quantity, Scope};

pub struct Scenario {
    pub id: &'static str,
    pub title: &'static str,
    /// Free parameters with their defaults.
    pub params: &'static [(&'static str, &'static str)],
    build: fn(&BTreeMap<String, Num>) -> Result<SpecFile>,
}

pub static REGISTRY: &[Scenario] = &[
    Scenario {
        id: "ex1_abstain",
        title: "Example 1 (countably many fair bets lose to abstaining)",
        params: &[("c", "0")],
        build: ex1_abstain,
    },
    Scenario {
        id: "ex3_purely_fa_brier",
        title: "Example 3 (purely finitely additive, weighted Brier)",
        params: &[],
        build: ex3_purely_fa_brier,
    },
    Scenario {
        id: "ctrex_thm1_spread",
        title: "Spread counterexample (a rival dominates when uniform spread fails)",
        params: &[],
        build: ctrex_thm1_spread,
    },
    Scenario {
        id: "ex2_dubins",
        title: "Example 2 (Dubins)",
        params: &[],
        build: ex2_dubins,
    },
    Scenario {
        id: "ctrex_thm2_similarity",
        title: "Similarity counterexample (no rival dominates when uniform similarity fails)",
        params: &[],
        build: ctrex_thm2_similarity,
    },
    Scenario {
        id: "control_ca",
        title: "Countably additive control for Example 2",
        params: &[],
        build: control_ca,
    },
];

pub fn list_scenarios() -> Vec<&'static str> {
    REGISTRY.iter().map(|s| s.id).collect()
}

pub fn find(id: &str) -> Result<&'static Scenario> {
    REGISTRY
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownScenario(id.into()))
}

impl Scenario {
    /// The scenario's spec with `params` overriding the defaults.
    pub fn spec(&self, params: &BTreeMap<String, Num>) -> Result<SpecFile> {
        let mut all = BTreeMap::new();
        for (k, v) in self.params {
            all.insert(k.to_string(), n(v));
        }
        for (k, v) in params {
            if !all.contains_key(k) {
                return Err(Error::Invalid(format!(
                    "scenario `{}` has no parameter `{k}`",
                    self.id
                )));
            }
            all.insert(k.clone(), v.clone());
        }
        (self.build)(&all)
    }
}

pub fn build_scenario(id: &str, params: &BTreeMap<String, Num>) -> Result<SpecFile> {
    find(id)?.spec(params)
}

fn n(s: &str) -> Num {
    s.parse().expect("literal")
}

fn k(s: &str) -> Seq {
    Seq::constant(n(s))
}

/// `coef * ratio^j`.
fn geo(coef: &str, ratio: &str) -> Seq {
    let r = match n(ratio) {
        Num::Exact(r) => r,
        Num::Approx(_) => unreachable!(),
    };
    Seq::geometric(n(coef), r)
}

fn half_pow(coef: &str) -> Seq {
    geo(coef, "1/2")
}

fn exp(key: &str, value: Expected, basis: Basis) -> Expectation {
    Expectation {
        key: key.into(),
        value,
        basis,
    }
}

fn val(key: &str, v: &str, basis: Basis) -> Expectation {
    exp(key, Expected::Value(k(v)), basis)
}

fn seq(key: &str, v: Seq, basis: Basis) -> Expectation {
    exp(key, Expected::Value(v), basis)
}

fn flag(key: &str, v: bool, basis: Basis) -> Expectation {
    exp(key, Expected::Bool(v), basis)
}

fn text(key: &str, v: &str, basis: Basis) -> Expectation {
    exp(key, Expected::Text(v.into()), basis)
}

use Basis::{Derived, Identity, Reported};

struct Builder(SpecFile);

impl Builder {
    fn new(name: &str, title: &str, charge: Vec<(Seq, &str)>) -> Self {
        Builder(SpecFile {
            name: name.into(),
            title: title.into(),
            columns: charge.len(),
            charge: charge
                .into_iter()
                .map(|(atoms, diffuse)| ColumnChargeSpec {
                    atoms,
                    diffuse: n(diffuse),
                })
                .collect(),
            measures: vec![],
            rules: vec![],
            variables: vec![],
            events: vec![],
            partitions: vec![],
            systems: vec![],
            checks: vec![],
        })
    }

    /// A piecewise-constant rule and its measure under one id.
    fn rule(mut self, id: &str, breakpoints: Vec<Seq>, densities: Vec<Seq>) -> Self {
        self.0.measures.push(MeasureSpec {
            id: id.into(),
            kind: MeasureKind::Piecewise,
            breakpoints,
            densities,
            scale: None,
        });
        self.0.rules.push(RuleSpec {
            id: id.into(),
            measure: id.into(),
        });
        self
    }

    fn brier(self) -> Self {
        self.rule("brier", vec![], vec![k("2")])
    }

    fn variable(mut self, id: &str, columns: Vec<Seq>) -> Self {
        self.0.variables.push(VariableSpec {
            id: id.into(),
            columns,
        });
        self
    }

    fn event(mut self, id: &str, columns: Vec<ColumnSet>) -> Self {
        self.0.events.push(EventSpec {
            id: id.into(),
            columns,
        });
        self
    }

    fn cells(mut self) -> Self {
        self.0.partitions.push(PartitionSpec {
            id: "cells".into(),
            kind: PartitionKind::CrossSection,
            null_cells: None,
            cells: vec![],
            conditionals: vec![],
        });
        self
    }

    fn system(mut self, id: &str, entries: Vec<EntrySpec>, families: Vec<FamilySpec>) -> Self {
        self.0.systems.push(SystemSpec {
            id: id.into(),
            entries,
            families,
        });
        self
    }

    fn check(mut self, id: &str, check: Check, expect: Vec<Expectation>) -> Self {
        self.0.checks.push(CheckSpec {
            id: id.into(),
            check,
            expect,
        });
        self
    }

    fn done(self) -> Result<SpecFile> {
        Ok(self.0)
    }
}

fn entry(label: &str, variable: &str, forecast: &str, rule: &str, alpha: &str) -> EntrySpec {
    EntrySpec {
        label: label.into(),
        variable: variable.into(),
        given: "omega".into(),
        forecast: n(forecast),
        rule: rule.into(),
        alpha: n(alpha),
    }
}

fn singletons(label: &str, forecast: Seq, rule: &str, alpha: Seq) -> FamilySpec {
    FamilySpec {
        label: label.into(),
        variable: FamilyVariableSpec::Diagonal {
            on: vec![k("1")],
            off: Seq::zero(),
        },
        scope: Scope::Everywhere,
        forecast,
        rule: rule.into(),
        alpha,
    }
}

fn cell_family(variable: &str, forecast: &str, rule: &str, alpha: &str) -> FamilySpec {
    FamilySpec {
        label: "given_cell".into(),
        variable: FamilyVariableSpec::Shared(variable.into()),
        scope: Scope::OnCell,
        forecast: k(forecast),
        rule: rule.into(),
        alpha: k(alpha),
    }
}

fn finite(ix: &[u64]) -> ColumnSet {
    ColumnSet::Finite(ix.iter().copied().collect())
}

fn cofinite(ix: &[u64]) -> ColumnSet {
    ColumnSet::Cofinite(ix.iter().copied().collect())
}

fn setup(variable: &str, rule: &str, cells: &str) -> CellSetup {
    CellSetup {
        variable: variable.into(),
        partition: "cells".into(),
        rule: rule.into(),
        cells: cells.into(),
    }
}

fn combined(system: &str, quantity: Quantity, rival: Option<Forecasts>) -> Check {
    Check::Combined {
        system: system.into(),
        quantity,
        rival,
    }
}

fn ex1_abstain(params: &BTreeMap<String, Num>) -> Result<SpecFile> {
    let c = params["c"].clone();
    if c.is_negative() || c >= Num::one() {
        return Err(Error::OutOfRange(format!("c = {c} must lie in [0, 1)")));
    }
    let cs = c.to_string();
    let rest = (&Num::one() - &c).to_string();
    let third = Num::ratio(1, 3).to_string();
    let prefix = [1u64, 2, 3];
    let mut b = Builder::new(
        "ex1_abstain",
        REGISTRY[0].title,
        vec![(half_pow(&cs), &rest)],
    )
    .brier();
    for i in prefix {
        b = b.variable(
            &format!("W{i}"),
            vec![Seq::zero().with_exception(i, Num::one())],
        );
    }
    let p = |i: u32| (&c * &Num::pow2_neg(i)).to_string();
    b.event("w3", vec![finite(&[3])])
        .system(
            "bets",
            vec![],
            vec![singletons("singletons", half_pow(&cs), "brier", k("1"))],
        )
        .system(
            "finite_bets",
            prefix
                .iter()
                .map(|i| {
                    entry(
                        &format!("W{i}"),
                        &format!("W{i}"),
                        &p(*i as u32),
                        "brier",
                        "1",
                    )
                })
                .collect(),
            vec![],
        )
        .system(
            "ca_bets",
            vec![],
            vec![singletons(
                "singletons",
                half_pow("1"),
                "brier",
                k("1").sub(&half_pow("1")),
            )],
        )
        .check(
            "singleton_probability",
            Check::EventProbability { event: "w3".into() },
            vec![val("value", &p(3), Derived)],
        )
        .check(
            "fair_loss",
            combined("bets", Quantity::Fair, None),
            vec![val("total_constant", &rest, Reported)],
        )
        .check(
            "abstain",
            Check::Abstain {
                system: "bets".into(),
            },
            vec![
                flag("dominated", true, Reported),
                val("epsilon", &rest, Reported),
            ],
        )
        .check(
            "finite_subset_coherent",
            Check::Incoherence {
                system: "finite_bets".into(),
            },
            vec![flag("incoherent", false, Reported)],
        )
        .check(
            "finite_subset_undominated",
            Check::BrierRival {
                system: "finite_bets".into(),
            },
            vec![flag("dominated", false, Derived)],
        )
        .check(
            "countably_additive_loss",
            combined("ca_bets", Quantity::Fair, None),
            vec![seq("total", k(&third).sub(&half_pow("1")), Reported)],
        )
        .check(
            "countably_additive_abstain",
            Check::Abstain {
                system: "ca_bets".into(),
            },
            vec![flag("dominated", false, Reported)],
        )
        .done()
}

fn ex3_purely_fa_brier(_: &BTreeMap<String, Num>) -> Result<SpecFile> {
    // Weights 2 - 2^-j, so densities 4 - 2 * 2^-j.
    let weights = k("2").sub(&half_pow("1"));
    Builder::new(
        "ex3_purely_fa_brier",
        REGISTRY[1].title,
        vec![(Seq::zero(), "1")],
    )
    .brier()
    .rule("weighted", vec![], vec![weights.scale(&Num::int(2))])
    .event("w1", vec![finite(&[1])])
    .system(
        "singletons",
        vec![],
        vec![singletons("singletons", Seq::zero(), "weighted", k("1"))],
    )
    .check(
        "singleton_probability",
        Check::EventProbability { event: "w1".into() },
        vec![val("value", "0", Reported)],
    )
    .check(
        "fair_loss",
        combined("singletons", Quantity::Fair, None),
        vec![val("total_constant", "1", Reported)],
    )
    .check(
        "abstain",
        Check::Abstain {
            system: "singletons".into(),
        },
        vec![
            flag("dominated", true, Reported),
            val("epsilon", "1", Reported),
        ],
    )
    .check(
        "score_total",
        combined("singletons", Quantity::Score, None),
        vec![
            seq("total", weights.clone(), Reported),
            val("total_sup", "2", Derived),
        ],
    )
    .check(
        "conditions",
        Check::Conditions {
            system: "singletons".into(),
            eps: Num::one(),
        },
        vec![
            flag("met", true, Reported),
            val("deviation", "1", Derived),
            val("score", "2", Derived),
            text("spread", "satisfied", Reported),
            val("spread_delta", "1/8", Derived),
        ],
    )
    .check(
        "one_changed_forecast",
        Check::Dominance {
            system: "singletons".into(),
            rival: Forecasts {
                entries: vec![],
                families: vec![Seq::zero().with_exception(1, Num::ratio(1, 2))],
            },
        },
        vec![text("verdict", "none", Derived)],
    )
    .check(
        "rival_probe",
        Check::RivalProbe {
            system: "singletons".into(),
            prefix: 2,
        },
        vec![flag("none_dominates", true, Reported)],
    )
    .check(
        "finite_d",
        Check::FiniteD {
            system: "singletons".into(),
            prefix: 2,
        },
        vec![flag("witnessed", true, Reported)],
    )
    .check(
        "propriety",
        Check::InfiniteSumPropriety {
            system: "singletons".into(),
            prefix: 2,
            construction: None,
        },
        vec![
            flag("proper", true, Reported),
            flag("strict", true, Reported),
        ],
    )
    .done()
}

fn ctrex_thm1_spread(_: &BTreeMap<String, Num>) -> Result<SpecFile> {
    let spiky = Check::Spread {
        rules: vec!["spiky".into()],
        eps: Num::one(),
    };
    let rival = Forecasts {
        entries: vec![],
        families: vec![half_pow("1/2")],
    };
    Builder::new(
        "ctrex_thm1_spread",
        REGISTRY[2].title,
        vec![(Seq::zero(), "1")],
    )
    .rule("spiky", vec![half_pow("1/2")], vec![k("2"), geo("4", "2")])
    .system(
        "spiky",
        vec![],
        vec![FamilySpec {
            label: "spiky".into(),
            variable: FamilyVariableSpec::Diagonal {
                on: vec![half_pow("1/2").sub(&k("1"))],
                off: half_pow("1"),
            },
            scope: Scope::Everywhere,
            forecast: half_pow("1"),
            rule: "spiky".into(),
            alpha: k("1"),
        }],
    )
    .check(
        "conditions",
        Check::Conditions {
            system: "spiky".into(),
            eps: Num::one(),
        },
        vec![
            val("deviation", "1", Reported),
            val("score", "3", Reported),
            text("spread", "violated", Reported),
            flag("met", false, Reported),
        ],
    )
    .check(
        "spread",
        spiky,
        vec![
            text("verdict", "violated", Reported),
            text("witness_rule", "spiky", Derived),
        ],
    )
    .check(
        "scores_at_forecasts",
        combined("spiky", Quantity::Score, None),
        vec![seq("total", k("3").add(&half_pow("1/2")), Reported)],
    )
    .check(
        "scores_at_rivals",
        combined("spiky", Quantity::Score, Some(rival.clone())),
        vec![seq("total", k("3/2").sub(&half_pow("1/2")), Reported)],
    )
    .check(
        "dominance",
        Check::Dominance {
            system: "spiky".into(),
            rival,
        },
        vec![
            text("verdict", "uniform_strict", Reported),
            val("epsilon", "3/2", Reported),
            seq("difference", k("3/2").add(&half_pow("1")), Reported),
        ],
    )
    .done()
}

fn dubins_like(name: &str, title: &str, cell_rule: (&str, Seq)) -> Builder {
    let b = Builder::new(
        name,
        title,
        vec![(Seq::zero(), "1/2"), (half_pow("1/2"), "0")],
    )
    .brier();
    let b = if cell_rule.0 == "brier" {
        b
    } else {
        b.rule(cell_rule.0, vec![], vec![cell_rule.1])
    };
    b.variable("F", vec![k("0"), k("1")])
        .event("F", vec![finite(&[]), cofinite(&[])])
        .event("H1", vec![finite(&[1]), finite(&[1])])
        .cells()
        .system(
            "forecasts",
            vec![entry("F", "F", "1/2", "brier", "1")],
            vec![cell_family("F", "1", cell_rule.0, "-1")],
        )
        .check(
            "probability_F",
            Check::EventProbability { event: "F".into() },
            vec![val("value", "1/2", Reported)],
        )
        .check(
            "probability_H1",
            Check::EventProbability { event: "H1".into() },
            vec![val("value", "1/4", Reported)],
        )
        .check(
            "F_given_H1",
            Check::ConditionalPrevision {
                variable: "F".into(),
                given: "H1".into(),
            },
            vec![val("value", "1", Reported)],
        )
        .check(
            "conglomerability",
            Check::Conglomerability {
                variable: "F".into(),
                partition: "cells".into(),
            },
            vec![
                flag("conglomerable", false, Reported),
                val("gap", "1/2", Reported),
                text("side", "inf", Derived),
            ],
        )
}

fn ex2_dubins(_: &BTreeMap<String, Num>) -> Result<SpecFile> {
    let hand_picked = Forecasts {
        entries: vec![n("3/4")],
        families: vec![k("3/4")],
    };
    dubins_like("ex2_dubins", REGISTRY[3].title, ("brier", k("2")))
        .check(
            "total_previsions",
            Check::TotalPrevisions {
                variable: "F".into(),
                partition: "cells".into(),
            },
            vec![
                flag("holds", false, Derived),
                val("prevision", "1/2", Derived),
                val("of_conditionals", "1", Derived),
            ],
        )
        .check(
            "agreement",
            Check::Agreement {
                variable: "F".into(),
                partition: "cells".into(),
            },
            vec![
                flag("agrees", true, Derived),
                flag("conglomerable", false, Derived),
            ],
        )
        .check(
            "fair_loss",
            combined("forecasts", Quantity::Fair, None),
            vec![
                val("total_constant", "1/2", Reported),
                val("prevision", "1/2", Derived),
            ],
        )
        .check(
            "abstain",
            Check::Abstain {
                system: "forecasts".into(),
            },
            vec![
                flag("dominated", true, Reported),
                val("epsilon", "1/2", Reported),
            ],
        )
        .check(
            "brier_totals",
            combined("forecasts", Quantity::Score, None),
            vec![
                val("total_column1", "5/4", Reported),
                val("total_column2", "1/4", Reported),
                val("prevision", "3/4", Derived),
            ],
        )
        .check(
            "hand_picked_rival",
            Check::Dominance {
                system: "forecasts".into(),
                rival: hand_picked,
            },
            vec![
                text("verdict", "uniform_strict", Reported),
                val("epsilon", "1/8", Reported),
                val("difference", "1/8", Reported),
                val("rival_column1", "9/8", Reported),
                val("rival_column2", "1/8", Reported),
            ],
        )
        .check(
            "construction",
            Check::DominatingRival {
                setup: setup("F", "brier", "brier"),
            },
            vec![
                val("epsilon", "1/2", Derived),
                val("w0", "1/2", Derived),
                val("w1", "1/2", Derived),
                val("q_prime", "3/4", Derived),
                val("w2", "9/20", Derived),
                val("q_x", "29/40", Derived),
                val("q_cells", "31/40", Derived),
                val("delta", "9/800", Derived),
                flag("verified", true, Identity),
                val("fair_loss", "1/2", Derived),
            ],
        )
        .check(
            "expected_score",
            Check::ExpectedScore {
                variable: "F".into(),
                rule: "brier".into(),
                forecast: n("1/2"),
            },
            vec![val("value", "1/4", Derived)],
        )
        .check(
            "propriety_probe",
            Check::ProprietyProbe {
                variable: "F".into(),
                rule: "brier".into(),
                grid: ["0", "1/4", "1/2", "3/4", "1"]
                    .iter()
                    .map(|v| n(v))
                    .collect(),
            },
            vec![val("argmin", "1/2", Derived), flag("pass", true, Identity)],
        )
        .check(
            "similarity",
            Check::Similarity {
                rules: vec!["brier".into()],
                reference: "brier".into(),
                eps: n("1/2"),
            },
            vec![
                text("verdict", "satisfied", Identity),
                val("gamma", "1/2", Identity),
            ],
        )
        .check(
            "no_dominance_precondition",
            Check::NoDominance {
                setup: setup("F", "brier", "brier"),
                prefix: 1,
            },
            vec![text("error", "precondition_failed", Identity)],
        )
        .check(
            "propriety",
            Check::InfiniteSumPropriety {
                system: "forecasts".into(),
                prefix: 1,
                construction: Some(setup("F", "brier", "brier")),
            },
            vec![
                flag("proper", false, Reported),
                flag("witness_is_construction", true, Identity),
            ],
        )
        .done()
}

fn ctrex_thm2_similarity(_: &BTreeMap<String, Num>) -> Result<SpecFile> {
    dubins_like(
        "ctrex_thm2_similarity",
        REGISTRY[4].title,
        ("fading", half_pow("1")),
    )
    .check(
        "similarity",
        Check::Similarity {
            rules: vec!["brier".into(), "fading".into()],
            reference: "brier".into(),
            eps: n("1/2"),
        },
        vec![text("verdict", "violated", Reported)],
    )
    .check(
        "construction",
        Check::DominatingRival {
            setup: setup("F", "brier", "fading"),
        },
        vec![text("error", "similarity_violated", Identity)],
    )
    .check(
        "case_analysis",
        Check::SimilarityFailure {
            variable: "F".into(),
            partition: "cells".into(),
            prefix: 2,
        },
        vec![
            flag("identity_holds", true, Reported),
            flag("bound_holds", true, Reported),
            val("dominated", "0", Reported),
        ],
    )
    .check(
        "rival_probe",
        Check::RivalProbe {
            system: "forecasts".into(),
            prefix: 2,
        },
        vec![flag("none_dominates", true, Reported)],
    )
    .done()
}

fn control_ca(_: &BTreeMap<String, Num>) -> Result<SpecFile> {
    Builder::new(
        "control_ca",
        REGISTRY[5].title,
        vec![(half_pow("1/4"), "0"), (half_pow("3/4"), "0")],
    )
    .brier()
    .variable("F", vec![k("0"), k("1")])
    .event("H1", vec![finite(&[1]), finite(&[1])])
    .cells()
    .system(
        "forecasts",
        vec![entry("F", "F", "3/4", "brier", "1")],
        vec![cell_family("F", "3/4", "brier", "-1")],
    )
    .check(
        "F_given_H1",
        Check::ConditionalPrevision {
            variable: "F".into(),
            given: "H1".into(),
        },
        vec![val("value", "3/4", Reported)],
    )
    .check(
        "prevision_F",
        Check::Prevision {
            variable: "F".into(),
        },
        vec![val("value", "3/4", Derived)],
    )
    .check(
        "conglomerability",
        Check::Conglomerability {
            variable: "F".into(),
            partition: "cells".into(),
        },
        vec![flag("conglomerable", true, Reported)],
    )
    .check(
        "total_previsions",
        Check::TotalPrevisions {
            variable: "F".into(),
            partition: "cells".into(),
        },
        vec![
            flag("holds", true, Derived),
            val("of_conditionals", "3/4", Derived),
        ],
    )
    .check(
        "agreement",
        Check::Agreement {
            variable: "F".into(),
            partition: "cells".into(),
        },
        vec![
            flag("agrees", true, Derived),
            flag("conglomerable", true, Derived),
        ],
    )
    .check(
        "fair_loss",
        combined("forecasts", Quantity::Fair, None),
        vec![val("prevision", "0", Derived)],
    )
    .check(
        "no_dominance",
        Check::NoDominance {
            setup: setup("F", "brier", "brier"),
            prefix: 1,
        },
        vec![
            flag("fair_zero", true, Derived),
            flag("none_dominates", true, Derived),
        ],
    )
    .check(
        "construction",
        Check::DominatingRival {
            setup: setup("F", "brier", "brier"),
        },
        vec![text("error", "not_nonconglomerable", Identity)],
    )
    .check(
        "propriety",
        Check::InfiniteSumPropriety {
            system: "forecasts".into(),
            prefix: 1,
            construction: Some(setup("F", "brier", "brier")),
        },
        vec![flag("proper", true, Reported)],
    )
    .done()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, RunOptions};

    #[test]
    fn registry() {
        assert_eq!(list_scenarios().len(), 6);
        assert!(find("bogus").is_err());
        assert!(build_scenario(
            "ex1_abstain",
            &BTreeMap::from([("d".to_string(), Num::one())])
        )
        .is_err());
    }

    #[test]
    fn every_scenario_passes() {
        for id in list_scenarios() {
            let spec = build_scenario(id, &BTreeMap::new()).unwrap();
            let r = run(&spec, &RunOptions::default()).unwrap();
            for c in &r.report.checks {
                assert!(
                    c.pass,
                    "{id}/{}: {}",
                    c.id,
                    serde_json::to_string_pretty(c).unwrap()
                );
            }
        }
    }

    #[test]
    fn abstain_margin_tracks_c() {
        let spec = build_scenario(
            "ex1_abstain",
            &BTreeMap::from([("c".to_string(), Num::ratio(1, 4))]),
        )
        .unwrap();
        let r = run(&spec, &RunOptions::default()).unwrap();
        assert!(r.report.pass());
        let eps = &r.report.check("abstain").unwrap().outputs["epsilon"];
        assert_eq!(eps["exact"], "3/4");
    }
}
