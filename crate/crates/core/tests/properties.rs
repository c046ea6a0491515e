mod common;

use common::*;
use prevision::aggregation::{
    conglomerability_verdict, rival_probe, theorem4_agreement, thm1_condition_check,
    thm2_rival_construction, thm3_no_dominance_probe, ProbeConfig,
};
use prevision::coherence::{abstain_dominance, brier_projection_rival, incoherence1_certificate};
use prevision::{
    Bound, Exec, Family, FamilyVariable, Num, Partition, RuleFamily, Scope, Seq, System,
};
use proptest::prelude::*;
use rand::Rng;

fn small_grid() -> ProbeConfig {
    ProbeConfig {
        prefix: 1,
        max_candidates: 64,
        ..ProbeConfig::new((-4..=4).map(|i| Num::ratio(i, 2)).collect())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn countably_additive_fair_bets_have_zero_prevision(seed in any::<u64>()) {
        let mut r = rng(seed);
        let columns = r.gen_range(2..=3);
        let p = cell_charge_with(&mut r, columns, false);
        let x = rv(&mut r, columns);
        let (rule0, cells) = (piecewise(&mut r), piecewise(&mut r).as_family());
        let probe = thm3_no_dominance_probe(&p, &x, &Partition::cross_section(), &rule0, &cells, &small_grid(), Exec::Sequential).unwrap();
        prop_assert!(probe.total_previsions.holds());
        prop_assert!(probe.fair_zero(), "{:?}", probe.fair_previsions);
        prop_assert!(probe.probe.none_dominates());
    }

    #[test]
    fn construction_verifies_whenever_conglomerability_fails(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = cell_instance(&mut r, String::new());
        let verdict = conglomerability_verdict(&inst.charge, &inst.x, &inst.partition).unwrap();
        prop_assume!(!verdict.holds());
        let (rule0, cells) = (piecewise(&mut r), piecewise(&mut r).as_family());
        let safety = Num::ratio(r.gen_range(1..=9), 10);
        let c = thm2_rival_construction(&inst.charge, &inst.x, &inst.partition, &rule0, &cells, &safety).unwrap();
        prop_assert!(c.verified);
        prop_assert!(matches!(&c.improvement_inf, Bound::Finite(v) if *v >= c.delta));
        prop_assert_eq!(c.epsilon, verdict.violation.unwrap().0);
    }

    #[test]
    fn conglomerability_and_total_previsions_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = cell_instance(&mut r, String::new());
        prop_assert!(theorem4_agreement(&inst.charge, &inst.x, &inst.partition).unwrap().agrees());
    }

    #[test]
    fn uniform_loss_implies_a_sure_loss_certificate(seed in any::<u64>()) {
        let mut r = rng(seed);
        let columns = r.gen_range(1..=3);
        let mut entries = brier_entries(&mut r, columns, None);
        for e in &mut entries {
            e.alpha = num(&mut r, -2, 2, 2);
        }
        let loss = System::new(columns, entries.clone(), vec![]).unwrap().combined_fair_loss().unwrap();
        let cert = incoherence1_certificate(&entries).unwrap();
        if abstain_dominance(&loss).unwrap().is_some() {
            prop_assert!(cert.is_some());
        }
        if let Some(c) = cert {
            prop_assert!(c.verify(&entries).unwrap());
            let scaled: Vec<_> = entries.iter().zip(&c.alpha).map(|(e, a)| prevision::Entry { alpha: a.clone(), ..e.clone() }).collect();
            let loss = System::new(columns, scaled, vec![]).unwrap().combined_fair_loss().unwrap();
            prop_assert_eq!(abstain_dominance(&loss).unwrap(), Some(c.epsilon));
        }
    }

    #[test]
    fn previsions_of_a_charge_resist_rivals(seed in any::<u64>()) {
        let mut r = rng(seed);
        let columns = r.gen_range(1..=3);
        let p = charge(&mut r, columns);
        let entries = brier_entries(&mut r, columns, Some(&p));
        prop_assert!(brier_projection_rival(&entries).unwrap().is_none());
        let sys = System::new(columns, entries, vec![]).unwrap();
        let probe = rival_probe(&sys, Some(&p), &small_grid(), &[], Exec::Sequential).unwrap();
        prop_assert!(probe.none_dominates());
        let worst = probe.outcomes.iter().filter_map(|o| o.expected_gap.clone()).all(|g| match g {
            Bound::Finite(v) => !v.is_negative(),
            _ => true,
        });
        prop_assert!(worst, "a rival has lower expected score");
    }

    #[test]
    fn singleton_families_meeting_the_conditions_resist_rivals(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = charge(&mut r, 1);
        let weights = Seq::constant(num(&mut r, 1, 4, 2)).add(&Seq::geometric(num(&mut r, 0, 1, 4), ratio(&mut r)));
        let family = Family {
            label: "singletons".into(),
            variable: FamilyVariable::Diagonal { on: vec![Seq::constant(Num::one())], off: Seq::zero() },
            scope: Scope::Everywhere,
            forecast: p.col(0).atoms.clone(),
            rule: RuleFamily::scaled_brier(weights),
            alpha: Seq::constant(Num::one()),
        };
        let sys = System::new(1, vec![], vec![family]).unwrap();
        prop_assert!(thm1_condition_check(&p, &sys, &Num::one()).unwrap().met());
        let probe = rival_probe(&sys, Some(&p), &small_grid(), &[], Exec::Sequential).unwrap();
        prop_assert!(probe.none_dominates());
    }
}
