//! Property tests for the scoring functions and bounds registries.

use maxtune_core::scoring::{
    cost_ac, merge_bounds, score_instance, score_solver, seed_stats, vbs_bounds, BoundsRegistry,
    InstanceResult, Outcome,
};
use maxtune_core::wcnf::{ValidationVerdict, VerdictStatus};
use maxtune_core::{ConfigId, ExitKind, RunRecord, TimeSource};
use proptest::prelude::*;

fn ub(v: u64) -> Outcome {
    Outcome::UpperBound(v)
}

proptest! {
    /// Lower bounds score strictly higher, for any fixed best-known value.
    #[test]
    fn score_is_antitone_in_ub(best in 0u64..10_000, a in 0u64..10_000, b in 0u64..10_000) {
        prop_assume!(a < b);
        prop_assert!(score_instance(best, &ub(a)) > score_instance(best, &ub(b)));
    }

    /// Higher bounds cost strictly more, across the branch point.
    #[test]
    fn cost_is_isotone_in_ub(best in 0u64..10_000, a in 0u64..10_000, b in 0u64..10_000) {
        prop_assume!(a < b);
        prop_assert!(cost_ac(best, &ub(a)) < cost_ac(best, &ub(b)));
    }

    /// Both branches meet at exactly zero when the bound equals best-known.
    #[test]
    fn cost_is_continuous_at_branch(best in 0u64..1_000_000) {
        prop_assert_eq!(cost_ac(best, &ub(best)), 0.0);
        // Either side of the boundary stays within a hair of zero.
        if best > 0 {
            let below = cost_ac(best, &ub(best - 1));
            prop_assert!(below < 0.0 && below > -1.0);
        }
        let above = cost_ac(best, &ub(best + 1));
        prop_assert!(above > 0.0 && above < 1.0);
    }

    /// Finite outcomes stay strictly inside (-1, 1); only NoSolution hits 1.
    #[test]
    fn cost_range_is_open_below_closed_above(best in 0u64..100_000, bound in 0u64..100_000) {
        let c = cost_ac(best, &ub(bound));
        prop_assert!(c > -1.0 && c < 1.0);
        prop_assert_eq!(cost_ac(best, &Outcome::NoSolution), 1.0);
    }

    /// Ranking solvers by score descending equals ranking by cost ascending.
    #[test]
    fn rank_consistency(best in 0u64..1000, bounds in proptest::collection::vec(0u64..1000, 2..6)) {
        let outcomes: Vec<Outcome> = bounds.iter().map(|&b| ub(b)).collect();
        let mut by_score: Vec<usize> = (0..outcomes.len()).collect();
        by_score.sort_by(|&i, &j| {
            score_instance(best, &outcomes[j])
                .total_cmp(&score_instance(best, &outcomes[i]))
                .then(i.cmp(&j))
        });
        let mut by_cost: Vec<usize> = (0..outcomes.len()).collect();
        by_cost.sort_by(|&i, &j| {
            cost_ac(best, &outcomes[i])
                .total_cmp(&cost_ac(best, &outcomes[j]))
                .then(i.cmp(&j))
        });
        prop_assert_eq!(by_score, by_cost);
    }

    /// merge_bounds is associative, commutative, and idempotent.
    #[test]
    fn merge_algebra(
        entries_a in proptest::collection::vec(("i[0-9]", 0u64..100), 0..6),
        entries_b in proptest::collection::vec(("i[0-9]", 0u64..100), 0..6),
        entries_c in proptest::collection::vec(("i[0-9]", 0u64..100), 0..6),
    ) {
        let reg = |entries: &[(String, u64)], source: &str| {
            let mut r = BoundsRegistry::new();
            for (inst, bound) in entries {
                r.record(inst, *bound, source);
            }
            r
        };
        let a = reg(&entries_a, "a");
        let b = reg(&entries_b, "b");
        let c = reg(&entries_c, "c");

        let ab_c = merge_bounds(&[merge_bounds(&[a.clone(), b.clone()]), c.clone()]);
        let a_bc = merge_bounds(&[a.clone(), merge_bounds(&[b.clone(), c.clone()])]);
        prop_assert_eq!(&ab_c, &a_bc);

        let ab = merge_bounds(&[a.clone(), b.clone()]);
        let ba = merge_bounds(&[b.clone(), a.clone()]);
        prop_assert_eq!(&ab, &ba);

        let aa = merge_bounds(&[a.clone(), a.clone()]);
        prop_assert_eq!(&aa, &a);

        // The merged bound never exceeds any source's bound.
        for (inst, bound) in ab_c.iter() {
            for src in [&a, &b, &c] {
                if let Some(sb) = src.bound(inst) {
                    prop_assert!(bound <= sb);
                }
            }
        }
    }

    /// Scoring against a registry that includes the runs' own VBS bounds
    /// caps every solver at 1.
    #[test]
    fn vbs_registry_caps_scores(costs in proptest::collection::vec(0u64..500, 1..8)) {
        let runs: Vec<RunRecord> = costs
            .iter()
            .enumerate()
            .map(|(i, &c)| RunRecord {
                config_id: ConfigId::from_raw(&format!("c{i}")),
                instance: "inst".into(),
                seed: 0,
                trace: vec![],
                verdict: ValidationVerdict {
                    status: VerdictStatus::Valid,
                    true_cost: Some(c),
                    reported_cost: None,
                },
                cpu_seconds_used: 1.0,
                exit: ExitKind::Timeout,
                time_source: TimeSource::Cpu,
            })
            .collect();
        let registry = vbs_bounds(&runs);
        prop_assert_eq!(registry.bound("inst"), costs.iter().copied().min());
        for run in &runs {
            let results = vec![InstanceResult { instance: "inst".into(), outcome: run.outcome() }];
            let score = score_solver(&results, &registry).unwrap();
            prop_assert!(score <= 1.0 + 1e-12);
        }
    }

    /// Aggregate statistics respect their ordering invariants.
    #[test]
    fn stats_ordering(scores in proptest::collection::vec(0.0f64..=1.0, 1..50)) {
        let s = seed_stats(&scores).unwrap();
        prop_assert!(s.min <= s.median && s.median <= s.max);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert!(s.std >= 0.0 && s.std < 1.0);
    }
}

#[test]
fn vbs_ignores_unsolved_instances() {
    let run = RunRecord {
        config_id: ConfigId::from_raw("c"),
        instance: "dead".into(),
        seed: 0,
        trace: vec![],
        verdict: ValidationVerdict::no_solution(),
        cpu_seconds_used: 1.0,
        exit: ExitKind::Timeout,
        time_source: TimeSource::Cpu,
    };
    let registry = vbs_bounds(&[run]);
    assert!(registry.is_empty());
}
