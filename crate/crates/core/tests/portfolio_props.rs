//! Property tests for portfolio scoring and the sequential-schedule
//! simulator. The oracle here is an independently written event interpreter:
//! it advances a single global timeline one event at a time with explicit
//! timer state, instead of pre-computing solution chains.

use std::collections::BTreeMap;

use maxtune_core::portfolio::{
    build_parallel_configs, score_parallel, search_best_schedule, simulate_schedule,
    ParallelPortfolio, PortfolioEntry, PortfolioKind, Schedule, SearchParams, TraceStore,
};
use maxtune_core::scoring::{score_solver, BoundsRegistry, InstanceResult, Outcome};
use maxtune_core::selection::{Candidate, CandidatePool};
use maxtune_core::wcnf::{ValidationVerdict, VerdictStatus};
use maxtune_core::{
    Configuration, ExitKind, ParamDef, ParamDomain, ParamValue, ParameterSpace, RunRecord,
    TimeSource, TracePoint,
};
use proptest::prelude::*;

fn space() -> ParameterSpace {
    ParameterSpace::new(
        vec![ParamDef {
            name: "x".into(),
            domain: ParamDomain::Integer { lo: 0, hi: 1_000_000 },
            default: ParamValue::Int(0),
            flag_template: "--x={value}".into(),
        }],
        vec![],
    )
    .unwrap()
}

fn config(space: &ParameterSpace, x: i64) -> Configuration {
    let mut values = BTreeMap::new();
    values.insert("x".to_string(), ParamValue::Int(x));
    space.configuration(values).unwrap()
}

/// Event-interpreter oracle. Returns the best bound seen, if any.
fn oracle_simulate(traces: &[Vec<TracePoint>], mtbs: f64, to: f64) -> Option<u64> {
    let mut best: Option<u64> = None;
    let mut clock = 0.0_f64;
    for (k, trace) in traces.iter().enumerate() {
        if clock >= to {
            break;
        }
        let activation = clock;
        let is_last = k + 1 == traces.len();
        let mut idx = 0usize;
        let mut timer_deadline: Option<f64> = None;
        let stop_time;
        loop {
            let mut stop_at = to;
            if !is_last {
                if let Some(d) = timer_deadline {
                    if d < stop_at {
                        stop_at = d;
                    }
                }
            }
            match trace.get(idx) {
                Some(point) if activation + point.t <= stop_at => {
                    best = Some(best.map_or(point.bound, |b| b.min(point.bound)));
                    timer_deadline = Some(activation + point.t + mtbs);
                    idx += 1;
                }
                _ => {
                    stop_time = stop_at;
                    break;
                }
            }
        }
        clock = stop_time;
    }
    best
}

fn outcome_of(best: Option<u64>) -> Outcome {
    best.map_or(Outcome::NoSolution, Outcome::UpperBound)
}

/// Quantized random traces: times on a 0.5s lattice so boundary collisions
/// (events exactly at timer expiry or at the budget) actually happen.
fn arb_trace() -> impl Strategy<Value = Vec<TracePoint>> {
    proptest::collection::vec((1u32..80, 1u64..100), 0..6).prop_map(|raw| {
        let mut steps: Vec<(f64, u64)> = raw
            .into_iter()
            .map(|(halves, delta)| (halves as f64 * 0.5, delta))
            .collect();
        steps.sort_by(|a, b| a.0.total_cmp(&b.0));
        steps.dedup_by(|a, b| a.0 == b.0);
        let mut bound = 1000u64;
        steps
            .into_iter()
            .map(|(t, delta)| {
                bound = bound.saturating_sub(delta.max(1));
                TracePoint { t, bound }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    /// The chain-based simulator agrees exactly with the event-interpreter
    /// oracle on randomized traces, MTBS values, and budgets.
    #[test]
    fn simulator_matches_oracle(
        traces in proptest::collection::vec(arb_trace(), 1..4),
        mtbs_halves in 1u32..40,
        to_halves in 2u32..80,
    ) {
        let mtbs = mtbs_halves as f64 * 0.5;
        let to = to_halves as f64 * 0.5;
        let s = space();
        let sequence: Vec<Configuration> =
            (0..traces.len()).map(|i| config(&s, i as i64)).collect();
        let schedule = Schedule::new(sequence, mtbs, to).unwrap();
        let slices: Vec<&[TracePoint]> = traces.iter().map(|t| t.as_slice()).collect();
        let (outcome, _) = simulate_schedule(&schedule, &slices);
        prop_assert_eq!(outcome, outcome_of(oracle_simulate(&traces, mtbs, to)));
    }

    /// The searched best schedule never scores below the best singleton:
    /// singletons are inside the search space.
    #[test]
    fn search_dominates_singletons(
        traces in proptest::collection::vec(arb_trace(), 2..4),
        mtbs_halves in 1u32..30,
    ) {
        let s = space();
        let configs: Vec<Configuration> =
            (0..traces.len()).map(|i| config(&s, i as i64)).collect();
        let mut store = TraceStore::new();
        for (c, t) in configs.iter().zip(&traces) {
            store.insert((c.id().clone(), "i".to_string()), t.clone());
        }
        let mut registry = BoundsRegistry::new();
        registry.record("i", 100, "t");
        let params = SearchParams {
            max_len: 2,
            mtbs_grid: vec![mtbs_halves as f64 * 0.5, 10.0],
            budget_to: 30.0,
            allow_repeats: false,
        };
        let instances = vec!["i".to_string()];
        let result =
            search_best_schedule(&configs, &store, &instances, &registry, &params).unwrap();

        let mut best_single = f64::NEG_INFINITY;
        for c in &configs {
            for &mtbs in &params.mtbs_grid {
                let schedule = Schedule::new(vec![c.clone()], mtbs, params.budget_to).unwrap();
                let slice = [store[&(c.id().clone(), "i".to_string())].as_slice()];
                let (outcome, _) = simulate_schedule(&schedule, &slice);
                let score = score_solver(
                    &[InstanceResult { instance: "i".into(), outcome }],
                    &registry,
                )
                .unwrap();
                best_single = best_single.max(score);
            }
        }
        prop_assert!(result.train_score >= best_single - 1e-15);
    }

    /// Determinism: searching twice yields the identical schedule.
    #[test]
    fn search_is_deterministic(traces in proptest::collection::vec(arb_trace(), 2..4)) {
        let s = space();
        let configs: Vec<Configuration> =
            (0..traces.len()).map(|i| config(&s, i as i64)).collect();
        let mut store = TraceStore::new();
        for (c, t) in configs.iter().zip(&traces) {
            store.insert((c.id().clone(), "i".to_string()), t.clone());
        }
        let mut registry = BoundsRegistry::new();
        registry.record("i", 100, "t");
        let params = SearchParams {
            max_len: 2,
            mtbs_grid: vec![1.5, 4.0],
            budget_to: 25.0,
            allow_repeats: false,
        };
        let instances = vec!["i".to_string()];
        let a = search_best_schedule(&configs, &store, &instances, &registry, &params).unwrap();
        let b = search_best_schedule(&configs, &store, &instances, &registry, &params).unwrap();
        prop_assert_eq!(a.best, b.best);
        prop_assert_eq!(a.train_score, b.train_score);
    }
}

fn valid_run(config: &Configuration, seed: u64, instance: &str, cost: u64) -> RunRecord {
    RunRecord {
        config_id: config.id().clone(),
        instance: instance.into(),
        seed,
        trace: vec![],
        verdict: ValidationVerdict {
            status: VerdictStatus::Valid,
            true_cost: Some(cost),
            reported_cost: None,
        },
        cpu_seconds_used: 1.0,
        exit: ExitKind::Timeout,
        time_source: TimeSource::Cpu,
    }
}

proptest! {
    /// VBS dominance and monotonicity: a configs portfolio scores at least
    /// as well as each member, and adding entries never hurts.
    #[test]
    fn parallel_dominance_and_monotonicity(
        costs in proptest::collection::vec(
            proptest::collection::vec(0u64..60, 3),
            2..8,
        ),
    ) {
        let s = space();
        let instances = ["a", "b", "c"];
        let mut registry = BoundsRegistry::new();
        for inst in instances {
            registry.record(inst, 5, "t");
        }
        let configs: Vec<Configuration> =
            (0..costs.len()).map(|i| config(&s, i as i64)).collect();
        // Entry i of a configs portfolio carries seed base + i; cover them.
        let mut runs = Vec::new();
        for (i, (c, per_instance)) in configs.iter().zip(&costs).enumerate() {
            for (inst, &cost) in instances.iter().zip(per_instance) {
                runs.push(valid_run(c, i as u64, inst, cost));
            }
        }
        let pool = CandidatePool {
            candidates: configs
                .iter()
                .map(|c| Candidate {
                    config: c.clone(),
                    mse_score: 0.0,
                    per_instance: BTreeMap::new(),
                })
                .collect(),
            registry: registry.clone(),
        };

        let mut previous = f64::NEG_INFINITY;
        for n in 1..=configs.len() {
            let portfolio = build_parallel_configs(&pool, n, 0).unwrap();
            let score = score_parallel(&portfolio, &runs, &registry).unwrap();
            prop_assert!(score >= previous - 1e-15, "adding an entry lowered the score");
            previous = score;
        }

        // Full portfolio dominates every member's individual score.
        let full = ParallelPortfolio {
            entries: configs
                .iter()
                .enumerate()
                .map(|(i, c)| PortfolioEntry { config: c.clone(), seed: i as u64 })
                .collect(),
            kind: PortfolioKind::Configs,
        };
        let full_score = score_parallel(&full, &runs, &registry).unwrap();
        for (c, per_instance) in configs.iter().zip(&costs) {
            let results: Vec<InstanceResult> = instances
                .iter()
                .zip(per_instance)
                .map(|(inst, &cost)| InstanceResult {
                    instance: (*inst).into(),
                    outcome: Outcome::UpperBound(cost),
                })
                .collect();
            let member = score_solver(&results, &registry).unwrap();
            prop_assert!(full_score >= member - 1e-15, "member {:?} beat the portfolio", c.id());
        }
    }
}
