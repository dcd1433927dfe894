//! Property tests for the WCNF parser, evaluator, and validator. The cost
//! oracle here is written independently of the library: it checks clause
//! satisfaction literal by literal.

use maxtune_core::wcnf::{
    cost_of, emit_legacy, emit_new, parse_wcnf, validate_output, Clause, VerdictStatus,
    WcnfFormula,
};
use maxtune_core::Assignment;
use proptest::prelude::*;

/// Independent cost computation: sums falsified soft weights by scanning
/// every literal against the assignment bits.
fn oracle_cost(formula: &WcnfFormula, bits: &[bool]) -> (bool, u64) {
    let sat = |lit: i32| -> bool {
        let var = lit.unsigned_abs() as usize;
        let value = bits.get(var - 1).copied().unwrap_or(false);
        if lit > 0 {
            value
        } else {
            !value
        }
    };
    let mut hard_ok = true;
    for clause in &formula.hard_clauses {
        if !clause.iter().any(|&l| sat(l)) {
            hard_ok = false;
        }
    }
    let mut cost = 0u64;
    for (w, clause) in &formula.soft_clauses {
        if !clause.iter().any(|&l| sat(l)) {
            cost += w;
        }
    }
    (hard_ok, cost)
}

/// Minimum cost over all hard-satisfying assignments, by exhaustive
/// enumeration. None when the hard clauses are unsatisfiable.
fn oracle_min_cost(formula: &WcnfFormula) -> Option<u64> {
    let n = formula.num_vars as usize;
    assert!(n <= 20, "exhaustive enumeration only for small formulas");
    let mut best: Option<u64> = None;
    for mask in 0u32..(1u32 << n) {
        let bits: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        let (hard_ok, cost) = oracle_cost(formula, &bits);
        if hard_ok {
            best = Some(best.map_or(cost, |b| b.min(cost)));
        }
    }
    best
}

fn arb_clause(num_vars: u32) -> impl Strategy<Value = Clause> {
    proptest::collection::vec(
        (1..=num_vars as i32, proptest::bool::ANY).prop_map(|(v, neg)| if neg { -v } else { v }),
        1..=4,
    )
}

fn arb_formula() -> impl Strategy<Value = WcnfFormula> {
    (2u32..=12).prop_flat_map(|num_vars| {
        (
            proptest::collection::vec(arb_clause(num_vars), 0..6),
            proptest::collection::vec((1u64..50, arb_clause(num_vars)), 1..10),
        )
            .prop_map(move |(hard_clauses, soft_clauses)| WcnfFormula {
                num_vars,
                hard_clauses,
                soft_clauses,
                source_path: String::new(),
            })
    })
}

proptest! {
    /// parse(emit(F)) structurally equals F, in both dialects. The 2022
    /// dialect has no header, so pad formulas with a soft unit on the last
    /// variable to keep num_vars recoverable.
    #[test]
    fn roundtrip_both_formats(mut formula in arb_formula()) {
        formula.soft_clauses.push((1, vec![formula.num_vars as i32]));
        prop_assert_eq!(&parse_wcnf(&emit_legacy(&formula)).unwrap(), &formula);
        prop_assert_eq!(&parse_wcnf(&emit_new(&formula)).unwrap(), &formula);
    }

    /// Cost is deterministic and bounded by the soft-weight sum, and agrees
    /// with the independent oracle.
    #[test]
    fn cost_matches_oracle_and_bounds(formula in arb_formula(), mask in 0u32..4096) {
        let bits: Vec<bool> = (0..formula.num_vars as usize)
            .map(|i| mask & (1 << (i % 12)) != 0)
            .collect();
        let assignment = Assignment::from_values(bits.clone());
        let (hard_ok, cost) = cost_of(&formula, &assignment);
        prop_assert_eq!(cost_of(&formula, &assignment), (hard_ok, cost));
        prop_assert!(cost <= formula.max_cost());
        prop_assert_eq!((hard_ok, cost), oracle_cost(&formula, &bits));
    }

    /// A validated model's recomputed cost never undercuts the exhaustive
    /// minimum over all assignments.
    #[test]
    fn validated_cost_never_beats_exhaustive_minimum(
        formula in arb_formula(),
        mask in proptest::num::u32::ANY,
    ) {
        let mut model = String::from("v");
        for var in 1..=formula.num_vars {
            let positive = mask & (1 << (var % 31)) != 0;
            model.push(' ');
            if !positive {
                model.push('-');
            }
            model.push_str(&var.to_string());
        }
        model.push('\n');
        let verdict = validate_output(&formula, &model);
        if verdict.status == VerdictStatus::Valid {
            let minimum = oracle_min_cost(&formula).expect("a valid model implies satisfiable hards");
            prop_assert!(verdict.true_cost.unwrap() >= minimum);
        }
    }

    /// Semantically identical legacy and 2022 texts parse to equal formulas.
    #[test]
    fn dialects_agree(mut formula in arb_formula()) {
        formula.soft_clauses.push((1, vec![formula.num_vars as i32]));
        let legacy = parse_wcnf(&emit_legacy(&formula)).unwrap();
        let modern = parse_wcnf(&emit_new(&formula)).unwrap();
        prop_assert_eq!(legacy, modern);
    }
}
