//! Weighted CNF instances: parsing, assignment evaluation, and validation of
//! solver output against the formula.
//!
//! Both WCNF dialects are supported: the legacy headered format
//! (`p wcnf <nvars> <nclauses> <top>`, clauses of weight `top` are hard) and
//! the headerless 2022 format (`h`-prefixed clauses are hard, everything else
//! carries an explicit weight).

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// A DIMACS literal: positive for the variable, negative for its negation.
/// Never zero.
pub type Lit = i32;

/// A disjunction of literals.
pub type Clause = Vec<Lit>;

/// A weighted partial MaxSAT instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WcnfFormula {
    pub num_vars: u32,
    pub hard_clauses: Vec<Clause>,
    pub soft_clauses: Vec<(u64, Clause)>,
    /// Where the instance came from; informational only.
    pub source_path: String,
}

impl WcnfFormula {
    /// Sum of all soft weights: the cost of falsifying everything.
    pub fn max_cost(&self) -> u64 {
        self.soft_clauses
            .iter()
            .fold(0u64, |acc, (w, _)| acc.saturating_add(*w))
    }
}

/// A total assignment over variables `1..=num_vars`. Variables beyond the
/// stored prefix read as false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    /// The all-false assignment over `num_vars` variables.
    pub fn all_false(num_vars: u32) -> Self {
        Assignment {
            values: alloc::vec![false; num_vars as usize],
        }
    }

    pub fn from_values(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn set(&mut self, var: u32, value: bool) {
        let idx = var as usize - 1;
        if idx >= self.values.len() {
            self.values.resize(idx + 1, false);
        }
        self.values[idx] = value;
    }

    pub fn value(&self, var: u32) -> bool {
        self.values.get(var as usize - 1).copied().unwrap_or(false)
    }

    pub fn satisfies(&self, lit: Lit) -> bool {
        let v = self.value(lit.unsigned_abs());
        if lit > 0 {
            v
        } else {
            !v
        }
    }
}

/// Why a WCNF text failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MalformedHeader,
    DuplicateHeader,
    HeaderAfterClauses,
    HardLineInLegacyFile,
    BadToken(String),
    WeightZero,
    WeightAboveTop { weight: u64, top: u64 },
    LiteralOutOfRange { lit: i64, num_vars: u32 },
    MissingTerminator,
    EmptyClause,
    TrailingTokens,
    EmptyFormula,
}

/// A parse failure, carrying the 1-based line it occurred on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            ParseErrorKind::MalformedHeader => write!(f, "malformed 'p wcnf' header"),
            ParseErrorKind::DuplicateHeader => write!(f, "duplicate header"),
            ParseErrorKind::HeaderAfterClauses => write!(f, "header after clause data"),
            ParseErrorKind::HardLineInLegacyFile => {
                write!(f, "'h' clause in a file with a legacy header")
            }
            ParseErrorKind::BadToken(tok) => write!(f, "unparseable token '{tok}'"),
            ParseErrorKind::WeightZero => write!(f, "clause weight must be positive"),
            ParseErrorKind::WeightAboveTop { weight, top } => {
                write!(f, "weight {weight} exceeds top {top}")
            }
            ParseErrorKind::LiteralOutOfRange { lit, num_vars } => {
                write!(f, "literal {lit} outside 1..={num_vars}")
            }
            ParseErrorKind::MissingTerminator => write!(f, "clause not terminated by 0"),
            ParseErrorKind::EmptyClause => write!(f, "empty clause"),
            ParseErrorKind::TrailingTokens => write!(f, "tokens after clause terminator"),
            ParseErrorKind::EmptyFormula => write!(f, "no clauses and no header"),
        }
    }
}

impl core::error::Error for ParseError {}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Parses a WCNF text in either the legacy or the 2022 format.
///
/// Comment lines start with `c`; every clause must be terminated by `0` on
/// its own line. `source_path` is left empty.
pub fn parse_wcnf(input: &str) -> Result<WcnfFormula, ParseError> {
    // (num_vars, top) when a legacy header was seen.
    let mut header: Option<(u32, u64)> = None;
    let mut hard: Vec<Clause> = Vec::new();
    let mut soft: Vec<(u64, Clause)> = Vec::new();
    let mut max_var: u32 = 0;

    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let tokens: Vec<&str> = line.split_ascii_whitespace().collect();
        if tokens[0] == "p" {
            if header.is_some() {
                return Err(err(line_no, ParseErrorKind::DuplicateHeader));
            }
            if !hard.is_empty() || !soft.is_empty() {
                return Err(err(line_no, ParseErrorKind::HeaderAfterClauses));
            }
            if tokens.len() != 5 || tokens[1] != "wcnf" {
                return Err(err(line_no, ParseErrorKind::MalformedHeader));
            }
            let nvars: u32 = tokens[2]
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::MalformedHeader))?;
            let _nclauses: u64 = tokens[3]
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::MalformedHeader))?;
            let top: u64 = tokens[4]
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::MalformedHeader))?;
            if nvars == 0 || top == 0 {
                return Err(err(line_no, ParseErrorKind::MalformedHeader));
            }
            header = Some((nvars, top));
            continue;
        }

        let (weight, lit_tokens) = if tokens[0] == "h" {
            if header.is_some() {
                return Err(err(line_no, ParseErrorKind::HardLineInLegacyFile));
            }
            (None, &tokens[1..])
        } else {
            let w: u64 = tokens[0]
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::BadToken(tokens[0].to_string())))?;
            (Some(w), &tokens[1..])
        };

        let lits = parse_clause_lits(lit_tokens, header.map(|(n, _)| n), &mut max_var, line_no)?;

        match (header, weight) {
            (Some((_, top)), Some(w)) => {
                if w == 0 {
                    return Err(err(line_no, ParseErrorKind::WeightZero));
                }
                if w > top {
                    return Err(err(line_no, ParseErrorKind::WeightAboveTop { weight: w, top }));
                }
                if w == top {
                    hard.push(lits);
                } else {
                    soft.push((w, lits));
                }
            }
            (None, Some(w)) => {
                if w == 0 {
                    return Err(err(line_no, ParseErrorKind::WeightZero));
                }
                soft.push((w, lits));
            }
            (None, None) => hard.push(lits),
            (Some(_), None) => unreachable!("h-line rejected above"),
        }
    }

    let num_vars = match header {
        Some((n, _)) => n,
        None => {
            if hard.is_empty() && soft.is_empty() {
                return Err(err(input.lines().count().max(1), ParseErrorKind::EmptyFormula));
            }
            max_var
        }
    };

    Ok(WcnfFormula {
        num_vars,
        hard_clauses: hard,
        soft_clauses: soft,
        source_path: String::new(),
    })
}

fn parse_clause_lits(
    tokens: &[&str],
    num_vars: Option<u32>,
    max_var: &mut u32,
    line_no: usize,
) -> Result<Clause, ParseError> {
    let mut lits = Clause::new();
    let mut terminated = false;
    for (i, tok) in tokens.iter().enumerate() {
        let val: i64 = tok
            .parse()
            .map_err(|_| err(line_no, ParseErrorKind::BadToken(tok.to_string())))?;
        if val == 0 {
            if i + 1 != tokens.len() {
                return Err(err(line_no, ParseErrorKind::TrailingTokens));
            }
            terminated = true;
            break;
        }
        let var = val.unsigned_abs();
        if var > i32::MAX as u64 {
            return Err(err(
                line_no,
                ParseErrorKind::LiteralOutOfRange {
                    lit: val,
                    num_vars: num_vars.unwrap_or(u32::MAX),
                },
            ));
        }
        if let Some(n) = num_vars {
            if var > n as u64 {
                return Err(err(line_no, ParseErrorKind::LiteralOutOfRange { lit: val, num_vars: n }));
            }
        }
        *max_var = (*max_var).max(var as u32);
        lits.push(val as i32);
    }
    if !terminated {
        return Err(err(line_no, ParseErrorKind::MissingTerminator));
    }
    if lits.is_empty() {
        return Err(err(line_no, ParseErrorKind::EmptyClause));
    }
    Ok(lits)
}

fn write_clause(out: &mut String, lits: &[Lit]) {
    for lit in lits {
        out.push_str(&lit.to_string());
        out.push(' ');
    }
    out.push_str("0\n");
}

/// Renders the formula in the legacy headered format. The top weight is the
/// soft-weight sum plus one.
pub fn emit_legacy(formula: &WcnfFormula) -> String {
    let top = formula.max_cost().saturating_add(1);
    let n_clauses = formula.hard_clauses.len() + formula.soft_clauses.len();
    let mut out = String::new();
    out.push_str(&alloc::format!(
        "p wcnf {} {} {}\n",
        formula.num_vars,
        n_clauses,
        top
    ));
    for clause in &formula.hard_clauses {
        out.push_str(&top.to_string());
        out.push(' ');
        write_clause(&mut out, clause);
    }
    for (w, clause) in &formula.soft_clauses {
        out.push_str(&w.to_string());
        out.push(' ');
        write_clause(&mut out, clause);
    }
    out
}

/// Renders the formula in the headerless 2022 format.
///
/// The variable count is implicit in this dialect, so a formula whose
/// `num_vars` exceeds its maximum used literal does not round-trip exactly.
pub fn emit_new(formula: &WcnfFormula) -> String {
    let mut out = String::new();
    for clause in &formula.hard_clauses {
        out.push_str("h ");
        write_clause(&mut out, clause);
    }
    for (w, clause) in &formula.soft_clauses {
        out.push_str(&w.to_string());
        out.push(' ');
        write_clause(&mut out, clause);
    }
    out
}

/// Evaluates an assignment: whether all hard clauses hold, and the summed
/// weight of falsified soft clauses (computed regardless of hard status).
pub fn cost_of(formula: &WcnfFormula, assignment: &Assignment) -> (bool, u64) {
    let hard_ok = formula
        .hard_clauses
        .iter()
        .all(|clause| clause.iter().any(|&lit| assignment.satisfies(lit)));
    let cost = formula
        .soft_clauses
        .iter()
        .filter(|(_, clause)| !clause.iter().any(|&lit| assignment.satisfies(lit)))
        .fold(0u64, |acc, (w, _)| acc.saturating_add(*w));
    (hard_ok, cost)
}

/// Outcome classes of solver-output validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    /// A model was found, satisfies the hard clauses, and its recomputed cost
    /// is authoritative.
    Valid,
    /// The reported model falsifies a hard clause; treated downstream as no
    /// solution at all.
    HardViolation,
    /// No model line in the output.
    NoSolution,
    /// A model line was present but could not be interpreted.
    MalformedOutput,
}

/// Result of checking a solver's stdout against the instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub status: VerdictStatus,
    /// Recomputed cost of the extracted model; present iff `status == Valid`.
    pub true_cost: Option<u64>,
    /// Last `o`-line value, if any. Informational: the recomputed cost wins.
    pub reported_cost: Option<u64>,
}

impl ValidationVerdict {
    pub fn no_solution() -> Self {
        ValidationVerdict {
            status: VerdictStatus::NoSolution,
            true_cost: None,
            reported_cost: None,
        }
    }
}

/// Checks a solver's stdout against the formula.
///
/// The last `v`-line wins (incomplete solvers print improving models) and is
/// accepted in both the literal form `v -1 2 3` and the binary-string form
/// `v 0110`. Variables absent from the model default to false. The cost is
/// always recomputed from the model; any `o`-line is recorded but never
/// trusted.
pub fn validate_output(formula: &WcnfFormula, output: &str) -> ValidationVerdict {
    let mut reported: Option<u64> = None;
    let mut model_line: Option<&str> = None;
    for raw in output.lines() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("o ") {
            if let Ok(v) = rest.trim().parse::<u64>() {
                reported = Some(v);
            }
        } else if let Some(rest) = line.strip_prefix("v ") {
            model_line = Some(rest);
        } else if line == "v" {
            model_line = Some("");
        }
    }

    let Some(payload) = model_line else {
        return ValidationVerdict {
            status: VerdictStatus::NoSolution,
            true_cost: None,
            reported_cost: reported,
        };
    };

    let Some(assignment) = parse_model(formula.num_vars, payload) else {
        return ValidationVerdict {
            status: VerdictStatus::MalformedOutput,
            true_cost: None,
            reported_cost: reported,
        };
    };

    let (hard_ok, cost) = cost_of(formula, &assignment);
    if !hard_ok {
        return ValidationVerdict {
            status: VerdictStatus::HardViolation,
            true_cost: None,
            reported_cost: reported,
        };
    }
    ValidationVerdict {
        status: VerdictStatus::Valid,
        true_cost: Some(cost),
        reported_cost: reported,
    }
}

/// Interprets a `v`-line payload. Returns None when it is malformed: a
/// non-literal token, a literal out of range, or contradictory literals.
fn parse_model(num_vars: u32, payload: &str) -> Option<Assignment> {
    let tokens: Vec<&str> = payload.split_ascii_whitespace().collect();

    // Binary-string form: one token of 0/1 digits. A lone "1" also parses as
    // the literal 1; both readings assign variable 1 true.
    if tokens.len() == 1 {
        let tok = tokens[0];
        if tok.len() > 1 && tok.bytes().all(|b| b == b'0' || b == b'1') {
            if tok.len() > num_vars as usize {
                return None;
            }
            let mut assignment = Assignment::all_false(num_vars);
            for (i, b) in tok.bytes().enumerate() {
                if b == b'1' {
                    assignment.set(i as u32 + 1, true);
                }
            }
            return Some(assignment);
        }
    }

    let mut assignment = Assignment::all_false(num_vars);
    // 0 = unset, 1 = positive, 2 = negative; detects contradictions.
    let mut seen = alloc::vec![0u8; num_vars as usize];
    for (i, tok) in tokens.iter().enumerate() {
        let val: i64 = tok.parse().ok()?;
        if val == 0 {
            // A trailing 0 terminator is tolerated.
            if i + 1 == tokens.len() {
                break;
            }
            return None;
        }
        let var = val.unsigned_abs();
        if var == 0 || var > num_vars as u64 {
            return None;
        }
        let polarity = if val > 0 { 1 } else { 2 };
        let slot = &mut seen[var as usize - 1];
        if *slot != 0 && *slot != polarity {
            return None;
        }
        *slot = polarity;
        assignment.set(var as u32, val > 0);
    }
    Some(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEGACY: &str = "p wcnf 2 3 5\n5 1 2 0\n1 -1 0\n2 -2 0\n";
    const NEW: &str = "c t\nh 1 2 0\n1 -1 0\n2 -2 0\n";

    fn example() -> WcnfFormula {
        parse_wcnf(LEGACY).unwrap()
    }

    #[test]
    fn parses_legacy_format() {
        let f = example();
        assert_eq!(f.num_vars, 2);
        assert_eq!(f.hard_clauses, alloc::vec![alloc::vec![1, 2]]);
        assert_eq!(
            f.soft_clauses,
            alloc::vec![(1, alloc::vec![-1]), (2, alloc::vec![-2])]
        );
    }

    #[test]
    fn formats_parse_identically() {
        assert_eq!(parse_wcnf(LEGACY).unwrap(), parse_wcnf(NEW).unwrap());
    }

    #[test]
    fn rejects_empty_clause() {
        let e = parse_wcnf("h 0\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::EmptyClause);
        assert_eq!(e.line, 1);
    }

    #[test]
    fn rejects_missing_terminator() {
        let e = parse_wcnf("p wcnf 2 1 5\n5 1 2\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingTerminator);
        assert_eq!(e.line, 2);
    }

    #[test]
    fn rejects_out_of_range_literal() {
        let e = parse_wcnf("p wcnf 2 1 5\n5 3 0\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::LiteralOutOfRange { lit: 3, num_vars: 2 }));
    }

    #[test]
    fn rejects_weight_above_top() {
        let e = parse_wcnf("p wcnf 2 1 5\n6 1 0\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::WeightAboveTop { weight: 6, top: 5 }));
    }

    #[test]
    fn rejects_zero_weight() {
        assert_eq!(parse_wcnf("0 1 0\n").unwrap_err().kind, ParseErrorKind::WeightZero);
    }

    #[test]
    fn handles_crlf_and_comments() {
        let f = parse_wcnf("c hello\r\np wcnf 1 1 3\r\n1 -1 0\r\n").unwrap();
        assert_eq!(f.num_vars, 1);
        assert_eq!(f.soft_clauses.len(), 1);
    }

    #[test]
    fn cost_of_example_assignments() {
        let f = example();
        let a = Assignment::from_values(alloc::vec![true, false]);
        assert_eq!(cost_of(&f, &a), (true, 1));
        let a = Assignment::from_values(alloc::vec![false, false]);
        assert_eq!(cost_of(&f, &a), (false, 0));
        let a = Assignment::from_values(alloc::vec![true, true]);
        assert_eq!(cost_of(&f, &a), (true, 3));
    }

    #[test]
    fn validator_trusts_recomputed_cost() {
        let f = example();
        // True cost of {1:true, 2:false} is 1; the reported 5 is ignored.
        let v = validate_output(&f, "o 5\nv 1 -2\n");
        assert_eq!(v.status, VerdictStatus::Valid);
        assert_eq!(v.true_cost, Some(1));
        assert_eq!(v.reported_cost, Some(5));
    }

    #[test]
    fn validator_no_solution() {
        let v = validate_output(&example(), "s UNKNOWN\n");
        assert_eq!(v.status, VerdictStatus::NoSolution);
        assert_eq!(v.true_cost, None);
    }

    #[test]
    fn validator_hard_violation() {
        let v = validate_output(&example(), "o 0\nv -1 -2\n");
        assert_eq!(v.status, VerdictStatus::HardViolation);
        assert_eq!(v.true_cost, None);
    }

    #[test]
    fn validator_last_model_wins() {
        // First model {1,2} costs 3; the later, better model wins.
        let v = validate_output(&example(), "o 3\nv 1 2\no 1\nv 1 -2\n");
        assert_eq!(v.status, VerdictStatus::Valid);
        assert_eq!(v.true_cost, Some(1));
    }

    #[test]
    fn validator_binary_model() {
        let v = validate_output(&example(), "v 01\n");
        // x1 false, x2 true: hard satisfied, soft {-1} satisfied, {-2} falsified.
        assert_eq!(v.status, VerdictStatus::Valid);
        assert_eq!(v.true_cost, Some(2));
    }

    #[test]
    fn validator_short_model_defaults_false() {
        let f = parse_wcnf("p wcnf 3 2 9\n9 1 0\n4 3 0\n").unwrap();
        let v = validate_output(&f, "v 1\n");
        assert_eq!(v.status, VerdictStatus::Valid);
        assert_eq!(v.true_cost, Some(4));
    }

    #[test]
    fn validator_contradictory_literals_malformed() {
        let v = validate_output(&example(), "v 1 -1\n");
        assert_eq!(v.status, VerdictStatus::MalformedOutput);
    }

    #[test]
    fn validator_garbage_model_malformed() {
        let v = validate_output(&example(), "v 1 x\n");
        assert_eq!(v.status, VerdictStatus::MalformedOutput);
    }

    #[test]
    fn roundtrips_both_formats() {
        let f = example();
        assert_eq!(parse_wcnf(&emit_legacy(&f)).unwrap(), f);
        assert_eq!(parse_wcnf(&emit_new(&f)).unwrap(), f);
    }
}
