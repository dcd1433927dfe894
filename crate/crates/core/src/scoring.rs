//! Competition-style scoring: the per-instance score ratio, solver averages,
//! the tuner cost function, best-known-bound registries, and multi-seed
//! statistics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::run::RunRecord;

/// What a solver achieved on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// The validated cost of the best model reported.
    UpperBound(u64),
    /// No validated model at all.
    NoSolution,
}

/// A solver's outcome on a named instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance: String,
    pub outcome: Outcome,
}

/// Per-instance best-known upper bounds merged from any number of sources.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsRegistry {
    bounds: BTreeMap<String, u64>,
    provenance: BTreeMap<String, BTreeSet<String>>,
}

impl BoundsRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a bound, keeping the per-instance minimum. Provenance keeps
    /// every source that ever supplied a bound for the instance.
    pub fn record(&mut self, instance: &str, bound: u64, source: &str) {
        let entry = self.bounds.entry(instance.to_string()).or_insert(bound);
        *entry = (*entry).min(bound);
        self.provenance
            .entry(instance.to_string())
            .or_default()
            .insert(source.to_string());
    }

    pub fn bound(&self, instance: &str) -> Option<u64> {
        self.bounds.get(instance).copied()
    }

    pub fn sources(&self, instance: &str) -> Option<&BTreeSet<String>> {
        self.provenance.get(instance)
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.bounds.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn merge_from(&mut self, other: &BoundsRegistry) {
        for (instance, bound) in &other.bounds {
            let entry = self.bounds.entry(instance.clone()).or_insert(*bound);
            *entry = (*entry).min(*bound);
        }
        for (instance, sources) in &other.provenance {
            self.provenance
                .entry(instance.clone())
                .or_default()
                .extend(sources.iter().cloned());
        }
    }

    /// Stable content hash over bounds and provenance, for staleness checks.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for (instance, bound) in &self.bounds {
            hasher.update(instance.as_bytes());
            hasher.update(b"\x1f");
            hasher.update(bound.to_le_bytes());
            if let Some(sources) = self.provenance.get(instance) {
                for s in sources {
                    hasher.update(b"\x1e");
                    hasher.update(s.as_bytes());
                }
            }
            hasher.update(b"\n");
        }
        crate::space::hex_of(&hasher.finalize()[..16])
    }
}

/// Per-instance minimum over a set of registries; provenance unioned.
pub fn merge_bounds(registries: &[BoundsRegistry]) -> BoundsRegistry {
    let mut merged = BoundsRegistry::new();
    for reg in registries {
        merged.merge_from(reg);
    }
    merged
}

/// Best-known bounds achieved by the virtual best solver over a set of
/// validated runs. Instances no run solved are absent.
pub fn vbs_bounds(runs: &[RunRecord]) -> BoundsRegistry {
    let mut reg = BoundsRegistry::new();
    for run in runs {
        if let Outcome::UpperBound(cost) = run.outcome() {
            reg.record(&run.instance, cost, "vbs");
        }
    }
    reg
}

/// The per-instance score ratio: `(1 + best_known) / (1 + ub)`, and 0 for no
/// solution. Higher is better; 1.0 means the best-known bound was matched.
pub fn score_instance(best_known: u64, outcome: &Outcome) -> f64 {
    match outcome {
        Outcome::NoSolution => 0.0,
        Outcome::UpperBound(ub) => (1.0 + best_known as f64) / (1.0 + *ub as f64),
    }
}

/// The tuner's cost: `1 - score` when the bound is no better than best-known,
/// `1/score - 1` when it beats it, and 1 for no solution (the supremum of the
/// first case). Lower is better; values lie in (-1, 1].
pub fn cost_ac(best_known: u64, outcome: &Outcome) -> f64 {
    match outcome {
        Outcome::NoSolution => 1.0,
        Outcome::UpperBound(ub) => {
            let score = score_instance(best_known, outcome);
            if *ub >= best_known {
                1.0 - score
            } else {
                1.0 / score - 1.0
            }
        }
    }
}

/// Scoring failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreError {
    MissingBound { instance: String },
    DuplicateInstance { instance: String },
    EmptyResults,
    EmptyScores,
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::MissingBound { instance } => {
                write!(f, "no best-known bound for instance '{instance}'")
            }
            ScoreError::DuplicateInstance { instance } => {
                write!(f, "more than one result for instance '{instance}'")
            }
            ScoreError::EmptyResults => write!(f, "no instance results to score"),
            ScoreError::EmptyScores => write!(f, "no scores to aggregate"),
        }
    }
}

impl core::error::Error for ScoreError {}

/// Mean of per-instance scores against the registry; one result per instance.
pub fn score_solver(
    results: &[InstanceResult],
    registry: &BoundsRegistry,
) -> Result<f64, ScoreError> {
    if results.is_empty() {
        return Err(ScoreError::EmptyResults);
    }
    let mut seen = BTreeSet::new();
    let mut total = 0.0;
    for result in results {
        if !seen.insert(result.instance.as_str()) {
            return Err(ScoreError::DuplicateInstance {
                instance: result.instance.clone(),
            });
        }
        let best = registry.bound(&result.instance).ok_or(ScoreError::MissingBound {
            instance: result.instance.clone(),
        })?;
        total += score_instance(best, &result.outcome);
    }
    Ok(total / results.len() as f64)
}

/// Summary statistics over per-seed scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation (divide by n).
    pub std: f64,
}

/// Aggregates per-seed scores. The median of an even-length list is the
/// midpoint average; the standard deviation is the population one.
pub fn seed_stats(scores: &[f64]) -> Result<ScoreStats, ScoreError> {
    if scores.is_empty() {
        return Err(ScoreError::EmptyScores);
    }
    let n = scores.len() as f64;
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n;
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    let variance = sorted.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Ok(ScoreStats {
        mean,
        median,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        std: libm::sqrt(variance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ub(v: u64) -> Outcome {
        Outcome::UpperBound(v)
    }

    #[test]
    fn score_instance_fixtures() {
        assert_eq!(score_instance(4, &ub(9)), 0.5);
        assert_eq!(score_instance(7, &ub(7)), 1.0);
        assert_eq!(score_instance(4, &Outcome::NoSolution), 0.0);
        assert_eq!(score_instance(0, &ub(0)), 1.0);
    }

    #[test]
    fn cost_ac_fixtures() {
        assert_eq!(cost_ac(4, &ub(9)), 0.5);
        assert_eq!(cost_ac(9, &ub(4)), -0.5);
        assert_eq!(cost_ac(5, &ub(5)), 0.0);
        assert_eq!(cost_ac(4, &Outcome::NoSolution), 1.0);
    }

    #[test]
    fn score_solver_averages() {
        let mut reg = BoundsRegistry::new();
        reg.record("a", 7, "t");
        reg.record("b", 4, "t");
        let results = alloc::vec![
            InstanceResult { instance: "a".into(), outcome: ub(7) },
            InstanceResult { instance: "b".into(), outcome: ub(9) },
        ];
        assert_eq!(score_solver(&results, &reg).unwrap(), 0.75);
    }

    #[test]
    fn score_solver_all_no_solution() {
        let mut reg = BoundsRegistry::new();
        reg.record("a", 7, "t");
        let results = alloc::vec![InstanceResult {
            instance: "a".into(),
            outcome: Outcome::NoSolution,
        }];
        assert_eq!(score_solver(&results, &reg).unwrap(), 0.0);
    }

    #[test]
    fn score_solver_names_missing_instance() {
        let reg = BoundsRegistry::new();
        let results = alloc::vec![InstanceResult { instance: "ghost".into(), outcome: ub(1) }];
        assert_eq!(
            score_solver(&results, &reg),
            Err(ScoreError::MissingBound { instance: "ghost".into() })
        );
    }

    #[test]
    fn merge_takes_minimum_and_unions_sources() {
        let mut a = BoundsRegistry::new();
        a.record("i", 10, "one");
        let mut b = BoundsRegistry::new();
        b.record("i", 8, "two");
        b.record("j", 3, "two");
        let merged = merge_bounds(&[a.clone(), b]);
        assert_eq!(merged.bound("i"), Some(8));
        assert_eq!(merged.bound("j"), Some(3));
        assert_eq!(merged.sources("i").unwrap().len(), 2);
        assert_eq!(merge_bounds(&[a.clone()]), a);
    }

    #[test]
    fn seed_stats_fixtures() {
        let s = seed_stats(&[0.5, 1.0]).unwrap();
        assert_eq!(s.mean, 0.75);
        assert_eq!(s.median, 0.75);
        assert_eq!(s.min, 0.5);
        assert_eq!(s.max, 1.0);
        assert_eq!(s.std, 0.25);

        let s = seed_stats(&[0.7]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max, s.std), (0.7, 0.7, 0.7, 0.7, 0.0));

        let s = seed_stats(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.median, 0.5);
        assert_eq!(s.std, 0.5);

        assert_eq!(seed_stats(&[]), Err(ScoreError::EmptyScores));
    }
}
