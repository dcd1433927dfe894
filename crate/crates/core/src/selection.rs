//! Post-tuning selection: rank the traversed configurations, complete any
//! missing evaluations, rescore the top candidates under the true
//! competition score, and pick the overall winner.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::scoring::{score_solver, BoundsRegistry, InstanceResult, Outcome, ScoreError};
use crate::space::{ConfigId, Configuration};
use crate::tuner::{Archive, EvalTask, Evaluator};

#[derive(Debug)]
pub enum SelectionError {
    EmptyArchive,
    EmptyPool,
    DuplicateConfig { id: ConfigId },
    EvaluatorContract { expected: usize, got: usize },
    Score(ScoreError),
}

impl fmt::Display for SelectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionError::EmptyArchive => write!(f, "the archive holds no entries"),
            SelectionError::EmptyPool => write!(f, "the candidate pool is empty"),
            SelectionError::DuplicateConfig { id } => {
                write!(f, "configuration {id} appears twice")
            }
            SelectionError::EvaluatorContract { expected, got } => {
                write!(f, "evaluator returned {got} outcomes for {expected} tasks")
            }
            SelectionError::Score(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SelectionError {}

impl From<ScoreError> for SelectionError {
    fn from(e: ScoreError) -> Self {
        SelectionError::Score(e)
    }
}

/// The ranked prefix of the archive's distinct configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedConfigs {
    pub configs: Vec<Configuration>,
    /// True when fewer than the requested k distinct configurations exist.
    pub truncated: bool,
}

/// Orders archive entries by rank within a generation (ascending) and, within
/// the same rank, by the most recent generation; returns the first `k`
/// distinct configurations in that order.
pub fn rank_archive(archive: &Archive, k: usize) -> Result<RankedConfigs, SelectionError> {
    if archive.is_empty() {
        return Err(SelectionError::EmptyArchive);
    }
    let mut order: Vec<usize> = (0..archive.len()).collect();
    order.sort_by(|&a, &b| {
        let ea = &archive.entries()[a];
        let eb = &archive.entries()[b];
        ea.rank_in_generation
            .cmp(&eb.rank_in_generation)
            .then_with(|| eb.generation.cmp(&ea.generation))
    });
    let mut seen = alloc::collections::BTreeSet::new();
    let mut configs = Vec::new();
    for idx in order {
        let entry = &archive.entries()[idx];
        if configs.len() == k {
            break;
        }
        if seen.insert(entry.config.id().clone()) {
            configs.push(entry.config.clone());
        }
    }
    let truncated = configs.len() < k;
    Ok(RankedConfigs { configs, truncated })
}

/// One rescored candidate: its configuration, true mean score, and the
/// per-instance outcomes the score was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub config: Configuration,
    pub mse_score: f64,
    pub per_instance: BTreeMap<String, Outcome>,
}

/// Candidates ordered by score (descending, ties toward the lower config id)
/// together with the frozen registry they were scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub candidates: Vec<Candidate>,
    pub registry: BoundsRegistry,
}

impl CandidatePool {
    /// Recomputes a candidate's score from its stored outcomes; the pool is
    /// self-contained.
    pub fn recomputed_score(&self, candidate: &Candidate) -> Result<f64, ScoreError> {
        let results: Vec<InstanceResult> = candidate
            .per_instance
            .iter()
            .map(|(instance, outcome)| InstanceResult {
                instance: instance.clone(),
                outcome: *outcome,
            })
            .collect();
        score_solver(&results, &self.registry)
    }
}

/// Ensures every (configuration, instance) pair has an outcome — reusing
/// `known` evaluations and executing only the missing pairs with a single
/// fixed seed — then scores each configuration and assembles the pool.
pub fn complete_and_score(
    configs: &[Configuration],
    instances: &[String],
    registry: &BoundsRegistry,
    known: &BTreeMap<(ConfigId, String), Outcome>,
    eval: &mut dyn Evaluator,
    seed: u64,
) -> Result<CandidatePool, SelectionError> {
    let mut ids = alloc::collections::BTreeSet::new();
    for config in configs {
        if !ids.insert(config.id().clone()) {
            return Err(SelectionError::DuplicateConfig { id: config.id().clone() });
        }
    }

    let mut missing: Vec<EvalTask> = Vec::new();
    for config in configs {
        for instance in instances {
            if !known.contains_key(&(config.id().clone(), instance.clone())) {
                missing.push(EvalTask {
                    config: config.clone(),
                    instance: instance.clone(),
                    seed,
                });
            }
        }
    }
    let fresh = eval.evaluate(&missing);
    if fresh.len() != missing.len() {
        return Err(SelectionError::EvaluatorContract {
            expected: missing.len(),
            got: fresh.len(),
        });
    }
    let fresh_map: BTreeMap<(ConfigId, String), Outcome> = missing
        .iter()
        .zip(fresh.iter())
        .map(|(task, outcome)| ((task.config.id().clone(), task.instance.clone()), *outcome))
        .collect();

    let mut candidates = Vec::with_capacity(configs.len());
    for config in configs {
        let mut per_instance = BTreeMap::new();
        let mut results = Vec::with_capacity(instances.len());
        for instance in instances {
            let key = (config.id().clone(), instance.clone());
            let outcome = known
                .get(&key)
                .or_else(|| fresh_map.get(&key))
                .copied()
                .unwrap_or(Outcome::NoSolution);
            per_instance.insert(instance.clone(), outcome);
            results.push(InstanceResult { instance: instance.clone(), outcome });
        }
        let mse_score = score_solver(&results, registry)?;
        candidates.push(Candidate { config: config.clone(), mse_score, per_instance });
    }

    candidates.sort_by(|a, b| {
        b.mse_score
            .total_cmp(&a.mse_score)
            .then_with(|| a.config.id().cmp(b.config.id()))
    });

    Ok(CandidatePool { candidates, registry: registry.clone() })
}

/// The pool's first candidate: the configuration with the best true score.
pub fn winner(pool: &CandidatePool) -> Result<&Configuration, SelectionError> {
    pool.candidates
        .first()
        .map(|c| &c.config)
        .ok_or(SelectionError::EmptyPool)
}
