//! Portfolios over tuned configurations: parallel bundles scored as a
//! virtual best solver, and virtual sequential schedules with
//! maximum-time-between-solutions (MTBS) restart semantics, including the
//! exhaustive search for the best schedule on training traces.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::run::{RunRecord, TracePoint};
use crate::scoring::{score_solver, BoundsRegistry, InstanceResult, Outcome, ScoreError};
use crate::selection::CandidatePool;
use crate::space::{ConfigId, Configuration};

/// The MTBS grid explored by default, in seconds.
pub const DEFAULT_MTBS_GRID: [f64; 12] =
    [2.0, 3.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0];

/// Default global budget for a sequential schedule, in seconds.
pub const DEFAULT_BUDGET_TO: f64 = 60.0;

/// Default maximum schedule length.
pub const DEFAULT_MAX_LEN: usize = 3;

#[derive(Debug)]
pub enum PortfolioError {
    EmptyPool,
    EmptyGrid,
    EmptyInstances,
    InsufficientCandidates { requested: usize, available: usize },
    MissingRun { config: ConfigId, seed: u64, instance: String },
    MissingTrace { config: ConfigId, instance: String },
    InvalidSchedule(&'static str),
    Score(ScoreError),
}

impl fmt::Display for PortfolioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortfolioError::EmptyPool => write!(f, "no candidate configurations"),
            PortfolioError::EmptyGrid => write!(f, "the MTBS grid is empty"),
            PortfolioError::EmptyInstances => write!(f, "no instances to evaluate on"),
            PortfolioError::InsufficientCandidates { requested, available } => {
                write!(f, "requested {requested} entries but only {available} candidates exist")
            }
            PortfolioError::MissingRun { config, seed, instance } => {
                write!(f, "no run for configuration {config} seed {seed} on '{instance}'")
            }
            PortfolioError::MissingTrace { config, instance } => {
                write!(f, "no trace for configuration {config} on '{instance}'")
            }
            PortfolioError::InvalidSchedule(msg) => write!(f, "invalid schedule: {msg}"),
            PortfolioError::Score(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PortfolioError {}

impl From<ScoreError> for PortfolioError {
    fn from(e: ScoreError) -> Self {
        PortfolioError::Score(e)
    }
}

/// Whether a parallel portfolio varies seeds on one configuration or bundles
/// distinct configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortfolioKind {
    Seeds,
    Configs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioEntry {
    pub config: Configuration,
    pub seed: u64,
}

/// N solver processes meant to run side by side; scored as the per-instance
/// minimum over its entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelPortfolio {
    pub entries: Vec<PortfolioEntry>,
    pub kind: PortfolioKind,
}

/// The top-`n` pool candidates, each with a seed derived deterministically
/// from `base_seed`.
pub fn build_parallel_configs(
    pool: &CandidatePool,
    n: usize,
    base_seed: u64,
) -> Result<ParallelPortfolio, PortfolioError> {
    if n == 0 || n > pool.candidates.len() {
        return Err(PortfolioError::InsufficientCandidates {
            requested: n,
            available: pool.candidates.len(),
        });
    }
    let entries = pool.candidates[..n]
        .iter()
        .enumerate()
        .map(|(i, c)| PortfolioEntry {
            config: c.config.clone(),
            seed: base_seed.wrapping_add(i as u64),
        })
        .collect();
    Ok(ParallelPortfolio { entries, kind: PortfolioKind::Configs })
}

/// `n` distinct derived seeds over a single configuration.
pub fn build_parallel_seeds(
    config: &Configuration,
    n: usize,
    base_seed: u64,
) -> Result<ParallelPortfolio, PortfolioError> {
    if n == 0 {
        return Err(PortfolioError::InsufficientCandidates { requested: n, available: 0 });
    }
    let entries = (0..n)
        .map(|i| PortfolioEntry {
            config: config.clone(),
            seed: base_seed.wrapping_add(i as u64),
        })
        .collect();
    Ok(ParallelPortfolio { entries, kind: PortfolioKind::Seeds })
}

/// Scores a parallel portfolio on stored runs: per instance, the minimum
/// validated cost across entries, then the mean score against the registry.
/// Every (entry, instance) pair must be covered by a run.
pub fn score_parallel(
    portfolio: &ParallelPortfolio,
    runs: &[RunRecord],
    registry: &BoundsRegistry,
) -> Result<f64, PortfolioError> {
    let mut by_key: BTreeMap<(&ConfigId, u64, &str), Outcome> = BTreeMap::new();
    let mut instances = alloc::collections::BTreeSet::new();
    for run in runs {
        instances.insert(run.instance.as_str());
        by_key.insert((&run.config_id, run.seed, run.instance.as_str()), run.outcome());
    }
    if instances.is_empty() {
        return Err(PortfolioError::EmptyInstances);
    }
    let mut results = Vec::with_capacity(instances.len());
    for instance in instances {
        let mut best: Option<u64> = None;
        for entry in &portfolio.entries {
            let outcome = by_key
                .get(&(entry.config.id(), entry.seed, instance))
                .ok_or_else(|| PortfolioError::MissingRun {
                    config: entry.config.id().clone(),
                    seed: entry.seed,
                    instance: instance.into(),
                })?;
            if let Outcome::UpperBound(cost) = outcome {
                best = Some(best.map_or(*cost, |b: u64| b.min(*cost)));
            }
        }
        results.push(InstanceResult {
            instance: instance.into(),
            outcome: best.map_or(Outcome::NoSolution, Outcome::UpperBound),
        });
    }
    Ok(score_solver(&results, registry)?)
}

/// An ordered sequence of configurations with an MTBS value and a global
/// budget: the virtual sequential portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub sequence: Vec<Configuration>,
    pub mtbs: f64,
    pub budget_to: f64,
}

impl Schedule {
    pub fn new(
        sequence: Vec<Configuration>,
        mtbs: f64,
        budget_to: f64,
    ) -> Result<Self, PortfolioError> {
        if sequence.is_empty() {
            return Err(PortfolioError::InvalidSchedule("sequence must be non-empty"));
        }
        if !(mtbs > 0.0 && mtbs.is_finite()) {
            return Err(PortfolioError::InvalidSchedule("mtbs must be positive and finite"));
        }
        if !(budget_to > 0.0 && budget_to.is_finite()) {
            return Err(PortfolioError::InvalidSchedule("budget must be positive and finite"));
        }
        Ok(Schedule { sequence, mtbs, budget_to })
    }
}

/// One executed slice of a simulated schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchSegment {
    pub config: ConfigId,
    pub start: f64,
    pub stop: f64,
    /// Best overall bound observed when the slice ended.
    pub best_bound_at_stop: Option<u64>,
}

/// Simulates one schedule over one instance's per-configuration traces
/// (`traces[k]` belongs to `schedule.sequence[k]`; trace times are local to
/// each solver's activation).
///
/// Semantics: no MTBS timer runs before a solver's first solution; after a
/// solution at local time `t` the solver is stopped at `t + mtbs` unless a
/// strictly later event arrives at local time `<= t + mtbs` (the boundary is
/// inclusive: an event exactly at `t + mtbs` keeps the solver alive). The
/// last solver is never MTBS-stopped. Everything is cut at the global
/// budget; events falling exactly on the budget still count.
pub fn simulate_schedule(
    schedule: &Schedule,
    traces: &[&[TracePoint]],
) -> (Outcome, Vec<SwitchSegment>) {
    assert_eq!(
        traces.len(),
        schedule.sequence.len(),
        "one trace per scheduled configuration"
    );
    let to = schedule.budget_to;
    let mtbs = schedule.mtbs;
    let mut global = 0.0_f64;
    let mut best: Option<u64> = None;
    let mut segments = Vec::new();

    for (k, (config, trace)) in schedule.sequence.iter().zip(traces).enumerate() {
        if global >= to {
            break;
        }
        let start = global;
        let is_last = k + 1 == schedule.sequence.len();

        // Walk the chain of events whose inter-solution gaps stay within
        // MTBS; the chain's end determines the local stop time.
        let mut stop_local = f64::INFINITY;
        let mut chain_end = None;
        if !is_last {
            for point in trace.iter() {
                match chain_end {
                    None => chain_end = Some(point.t),
                    Some(prev) => {
                        if point.t <= prev + mtbs {
                            chain_end = Some(point.t);
                        } else {
                            break;
                        }
                    }
                }
            }
            if let Some(end) = chain_end {
                stop_local = end + mtbs;
            }
        }

        let stop_global = if is_last { to } else { (start + stop_local).min(to) };

        for point in trace.iter() {
            if !is_last && chain_end.map_or(true, |end| point.t > end) {
                break;
            }
            let at = start + point.t;
            if at > to {
                break;
            }
            best = Some(best.map_or(point.bound, |b| b.min(point.bound)));
        }

        segments.push(SwitchSegment {
            config: config.id().clone(),
            start,
            stop: stop_global,
            best_bound_at_stop: best,
        });
        global = stop_global;
    }

    (best.map_or(Outcome::NoSolution, Outcome::UpperBound), segments)
}

/// Traces keyed by (configuration, instance).
pub type TraceStore = BTreeMap<(ConfigId, String), Vec<TracePoint>>;

/// Simulation of a schedule across a whole instance set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub per_instance: BTreeMap<String, Outcome>,
    pub switch_log: BTreeMap<String, Vec<SwitchSegment>>,
}

/// Simulates the schedule on every instance and aggregates the mean score.
pub fn evaluate_schedule(
    schedule: &Schedule,
    traces: &TraceStore,
    instances: &[String],
    registry: &BoundsRegistry,
) -> Result<(SimOutcome, f64), PortfolioError> {
    if instances.is_empty() {
        return Err(PortfolioError::EmptyInstances);
    }
    let mut per_instance = BTreeMap::new();
    let mut switch_log = BTreeMap::new();
    let mut results = Vec::with_capacity(instances.len());
    for instance in instances {
        let mut slices: Vec<&[TracePoint]> = Vec::with_capacity(schedule.sequence.len());
        for config in &schedule.sequence {
            let trace = traces
                .get(&(config.id().clone(), instance.clone()))
                .ok_or_else(|| PortfolioError::MissingTrace {
                    config: config.id().clone(),
                    instance: instance.clone(),
                })?;
            slices.push(trace.as_slice());
        }
        let (outcome, segments) = simulate_schedule(schedule, &slices);
        per_instance.insert(instance.clone(), outcome);
        switch_log.insert(instance.clone(), segments);
        results.push(InstanceResult { instance: instance.clone(), outcome });
    }
    let score = score_solver(&results, registry)?;
    Ok((SimOutcome { per_instance, switch_log }, score))
}

/// Knobs for the exhaustive schedule search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub max_len: usize,
    pub mtbs_grid: Vec<f64>,
    pub budget_to: f64,
    /// Allow the same configuration to appear several times in a sequence.
    pub allow_repeats: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            max_len: DEFAULT_MAX_LEN,
            mtbs_grid: DEFAULT_MTBS_GRID.to_vec(),
            budget_to: DEFAULT_BUDGET_TO,
            allow_repeats: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSearchResult {
    pub best: Schedule,
    pub train_score: f64,
    /// Number of (sequence, mtbs) pairs simulated.
    pub evaluated: u64,
}

fn visit_sequences(
    n: usize,
    max_len: usize,
    allow_repeats: bool,
    prefix: &mut Vec<usize>,
    used: &mut Vec<bool>,
    f: &mut impl FnMut(&[usize]) -> Result<(), PortfolioError>,
) -> Result<(), PortfolioError> {
    if prefix.len() == max_len {
        return Ok(());
    }
    for i in 0..n {
        if !allow_repeats && used[i] {
            continue;
        }
        prefix.push(i);
        used[i] = true;
        f(prefix)?;
        visit_sequences(n, max_len, allow_repeats, prefix, used, f)?;
        used[i] = false;
        prefix.pop();
    }
    Ok(())
}

/// Exhaustively enumerates ordered sequences (without repetition unless
/// allowed) of lengths `1..=max_len` crossed with the MTBS grid, scores each
/// on the training traces, and returns the argmax. Ties break toward the
/// shorter sequence, then the smaller MTBS, then lexicographic config ids.
pub fn search_best_schedule(
    candidates: &[Configuration],
    traces: &TraceStore,
    instances: &[String],
    registry: &BoundsRegistry,
    params: &SearchParams,
) -> Result<ScheduleSearchResult, PortfolioError> {
    if candidates.is_empty() {
        return Err(PortfolioError::EmptyPool);
    }
    if params.mtbs_grid.is_empty() {
        return Err(PortfolioError::EmptyGrid);
    }
    if instances.is_empty() {
        return Err(PortfolioError::EmptyInstances);
    }
    for config in candidates {
        for instance in instances {
            if !traces.contains_key(&(config.id().clone(), instance.clone())) {
                return Err(PortfolioError::MissingTrace {
                    config: config.id().clone(),
                    instance: instance.clone(),
                });
            }
        }
    }

    struct Best {
        schedule: Schedule,
        ids: Vec<ConfigId>,
        score: f64,
    }
    let mut best: Option<Best> = None;
    let mut evaluated = 0u64;

    let mut consider = |indices: &[usize]| -> Result<(), PortfolioError> {
        let sequence: Vec<Configuration> =
            indices.iter().map(|&i| candidates[i].clone()).collect();
        let ids: Vec<ConfigId> = sequence.iter().map(|c| c.id().clone()).collect();
        for &mtbs in &params.mtbs_grid {
            let schedule = Schedule::new(sequence.clone(), mtbs, params.budget_to)?;
            let mut results = Vec::with_capacity(instances.len());
            for instance in instances {
                let slices: Vec<&[TracePoint]> = schedule
                    .sequence
                    .iter()
                    .map(|c| traces[&(c.id().clone(), instance.clone())].as_slice())
                    .collect();
                let (outcome, _) = simulate_schedule(&schedule, &slices);
                results.push(InstanceResult { instance: instance.clone(), outcome });
            }
            let score = score_solver(&results, registry)?;
            evaluated += 1;

            let better = match &best {
                None => true,
                Some(b) => {
                    score > b.score
                        || (score == b.score
                            && (schedule.sequence.len() < b.schedule.sequence.len()
                                || (schedule.sequence.len() == b.schedule.sequence.len()
                                    && (mtbs < b.schedule.mtbs
                                        || (mtbs == b.schedule.mtbs && ids < b.ids)))))
                }
            };
            if better {
                best = Some(Best { schedule, ids: ids.clone(), score });
            }
        }
        Ok(())
    };

    let mut prefix = Vec::new();
    let mut used = alloc::vec![false; candidates.len()];
    visit_sequences(
        candidates.len(),
        params.max_len,
        params.allow_repeats,
        &mut prefix,
        &mut used,
        &mut consider,
    )?;

    let best = best.expect("at least one schedule was evaluated");
    Ok(ScheduleSearchResult { best: best.schedule, train_score: best.score, evaluated })
}
