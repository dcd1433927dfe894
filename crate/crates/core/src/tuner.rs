//! Gender-based genetic configurator: a population of configurations split
//! into a competitive group (raced in mini-tournaments every generation) and
//! a non-competitive group (a source of diversity for breeding), plus an
//! append-only archive of every evaluated configuration.
//!
//! The engine is a pure state machine: callers supply an [`Evaluator`] for
//! the black box and drive generations until their budget runs out. With a
//! deterministic evaluator and a fixed seed, two runs produce identical
//! archives.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scoring::{cost_ac, BoundsRegistry, Outcome};
use crate::space::{ConfigId, Configuration, ParameterSpace, SpaceError};

/// Which selection pressure a genome is under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gender {
    Competitive,
    NonCompetitive,
}

/// One population member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub config: Configuration,
    pub gender: Gender,
    /// Generations survived since birth.
    pub age: u32,
    pub birth_generation: u32,
}

/// The two gender groups plus the elite configurations injected into every
/// generation's tournaments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub competitive: Vec<Genome>,
    pub noncompetitive: Vec<Genome>,
    pub elites: Vec<Configuration>,
}

/// How many training instances each generation sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InstancePolicy {
    AllInstances,
    /// Ramp linearly from `start_fraction` of the instances at generation 1
    /// to all of them at `full_at_generation`.
    Incremental { start_fraction: f64, full_at_generation: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerSettings {
    /// Number of mini-tournaments per generation.
    pub num_tournaments: usize,
    /// Size of each gender group.
    pub population_size: usize,
    /// Wall-clock tuning budget in seconds.
    pub budget_seconds: f64,
    pub instance_policy: InstancePolicy,
    /// Genomes older than this die, except a reigning overall winner.
    pub max_age: u32,
    /// Per-parameter mutation probability.
    pub mutation_rate: f64,
    pub rng_seed: u64,
}

impl Default for TunerSettings {
    fn default() -> Self {
        TunerSettings {
            num_tournaments: 5,
            population_size: 100,
            budget_seconds: 3600.0,
            instance_policy: InstancePolicy::AllInstances,
            max_age: 3,
            mutation_rate: 0.10,
            rng_seed: 0,
        }
    }
}

impl TunerSettings {
    fn validate(&self, num_instances: usize) -> Result<(), TunerError> {
        if self.num_tournaments == 0 {
            return Err(TunerError::InvalidSettings("num_tournaments must be positive"));
        }
        if self.population_size < 2 * self.num_tournaments {
            return Err(TunerError::InvalidSettings(
                "population_size must be at least twice num_tournaments",
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(TunerError::InvalidSettings("mutation_rate must lie in [0, 1]"));
        }
        if let InstancePolicy::Incremental { start_fraction, full_at_generation } =
            self.instance_policy
        {
            if !(start_fraction > 0.0 && start_fraction <= 1.0) {
                return Err(TunerError::InvalidSettings("start_fraction must lie in (0, 1]"));
            }
            if start_fraction * (num_instances as f64) < 1.0 {
                return Err(TunerError::InvalidSettings(
                    "start_fraction covers less than one instance",
                ));
            }
            if full_at_generation == 0 {
                return Err(TunerError::InvalidSettings("full_at_generation must be positive"));
            }
        }
        Ok(())
    }
}

/// A pointer to one persisted evaluation plus its scoring outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRef {
    pub instance: String,
    pub seed: u64,
    pub outcome: Outcome,
}

/// One archived participant of one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub config: Configuration,
    pub generation: u32,
    /// 1-based position in the participant's mini-tournament ordering.
    pub rank_in_generation: u32,
    pub evaluations: Vec<EvalRef>,
}

/// Append-only log of every configuration evaluated, one entry per
/// (configuration, generation).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    entries: Vec<ArchiveEntry>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds an archive from externally stored entries.
    pub fn from_entries(entries: Vec<ArchiveEntry>) -> Self {
        Archive { entries }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    fn push(&mut self, entry: ArchiveEntry) {
        self.entries.push(entry);
    }

    /// The most recent outcome per (configuration, instance), later
    /// generations overriding earlier ones.
    pub fn latest_outcomes(&self) -> BTreeMap<(ConfigId, String), Outcome> {
        let mut map = BTreeMap::new();
        for entry in &self.entries {
            for eval in &entry.evaluations {
                map.insert(
                    (entry.config.id().clone(), eval.instance.clone()),
                    eval.outcome,
                );
            }
        }
        map
    }

    /// Configurations by id, for materializing ranked ids back into configs.
    pub fn configs_by_id(&self) -> BTreeMap<ConfigId, Configuration> {
        self.entries
            .iter()
            .map(|e| (e.config.id().clone(), e.config.clone()))
            .collect()
    }
}

/// One black-box evaluation request.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTask {
    pub config: Configuration,
    pub instance: String,
    pub seed: u64,
}

/// Executes evaluation requests; the result vector matches the task order.
/// Failures degrade to [`Outcome::NoSolution`], never abort the batch.
pub trait Evaluator {
    fn evaluate(&mut self, tasks: &[EvalTask]) -> Vec<Outcome>;
}

#[derive(Debug)]
pub enum TunerError {
    InvalidSettings(&'static str),
    NoInstances,
    DuplicateInstance { instance: String },
    MissingBound { instance: String },
    /// The budget expired before a single generation completed.
    NoGenerations { archive: Archive },
    EvaluatorContract { expected: usize, got: usize },
    Space(SpaceError),
}

impl fmt::Display for TunerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TunerError::InvalidSettings(msg) => write!(f, "invalid tuner settings: {msg}"),
            TunerError::NoInstances => write!(f, "no training instances"),
            TunerError::DuplicateInstance { instance } => {
                write!(f, "training instance '{instance}' listed twice")
            }
            TunerError::MissingBound { instance } => {
                write!(f, "no best-known bound for training instance '{instance}'")
            }
            TunerError::NoGenerations { .. } => {
                write!(f, "budget exhausted before any generation completed")
            }
            TunerError::EvaluatorContract { expected, got } => {
                write!(f, "evaluator returned {got} outcomes for {expected} tasks")
            }
            TunerError::Space(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for TunerError {}

impl From<SpaceError> for TunerError {
    fn from(e: SpaceError) -> Self {
        TunerError::Space(e)
    }
}

/// Instance count for generation `j` under the incremental policy: a linear
/// ramp, rounded to nearest, from `ceil(start_fraction * total)` at j = 1 to
/// `total` at `full_at`, clamped afterwards.
pub fn incremental_count(total: usize, j: u32, start_fraction: f64, full_at: u32) -> usize {
    let n = total as f64;
    let start = libm::ceil(start_fraction * n).max(1.0);
    if full_at <= 1 || j >= full_at {
        return total;
    }
    let frac = (j.saturating_sub(1)) as f64 / (full_at - 1) as f64;
    let k = libm::round(start + (n - start) * frac) as usize;
    k.clamp(1, total)
}

/// Summary of one completed generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub generation: u32,
    pub num_instances: usize,
    /// Unique solver evaluations issued this generation.
    pub evaluations: usize,
    /// Ordered tournament winners, best first.
    pub winners: Vec<ConfigId>,
    pub best_mean_cost: f64,
    /// Offspring dropped because constraint repair hit its cap.
    pub skipped_children: u32,
}

/// The tuner state machine. Serializable, so a driver can checkpoint after
/// every generation and resume later.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GgaEngine {
    space: ParameterSpace,
    registry: BoundsRegistry,
    settings: TunerSettings,
    /// Fixed rng-shuffled ordering; incremental subsets are prefixes of it.
    instances: Vec<String>,
    population: Population,
    archive: Archive,
    rng: ChaCha8Rng,
    generation: u32,
    winner: Option<Configuration>,
}

impl GgaEngine {
    pub fn new(
        space: ParameterSpace,
        instances: Vec<String>,
        registry: BoundsRegistry,
        elites: Vec<Configuration>,
        settings: TunerSettings,
    ) -> Result<Self, TunerError> {
        if instances.is_empty() {
            return Err(TunerError::NoInstances);
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for inst in &instances {
            if !seen.insert(inst.as_str()) {
                return Err(TunerError::DuplicateInstance { instance: inst.clone() });
            }
            if registry.bound(inst).is_none() {
                return Err(TunerError::MissingBound { instance: inst.clone() });
            }
        }
        settings.validate(instances.len())?;

        let mut rng = ChaCha8Rng::seed_from_u64(settings.rng_seed);
        let mut instances = instances;
        instances.shuffle(&mut rng);

        let sample_group = |gender: Gender, rng: &mut ChaCha8Rng| -> Result<Vec<Genome>, TunerError> {
            (0..settings.population_size)
                .map(|_| {
                    Ok(Genome {
                        config: space.sample(rng)?,
                        gender,
                        age: 0,
                        birth_generation: 0,
                    })
                })
                .collect()
        };
        let competitive = sample_group(Gender::Competitive, &mut rng)?;
        let noncompetitive = sample_group(Gender::NonCompetitive, &mut rng)?;

        Ok(GgaEngine {
            space,
            registry,
            settings,
            instances,
            population: Population { competitive, noncompetitive, elites },
            archive: Archive::new(),
            rng,
            generation: 0,
            winner: None,
        })
    }

    pub fn settings(&self) -> &TunerSettings {
        &self.settings
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn registry(&self) -> &BoundsRegistry {
        &self.registry
    }

    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    /// Completed generations.
    pub fn generation(&self) -> u32 {
        self.generation
    }

    /// The current overall best configuration (last generation's w1).
    pub fn winner(&self) -> Option<&Configuration> {
        self.winner.as_ref()
    }

    /// The instance subset generation `j` evaluates on: a prefix of the fixed
    /// shuffled ordering, so subsets form a chain across generations.
    pub fn instance_subset(&self, j: u32) -> &[String] {
        let k = match self.settings.instance_policy {
            InstancePolicy::AllInstances => self.instances.len(),
            InstancePolicy::Incremental { start_fraction, full_at_generation } => {
                incremental_count(self.instances.len(), j, start_fraction, full_at_generation)
            }
        };
        &self.instances[..k]
    }

    /// Runs one full generation: mini-tournaments over the instance subset,
    /// archive bookkeeping, breeding, and aging.
    pub fn run_generation(&mut self, eval: &mut dyn Evaluator) -> Result<GenerationReport, TunerError> {
        let j = self.generation + 1;
        let subset: Vec<String> = self.instance_subset(j).to_vec();
        let seed = self.settings.rng_seed;

        // Participants: elites first (one per tournament), then the
        // competitive group.
        let elite_count = self.population.elites.len();
        let participants: Vec<Configuration> = self
            .population
            .elites
            .iter()
            .chain(self.population.competitive.iter().map(|g| &g.config))
            .cloned()
            .collect();

        let groups = split_tournaments(
            elite_count,
            participants.len() - elite_count,
            self.settings.num_tournaments,
            &mut self.rng,
        );

        // Evaluations are cached per (config, instance) within the
        // generation; duplicate configurations run once.
        let mut tasks: Vec<EvalTask> = Vec::new();
        let mut task_index: BTreeMap<(ConfigId, &str), usize> = BTreeMap::new();
        for config in &participants {
            for instance in &subset {
                let key = (config.id().clone(), instance.as_str());
                if !task_index.contains_key(&key) {
                    task_index.insert(key, tasks.len());
                    tasks.push(EvalTask {
                        config: config.clone(),
                        instance: instance.clone(),
                        seed,
                    });
                }
            }
        }
        let outcomes = eval.evaluate(&tasks);
        if outcomes.len() != tasks.len() {
            return Err(TunerError::EvaluatorContract {
                expected: tasks.len(),
                got: outcomes.len(),
            });
        }

        // Mean tuning cost per participant over the subset.
        let mean_costs: Vec<f64> = participants
            .iter()
            .map(|config| {
                let total: f64 = subset
                    .iter()
                    .map(|instance| {
                        let idx = task_index[&(config.id().clone(), instance.as_str())];
                        let best = self
                            .registry
                            .bound(instance)
                            .expect("instances validated at construction");
                        cost_ac(best, &outcomes[idx])
                    })
                    .sum();
                total / subset.len() as f64
            })
            .collect();

        // Rank every tournament; ties break toward the lower config id.
        let by_cost = |a: &usize, b: &usize| {
            mean_costs[*a]
                .total_cmp(&mean_costs[*b])
                .then_with(|| participants[*a].id().cmp(participants[*b].id()))
        };
        let mut winners: Vec<usize> = Vec::with_capacity(groups.len());
        let mut ranked_entries: Vec<(u32, usize)> = Vec::with_capacity(participants.len());
        for group in &groups {
            let mut order = group.clone();
            order.sort_by(by_cost);
            if let Some(&first) = order.first() {
                winners.push(first);
            }
            for (pos, &p) in order.iter().enumerate() {
                ranked_entries.push((pos as u32 + 1, p));
            }
        }
        winners.sort_by(by_cost);

        // Archive: one entry per configuration this generation, keeping its
        // best rank when the same configuration raced in several tournaments.
        let mut best_rank: BTreeMap<&ConfigId, (u32, usize)> = BTreeMap::new();
        for &(rank, p) in &ranked_entries {
            let entry = best_rank.entry(participants[p].id()).or_insert((rank, p));
            if rank < entry.0 {
                *entry = (rank, p);
            }
        }
        let mut new_entries: Vec<(u32, usize)> = best_rank.values().copied().collect();
        new_entries.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| {
            participants[a.1].id().cmp(participants[b.1].id())
        }));
        for (rank, p) in new_entries {
            let config = &participants[p];
            let evaluations = subset
                .iter()
                .map(|instance| EvalRef {
                    instance: instance.clone(),
                    seed,
                    outcome: outcomes[task_index[&(config.id().clone(), instance.as_str())]],
                })
                .collect();
            self.archive.push(ArchiveEntry {
                config: config.clone(),
                generation: j,
                rank_in_generation: rank,
                evaluations,
            });
        }

        let w1 = winners[0];
        let winner_config = participants[w1].clone();
        let winner_configs: Vec<Configuration> =
            winners.iter().map(|&p| participants[p].clone()).collect();

        let (offspring, skipped) = crossover_and_mutate(
            &self.population.noncompetitive,
            &winner_configs,
            &self.space,
            self.settings.mutation_rate,
            j,
            &mut self.rng,
        );
        aging_and_death(
            Some(winner_config.id()),
            &mut self.population,
            offspring,
            j,
            self.settings.max_age,
            self.settings.population_size,
            &self.space,
            &mut self.rng,
        )?;

        let report = GenerationReport {
            generation: j,
            num_instances: subset.len(),
            evaluations: tasks.len(),
            winners: winner_configs.iter().map(|c| c.id().clone()).collect(),
            best_mean_cost: mean_costs[w1],
            skipped_children: skipped,
        };
        self.winner = Some(winner_config);
        self.generation = j;
        Ok(report)
    }
}

/// Splits participants into `n` near-equal tournaments: elites one per
/// tournament first, then the shuffled competitive genomes round-robin.
fn split_tournaments(
    elite_count: usize,
    genome_count: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for i in 0..elite_count {
        groups[i % n].push(i);
    }
    let mut genome_indices: Vec<usize> = (elite_count..elite_count + genome_count).collect();
    genome_indices.shuffle(rng);
    for (k, idx) in genome_indices.into_iter().enumerate() {
        groups[k % n].push(idx);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Breeds each winner with `ceil(|noncompetitive| / n_winners)` partners.
/// Children take each parameter from either parent uniformly, then mutate
/// per-parameter with `mutation_rate`; constraint-violating children are
/// re-mutated up to 1000 times and skipped if still violating.
pub fn crossover_and_mutate(
    noncompetitive: &[Genome],
    winners: &[Configuration],
    space: &ParameterSpace,
    mutation_rate: f64,
    birth_generation: u32,
    rng: &mut ChaCha8Rng,
) -> (Vec<Genome>, u32) {
    const REPAIR_ATTEMPTS: u32 = 1000;
    let mut offspring = Vec::new();
    let mut skipped = 0;
    if winners.is_empty() || noncompetitive.is_empty() {
        return (offspring, skipped);
    }
    let per_winner = noncompetitive.len().div_ceil(winners.len());
    for winner in winners {
        let partner_indices =
            rand::seq::index::sample(rng, noncompetitive.len(), per_winner.min(noncompetitive.len()));
        for partner_idx in partner_indices {
            let partner = &noncompetitive[partner_idx].config;
            let base: BTreeMap<String, crate::space::ParamValue> = space
                .params()
                .iter()
                .map(|p| {
                    let from_winner = rng.random_bool(0.5);
                    let source = if from_winner { winner } else { partner };
                    (
                        p.name.clone(),
                        source.value(&p.name).cloned().unwrap_or_else(|| p.default.clone()),
                    )
                })
                .collect();

            let mut child = None;
            for _ in 0..REPAIR_ATTEMPTS {
                let mut values = base.clone();
                for p in space.params() {
                    if mutation_rate > 0.0 && rng.random_bool(mutation_rate) {
                        values.insert(p.name.clone(), p.domain.sample(rng));
                    }
                }
                if let Ok(config) = space.configuration(values) {
                    child = Some(config);
                    break;
                }
                if mutation_rate == 0.0 {
                    // Re-mutation cannot change anything.
                    break;
                }
            }
            match child {
                Some(config) => {
                    let gender = if rng.random_bool(0.5) {
                        Gender::Competitive
                    } else {
                        Gender::NonCompetitive
                    };
                    offspring.push(Genome { config, gender, age: 0, birth_generation });
                }
                None => skipped += 1,
            }
        }
    }
    (offspring, skipped)
}

/// Ages every genome, removes those beyond `max_age` (the reigning winner is
/// exempt), and restores each gender group to `population_size` first from
/// the offspring and then from fresh uniform samples.
#[allow(clippy::too_many_arguments)]
pub fn aging_and_death(
    w1: Option<&ConfigId>,
    population: &mut Population,
    offspring: Vec<Genome>,
    birth_generation: u32,
    max_age: u32,
    population_size: usize,
    space: &ParameterSpace,
    rng: &mut ChaCha8Rng,
) -> Result<(), SpaceError> {
    let survives = |g: &mut Genome| {
        g.age += 1;
        g.age <= max_age || Some(g.config.id()) == w1
    };
    population.competitive.retain_mut(survives);
    population.noncompetitive.retain_mut(survives);

    for child in offspring {
        let group = match child.gender {
            Gender::Competitive => &mut population.competitive,
            Gender::NonCompetitive => &mut population.noncompetitive,
        };
        if group.len() < population_size {
            group.push(child);
        }
    }

    while population.competitive.len() < population_size {
        population.competitive.push(Genome {
            config: space.sample(rng)?,
            gender: Gender::Competitive,
            age: 0,
            birth_generation,
        });
    }
    while population.noncompetitive.len() < population_size {
        population.noncompetitive.push(Genome {
            config: space.sample(rng)?,
            gender: Gender::NonCompetitive,
            age: 0,
            birth_generation,
        });
    }
    Ok(())
}

/// Result of a completed tuning run.
#[derive(Debug, Clone)]
pub struct TuneResult {
    pub winner: Configuration,
    pub archive: Archive,
    pub generations: u32,
}

/// Drives the generation loop until the wall-clock budget is exhausted.
/// `elapsed_seconds` reports time consumed so far; the budget is checked at
/// generation boundaries, so the first generation always runs when any budget
/// remains. `on_generation` fires after each committed generation (for
/// checkpointing and progress logs).
pub fn tune(
    engine: &mut GgaEngine,
    eval: &mut dyn Evaluator,
    elapsed_seconds: &mut dyn FnMut() -> f64,
    mut on_generation: impl FnMut(&GgaEngine, &GenerationReport),
) -> Result<TuneResult, TunerError> {
    if elapsed_seconds() >= engine.settings().budget_seconds {
        return Err(TunerError::NoGenerations { archive: engine.archive().clone() });
    }
    loop {
        let report = engine.run_generation(eval)?;
        on_generation(engine, &report);
        if elapsed_seconds() >= engine.settings().budget_seconds {
            break;
        }
    }
    let winner = engine
        .winner()
        .cloned()
        .expect("at least one generation completed");
    Ok(TuneResult {
        winner,
        archive: engine.archive().clone(),
        generations: engine.generation(),
    })
}
