//! The bridge between the pure tuner/selection engines and real solver
//! processes: evaluation requests fan out through the batch runner and every
//! run is persisted to the log store before its outcome is reported back.

use std::collections::BTreeMap;
use std::path::PathBuf;

use maxtune_core::scoring::Outcome;
use maxtune_core::tuner::{EvalTask, Evaluator};

use crate::batch::{run_batch, BatchTask};
use crate::exec::Executor;
use crate::runlog::RunStore;

pub struct ExecEvaluator<'a> {
    pub executor: &'a Executor,
    pub store: &'a RunStore,
    /// Instance id -> instance path.
    pub paths: &'a BTreeMap<String, PathBuf>,
    pub workers: usize,
}

impl Evaluator for ExecEvaluator<'_> {
    fn evaluate(&mut self, tasks: &[EvalTask]) -> Vec<Outcome> {
        let batch: Vec<BatchTask> = tasks
            .iter()
            .map(|t| BatchTask {
                config: t.config.clone(),
                instance: self
                    .paths
                    .get(&t.instance)
                    .cloned()
                    .unwrap_or_else(|| PathBuf::from(&t.instance)),
                seed: t.seed,
            })
            .collect();
        let records = run_batch(self.executor, &batch, self.workers);
        let mut outcomes = Vec::with_capacity(records.len());
        for record in &records {
            if let Err(e) = self.store.write(record) {
                eprintln!("failed to persist run log: {e}");
            }
            outcomes.push(record.outcome());
        }
        outcomes
    }
}
