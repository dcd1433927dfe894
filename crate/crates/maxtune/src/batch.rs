//! Bounded-parallel execution of solver runs. Results come back in task
//! order; a task whose process cannot even be spawned degrades to a Crash
//! record instead of aborting the batch.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use maxtune_core::run::{ExitKind, RunRecord, TimeSource};
use maxtune_core::space::Configuration;
use maxtune_core::wcnf::ValidationVerdict;

use crate::exec::Executor;

#[derive(Debug, Clone)]
pub struct BatchTask {
    pub config: Configuration,
    pub instance: PathBuf,
    pub seed: u64,
}

fn crash_record(task: &BatchTask) -> RunRecord {
    let instance = task
        .instance
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("instance")
        .to_string();
    RunRecord {
        config_id: task.config.id().clone(),
        instance,
        seed: task.seed,
        trace: Vec::new(),
        verdict: ValidationVerdict::no_solution(),
        cpu_seconds_used: 0.0,
        exit: ExitKind::Crash,
        time_source: TimeSource::Wall,
    }
}

/// Runs every task with at most `max_workers` concurrent solver processes.
pub fn run_batch(executor: &Executor, tasks: &[BatchTask], max_workers: usize) -> Vec<RunRecord> {
    if tasks.is_empty() {
        return Vec::new();
    }
    let workers = max_workers.max(1).min(tasks.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; tasks.len()]);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= tasks.len() {
                    break;
                }
                let task = &tasks[index];
                let record = match executor.execute(&task.config, &task.instance, task.seed) {
                    Ok(record) => record,
                    Err(err) => {
                        eprintln!(
                            "run failed for {} on {}: {err}",
                            task.config.id(),
                            task.instance.display()
                        );
                        crash_record(task)
                    }
                };
                results.lock().unwrap()[index] = Some(record);
            });
        }
    });

    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every task slot filled"))
        .collect()
}
