//! Persistent run logs: one JSON-lines file per run under a directory
//! addressed by the configuration's content id. Event lines carry
//! `{t, bound}`; the terminal line carries
//! `{verdict, true_cost, exit, cpu, ...}`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use maxtune_core::run::{ExitKind, RunRecord, TimeSource, TracePoint};
use maxtune_core::space::ConfigId;
use maxtune_core::wcnf::{ValidationVerdict, VerdictStatus};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed run log {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("run log {path} has no terminal record")]
    MissingTerminal { path: PathBuf },
}

#[derive(Debug, Serialize, Deserialize)]
struct EventLine {
    t: f64,
    bound: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TerminalLine {
    verdict: String,
    true_cost: Option<u64>,
    exit: String,
    cpu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reported_cost: Option<u64>,
    #[serde(default = "default_time_source")]
    time_source: String,
}

fn default_time_source() -> String {
    "cpu".into()
}

fn verdict_str(status: VerdictStatus) -> &'static str {
    match status {
        VerdictStatus::Valid => "valid",
        VerdictStatus::HardViolation => "hard_violation",
        VerdictStatus::NoSolution => "no_solution",
        VerdictStatus::MalformedOutput => "malformed_output",
    }
}

fn parse_verdict(s: &str) -> Option<VerdictStatus> {
    match s {
        "valid" => Some(VerdictStatus::Valid),
        "hard_violation" => Some(VerdictStatus::HardViolation),
        "no_solution" => Some(VerdictStatus::NoSolution),
        "malformed_output" => Some(VerdictStatus::MalformedOutput),
        _ => None,
    }
}

fn exit_str(exit: ExitKind) -> &'static str {
    match exit {
        ExitKind::Finished => "finished",
        ExitKind::Timeout => "timeout",
        ExitKind::MemOut => "memout",
        ExitKind::Crash => "crash",
    }
}

fn parse_exit(s: &str) -> Option<ExitKind> {
    match s {
        "finished" => Some(ExitKind::Finished),
        "timeout" => Some(ExitKind::Timeout),
        "memout" => Some(ExitKind::MemOut),
        "crash" => Some(ExitKind::Crash),
        _ => None,
    }
}

/// A directory tree of run logs: `<root>/<config-id>/<instance>.s<seed>.jsonl`.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, config: &ConfigId, instance: &str, seed: u64) -> PathBuf {
        self.root
            .join(config.as_str())
            .join(format!("{instance}.s{seed}.jsonl"))
    }

    pub fn contains(&self, config: &ConfigId, instance: &str, seed: u64) -> bool {
        self.path_for(config, instance, seed).is_file()
    }

    /// Writes (or overwrites) the log for one run.
    pub fn write(&self, record: &RunRecord) -> Result<(), RunLogError> {
        let path = self.path_for(&record.config_id, &record.instance, record.seed);
        let io_err = |source| RunLogError::Io { path: path.clone(), source };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let mut out = String::new();
        for point in &record.trace {
            out.push_str(
                &serde_json::to_string(&EventLine { t: point.t, bound: point.bound }).unwrap(),
            );
            out.push('\n');
        }
        let terminal = TerminalLine {
            verdict: verdict_str(record.verdict.status).into(),
            true_cost: record.verdict.true_cost,
            exit: exit_str(record.exit).into(),
            cpu: record.cpu_seconds_used,
            reported_cost: record.verdict.reported_cost,
            time_source: match record.time_source {
                TimeSource::Cpu => "cpu".into(),
                TimeSource::Wall => "wall".into(),
            },
        };
        out.push_str(&serde_json::to_string(&terminal).unwrap());
        out.push('\n');
        let mut file = fs::File::create(&path).map_err(io_err)?;
        file.write_all(out.as_bytes()).map_err(io_err)?;
        Ok(())
    }

    /// Reads one run back; config, instance, and seed come from the path.
    pub fn read(&self, config: &ConfigId, instance: &str, seed: u64) -> Result<RunRecord, RunLogError> {
        let path = self.path_for(config, instance, seed);
        read_record(&path, config.clone(), instance.to_string(), seed)
    }

    /// The bound-over-time trace of one run.
    pub fn read_trace(
        &self,
        config: &ConfigId,
        instance: &str,
        seed: u64,
    ) -> Result<Vec<TracePoint>, RunLogError> {
        Ok(self.read(config, instance, seed)?.trace)
    }

    /// Loads every run under the store, walking `<config>/<instance>.s<seed>`.
    pub fn read_all(&self) -> Result<Vec<RunRecord>, RunLogError> {
        let mut records = Vec::new();
        let dirs = match fs::read_dir(&self.root) {
            Ok(d) => d,
            Err(source) => return Err(RunLogError::Io { path: self.root.clone(), source }),
        };
        let mut config_dirs: Vec<PathBuf> = dirs
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        config_dirs.sort();
        for dir in config_dirs {
            let config = ConfigId::from_raw(dir.file_name().and_then(|s| s.to_str()).unwrap_or(""));
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|source| RunLogError::Io { path: dir.clone(), source })?
                .flatten()
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
                .collect();
            files.sort();
            for path in files {
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default();
                let Some((instance, seed)) = split_run_name(stem) else {
                    continue;
                };
                records.push(read_record(&path, config.clone(), instance.to_string(), seed)?);
            }
        }
        Ok(records)
    }
}

/// Splits `<instance>.s<seed>` into its parts.
fn split_run_name(stem: &str) -> Option<(&str, u64)> {
    let dot = stem.rfind(".s")?;
    let seed: u64 = stem[dot + 2..].parse().ok()?;
    Some((&stem[..dot], seed))
}

fn read_record(
    path: &Path,
    config_id: ConfigId,
    instance: String,
    seed: u64,
) -> Result<RunRecord, RunLogError> {
    let text = fs::read_to_string(path).map_err(|source| RunLogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut trace = Vec::new();
    let mut terminal: Option<TerminalLine> = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(event) = serde_json::from_str::<EventLine>(line) {
            // Terminal lines also deserialize as events only if they had
            // t/bound keys, which they never do.
            trace.push(TracePoint { t: event.t, bound: event.bound });
            continue;
        }
        match serde_json::from_str::<TerminalLine>(line) {
            Ok(t) => terminal = Some(t),
            Err(e) => {
                return Err(RunLogError::Malformed {
                    path: path.to_path_buf(),
                    message: format!("line {}: {e}", i + 1),
                })
            }
        }
    }
    let terminal = terminal.ok_or_else(|| RunLogError::MissingTerminal { path: path.to_path_buf() })?;
    let status = parse_verdict(&terminal.verdict).ok_or_else(|| RunLogError::Malformed {
        path: path.to_path_buf(),
        message: format!("unknown verdict '{}'", terminal.verdict),
    })?;
    let exit = parse_exit(&terminal.exit).ok_or_else(|| RunLogError::Malformed {
        path: path.to_path_buf(),
        message: format!("unknown exit '{}'", terminal.exit),
    })?;
    Ok(RunRecord {
        config_id,
        instance,
        seed,
        trace,
        verdict: ValidationVerdict {
            status,
            true_cost: terminal.true_cost,
            reported_cost: terminal.reported_cost,
        },
        cpu_seconds_used: terminal.cpu,
        exit,
        time_source: if terminal.time_source == "wall" {
            TimeSource::Wall
        } else {
            TimeSource::Cpu
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> RunRecord {
        RunRecord {
            config_id: ConfigId::from_raw("cafebabe"),
            instance: "inst.wcnf".into(),
            seed: 17,
            trace: vec![TracePoint { t: 0.5, bound: 30 }, TracePoint { t: 1.25, bound: 12 }],
            verdict: ValidationVerdict {
                status: VerdictStatus::Valid,
                true_cost: Some(12),
                reported_cost: Some(12),
            },
            cpu_seconds_used: 1.9,
            exit: ExitKind::Timeout,
            time_source: TimeSource::Cpu,
        }
    }

    #[test]
    fn roundtrips_a_run() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let record = sample_record();
        store.write(&record).unwrap();
        let back = store.read(&record.config_id, &record.instance, record.seed).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn log_lines_follow_the_format() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let record = sample_record();
        store.write(&record).unwrap();
        let path = store.path_for(&record.config_id, &record.instance, record.seed);
        let text = fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], r#"{"t":0.5,"bound":30}"#);
        assert!(lines[2].contains(r#""verdict":"valid""#));
        assert!(lines[2].contains(r#""exit":"timeout""#));
        assert!(lines[2].contains(r#""true_cost":12"#));
    }

    #[test]
    fn read_all_recovers_identity_from_paths() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let mut a = sample_record();
        a.instance = "x.wcnf".into();
        let mut b = sample_record();
        b.config_id = ConfigId::from_raw("feedface");
        b.seed = 3;
        store.write(&a).unwrap();
        store.write(&b).unwrap();
        let all = store.read_all().unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.iter().any(|r| r == &a));
        assert!(all.iter().any(|r| r == &b));
    }

    #[test]
    fn instance_names_with_dots_split_correctly() {
        assert_eq!(split_run_name("foo.bar.wcnf.s42"), Some(("foo.bar.wcnf", 42)));
        assert_eq!(split_run_name("noseed"), None);
    }
}
