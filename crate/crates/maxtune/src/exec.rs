//! Resource-limited solver execution: spawns one solver process per run in
//! its own process group, captures `o`-lines with CPU timestamps into a
//! monotone trace, enforces CPU and memory limits, and validates the final
//! output against the instance.
//!
//! Enforcement layers: a watchdog polls `/proc` for the process group's CPU
//! and resident-set usage and terminates the group politely (SIGTERM, then
//! SIGKILL after the grace period); per-process RLIMIT_CPU and RLIMIT_AS act
//! as kernel backstops. A wall-clock ceiling catches solvers that idle
//! instead of computing.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use maxtune_core::run::{ExitKind, RunLimits, RunRecord, TimeSource, TraceBuilder};
use maxtune_core::space::{render_cmdline, Configuration, ParameterSpace};
use maxtune_core::wcnf::{parse_wcnf, validate_output, WcnfFormula};
use thiserror::Error;

/// Wall-clock ceiling factor: a run is cut when wall time exceeds
/// `WALL_FACTOR * cpu_seconds + grace`, so idle solvers cannot hold a worker
/// forever while CPU-heavy solvers under contention still get their full
/// CPU budget.
const WALL_FACTOR: f64 = 3.0;

/// Virtual-address-space slack added on top of the memory limit for the
/// RLIMIT_AS backstop; interpreters reserve address space well beyond their
/// resident usage. The watchdog enforces the real limit on group RSS.
const AS_SLACK_BYTES: u64 = 256 * 1024 * 1024;

const POLL_INTERVAL: Duration = Duration::from_millis(25);

/// Environment variable naming the scratch directory runs execute under.
pub const SCRATCH_ENV: &str = "MAXTUNE_SCRATCH";

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("resource-limited execution is only supported on unix")]
    Unsupported,
    #[error("invalid run limits: {0}")]
    Limits(&'static str),
    #[error("cannot read instance {path}: {source}")]
    ReadInstance {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse instance {path}: {message}")]
    ParseInstance { path: PathBuf, message: String },
    #[error("failed to spawn solver '{binary}': {source}")]
    Spawn {
        binary: String,
        #[source]
        source: std::io::Error,
    },
    #[error("io error during execution: {0}")]
    Io(#[from] std::io::Error),
}

/// Why the watchdog stopped a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KillReason {
    Cpu,
    Wall,
    Memory,
}

/// Spawns and supervises solver runs for one scenario.
pub struct Executor {
    binary: PathBuf,
    seed_flag: Option<String>,
    space: ParameterSpace,
    limits: RunLimits,
    scratch_root: PathBuf,
    formulas: Mutex<BTreeMap<PathBuf, Arc<WcnfFormula>>>,
}

impl Executor {
    pub fn new(
        binary: PathBuf,
        seed_flag: Option<String>,
        space: ParameterSpace,
        limits: RunLimits,
    ) -> Result<Self, ExecError> {
        if !cfg!(unix) {
            return Err(ExecError::Unsupported);
        }
        limits.validate().map_err(ExecError::Limits)?;
        let scratch_root = std::env::var_os(SCRATCH_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(std::env::temp_dir);
        fs::create_dir_all(&scratch_root)?;
        Ok(Executor {
            binary,
            seed_flag,
            space,
            limits,
            scratch_root,
            formulas: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn limits(&self) -> &RunLimits {
        &self.limits
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    /// Parses an instance, caching by path.
    pub fn formula(&self, path: &Path) -> Result<Arc<WcnfFormula>, ExecError> {
        if let Some(f) = self.formulas.lock().unwrap().get(path) {
            return Ok(f.clone());
        }
        let text = fs::read_to_string(path).map_err(|source| ExecError::ReadInstance {
            path: path.to_path_buf(),
            source,
        })?;
        let mut formula = parse_wcnf(&text).map_err(|e| ExecError::ParseInstance {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        formula.source_path = path.display().to_string();
        let formula = Arc::new(formula);
        self.formulas
            .lock()
            .unwrap()
            .insert(path.to_path_buf(), formula.clone());
        Ok(formula)
    }

    /// Runs the configured solver on one instance with one seed, under the
    /// scenario's limits, and validates whatever it printed.
    pub fn execute(
        &self,
        config: &Configuration,
        instance: &Path,
        seed: u64,
    ) -> Result<RunRecord, ExecError> {
        let formula = self.formula(instance)?;
        let instance_id = instance
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("instance")
            .to_string();
        let args = render_cmdline(
            &self.space,
            config,
            &self.binary.display().to_string(),
            &instance.display().to_string(),
            self.seed_flag.as_deref(),
            seed,
        );
        let outcome = self.run_process(&args)?;
        let verdict = validate_output(&formula, &outcome.stdout);
        Ok(RunRecord {
            config_id: config.id().clone(),
            instance: instance_id,
            seed,
            trace: outcome.trace,
            verdict,
            cpu_seconds_used: outcome.cpu_seconds,
            exit: outcome.exit,
            time_source: outcome.time_source,
        })
    }

    fn run_process(&self, args: &[String]) -> Result<ProcessOutcome, ExecError> {
        let scratch = tempfile::Builder::new()
            .prefix("maxtune-run.")
            .tempdir_in(&self.scratch_root)?;

        let mut cmd = Command::new(&args[0]);
        cmd.args(&args[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .current_dir(scratch.path());

        #[cfg(unix)]
        apply_unix_limits(&mut cmd, &self.limits);

        let start_wall = Instant::now();
        let mut child = cmd.spawn().map_err(|source| ExecError::Spawn {
            binary: args[0].clone(),
            source,
        })?;
        let pid = child.id() as i32;

        let sampler = Arc::new(GroupSampler::new(pid, start_wall));
        let time_source = sampler.time_source();

        let stdout = child.stdout.take().expect("stdout was piped");
        let reader_sampler = sampler.clone();
        let reader = thread::spawn(move || {
            let mut trace = TraceBuilder::new();
            let mut text = String::new();
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if let Some(rest) = line.strip_prefix("o ") {
                    if let Ok(bound) = rest.trim().parse::<u64>() {
                        let (cpu, _) = reader_sampler.sample();
                        trace.observe(cpu, bound);
                    }
                }
                text.push_str(&line);
                text.push('\n');
            }
            (trace, text)
        });

        let wall_ceiling = WALL_FACTOR * self.limits.cpu_seconds + self.limits.timeout_grace_seconds;
        let mut kill_reason: Option<KillReason> = None;
        let mut term_sent: Option<Instant> = None;
        let mut peak_rss = 0u64;

        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            let (cpu, rss) = sampler.sample();
            peak_rss = peak_rss.max(rss);
            let wall = start_wall.elapsed().as_secs_f64();

            if kill_reason.is_none() {
                if cpu >= self.limits.cpu_seconds {
                    kill_reason = Some(KillReason::Cpu);
                } else if rss >= self.limits.memory_bytes {
                    kill_reason = Some(KillReason::Memory);
                } else if wall >= wall_ceiling {
                    kill_reason = Some(KillReason::Wall);
                }
                if kill_reason.is_some() {
                    signal_group(pid, libc::SIGTERM);
                    term_sent = Some(Instant::now());
                }
            } else if let Some(sent) = term_sent {
                if sent.elapsed().as_secs_f64() >= self.limits.timeout_grace_seconds {
                    signal_group(pid, libc::SIGKILL);
                }
            }
            thread::sleep(POLL_INTERVAL);
        };

        // Sweep up any stragglers the solver forked.
        signal_group(pid, libc::SIGKILL);

        let (trace, stdout_text) = reader.join().expect("reader thread never panics");
        let cpu_seconds = sampler.peak_cpu();
        let exit = classify_exit(&status, kill_reason, peak_rss, &self.limits);

        Ok(ProcessOutcome {
            trace: trace.finish(),
            stdout: stdout_text,
            cpu_seconds,
            exit,
            time_source,
        })
    }
}

struct ProcessOutcome {
    trace: Vec<maxtune_core::run::TracePoint>,
    stdout: String,
    cpu_seconds: f64,
    exit: ExitKind,
    time_source: TimeSource,
}

#[cfg(unix)]
fn apply_unix_limits(cmd: &mut Command, limits: &RunLimits) {
    use std::os::unix::process::CommandExt;

    cmd.process_group(0);

    let cpu_backstop = (limits.cpu_seconds + limits.timeout_grace_seconds).ceil() as u64 + 1;
    let as_limit = limits.memory_bytes.saturating_add(AS_SLACK_BYTES);
    unsafe {
        cmd.pre_exec(move || {
            let cpu = libc::rlimit {
                rlim_cur: cpu_backstop,
                rlim_max: cpu_backstop + 2,
            };
            if libc::setrlimit(libc::RLIMIT_CPU, &cpu) != 0 {
                return Err(std::io::Error::last_os_error());
            }
            let mem = libc::rlimit {
                rlim_cur: as_limit,
                rlim_max: as_limit,
            };
            if libc::setrlimit(libc::RLIMIT_AS, &mem) != 0 {
                return Err(std::io::Error::last_os_error());
            }
            Ok(())
        });
    }
}

fn signal_group(pid: i32, signal: i32) {
    unsafe {
        libc::kill(-pid, signal);
    }
}

fn classify_exit(
    status: &std::process::ExitStatus,
    kill_reason: Option<KillReason>,
    peak_rss: u64,
    limits: &RunLimits,
) -> ExitKind {
    match kill_reason {
        Some(KillReason::Cpu) | Some(KillReason::Wall) => return ExitKind::Timeout,
        Some(KillReason::Memory) => return ExitKind::MemOut,
        None => {}
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if status.signal() == Some(libc::SIGXCPU) {
            return ExitKind::Timeout;
        }
    }
    if status.success() {
        ExitKind::Finished
    } else if peak_rss >= limits.memory_bytes / 2 {
        // Died on its own with the group near the memory limit: the kernel
        // backstop or a failed allocation got there before the watchdog.
        ExitKind::MemOut
    } else {
        ExitKind::Crash
    }
}

/// Samples the process group's CPU seconds and resident-set bytes from
/// `/proc`. Falls back to wall-clock timestamps when `/proc` is unreadable.
struct GroupSampler {
    pgid: i32,
    start_wall: Instant,
    ticks_per_second: f64,
    page_bytes: u64,
    proc_available: bool,
    /// CPU is reported as a running maximum: group members that exit would
    /// otherwise make the sum dip until the parent reaps them.
    peak_cpu: Mutex<f64>,
}

impl GroupSampler {
    fn new(pgid: i32, start_wall: Instant) -> Self {
        let proc_available = fs::read_to_string("/proc/self/stat").is_ok();
        let ticks_per_second = unsafe { libc::sysconf(libc::_SC_CLK_TCK) } as f64;
        let page_bytes = unsafe { libc::sysconf(libc::_SC_PAGESIZE) } as u64;
        GroupSampler {
            pgid,
            start_wall,
            ticks_per_second: if ticks_per_second > 0.0 { ticks_per_second } else { 100.0 },
            page_bytes: if page_bytes > 0 { page_bytes } else { 4096 },
            proc_available,
            peak_cpu: Mutex::new(0.0),
        }
    }

    fn time_source(&self) -> TimeSource {
        if self.proc_available {
            TimeSource::Cpu
        } else {
            TimeSource::Wall
        }
    }

    /// Returns (cpu seconds, resident bytes) for the whole process group.
    fn sample(&self) -> (f64, u64) {
        if !self.proc_available {
            let wall = self.start_wall.elapsed().as_secs_f64();
            let mut peak = self.peak_cpu.lock().unwrap();
            *peak = peak.max(wall);
            return (wall, 0);
        }
        let mut cpu_ticks = 0u64;
        let mut rss_pages = 0u64;
        if let Ok(entries) = fs::read_dir("/proc") {
            for entry in entries.flatten() {
                let name = entry.file_name();
                let Some(name) = name.to_str() else { continue };
                if !name.bytes().all(|b| b.is_ascii_digit()) {
                    continue;
                }
                let Ok(stat) = fs::read_to_string(format!("/proc/{name}/stat")) else {
                    continue;
                };
                if let Some(fields) = parse_proc_stat(&stat) {
                    if fields.pgrp == self.pgid {
                        cpu_ticks += fields.utime + fields.stime + fields.cutime + fields.cstime;
                        rss_pages += fields.rss_pages;
                    }
                }
            }
        }
        let cpu = cpu_ticks as f64 / self.ticks_per_second;
        let mut peak = self.peak_cpu.lock().unwrap();
        *peak = peak.max(cpu);
        (*peak, rss_pages * self.page_bytes)
    }

    fn peak_cpu(&self) -> f64 {
        *self.peak_cpu.lock().unwrap()
    }
}

struct ProcStat {
    pgrp: i32,
    utime: u64,
    stime: u64,
    cutime: u64,
    cstime: u64,
    rss_pages: u64,
}

/// Parses `/proc/<pid>/stat`; the command name may contain spaces and
/// parentheses, so fields are taken after the last `)`.
fn parse_proc_stat(stat: &str) -> Option<ProcStat> {
    let after_comm = &stat[stat.rfind(')')? + 1..];
    let fields: Vec<&str> = after_comm.split_ascii_whitespace().collect();
    // Field indices relative to the state field: pgrp=2, utime=11, stime=12,
    // cutime=13, cstime=14, rss=21.
    Some(ProcStat {
        pgrp: fields.get(2)?.parse().ok()?,
        utime: fields.get(11)?.parse().ok()?,
        stime: fields.get(12)?.parse().ok()?,
        cutime: fields.get(13)?.parse().unwrap_or(0),
        cstime: fields.get(14)?.parse().unwrap_or(0),
        rss_pages: fields.get(21)?.parse().ok()?,
    })
}
