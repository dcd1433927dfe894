//! Records of individual solver executions: the bound-over-time trace, the
//! validated verdict, and the resource outcome.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::scoring::Outcome;
use crate::space::ConfigId;
use crate::wcnf::{ValidationVerdict, VerdictStatus};

/// One reported upper bound and the elapsed time it arrived at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub bound: u64,
}

/// Whether trace timestamps measure the child's CPU time or wall time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeSource {
    Cpu,
    Wall,
}

/// How an execution ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitKind {
    /// The solver terminated on its own within its limits.
    Finished,
    /// Stopped at the CPU-time (or wall backstop) limit.
    Timeout,
    /// Stopped at the memory limit.
    MemOut,
    /// Abnormal termination unrelated to resource limits.
    Crash,
}

/// Resource limits for one solver execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunLimits {
    pub cpu_seconds: f64,
    pub memory_bytes: u64,
    /// Delay between the polite stop at the CPU limit and the forced kill.
    pub timeout_grace_seconds: f64,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            cpu_seconds: 60.0,
            memory_bytes: 32 * 1024 * 1024 * 1024,
            timeout_grace_seconds: 5.0,
        }
    }
}

impl RunLimits {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.cpu_seconds > 0.0) {
            return Err("cpu_seconds must be positive");
        }
        if self.memory_bytes == 0 {
            return Err("memory_bytes must be positive");
        }
        if !(self.timeout_grace_seconds > 0.0) {
            return Err("timeout_grace_seconds must be positive");
        }
        Ok(())
    }
}

/// One (configuration, instance, seed) execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_id: ConfigId,
    pub instance: String,
    pub seed: u64,
    /// Strictly increasing times, strictly decreasing bounds.
    pub trace: Vec<TracePoint>,
    pub verdict: ValidationVerdict,
    pub cpu_seconds_used: f64,
    pub exit: ExitKind,
    pub time_source: TimeSource,
}

impl RunRecord {
    /// The scoring outcome of this run. Anything other than a validated model
    /// counts as no solution.
    pub fn outcome(&self) -> Outcome {
        match (self.verdict.status, self.verdict.true_cost) {
            (VerdictStatus::Valid, Some(cost)) => Outcome::UpperBound(cost),
            _ => Outcome::NoSolution,
        }
    }
}

/// Accumulates `o`-line observations into a monotone trace: non-improving
/// bounds are dropped, and a clock tie is nudged forward so times stay
/// strictly increasing.
#[derive(Debug, Clone, Default)]
pub struct TraceBuilder {
    points: Vec<TracePoint>,
}

impl TraceBuilder {
    pub fn new() -> Self {
        TraceBuilder { points: Vec::new() }
    }

    pub fn observe(&mut self, t: f64, bound: u64) {
        if !(t >= 0.0) || !t.is_finite() {
            return;
        }
        match self.points.last() {
            Some(last) => {
                if bound >= last.bound {
                    return;
                }
                let t = if t > last.t { t } else { last.t + 1e-9 };
                self.points.push(TracePoint { t, bound });
            }
            None => self.points.push(TracePoint { t, bound }),
        }
    }

    pub fn finish(self) -> Vec<TracePoint> {
        self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_drops_non_improving_bounds() {
        let mut b = TraceBuilder::new();
        b.observe(1.0, 10);
        b.observe(2.0, 10);
        b.observe(3.0, 12);
        b.observe(4.0, 7);
        let trace = b.finish();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace[0].bound, 10);
        assert_eq!(trace[1].bound, 7);
    }

    #[test]
    fn trace_nudges_equal_timestamps() {
        let mut b = TraceBuilder::new();
        b.observe(1.0, 10);
        b.observe(1.0, 8);
        let trace = b.finish();
        assert!(trace[1].t > trace[0].t);
    }

    #[test]
    fn outcome_maps_verdicts() {
        let mut rec = RunRecord {
            config_id: ConfigId::from_raw("x"),
            instance: String::from("i"),
            seed: 0,
            trace: Vec::new(),
            verdict: ValidationVerdict {
                status: VerdictStatus::Valid,
                true_cost: Some(9),
                reported_cost: None,
            },
            cpu_seconds_used: 1.0,
            exit: ExitKind::Timeout,
            time_source: TimeSource::Cpu,
        };
        assert_eq!(rec.outcome(), Outcome::UpperBound(9));
        rec.verdict = ValidationVerdict::no_solution();
        assert_eq!(rec.outcome(), Outcome::NoSolution);
    }
}
