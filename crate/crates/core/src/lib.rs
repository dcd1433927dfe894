//! Core algorithms for tuning black-box anytime solvers and composing
//! portfolios from the tuning residue.
//!
//! Everything in this crate is pure computation over owned data: parsing and
//! evaluating weighted CNF formulas, competition-style scoring, a gender-based
//! genetic configurator, post-tuning candidate selection, and parallel or
//! virtual-sequential portfolio construction. Process execution, file formats,
//! and the command-line surface live in the companion `maxtune` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod portfolio;
pub mod run;
pub mod scoring;
pub mod selection;
pub mod space;
pub mod tuner;
pub mod wcnf;

pub use run::{ExitKind, RunLimits, RunRecord, TimeSource, TraceBuilder, TracePoint};
pub use scoring::{BoundsRegistry, InstanceResult, Outcome, ScoreStats};
pub use space::{ConfigId, Configuration, ParamDef, ParamDomain, ParamValue, ParameterSpace};
pub use wcnf::{Assignment, ValidationVerdict, VerdictStatus, WcnfFormula};
