//! Campaign tooling around `maxtune-core`: the resource-limited execution
//! harness, scenario and artifact file formats, the tuning/selection/portfolio
//! drivers, and everything the `maxtune` binary is built from.

pub mod batch;
pub mod campaign;
pub mod evaluator;
pub mod exec;
pub mod live;
pub mod portfolio_files;
pub mod registry_file;
pub mod runlog;
pub mod scenario;
pub mod score;
pub mod select;
pub mod simulate;
pub mod tune;

pub use exec::Executor;
pub use runlog::RunStore;
pub use scenario::Scenario;
