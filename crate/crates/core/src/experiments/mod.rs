//! Reproducible experiment driver: configuration, stationary sampling and
//! the check suites behind the `arw` binary.

pub mod config;
pub mod output;
pub mod stationary;
pub mod suite;

pub use config::{ExperimentConfig, Mode};
pub use stationary::{run_stationary_sampling, SampleRow, WindowReport};
pub use suite::{run_suite, Check, SuiteName, SuiteReport};
