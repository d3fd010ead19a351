//! Benchmark driver: generates or loads instances, sweeps `γ` with either
//! solver and writes a CSV plus an aligned text table.

pub mod args;
pub mod format;
pub mod run;

pub use run::{run, solve_all, CliError, ResultRow, RunConfig, SolverChoice, SolverKind, Source};
