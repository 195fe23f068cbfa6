//! File formats, expression grammar, thread pool and command line for the
//! `gamma-bsde-core` engine.

pub mod cli;
pub mod error;
pub mod exec;
pub mod expr;
pub mod formats;
pub mod generator;
pub mod report;
pub mod suites;
pub mod svg;

pub use cli::{run, run_with};
pub use error::CliError;
pub use exec::Parallel;
pub use expr::{Expr, Role};
pub use formats::Scenario;
pub use generator::ExprGenerator;
