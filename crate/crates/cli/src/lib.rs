//! Command-line front end for `striplab-core`: definition files, the
//! built-in examples, and the `analyze`, `series`, `mesh`, `verify` and
//! `examples` commands.

pub mod commands;
pub mod definition;
pub mod examples;

pub use commands::{analyze, series, AnalysisReport, Claim, EXIT_INPUT, EXIT_OK, EXIT_VERIFY};
pub use definition::{DefinitionError, StripDefinition};
