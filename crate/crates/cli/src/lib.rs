//! Batch front end: problem documents in, JSON reports and CSV tables out.

pub mod doc;
pub mod fixtures;
pub mod format;
pub mod run;

pub use doc::{parse, ProblemDocument};
pub use run::{execute, exit_code, write_outputs, RunOutput};
