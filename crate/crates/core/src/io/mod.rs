//! Problem files, run reports and the independent audit.

pub mod problem;
pub mod report;
pub mod verify;

pub use problem::{parse_problem, Diagnostic, DiagnosticCode, Mode, ParseError, ProblemFile};
pub use report::{run, RunOptions, RunReport, ENGINE_NAME, ENGINE_VERSION};
pub use verify::{verify, verify_report};
