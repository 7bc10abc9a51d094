//! Command-line front end: system files, analysis reports, workflows and the
//! built-in checks.

pub mod criteria;
pub mod report;
pub mod system;
pub mod workflows;
