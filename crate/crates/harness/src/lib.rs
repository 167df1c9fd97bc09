//! Experiment harness for `arches-core`: configuration files, CSV reports,
//! fixture reproduction, resource accounting, a threaded control loop and
//! the `arches` command-line tool.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod fixtures;
pub mod formats;
pub mod svg;
pub mod threaded;

/// Result of a command that completed without an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Reference checks ran and this many did not match.
    ChecksFailed(usize),
}

/// Machine-readable category for an error chain.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<arches_core::Error>() {
            return e.kind();
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return "config";
        }
        if cause.downcast_ref::<csv::Error>().is_some() {
            return "format";
        }
    }
    "harness"
}

/// One-line JSON error record.
pub fn error_line(kind: &str, err: &anyhow::Error) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": format!("{err:#}") } }).to_string()
}
