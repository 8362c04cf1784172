//! Error taxonomy, exit codes, and report emission.
//!
//! Every failure funnels into [`CliError`]; the process exit code is a
//! function of the error kind alone. Domain failures still produce a
//! structured report in the requested format so callers can parse them.

use std::fmt;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use omnistream_core::model::Violation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Input bytes are not well-formed JSON.
    Parse,
    /// Well-formed JSON with wrong structure; carries field paths.
    Schema,
    /// Structurally sound input breaking a domain invariant.
    Validation,
    /// A subsystem rejected the request.
    Domain,
    Io,
    /// Bad command line; exits 2 without a structured report.
    Usage,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Parse => "PARSE",
            ErrorKind::Schema => "SCHEMA",
            ErrorKind::Validation => "VALIDATION",
            ErrorKind::Domain => "DOMAIN",
            ErrorKind::Io => "IO",
            ErrorKind::Usage => "USAGE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    /// (path, message) pairs for schema and validation failures.
    pub violations: Vec<(String, String)>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            violations: Vec::new(),
        }
    }

    pub fn schema(path: &str, message: impl Into<String>) -> Self {
        let message = message.into();
        CliError {
            kind: ErrorKind::Schema,
            message: format!("{path}: {message}"),
            violations: vec![(path.to_string(), message)],
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new(ErrorKind::Usage, message)
    }

    pub fn from_violations(violations: Vec<Violation>) -> Self {
        let summary = violations
            .iter()
            .map(|v| format!("{}: {}", v.path, v.message))
            .collect::<Vec<_>>()
            .join("; ");
        CliError {
            kind: ErrorKind::Validation,
            message: summary,
            violations: violations
                .into_iter()
                .map(|v| (v.path, v.message))
                .collect(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage => 2,
            _ => 1,
        }
    }

    /// Structured report for exit-1 errors, in the requested format.
    pub fn render(&self, format: OutputFormat) -> Vec<u8> {
        match format {
            OutputFormat::Json => {
                let violations: Vec<serde_json::Value> = self
                    .violations
                    .iter()
                    .map(|(path, message)| {
                        serde_json::json!({ "path": path, "message": message })
                    })
                    .collect();
                let value = serde_json::json!({
                    "error": {
                        "kind": self.kind.name(),
                        "message": self.message,
                        "violations": violations,
                    }
                });
                json_bytes(&value)
            }
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["kind", "path", "message"]).unwrap();
                if self.violations.is_empty() {
                    w.write_record([self.kind.name(), "", &self.message]).unwrap();
                } else {
                    for (path, message) in &self.violations {
                        w.write_record([self.kind.name(), path, message]).unwrap();
                    }
                }
                w.into_inner().unwrap()
            }
            OutputFormat::Text => {
                let mut out = format!("error ({}): {}\n", self.kind.name(), self.message);
                if self.violations.len() > 1 {
                    for (path, message) in &self.violations {
                        out.push_str(&format!("  {path}: {message}\n"));
                    }
                }
                out.into_bytes()
            }
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

/// Pretty JSON with a trailing newline; key order is the map's sorted order.
pub fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serialization");
    bytes.push(b'\n');
    bytes
}

pub fn write_report(bytes: &[u8], output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, bytes).map_err(|e| {
            CliError::new(ErrorKind::Io, format!("cannot write {}: {e}", path.display()))
        }),
        None => std::io::stdout().write_all(bytes).map_err(|e| {
            CliError::new(ErrorKind::Io, format!("cannot write report: {e}"))
        }),
    }
}

/// Millisecond metrics print with fixed three-decimal precision, ratios
/// with six; golden files depend on this.
pub fn fmt_ms(v: f64) -> String {
    format!("{v:.3}")
}

pub fn fmt_rtf(v: f64) -> String {
    format!("{v:.6}")
}
