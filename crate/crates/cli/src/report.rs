//! Run reports: `key=value` lines for machines, aligned text for people.

use std::fmt::Write as _;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Human,
    Structured,
}

/// One run: the echoed command, the instance digest, result fields in
/// order, and timing.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub digest: Option<String>,
    pub fields: Vec<(String, String)>,
    /// Free-form lines shown only in human output (tables and the like).
    pub notes: Vec<String>,
    pub duration: Duration,
    pub version: &'static str,
}

impl RunReport {
    pub fn new(command: String) -> Self {
        Self {
            command,
            digest: None,
            fields: Vec::new(),
            notes: Vec::new(),
            duration: Duration::ZERO,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn field(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn note(&mut self, line: impl Into<String>) -> &mut Self {
        self.notes.push(line.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self, format: OutputFormat) -> String {
        let mut out = String::new();
        match format {
            OutputFormat::Structured => {
                writeln!(out, "command={}", self.command).unwrap();
                if let Some(d) = &self.digest {
                    writeln!(out, "digest={d}").unwrap();
                }
                for (k, v) in &self.fields {
                    writeln!(out, "{k}={v}").unwrap();
                }
                writeln!(out, "duration_ms={:.3}", self.duration.as_secs_f64() * 1e3).unwrap();
                writeln!(out, "version={}", self.version).unwrap();
            }
            OutputFormat::Human => {
                let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max(7);
                writeln!(out, "{:width$}  {}", "command", self.command).unwrap();
                if let Some(d) = &self.digest {
                    writeln!(out, "{:width$}  {}", "digest", d).unwrap();
                }
                for (k, v) in &self.fields {
                    writeln!(out, "{k:width$}  {v}").unwrap();
                }
                for line in &self.notes {
                    writeln!(out, "{line}").unwrap();
                }
                writeln!(out, "{:width$}  {:.3?} (corecheck {})", "time", self.duration, self.version).unwrap();
            }
        }
        out
    }
}

/// Shortest round-trip form, with `inf` for infinite ratios.
pub fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}
