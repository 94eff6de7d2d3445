//! Rendering of command reports as JSON, CSV or plain text.

use std::io::Write;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// What a command produced: a one-line summary, the full report, and whether
/// its check passed.
pub struct Outcome {
    pub headline: String,
    pub report: Value,
    pub passed: bool,
}

/// Flattens nested objects into dotted keys; arrays stay as compact JSON.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn render(outcome: &Outcome, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&outcome.report)?;
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", &outcome.report, &mut rows);
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(["field", "value"])?;
            for (k, v) in rows {
                writer.write_record([k, v])?;
            }
            String::from_utf8(writer.into_inner().context("flushing csv")?)?
        }
        Format::Text => {
            let mut rows = Vec::new();
            flatten("", &outcome.report, &mut rows);
            let mut text = format!("{}\n", outcome.headline);
            for (k, v) in rows {
                text.push_str(&format!("  {k}: {v}\n"));
            }
            text
        }
    })
}

/// Prints the report, or writes it to `path` and prints only the headline.
pub fn emit(outcome: &Outcome, format: Format, path: Option<&std::path::Path>) -> Result<()> {
    let text = render(outcome, format)?;
    match path {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing report to {}", path.display()))?;
            println!("{}", outcome.headline);
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
