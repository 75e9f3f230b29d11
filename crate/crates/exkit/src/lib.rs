//! File formats, report rendering and the command implementations behind the
//! `exkit` binary.
//!
//! Exit codes: 0 success, 1 a verdict fails, 2 an enumeration cap was hit,
//! 3 a verdict is inconclusive, 4 the input is not (conditionally)
//! exchangeable, 5 bad input.

pub mod commands;
pub mod formats;

use std::fmt;
use std::io::Write;

use exkit_core::{Alphabet, Relation};
use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Core(exkit_core::Error),
    Input(String),
    Io(String),
}

impl From<exkit_core::Error> for CliError {
    fn from(e: exkit_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(why) => write!(f, "bad input: {why}"),
            CliError::Io(why) => write!(f, "io: {why}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use exkit_core::Error;
        match self {
            CliError::Core(Error::CapExceeded { .. }) => 2,
            CliError::Core(Error::NotExchangeable { .. } | Error::NotConditionallyExchangeable { .. }) => 4,
            _ => 5,
        }
    }

    /// Machine-readable form, with the witness pair when there is one.
    pub fn to_json(&self) -> Value {
        use exkit_core::Error;
        let message = self.to_string();
        match self {
            CliError::Core(Error::NotExchangeable { first, second }) => json!({
                "error": "not_exchangeable",
                "message": format!(
                    "distribution is not exchangeable: {} and {} are equivalent but differ",
                    formats::word_text(first),
                    formats::word_text(second)
                ),
                "witness": [formats::word_text(first), formats::word_text(second)],
            }),
            CliError::Core(Error::NotConditionallyExchangeable { first, second }) => json!({
                "error": "not_conditionally_exchangeable",
                "message": "conditional is not exchangeable: two equivalent (output, input) pairs differ",
                "witness": [
                    { "a": formats::word_text(&first.0), "x": formats::word_text(&first.1) },
                    { "a": formats::word_text(&second.0), "x": formats::word_text(&second.1) },
                ],
            }),
            CliError::Core(Error::CapExceeded { what, cap }) => {
                json!({ "error": "cap_exceeded", "message": message, "what": what, "cap": cap })
            }
            _ => json!({ "error": "bad_input", "message": message }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Fails,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Fails => 1,
            Status::Inconclusive => 3,
        }
    }

    pub fn of(v: &exkit_core::Verdict) -> Status {
        match v {
            exkit_core::Verdict::Holds => Status::Ok,
            exkit_core::Verdict::Fails { .. } => Status::Fails,
            exkit_core::Verdict::Inconclusive { .. } => Status::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Table {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }
}

/// What a command produced: the JSON document, an optional flat table for
/// CSV and pretty output, and the verdict that sets the exit code.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: Value,
    pub table: Option<Table>,
    pub status: Status,
}

impl Report {
    pub fn ok(json: Value) -> Report {
        Report { json, table: None, status: Status::Ok }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

/// Arithmetic precision and enumeration limit shared by every command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    pub bits: u32,
    pub cap: u64,
}

impl Settings {
    pub fn precision(&self) -> exkit_core::Precision {
        exkit_core::Precision::new(self.bits, self.bits.max(1024))
    }
}

impl Default for Settings {
    fn default() -> Self {
        Settings { bits: 128, cap: exkit_core::DEFAULT_ENUMERATION_CAP }
    }
}

/// Text form of a JSON scalar; structured values stay JSON.
pub fn cell(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn scalar_fields(json: &Value) -> Vec<(String, String)> {
    match json {
        Value::Object(map) => map
            .iter()
            .filter(|(_, v)| !v.is_array() || v.as_array().is_some_and(|a| a.iter().all(|x| !x.is_object())))
            .map(|(k, v)| (k.clone(), cell(v)))
            .collect(),
        other => vec![("value".into(), cell(other))],
    }
}

pub fn render<W: Write>(report: &Report, format: Format, out: &mut W) -> Result<(), CliError> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &report.json)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            let csv_err = |e: csv::Error| CliError::Io(e.to_string());
            match &report.table {
                Some(table) => {
                    w.write_record(&table.headers).map_err(csv_err)?;
                    for row in &table.rows {
                        w.write_record(row).map_err(csv_err)?;
                    }
                }
                None => {
                    w.write_record(["field", "value"]).map_err(csv_err)?;
                    for (k, v) in scalar_fields(&report.json) {
                        w.write_record([k, v]).map_err(csv_err)?;
                    }
                }
            }
            w.flush()?;
        }
        Format::Pretty => {
            let fields = scalar_fields(&report.json);
            let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &fields {
                writeln!(out, "{k:<width$}  {v}")?;
            }
            if let Some(table) = &report.table {
                writeln!(out)?;
                let mut widths: Vec<usize> = table.headers.iter().map(String::len).collect();
                for row in &table.rows {
                    for (w, c) in widths.iter_mut().zip(row) {
                        *w = (*w).max(c.len());
                    }
                }
                let line = |cells: &[String]| -> String {
                    let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
                    padded.join("  ").trim_end().to_string()
                };
                writeln!(out, "{}", line(&table.headers))?;
                for row in &table.rows {
                    writeln!(out, "{}", line(row))?;
                }
            }
        }
    }
    Ok(())
}

/// Reads `exchangeable`, `markov`, `lmarkov(l)` (or `lmarkov` with `ell`)
/// and `product(r1,r2,...)`.
pub fn parse_relation(text: &str, ell: Option<usize>) -> Result<Relation, CliError> {
    let text = text.trim().to_ascii_lowercase();
    let bad = || CliError::Input(format!("unknown relation {text:?}"));
    if let Some(inner) = text.strip_prefix("product(").and_then(|r| r.strip_suffix(')')) {
        let parts = inner.split(',').map(|p| parse_relation(p, ell)).collect::<Result<Vec<_>, _>>()?;
        return Ok(Relation::Product(parts));
    }
    match text.as_str() {
        "exchangeable" | "e" => Ok(Relation::Exchangeable),
        "markov" | "me" => Ok(Relation::Markov),
        "lmarkov" | "kme" => ell
            .map(Relation::LMarkov)
            .ok_or_else(|| CliError::Input("lmarkov needs --ell or the form lmarkov(l)".into())),
        _ => {
            let order = text.strip_prefix("lmarkov(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
            order.trim().parse().map(Relation::LMarkov).map_err(|_| bad())
        }
    }
}

/// Plain alphabet of size `d`, or the product of `factors`.
pub fn resolve_alphabet(d: Option<usize>, factors: Option<&[usize]>) -> Result<Alphabet, CliError> {
    match (d, factors) {
        (d, Some(f)) => formats::alphabet(d.unwrap_or_else(|| f.iter().product()), Some(f)),
        (Some(d), None) => formats::alphabet(d, None),
        (None, None) => Err(CliError::Input("need --d or --factors".into())),
    }
}
