//! Output envelope: a header with the resolved config and a timestamp, then a deterministic
//! body rendered as JSON, CSV or an aligned table.

use serde::Serialize;
use serde_json::{json, Value};
use thermocap::monotones::report::format_value;
use thermocap::monotones::{BoundKind, BoundReport};

use crate::config::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl Format {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "table" => Ok(Self::Table),
            other => Err(CliError::config(format!("unknown format {other:?}"))),
        }
    }
}

/// Result of a command: JSON body, a flat table for CSV and table output, free-form notes for
/// the table view, and whether every built-in check passed.
pub struct Report {
    pub body: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl Report {
    pub fn new(body: impl Serialize, columns: &[&str]) -> Self {
        Self {
            body: serde_json::to_value(body).expect("serializable body"),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
            notes: vec![],
            pass: true,
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }
}

pub fn num(v: f64) -> String {
    format_value(v)
}

pub fn kind(k: BoundKind) -> String {
    k.as_str().to_string()
}

/// Columns of a bound report row.
pub const REPORT_COLUMNS: [&str; 5] = ["name", "value", "kind", "method", "tol"];

pub fn report_cells(r: &BoundReport) -> Vec<String> {
    vec![r.name.clone(), num(r.value), kind(r.kind), r.method.clone(), format!("{:e}", r.tol)]
}

/// JSON has no infinities; non-finite numbers are written as strings.
pub fn json_num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format_value(v))
    }
}

pub fn render(format: Format, header: &Value, report: &Report) -> CliResult<String> {
    match format {
        Format::Json => {
            let doc = json!({ "header": header, "body": report.body });
            Ok(serde_json::to_string_pretty(&doc).map_err(|e| CliError::config(e.to_string()))? + "\n")
        }
        Format::Csv => {
            let mut out = format!("# {}\n", serde_json::to_string(header).expect("header"));
            let mut w = csv::Writer::from_writer(vec![]);
            let mut cols = vec!["schema_version".to_string()];
            cols.extend(report.columns.iter().cloned());
            w.write_record(&cols).map_err(|e| CliError::config(e.to_string()))?;
            for r in &report.rows {
                let mut rec = vec![SCHEMA_VERSION.to_string()];
                rec.extend(r.iter().cloned());
                w.write_record(&rec).map_err(|e| CliError::config(e.to_string()))?;
            }
            out.push_str(&String::from_utf8(w.into_inner().map_err(|e| CliError::config(e.to_string()))?).expect("utf8"));
            Ok(out)
        }
        Format::Table => {
            let mut out = format!("# {}\n", serde_json::to_string(header).expect("header"));
            let widths: Vec<usize> = (0..report.columns.len())
                .map(|c| report.rows.iter().map(|r| r[c].len()).chain([report.columns[c].len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[String]| -> String {
                cells.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string() + "\n"
            };
            out.push_str(&line(&report.columns));
            out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
            for r in &report.rows {
                out.push_str(&line(r));
            }
            for n in &report.notes {
                out.push_str(n);
                out.push('\n');
            }
            Ok(out)
        }
    }
}
