//! Table serialization with fixed, documented column orders.
//!
//! CSV is the primary format; JSON mirrors the same rows via serde. Floats
//! print with Rust's shortest round-trip formatting, which is
//! platform-stable, so identical tables are byte-identical.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// A row type with a fixed CSV column order.
pub trait TableRow: Serialize {
    /// Comma-separated column names, matching [`TableRow::csv_row`].
    fn csv_header() -> &'static str;
    fn csv_row(&self) -> String;
}

pub fn to_csv_string<R: TableRow>(rows: &[R]) -> String {
    let mut out = String::from(R::csv_header());
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn to_json_string<R: TableRow>(rows: &[R]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("table rows serialize");
    s.push('\n');
    s
}
