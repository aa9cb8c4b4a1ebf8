//! Flat per-session rows for analysis, as CSV or JSON Lines.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::schedule::Sequence;
use crate::model::{Condition, ParseEnumError};

/// Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub session_id: String,
    pub participant_id: String,
    pub date: NaiveDate,
    pub study_day: u32,
    pub period: u8,
    pub sequence: Sequence,
    pub condition: Condition,
    pub q1: Option<String>,
    pub q2: Option<String>,
    pub q3: Option<String>,
    pub selected_index: Option<u8>,
    pub selected_question: Option<String>,
    pub edited: bool,
    pub start_delay_ms: Option<u64>,
    pub start_delay_s: Option<f64>,
    pub duration_ms: Option<u64>,
    pub duration_s: Option<f64>,
    /// Empty when the session was opened but never saved.
    pub text: String,
    pub char_count: usize,
    pub word_count: usize,
}

pub const EXPORT_COLUMNS: [&str; 20] = [
    "session_id",
    "participant_id",
    "date",
    "study_day",
    "period",
    "sequence",
    "condition",
    "q1",
    "q2",
    "q3",
    "selected_index",
    "selected_question",
    "edited",
    "start_delay_ms",
    "start_delay_s",
    "duration_ms",
    "duration_s",
    "text",
    "char_count",
    "word_count",
];

impl ExportRow {
    pub fn is_saved(&self) -> bool {
        self.duration_ms.is_some()
    }
}

pub fn ms_to_s(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Jsonl,
}

impl FromStr for ExportFormat {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "jsonl" => Ok(ExportFormat::Jsonl),
            _ => Err(ParseEnumError {
                kind: "export format",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Jsonl => "jsonl",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    /// `row` is 1-based and counts data rows (the CSV header is row 0).
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("header mismatch: expected {expected}, found {found}")]
    Header { expected: String, found: String },
}

pub fn to_csv(rows: &[ExportRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(EXPORT_COLUMNS).expect("write to memory");
    for row in rows {
        w.serialize(row).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub fn to_jsonl(rows: &[ExportRow]) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row).expect("write to memory");
        out.push(b'\n');
    }
    out
}

pub fn encode(rows: &[ExportRow], format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Csv => to_csv(rows),
        ExportFormat::Jsonl => to_jsonl(rows),
    }
}

pub fn from_csv(bytes: &[u8]) -> Result<Vec<ExportRow>, ImportError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = r.headers().map_err(|e| ImportError::Parse {
        row: 0,
        message: e.to_string(),
    })?;
    if header.iter().ne(EXPORT_COLUMNS) {
        return Err(ImportError::Header {
            expected: EXPORT_COLUMNS.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    r.deserialize()
        .enumerate()
        .map(|(i, rec)| {
            rec.map_err(|e| ImportError::Parse {
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn from_jsonl(bytes: &[u8]) -> Result<Vec<ExportRow>, ImportError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ImportError::Parse {
        row: 0,
        message: e.to_string(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ImportError::Parse {
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn decode(bytes: &[u8], format: ExportFormat) -> Result<Vec<ExportRow>, ImportError> {
    match format {
        ExportFormat::Csv => from_csv(bytes),
        ExportFormat::Jsonl => from_jsonl(bytes),
    }
}

/// JSON Lines when the first non-blank byte is `{`, otherwise CSV.
pub fn sniff_format(bytes: &[u8]) -> ExportFormat {
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => ExportFormat::Jsonl,
        _ => ExportFormat::Csv,
    }
}
