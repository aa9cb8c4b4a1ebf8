//! Repeated-measures survey input: one row per participant and measure,
//! scored at baseline (t1) and after each treatment period (t2, t3).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::store::{ImportError, Sequence};

pub const SURVEY_COLUMNS: [&str; 6] = ["participant_id", "sequence", "measure", "t1", "t2", "t3"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub participant_id: String,
    pub sequence: Sequence,
    pub measure: String,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl SurveyRow {
    pub fn values(&self) -> Vec<f64> {
        vec![self.t1, self.t2, self.t3]
    }
}

pub fn to_csv(rows: &[SurveyRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(SURVEY_COLUMNS).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn from_csv(bytes: &[u8]) -> Result<Vec<SurveyRow>, ImportError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| ImportError::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if header != SURVEY_COLUMNS {
        return Err(ImportError::Header {
            expected: SURVEY_COLUMNS.join(","),
            found: header.join(","),
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

/// Rows grouped by measure, in measure-name order.
pub fn by_measure(rows: &[SurveyRow]) -> BTreeMap<String, Vec<SurveyRow>> {
    let mut out: BTreeMap<String, Vec<SurveyRow>> = BTreeMap::new();
    for r in rows {
        out.entry(r.measure.clone()).or_default().push(r.clone());
    }
    for v in out.values_mut() {
        v.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
    }
    out
}
