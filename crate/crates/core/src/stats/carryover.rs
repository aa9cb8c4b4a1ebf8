use serde::{Deserialize, Serialize};

use super::ttest::welch_t;
use super::{StatsError, TestResult};

pub const CARRYOVER_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarryoverResult {
    pub result: TestResult,
    pub carryover: bool,
}

pub fn carryover_flag(p: f64) -> bool {
    p < CARRYOVER_ALPHA
}

/// Per-subject sums of the two treatment periods.
pub fn period_sums(period2: &[f64], period3: &[f64]) -> Result<Vec<f64>, StatsError> {
    if period2.len() != period3.len() {
        return Err(StatsError::LengthMismatch(period2.len(), period3.len()));
    }
    Ok(period2.iter().zip(period3).map(|(a, b)| a + b).collect())
}

/// Welch t on the Period 2 + Period 3 sums of the two sequences. A
/// difference in sums signals carryover (or a sequence effect).
pub fn carryover_test(sums_seq1: &[f64], sums_seq2: &[f64]) -> Result<CarryoverResult, StatsError> {
    let result = welch_t(sums_seq1, sums_seq2)?;
    Ok(CarryoverResult {
        carryover: carryover_flag(result.p_two_sided),
        result,
    })
}
