#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WinsorError {
    #[error("cannot winsorize an empty sample")]
    EmptyInput,
    #[error("winsorization fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
}

/// Upper cap by the nearest-rank quantile, rank = ceil((1 - pct) n).
pub fn upper_cap(values: &[f64], pct: f64) -> Result<f64, WinsorError> {
    if values.is_empty() {
        return Err(WinsorError::EmptyInput);
    }
    if !(pct > 0.0 && pct < 1.0) {
        return Err(WinsorError::BadFraction(pct));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Snap away representation error so that e.g. 0.99 * 100 ranks 99, not 100.
    let raw = (1.0 - pct) * n as f64;
    let rank = (raw - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(sorted[rank - 1])
}

/// Replaces every value above the cap with the cap, preserving order.
pub fn winsorize_upper(values: &[f64], pct: f64) -> Result<Vec<f64>, WinsorError> {
    let cap = upper_cap(values, pct)?;
    Ok(values.iter().map(|&v| if v > cap { cap } else { v }).collect())
}
