use super::StatsError;

/// Benjamini-Hochberg adjusted q-values, in input order.
pub fn bh_fdr(p: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(&bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(StatsError::BadP(bad));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p[i].total_cmp(&p[j]).then(i.cmp(&j)));
    let mut q = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank0, &i) in order.iter().enumerate().rev() {
        let rank = rank0 + 1;
        running = running.min(p[i] * m as f64 / rank as f64);
        q[i] = running.min(1.0).max(p[i]);
    }
    Ok(q)
}
