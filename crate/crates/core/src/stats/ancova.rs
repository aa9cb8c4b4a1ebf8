use serde::{Deserialize, Serialize};

use super::dist::t_two_sided_p;
use super::{EffectKind, StatsError, TestResult};

/// Least-squares fit of `outcome ~ 1 + baseline + group`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncovaFit {
    /// Intercept, baseline slope, group effect.
    pub coefficients: [f64; 3],
    pub se: [f64; 3],
    pub df: f64,
    pub rss: f64,
    /// Test of the group coefficient, with partial eta squared.
    pub group: TestResult,
}

/// Householder QR least squares. Returns coefficients and the inverse of R.
fn qr_least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64), StatsError> {
    let n = y.len();
    let p = cols.len();
    let mut a: Vec<Vec<f64>> = cols.to_vec();
    let mut qty = y.to_vec();
    let col_norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-10 * col_norms[k].max(1.0) {
            return Err(StatsError::RankDeficient);
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm2;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        };
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
    }
    // R is upper triangular: r[i][j] = a[j][i] for i <= j.
    let r = |i: usize, j: usize| a[j][i];
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }
    let mut rinv = vec![vec![0.0; p]; p];
    for j in 0..p {
        rinv[j][j] = 1.0 / r(j, j);
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| r(i, k) * rinv[k][j]).sum();
            rinv[i][j] = -s / r(i, i);
        }
    }
    let rss: f64 = qty[p..n].iter().map(|v| v * v).sum();
    Ok((beta, rinv, rss))
}

/// Period-2 ANCOVA: the group effect on the outcome adjusting for baseline.
pub fn ancova_period2(outcome: &[f64], baseline: &[f64], group: &[f64]) -> Result<AncovaFit, StatsError> {
    let n = outcome.len();
    if baseline.len() != n {
        return Err(StatsError::LengthMismatch(n, baseline.len()));
    }
    if group.len() != n {
        return Err(StatsError::LengthMismatch(n, group.len()));
    }
    if n < 4 {
        return Err(StatsError::DegenerateSample(format!("ANCOVA needs at least 4 observations, got {n}")));
    }
    let cols = vec![vec![1.0; n], baseline.to_vec(), group.to_vec()];
    let (beta, rinv, rss) = qr_least_squares(&cols, outcome)?;
    let df = (n - 3) as f64;
    let sigma2 = rss / df;
    let mut se = [0.0; 3];
    for (j, s) in se.iter_mut().enumerate() {
        let diag: f64 = rinv[j].iter().map(|v| v * v).sum();
        *s = (sigma2 * diag).sqrt();
    }
    let t = if se[2] > 0.0 {
        beta[2] / se[2]
    } else if beta[2] == 0.0 {
        0.0
    } else {
        beta[2].signum() * f64::INFINITY
    };
    let eta = if t.is_infinite() { 1.0 } else { t * t / (t * t + df) };
    let group_test = TestResult::new(t, df, t_two_sided_p(t, df)).with_effect(EffectKind::PartialEtaSq, eta);
    Ok(AncovaFit {
        coefficients: [beta[0], beta[1], beta[2]],
        se,
        df,
        rss,
        group: group_test,
    })
}
