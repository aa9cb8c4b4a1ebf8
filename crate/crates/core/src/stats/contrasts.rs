use serde::{Deserialize, Serialize};

use super::anova::check_design;
use super::ttest::{cohen_d_independent, paired_t, welch_t};
use super::{bh_fdr, mean, EffectKind, StatsError, TestResult};

pub const CONTRAST_ADJUSTMENT_NOTE: &str =
    "q: Benjamini-Hochberg across the 9 contrasts of this outcome (Tukey studentized-range adjustment not applied)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContrastKind {
    /// Group 0 minus group 1 at one time point (Welch t, d_s).
    Between { time: usize },
    /// Earlier minus later time point within one group (paired t, d_z).
    Within { group: usize, from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub label: String,
    pub kind: ContrastKind,
    pub result: TestResult,
    pub q: f64,
}

const WITHIN_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// A zero-spread contrast reports t = 0 (no difference) or an infinite t.
fn degenerate(diff: f64, df: f64, kind: EffectKind) -> TestResult {
    if diff == 0.0 {
        TestResult::new(0.0, df, 1.0).with_effect(kind, 0.0)
    } else {
        let inf = diff.signum() * f64::INFINITY;
        TestResult::new(inf, df, 0.0).with_effect(kind, inf)
    }
}

/// The 9 pairwise contrasts: 3 between-group, then 3 within each group.
pub fn pairwise_contrasts(values: &[Vec<f64>], groups: &[usize], names: [&str; 2]) -> Result<Vec<Contrast>, StatsError> {
    check_design(values, groups)?;
    let column = |g: usize, t: usize| -> Vec<f64> {
        values
            .iter()
            .zip(groups)
            .filter(|(_, &gg)| gg == g)
            .map(|(v, _)| v[t])
            .collect()
    };
    let mut out = Vec::with_capacity(9);
    for t in 0..3 {
        let (a, b) = (column(0, t), column(1, t));
        let result = match (welch_t(&a, &b), cohen_d_independent(&a, &b)) {
            (Ok(r), Ok(d)) => r.with_effect(EffectKind::DS, d),
            (Ok(r), Err(_)) => {
                let d = if r.statistic == 0.0 { 0.0 } else { r.statistic.signum() * f64::INFINITY };
                r.with_effect(EffectKind::DS, d)
            }
            (Err(StatsError::DegenerateSample(_)), _) => {
                degenerate(mean(&a) - mean(&b), (a.len() + b.len() - 2) as f64, EffectKind::DS)
            }
            (Err(e), _) => return Err(e),
        };
        out.push(Contrast {
            label: format!("{} - {} at T{}", names[0], names[1], t + 1),
            kind: ContrastKind::Between { time: t },
            result,
            q: f64::NAN,
        });
    }
    for g in 0..2 {
        for (from, to) in WITHIN_PAIRS {
            let (a, b) = (column(g, from), column(g, to));
            let result = match paired_t(&a, &b) {
                Ok(r) => r,
                Err(StatsError::DegenerateSample(_)) => {
                    degenerate(mean(&a) - mean(&b), (a.len() - 1) as f64, EffectKind::DZ)
                }
                Err(e) => return Err(e),
            };
            out.push(Contrast {
                label: format!("{}: T{} - T{}", names[g], from + 1, to + 1),
                kind: ContrastKind::Within { group: g, from, to },
                result,
                q: f64::NAN,
            });
        }
    }
    let p: Vec<f64> = out.iter().map(|c| c.result.p_two_sided).collect();
    for (c, q) in out.iter_mut().zip(bh_fdr(&p)?) {
        c.q = q;
    }
    Ok(out)
}
