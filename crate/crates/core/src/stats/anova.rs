use serde::{Deserialize, Serialize};

use super::dist::f_sf;
use super::StatsError;

/// Sums of squares of the split-plot decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaSs {
    pub total: f64,
    pub group: f64,
    pub subjects: f64,
    pub time: f64,
    pub interaction: f64,
    pub error: f64,
}

/// Group (between), Time (within, 3 levels) and Group x Time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub n: usize,
    pub f_group: f64,
    pub df_group: (f64, f64),
    pub p_group: f64,
    pub f_time: f64,
    pub df_time: (f64, f64),
    pub p_time: f64,
    pub f_interaction: f64,
    pub df_interaction: (f64, f64),
    pub p_interaction: f64,
    pub ss: AnovaSs,
}

pub(crate) fn check_design(values: &[Vec<f64>], groups: &[usize]) -> Result<[usize; 2], StatsError> {
    if values.len() != groups.len() {
        return Err(StatsError::LengthMismatch(values.len(), groups.len()));
    }
    if let Some(i) = values.iter().position(|v| v.len() != 3) {
        return Err(StatsError::IncompleteSubject(i));
    }
    if let Some(&g) = groups.iter().find(|&&g| g > 1) {
        return Err(StatsError::InvalidArgument(format!("group labels must be 0 or 1, got {g}")));
    }
    let n1 = groups.iter().filter(|&&g| g == 1).count();
    let sizes = [groups.len() - n1, n1];
    if sizes[0] < 2 || sizes[1] < 2 {
        return Err(StatsError::TooFewSubjects(sizes[0], sizes[1]));
    }
    Ok(sizes)
}

fn ratio(num: f64, den: f64) -> f64 {
    // Scale-aware zero test so constant data gives F = 0 rather than noise.
    if num <= 1e-12 * den.max(f64::MIN_POSITIVE) || num == 0.0 {
        0.0
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Two-way mixed ANOVA with one between factor and one 3-level within factor.
/// Time is entered before the interaction (sequential sums of squares).
pub fn mixed_anova(values: &[Vec<f64>], groups: &[usize]) -> Result<AnovaTable, StatsError> {
    let sizes = check_design(values, groups)?;
    let n = values.len();
    let nf = n as f64;
    let grand = values.iter().flatten().sum::<f64>() / (3.0 * nf);
    let subj_mean: Vec<f64> = values.iter().map(|v| v.iter().sum::<f64>() / 3.0).collect();
    let mut cell = [[0.0f64; 3]; 2];
    let mut time_mean = [0.0f64; 3];
    for (v, &g) in values.iter().zip(groups) {
        for t in 0..3 {
            cell[g][t] += v[t];
            time_mean[t] += v[t];
        }
    }
    let mut group_mean = [0.0f64; 2];
    for g in 0..2 {
        for t in 0..3 {
            cell[g][t] /= sizes[g] as f64;
        }
        group_mean[g] = cell[g].iter().sum::<f64>() / 3.0;
    }
    for m in &mut time_mean {
        *m /= nf;
    }

    let total: f64 = values.iter().flatten().map(|y| (y - grand).powi(2)).sum();
    let group: f64 = (0..2).map(|g| 3.0 * sizes[g] as f64 * (group_mean[g] - grand).powi(2)).sum();
    let subjects: f64 = subj_mean
        .iter()
        .zip(groups)
        .map(|(m, &g)| 3.0 * (m - group_mean[g]).powi(2))
        .sum();
    let time: f64 = time_mean.iter().map(|m| nf * (m - grand).powi(2)).sum();
    let cells: f64 = (0..2)
        .flat_map(|g| (0..3).map(move |t| (g, t)))
        .map(|(g, t)| sizes[g] as f64 * (cell[g][t] - grand).powi(2))
        .sum();
    let interaction = (cells - group - time).max(0.0);
    let error: f64 = values
        .iter()
        .zip(groups)
        .zip(&subj_mean)
        .map(|((v, &g), sm)| (0..3).map(|t| (v[t] - sm - cell[g][t] + group_mean[g]).powi(2)).sum::<f64>())
        .sum();

    let df_subj = nf - 2.0;
    let df_err = 2.0 * (nf - 2.0);
    let ms_subj = subjects / df_subj;
    let ms_err = error / df_err;
    let f_group = ratio(group, ms_subj);
    let f_time = ratio(time / 2.0, ms_err);
    let f_interaction = ratio(interaction / 2.0, ms_err);
    Ok(AnovaTable {
        n,
        f_group,
        df_group: (1.0, df_subj),
        p_group: f_sf(f_group, 1.0, df_subj),
        f_time,
        df_time: (2.0, df_err),
        p_time: f_sf(f_time, 2.0, df_err),
        f_interaction,
        df_interaction: (2.0, df_err),
        p_interaction: f_sf(f_interaction, 2.0, df_err),
        ss: AnovaSs {
            total,
            group,
            subjects,
            time,
            interaction,
            error,
        },
    })
}
