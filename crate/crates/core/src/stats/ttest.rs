use super::dist::t_two_sided_p;
use super::{mean, variance, EffectKind, StatsError, TestResult};

/// Mean, standard deviation and size of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl SummaryStats {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: mean(xs),
            sd: variance(xs).sqrt(),
            n: xs.len(),
        }
    }
}

fn need_two(n: usize, which: &str) -> Result<(), StatsError> {
    if n < 2 {
        return Err(StatsError::DegenerateSample(format!("{which} has {n} observations, need at least 2")));
    }
    Ok(())
}

fn t_result(diff: f64, se: f64, df: f64) -> Result<TestResult, StatsError> {
    if se == 0.0 || !se.is_finite() {
        if diff == 0.0 {
            return Err(StatsError::DegenerateSample("zero variance and equal means".into()));
        }
        return Ok(TestResult::new(diff.signum() * f64::INFINITY, df, 0.0));
    }
    let t = diff / se;
    Ok(TestResult::new(t, df, t_two_sided_p(t, df)))
}

/// Two-sample t from summaries. `pooled` selects Student's equal-variance
/// form (df = n1 + n2 - 2), otherwise Welch-Satterthwaite.
pub fn t_from_summary(a: SummaryStats, b: SummaryStats, pooled: bool) -> Result<TestResult, StatsError> {
    need_two(a.n, "first sample")?;
    need_two(b.n, "second sample")?;
    if a.sd < 0.0 || b.sd < 0.0 {
        return Err(StatsError::InvalidArgument("negative standard deviation".into()));
    }
    let (na, nb) = (a.n as f64, b.n as f64);
    let (va, vb) = (a.sd * a.sd, b.sd * b.sd);
    let diff = a.mean - b.mean;
    if pooled {
        let df = na + nb - 2.0;
        let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
        t_result(diff, (sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df)
    } else {
        let (sa, sb) = (va / na, vb / nb);
        let se2 = sa + sb;
        let df = if se2 > 0.0 {
            se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0))
        } else {
            na + nb - 2.0
        };
        t_result(diff, se2.sqrt(), df)
    }
}

/// Welch's unequal-variance t test; `t > 0` when `a` has the larger mean.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    need_two(a.len(), "first sample")?;
    need_two(b.len(), "second sample")?;
    t_from_summary(SummaryStats::of(a), SummaryStats::of(b), false)
}

/// Student's pooled-variance t test.
pub fn pooled_t(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    need_two(a.len(), "first sample")?;
    need_two(b.len(), "second sample")?;
    t_from_summary(SummaryStats::of(a), SummaryStats::of(b), true)
}

/// Paired t test on `a[i] - b[i]`, with d_z attached.
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    need_two(diffs.len(), "paired sample")?;
    let n = diffs.len() as f64;
    let md = mean(&diffs);
    let sd = variance(&diffs).sqrt();
    let r = t_result(md, sd / n.sqrt(), n - 1.0)?;
    Ok(r.with_effect(EffectKind::DZ, cohen_d_paired(&diffs)?))
}

/// d_s: mean difference over the pooled standard deviation.
pub fn cohen_d_independent(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    need_two(a.len(), "first sample")?;
    need_two(b.len(), "second sample")?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sp2 = ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0);
    if sp2 <= 0.0 {
        return Err(StatsError::DegenerateSample("pooled standard deviation is zero".into()));
    }
    Ok((mean(a) - mean(b)) / sp2.sqrt())
}

/// d_z: mean of the differences over their standard deviation.
pub fn cohen_d_paired(diffs: &[f64]) -> Result<f64, StatsError> {
    need_two(diffs.len(), "differences")?;
    let sd = variance(diffs).sqrt();
    if sd <= 0.0 {
        return Err(StatsError::DegenerateSample("differences have zero standard deviation".into()));
    }
    Ok(mean(diffs) / sd)
}
