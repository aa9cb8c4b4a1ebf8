//! Statistical procedures for two-condition crossover studies.

pub mod ancova;
pub mod anova;
pub mod bootstrap;
pub mod carryover;
pub mod contrasts;
pub mod dist;
pub mod fdr;
pub mod meta;
pub mod ttest;
pub mod wilson;

use serde::{Deserialize, Serialize};

pub use ancova::{ancova_period2, AncovaFit};
pub use anova::{mixed_anova, AnovaSs, AnovaTable};
pub use bootstrap::{bootstrap_ci, mean_difference, percentile, BOOTSTRAP_RESAMPLES};
pub use carryover::{carryover_test, CarryoverResult, CARRYOVER_ALPHA};
pub use contrasts::{pairwise_contrasts, Contrast, ContrastKind, CONTRAST_ADJUSTMENT_NOTE};
pub use fdr::bh_fdr;
pub use meta::{fixed_effect_meta, MetaResult};
pub use ttest::{
    cohen_d_independent, cohen_d_paired, paired_t, pooled_t, t_from_summary, welch_t, SummaryStats,
};
pub use wilson::wilson_ci;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    DS,
    DZ,
    PartialEtaSq,
}

impl EffectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EffectKind::DS => "d_s",
            EffectKind::DZ => "d_z",
            EffectKind::PartialEtaSq => "partial_eta_sq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub kind: EffectKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_two_sided: f64,
    pub effect_size: Option<EffectSize>,
    pub ci: Option<Interval>,
}

impl TestResult {
    pub fn new(statistic: f64, df: f64, p_two_sided: f64) -> Self {
        Self {
            statistic,
            df,
            p_two_sided,
            effect_size: None,
            ci: None,
        }
    }

    pub fn with_effect(mut self, kind: EffectKind, value: f64) -> Self {
        self.effect_size = Some(EffectSize { kind, value });
        self
    }

    pub fn with_ci(mut self, lo: f64, hi: f64, level: f64) -> Self {
        self.ci = Some(Interval { lo, hi, level });
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("p-value {0} outside [0, 1]")]
    BadP(f64),
    #[error("bad count: {successes} successes of {trials} trials")]
    BadCount { successes: u64, trials: u64 },
    #[error("standard errors must be positive and finite")]
    BadSE,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("subject {0} does not have exactly 3 time points")]
    IncompleteSubject(usize),
    #[error("need at least 2 subjects per group, got {0} and {1}")]
    TooFewSubjects(usize, usize),
    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sd(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}
