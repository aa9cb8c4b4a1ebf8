//! Analysis of exported session logs: per-entry metrics, the condition
//! comparison table, timing comparisons, the edit rate, and optional survey
//! analyses. Every output is a pure function of the inputs and the seed.

pub mod survey;

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{Condition, SessionId};
use crate::stats::bootstrap::bootstrap_ci_threads;
use crate::stats::carryover::period_sums;
use crate::stats::{
    ancova_period2, bh_fdr, carryover_test, cohen_d_independent, fixed_effect_meta, mean, mixed_anova,
    pairwise_contrasts, wilson_ci, AncovaFit, AnovaTable, CarryoverResult, Contrast, MetaResult, StatsError,
    BOOTSTRAP_RESAMPLES, CONTRAST_ADJUSTMENT_NOTE,
};
use crate::store::{ExportRow, Sequence};
use crate::text::{compute_metrics, upper_cap, LexiconSet, MetricError, MetricRow, Tokenizer};
use survey::{by_measure, SurveyRow};

/// Significance threshold for the direction arrows.
pub const DIRECTION_Q: f64 = 0.10;
/// Upper fraction capped before comparing timings.
pub const TIMING_WINSOR: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("metrics for session {session}: {source}")]
    Metric { session: String, source: MetricError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportOptions {
    pub seed: u64,
    pub resamples: usize,
    pub threads: usize,
    /// Keep only the first saved session per participant and day.
    pub one_per_day: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            resamples: BOOTSTRAP_RESAMPLES,
            threads: 1,
            one_per_day: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    None,
}

impl Direction {
    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Up => "↑",
            Direction::Down => "↓",
            Direction::None => "--",
        }
    }
}

/// One measure compared between AI-assisted and unassisted entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub measure: String,
    pub n_ai: usize,
    pub n_unassisted: usize,
    pub mean_ai: f64,
    pub mean_unassisted: f64,
    /// AI minus unassisted.
    pub delta: f64,
    /// Cohen's d_s.
    pub d: f64,
    /// Percentile bootstrap interval of d_s.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// Benjamini-Hochberg within the row's family.
    pub q: f64,
    pub direction: Direction,
}

type Extract = fn(&MetricRow) -> Option<f64>;

/// The linguistic measures compared across conditions, in display order.
pub const LINGUISTIC_MEASURES: [(&str, Extract); 9] = [
    ("1st-person pronouns", |m| Some(m.first_person_per100)),
    ("Negative emotion words", |m| Some(m.neg_per100)),
    ("Self-reference ratio", |m| Some(m.self_ref_ratio)),
    ("Positive emotion words", |m| Some(m.pos_per100)),
    ("Lexical diversity (Herdan's C)", |m| m.herdan_c),
    ("Sentence count", |m| Some(m.sentence_count as f64)),
    ("Mean sent. length", |m| Some(m.mean_sentence_len_words)),
    ("Character count", |m| Some(m.char_count as f64)),
    ("Word count", |m| Some(m.word_count as f64)),
];

pub const TIMING_MEASURES: [&str; 2] = ["Start delay (s)", "Duration (s)"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditRate {
    pub edited: u64,
    pub total: u64,
    pub lo: f64,
    pub hi: f64,
}

impl EditRate {
    pub fn new(edited: u64, total: u64) -> Result<Self, StatsError> {
        let (lo, hi) = wilson_ci(edited, total, 0.95)?;
        Ok(Self { edited, total, lo, hi })
    }

    pub fn rate(&self) -> f64 {
        self.edited as f64 / self.total as f64
    }

    /// `16.4% (95% CI 11.4–22.9%)`
    pub fn summary(&self) -> String {
        format!(
            "{:.1}% (95% CI {:.1}–{:.1}%)",
            100.0 * self.rate(),
            100.0 * self.lo,
            100.0 * self.hi
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyAnalysis {
    pub measure: String,
    pub n_early: usize,
    pub n_late: usize,
    pub anova: Option<AnovaTable>,
    pub contrasts: Vec<Contrast>,
    pub carryover: Option<CarryoverResult>,
    /// Period 2 outcome on baseline, AI indicator = Early-AI.
    pub ancova_p2: Option<AncovaFit>,
    /// Period 3 outcome on period 2, AI indicator = Late-AI.
    pub ancova_p3: Option<AncovaFit>,
    /// Fixed-effect pooling of the two period-specific AI effects.
    pub meta: Option<MetaResult>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metrics: Vec<MetricRow>,
    pub comparison: Vec<ComparisonRow>,
    pub timing: Vec<ComparisonRow>,
    pub edit_rate: Option<EditRate>,
    pub survey: Vec<SurveyAnalysis>,
    pub notes: Vec<String>,
}

fn insufficient(measure: &str, n_ai: usize, n_un: usize) -> String {
    format!("InsufficientData: {measure} needs at least 2 entries per condition (ai={n_ai}, unassisted={n_un})")
}

/// Saved rows, optionally reduced to the first session per participant-day.
pub fn analyzable_rows(rows: &[ExportRow], one_per_day: bool) -> Vec<&ExportRow> {
    let mut seen = HashSet::new();
    rows.iter()
        .filter(|r| r.is_saved())
        .filter(|r| !one_per_day || seen.insert((r.participant_id.clone(), r.date)))
        .collect()
}

/// Metrics for every row. Entries with no analyzable tokens are skipped
/// and listed in the returned notes.
pub fn compute_all(
    rows: &[&ExportRow],
    tokenizer: &dyn Tokenizer,
    lexicons: &LexiconSet,
    threads: usize,
) -> Result<(Vec<MetricRow>, Vec<String>), ReportError> {
    let one = |r: &ExportRow| -> Result<Option<MetricRow>, ReportError> {
        match compute_metrics(&SessionId::new(r.session_id.clone()), r.condition, &r.text, tokenizer, lexicons) {
            Ok(m) => Ok(Some(m)),
            Err(MetricError::EmptyStream) => Ok(None),
            Err(source) => Err(ReportError::Metric {
                session: r.session_id.clone(),
                source,
            }),
        }
    };
    let results: Vec<Result<Option<MetricRow>, ReportError>> = if threads <= 1 || rows.len() < 2 {
        rows.iter().map(|r| one(r)).collect()
    } else {
        let chunk = rows.len().div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = rows
                .chunks(chunk)
                .map(|c| s.spawn(move || c.iter().map(|r| one(r)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("metrics worker"))
                .collect()
        })
    };
    let mut metrics = Vec::with_capacity(rows.len());
    let mut notes = Vec::new();
    for (r, res) in rows.iter().zip(results) {
        match res? {
            Some(m) => metrics.push(m),
            None => notes.push(format!("Skipped: session {} has no analyzable tokens", r.session_id)),
        }
    }
    Ok((metrics, notes))
}

/// Welch t, d_s with a bootstrap interval, for AI versus unassisted values.
/// `q` is left equal to `p` until the family is adjusted.
pub fn compare(
    measure: &str,
    ai: &[f64],
    unassisted: &[f64],
    resamples: usize,
    seed: u64,
    threads: usize,
) -> Result<ComparisonRow, StatsError> {
    let test = crate::stats::welch_t(ai, unassisted)?;
    let d = cohen_d_independent(ai, unassisted)?;
    let stat = |a: &[f64], b: &[f64]| cohen_d_independent(a, b).unwrap_or(f64::NAN);
    let (ci_lo, ci_hi) = bootstrap_ci_threads(stat, ai, unassisted, resamples, 0.95, seed, threads)?;
    Ok(ComparisonRow {
        measure: measure.to_string(),
        n_ai: ai.len(),
        n_unassisted: unassisted.len(),
        mean_ai: mean(ai),
        mean_unassisted: mean(unassisted),
        delta: mean(ai) - mean(unassisted),
        d,
        ci_lo,
        ci_hi,
        t: test.statistic,
        df: test.df,
        p: test.p_two_sided,
        q: test.p_two_sided,
        direction: Direction::None,
    })
}

/// BH over the family, arrows for q below [`DIRECTION_Q`], then a stable
/// sort by q.
fn finish_family(rows: &mut Vec<ComparisonRow>) {
    let p: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let q = bh_fdr(&p).expect("p-values come from t tests");
    for (r, q) in rows.iter_mut().zip(q) {
        r.q = q;
        r.direction = if q < DIRECTION_Q && r.delta > 0.0 {
            Direction::Up
        } else if q < DIRECTION_Q && r.delta < 0.0 {
            Direction::Down
        } else {
            Direction::None
        };
    }
    rows.sort_by(|a, b| a.q.total_cmp(&b.q));
}

fn split_by_condition<'a, T>(items: impl Iterator<Item = (Condition, T)> + 'a) -> (Vec<T>, Vec<T>) {
    let mut ai = Vec::new();
    let mut un = Vec::new();
    for (c, v) in items {
        match c {
            Condition::AiAssisted => ai.push(v),
            Condition::Unassisted => un.push(v),
        }
    }
    (ai, un)
}

fn comparison_family(
    named: Vec<(&str, Vec<f64>, Vec<f64>)>,
    opts: &ReportOptions,
    seed_offset: u64,
    notes: &mut Vec<String>,
) -> Vec<ComparisonRow> {
    let mut rows = Vec::new();
    for (i, (name, ai, un)) in named.into_iter().enumerate() {
        if ai.len() < 2 || un.len() < 2 {
            notes.push(insufficient(name, ai.len(), un.len()));
            continue;
        }
        let seed = opts.seed.wrapping_add(seed_offset + i as u64);
        match compare(name, &ai, &un, opts.resamples, seed, opts.threads) {
            Ok(row) => rows.push(row),
            Err(e) => notes.push(format!("InsufficientData: {name}: {e}")),
        }
    }
    if !rows.is_empty() {
        finish_family(&mut rows);
    }
    rows
}

/// Start delay and duration in seconds, winsorized at the top 1% of the
/// pooled values.
fn timing_family(rows: &[&ExportRow], opts: &ReportOptions, notes: &mut Vec<String>) -> Vec<ComparisonRow> {
    let mut named = Vec::new();
    let getters: [fn(&ExportRow) -> Option<f64>; 2] = [|r| r.start_delay_s, |r| r.duration_s];
    for (name, get) in TIMING_MEASURES.iter().zip(getters) {
        let pairs: Vec<(Condition, f64)> = rows.iter().filter_map(|r| get(r).map(|v| (r.condition, v))).collect();
        let pooled: Vec<f64> = pairs.iter().map(|(_, v)| *v).collect();
        let cap = match upper_cap(&pooled, TIMING_WINSOR) {
            Ok(c) => c,
            Err(_) => {
                notes.push(insufficient(name, 0, 0));
                continue;
            }
        };
        let (ai, un) = split_by_condition(pairs.into_iter().map(|(c, v)| (c, v.min(cap))));
        named.push((*name, ai, un));
    }
    comparison_family(named, opts, 100, notes)
}

fn edit_rate(rows: &[&ExportRow]) -> Option<EditRate> {
    let ai: Vec<_> = rows.iter().filter(|r| r.condition == Condition::AiAssisted).collect();
    let edited = ai.iter().filter(|r| r.edited).count() as u64;
    EditRate::new(edited, ai.len() as u64).ok()
}

/// Full log analysis. `survey` rows, when given, add the repeated-measures
/// analyses per measure.
pub fn analyze(
    logs: &[ExportRow],
    tokenizer: &dyn Tokenizer,
    lexicons: &LexiconSet,
    survey: Option<&[SurveyRow]>,
    opts: &ReportOptions,
) -> Result<Report, ReportError> {
    let rows = analyzable_rows(logs, opts.one_per_day);
    let (metrics, mut notes) = compute_all(&rows, tokenizer, lexicons, opts.threads)?;

    let named = LINGUISTIC_MEASURES
        .iter()
        .map(|(name, get)| {
            let (ai, un) = split_by_condition(metrics.iter().filter_map(|m| get(m).map(|v| (m.condition, v))));
            (*name, ai, un)
        })
        .collect();
    let comparison = comparison_family(named, opts, 0, &mut notes);
    let timing = timing_family(&rows, opts, &mut notes);
    let edit_rate = edit_rate(&rows);
    if edit_rate.is_none() {
        notes.push("InsufficientData: edit rate needs at least one saved AI-assisted entry".into());
    }
    let survey = survey.map(analyze_survey).unwrap_or_default();
    Ok(Report {
        metrics,
        comparison,
        timing,
        edit_rate,
        survey,
        notes,
    })
}

/// Mixed ANOVA, pairwise contrasts, carryover check, period-specific ANCOVA
/// and their fixed-effect pooling, per survey measure.
pub fn analyze_survey(rows: &[SurveyRow]) -> Vec<SurveyAnalysis> {
    by_measure(rows)
        .into_iter()
        .map(|(measure, rows)| {
            let values: Vec<Vec<f64>> = rows.iter().map(SurveyRow::values).collect();
            let groups: Vec<usize> = rows
                .iter()
                .map(|r| usize::from(r.sequence == Sequence::LateAi))
                .collect();
            let n_late = groups.iter().sum::<usize>();
            let mut notes = Vec::new();
            let mut note = |what: &str, e: StatsError| notes.push(format!("{what}: {e}"));

            let anova = mixed_anova(&values, &groups).map_err(|e| note("anova", e)).ok();
            let contrasts = pairwise_contrasts(&values, &groups, ["Early", "Late"])
                .map_err(|e| note("contrasts", e))
                .unwrap_or_default();
            let col = |t: usize, g: Option<usize>| -> Vec<f64> {
                values
                    .iter()
                    .zip(&groups)
                    .filter(|(_, gg)| g.is_none_or(|g| **gg == g))
                    .map(|(v, _)| v[t])
                    .collect()
            };
            let carryover = period_sums(&col(1, Some(0)), &col(2, Some(0)))
                .and_then(|early| {
                    let late = period_sums(&col(1, Some(1)), &col(2, Some(1)))?;
                    carryover_test(&early, &late)
                })
                .map_err(|e| note("carryover", e))
                .ok();
            let early_ind: Vec<f64> = groups.iter().map(|&g| if g == 0 { 1.0 } else { 0.0 }).collect();
            let late_ind: Vec<f64> = groups.iter().map(|&g| g as f64).collect();
            let ancova_p2 = ancova_period2(&col(1, None), &col(0, None), &early_ind)
                .map_err(|e| note("ancova period 2", e))
                .ok();
            let ancova_p3 = ancova_period2(&col(2, None), &col(1, None), &late_ind)
                .map_err(|e| note("ancova period 3", e))
                .ok();
            let meta = match (&ancova_p2, &ancova_p3) {
                (Some(a), Some(b)) => fixed_effect_meta(&[a.coefficients[2], b.coefficients[2]], &[a.se[2], b.se[2]])
                    .map_err(|e| note("meta", e))
                    .ok(),
                _ => None,
            };
            SurveyAnalysis {
                measure,
                n_early: rows.len() - n_late,
                n_late,
                anova,
                contrasts,
                carryover,
                ancova_p2,
                ancova_p3,
                meta,
                notes,
            }
        })
        .collect()
}

// Rendering ----------------------------------------------------------------

pub fn metrics_csv(metrics: &[MetricRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MetricRow::CSV_HEADER).expect("in-memory write");
    for m in metrics {
        w.write_record(m.csv_record()).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub const COMPARISON_COLUMNS: [&str; 16] = [
    "family",
    "measure",
    "n_ai",
    "n_unassisted",
    "mean_ai",
    "mean_unassisted",
    "delta",
    "d",
    "ci_lo",
    "ci_hi",
    "t",
    "df",
    "p",
    "q",
    "direction",
    "ci_method",
];

pub fn comparison_csv(report: &Report) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARISON_COLUMNS).expect("in-memory write");
    let families = [("linguistic", &report.comparison), ("timing", &report.timing)];
    for (family, rows) in families {
        for r in rows.iter() {
            w.write_record([
                family.to_string(),
                r.measure.clone(),
                r.n_ai.to_string(),
                r.n_unassisted.to_string(),
                r.mean_ai.to_string(),
                r.mean_unassisted.to_string(),
                r.delta.to_string(),
                r.d.to_string(),
                r.ci_lo.to_string(),
                r.ci_hi.to_string(),
                r.t.to_string(),
                r.df.to_string(),
                r.p.to_string(),
                r.q.to_string(),
                r.direction.symbol().to_string(),
                "percentile".to_string(),
            ])
            .expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory flush")
}

fn signed(x: f64, dp: usize) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "+inf".into() } else { "-inf".into() };
    }
    format!("{x:+.dp$}")
}

fn table(out: &mut String, title: &str, rows: &[ComparisonRow]) {
    let width = rows
        .iter()
        .map(|r| r.measure.chars().count())
        .chain(std::iter::once(7))
        .max()
        .unwrap_or(7);
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>7}  {:>16}  {:>6}  {:<3}",
        "Measure", "Δ", "D", "95% CI", "q", "Dir"
    );
    for r in rows {
        let ci = format!("({:.2}, {:.2})", r.ci_lo, r.ci_hi);
        let star = if r.q < 0.05 { "*" } else { " " };
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>7}  {:>16}  {:>5.3}{star}  {}",
            r.measure,
            signed(r.delta, 3),
            signed(r.d, 3),
            ci,
            r.q,
            r.direction.symbol()
        );
    }
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<.001".into()
    } else {
        format!("{p:.3}")
    }
}

/// Aligned text rendering of the whole report.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    table(
        &mut out,
        "Linguistic and emotional indicators across conditions (Δ = AI-assisted − Unassisted)",
        &report.comparison,
    );
    let _ = writeln!(
        out,
        "D: Cohen's d_s. CI: percentile bootstrap of d_s. q: Benjamini-Hochberg over the family, * q < .05. \
         Dir: ↑ AI > Unassisted, ↓ AI < Unassisted (q < .10). Emotion and pronoun counts per 100 words."
    );
    let _ = writeln!(out);
    table(
        &mut out,
        "Writing behavior (seconds; top 1% winsorized on pooled data)",
        &report.timing,
    );
    for r in &report.timing {
        let _ = writeln!(
            out,
            "  {}: AI mean {:.1} (n={}), Unassisted mean {:.1} (n={}), Welch t({:.1}) = {:.3}, p = {}",
            r.measure,
            r.mean_ai,
            r.n_ai,
            r.mean_unassisted,
            r.n_unassisted,
            r.df,
            r.t,
            fmt_p(r.p)
        );
    }
    let _ = writeln!(out);
    if let Some(er) = &report.edit_rate {
        let _ = writeln!(
            out,
            "Edit rate: {} of AI-assisted entries ({}/{})",
            er.summary(),
            er.edited,
            er.total
        );
    }
    for s in &report.survey {
        let _ = writeln!(out);
        render_survey(&mut out, s);
    }
    if !report.notes.is_empty() {
        let _ = writeln!(out);
        for n in &report.notes {
            let _ = writeln!(out, "{n}");
        }
    }
    out
}

fn render_survey(out: &mut String, s: &SurveyAnalysis) {
    let _ = writeln!(out, "Survey measure: {} (Early-AI n={}, Late-AI n={})", s.measure, s.n_early, s.n_late);
    if let Some(a) = &s.anova {
        let rows = [
            ("Group", a.f_group, a.df_group, a.p_group),
            ("Time", a.f_time, a.df_time, a.p_time),
            ("Group x Time", a.f_interaction, a.df_interaction, a.p_interaction),
        ];
        for (name, f, df, p) in rows {
            let _ = writeln!(out, "  {name:<13} F({:.0},{:.0}) = {f:.3}, p = {}", df.0, df.1, fmt_p(p));
        }
    }
    if let Some(c) = &s.carryover {
        let _ = writeln!(
            out,
            "  Carryover (Welch t on period sums): t({:.1}) = {:.3}, p = {}, carryover: {}",
            c.result.df,
            c.result.statistic,
            fmt_p(c.result.p_two_sided),
            if c.carryover { "yes" } else { "no" }
        );
    }
    for (label, fit) in [("Period-2 ANCOVA", &s.ancova_p2), ("Period-3 ANCOVA", &s.ancova_p3)] {
        if let Some(f) = fit {
            let eta = f.group.effect_size.map(|e| e.value).unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "  {label}: β_AI = {:+.3} (SE {:.3}), t({:.0}) = {:.3}, p = {}, partial η² = {:.3}",
                f.coefficients[2],
                f.se[2],
                f.df,
                f.group.statistic,
                fmt_p(f.group.p_two_sided),
                eta
            );
        }
    }
    if let Some(m) = &s.meta {
        let _ = writeln!(
            out,
            "  Period-specific fixed-effect meta: β = {:+.3} (SE {:.3}), z = {:.3}, p = {}",
            m.beta,
            m.se,
            m.z,
            fmt_p(m.p)
        );
    }
    if !s.contrasts.is_empty() {
        let _ = writeln!(out, "  Pairwise contrasts ({CONTRAST_ADJUSTMENT_NOTE})");
        for c in &s.contrasts {
            let eff = c
                .result
                .effect_size
                .map(|e| format!("{} = {}", e.kind.as_str(), signed(e.value, 3)))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "    {:<22} t({:.1}) = {:>7}, p = {:>6}, q = {:>6}, {eff}",
                c.label,
                c.result.df,
                signed(c.result.statistic, 3),
                fmt_p(c.result.p_two_sided),
                fmt_p(c.q)
            );
        }
    }
    for n in &s.notes {
        let _ = writeln!(out, "  note: {n}");
    }
}

#[cfg(test)]
mod tests;
