use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use crate::simulate::{run_simulation, SimulationConfig};
use crate::store::Store;
use crate::text::DefaultTokenizer;

fn simulated(n: usize, seed: u64) -> crate::simulate::SimulationOutput {
    run_simulation(&SimulationConfig::new(n, seed), Arc::new(Store::in_memory())).unwrap()
}

fn quick() -> ReportOptions {
    ReportOptions {
        resamples: 200,
        ..Default::default()
    }
}

#[test]
fn edit_rate_line() {
    assert_eq!(EditRate::new(26, 159).unwrap().summary(), "16.4% (95% CI 11.4–22.9%)");
    assert!(EditRate::new(0, 0).is_err());
}

#[test]
fn single_session_is_insufficient() {
    let out = simulated(2, 3);
    let one = vec![out.rows[0].clone()];
    let r = analyze(&one, &DefaultTokenizer, &LexiconSet::default(), None, &quick()).unwrap();
    assert!(r.comparison.is_empty() && r.timing.is_empty());
    assert_eq!(r.metrics.len(), 1);
    assert!(r.notes.iter().filter(|n| n.starts_with("InsufficientData")).count() >= 11);
    let text = render_text(&r);
    assert!(text.contains("InsufficientData: Word count"));
}

#[test]
fn simulated_study_report() {
    let out = simulated(4, 1);
    let lex = LexiconSet::default();
    let r = analyze(&out.rows, &DefaultTokenizer, &lex, Some(&out.survey), &quick()).unwrap();
    assert_eq!(r.metrics.len(), 56);
    let names: BTreeSet<_> = r.comparison.iter().map(|c| c.measure.as_str()).collect();
    let expected: BTreeSet<_> = LINGUISTIC_MEASURES.iter().map(|(n, _)| *n).collect();
    assert_eq!(names, expected);
    assert!(r.comparison.windows(2).all(|w| w[0].q <= w[1].q));
    for c in r.comparison.iter().chain(&r.timing) {
        assert!((0.0..=1.0).contains(&c.q) && c.q >= c.p);
        assert!(c.ci_lo <= c.ci_hi);
        assert_eq!(c.n_ai + c.n_unassisted, 56);
    }
    assert_eq!(r.timing.len(), 2);
    assert_eq!(r.edit_rate.unwrap().total, 24);
    assert_eq!(r.survey.len(), 3);
    for s in &r.survey {
        let a = s.anova.unwrap();
        assert_eq!(a.df_group, (1.0, 2.0));
        assert_eq!(a.df_time, (2.0, 4.0));
        assert_eq!(s.contrasts.len(), 9);
    }
    let again = analyze(&out.rows, &DefaultTokenizer, &lex, Some(&out.survey), &quick()).unwrap();
    assert_eq!(render_text(&r), render_text(&again));
    assert_eq!(comparison_csv(&r), comparison_csv(&again));
    let threaded = ReportOptions { threads: 3, ..quick() };
    let par = analyze(&out.rows, &DefaultTokenizer, &lex, Some(&out.survey), &threaded).unwrap();
    assert_eq!(comparison_csv(&r), comparison_csv(&par));
    assert_eq!(metrics_csv(&r.metrics), metrics_csv(&par.metrics));
}

#[test]
fn generator_truth_is_recovered() {
    let out = simulated(8, 2);
    let r = analyze(&out.rows, &DefaultTokenizer, &LexiconSet::default(), None, &quick()).unwrap();
    let row = |m: &str| r.comparison.iter().find(|c| c.measure == m).unwrap();
    assert!(row("1st-person pronouns").delta > 0.0);
    assert_eq!(row("1st-person pronouns").direction, Direction::Up);
    assert_eq!(row("Negative emotion words").direction, Direction::Up);
    assert!(row("Lexical diversity (Herdan's C)").delta > 0.0);
    let start = r.timing.iter().find(|c| c.measure == TIMING_MEASURES[0]).unwrap();
    assert!(start.delta < 0.0);
}

#[test]
fn one_per_day_keeps_first() {
    let out = simulated(2, 4);
    let mut rows = out.rows.clone();
    let mut dup = rows[0].clone();
    dup.session_id = "zz".into();
    rows.insert(1, dup);
    assert_eq!(analyzable_rows(&rows, false).len(), 29);
    let kept = analyzable_rows(&rows, true);
    assert_eq!(kept.len(), 28);
    assert_eq!(kept[0].session_id, rows[0].session_id);
}

#[test]
fn directions_follow_q_and_sign() {
    let mk = |name: &str, delta: f64, p: f64| ComparisonRow {
        measure: name.into(),
        n_ai: 2,
        n_unassisted: 2,
        mean_ai: 0.0,
        mean_unassisted: 0.0,
        delta,
        d: 0.0,
        ci_lo: 0.0,
        ci_hi: 0.0,
        t: 0.0,
        df: 1.0,
        p,
        q: p,
        direction: Direction::None,
    };
    let mut rows = vec![mk("c", 1.0, 0.5), mk("a", 1.0, 0.01), mk("b", -1.0, 0.04)];
    finish_family(&mut rows);
    let got: Vec<_> = rows.iter().map(|r| (r.measure.as_str(), r.direction)).collect();
    assert_eq!(got, [("a", Direction::Up), ("b", Direction::Down), ("c", Direction::None)]);
    assert!((rows[1].q - 0.06).abs() < 1e-12);
}
