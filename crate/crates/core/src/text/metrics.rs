use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::lexicon::{Lexicon, LexiconSet};
use super::tokenize::{tokenize, word_count, AdapterFailed, TokenStream, Tokenizer};
use crate::model::{Condition, SessionId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("too few tokens for Herdan's C: N = {0}, need at least 2")]
    TooFewTokens(usize),
    #[error("empty token stream")]
    EmptyStream,
    #[error(transparent)]
    Adapter(#[from] AdapterFailed),
}

/// Herdan's C, `ln V / ln N`.
pub fn herdan_c(ts: &TokenStream) -> Result<f64, MetricError> {
    let n = ts.len();
    if n < 2 {
        return Err(MetricError::TooFewTokens(n));
    }
    let v = ts.surfaces().collect::<HashSet<_>>().len();
    Ok((v as f64).ln() / (n as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfReference {
    pub first_person_per100: f64,
    pub introspective_per100: f64,
    pub self_ref_ratio: f64,
}

pub fn self_reference(
    ts: &TokenStream,
    pronouns: &Lexicon,
    introspective: &Lexicon,
) -> Result<SelfReference, MetricError> {
    if ts.is_empty() {
        return Err(MetricError::EmptyStream);
    }
    let n = ts.len() as f64;
    let fp = ts.surfaces().filter(|t| pronouns.contains(t)).count() as f64;
    let iv = ts.surfaces().filter(|t| introspective.contains(t)).count() as f64;
    Ok(SelfReference {
        first_person_per100: 100.0 * fp / n,
        introspective_per100: 100.0 * iv / n,
        self_ref_ratio: (fp + iv) / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionCounts {
    pub pos_raw: usize,
    pub neg_raw: usize,
    pub pos_per100: f64,
    pub neg_per100: f64,
}

/// A token listed under both polarities counts toward both.
pub fn emotion_counts(ts: &TokenStream, sentiment: &Lexicon) -> Result<EmotionCounts, MetricError> {
    if ts.is_empty() {
        return Err(MetricError::EmptyStream);
    }
    let n = ts.len() as f64;
    let pos_raw = ts.surfaces().filter(|t| sentiment.positive.contains(*t)).count();
    let neg_raw = ts.surfaces().filter(|t| sentiment.negative.contains(*t)).count();
    Ok(EmotionCounts {
        pos_raw,
        neg_raw,
        pos_per100: 100.0 * pos_raw as f64 / n,
        neg_per100: 100.0 * neg_raw as f64 / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SentenceStats {
    pub sentence_count: usize,
    pub mean_sentence_len_words: f64,
    pub paragraph_count: usize,
}

fn sentence_end() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[.!?…]+(\s+|$)").unwrap())
}

fn paragraph_break() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\r?\n([ \t]*\r?\n)+").unwrap())
}

/// Sentences end at a run of `. ! ? …` followed by whitespace or end of
/// text; fragments without words are not counted. Paragraphs are blocks
/// separated by two or more line breaks.
pub fn sentence_stats(text: &str) -> SentenceStats {
    let mut lengths = Vec::new();
    let mut start = 0;
    for m in sentence_end().find_iter(text) {
        lengths.push(word_count(&text[start..m.end()]));
        start = m.end();
    }
    lengths.push(word_count(&text[start..]));
    lengths.retain(|&n| n > 0);

    let paragraph_count = paragraph_break()
        .split(text)
        .filter(|p| !p.trim().is_empty())
        .count();
    let sentence_count = lengths.len();
    let mean_sentence_len_words = if sentence_count == 0 {
        0.0
    } else {
        lengths.iter().sum::<usize>() as f64 / sentence_count as f64
    };
    SentenceStats {
        sentence_count,
        mean_sentence_len_words,
        paragraph_count,
    }
}

/// All linguistic measures for one journal entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub session_id: SessionId,
    pub condition: Condition,
    /// `None` when the entry has fewer than two analyzed tokens.
    pub herdan_c: Option<f64>,
    pub first_person_per100: f64,
    pub introspective_per100: f64,
    pub self_ref_ratio: f64,
    pub pos_per100: f64,
    pub neg_per100: f64,
    pub pos_raw: usize,
    pub neg_raw: usize,
    pub sentence_count: usize,
    pub mean_sentence_len_words: f64,
    pub paragraph_count: usize,
    pub word_count: usize,
    pub char_count: usize,
}

impl MetricRow {
    pub const CSV_HEADER: [&'static str; 15] = [
        "session_id",
        "condition",
        "herdan_c",
        "first_person_per100",
        "introspective_per100",
        "self_ref_ratio",
        "pos_per100",
        "neg_per100",
        "pos_raw",
        "neg_raw",
        "sentence_count",
        "mean_sentence_len_words",
        "paragraph_count",
        "word_count",
        "char_count",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.session_id.to_string(),
            self.condition.to_string(),
            self.herdan_c.map(|v| v.to_string()).unwrap_or_default(),
            self.first_person_per100.to_string(),
            self.introspective_per100.to_string(),
            self.self_ref_ratio.to_string(),
            self.pos_per100.to_string(),
            self.neg_per100.to_string(),
            self.pos_raw.to_string(),
            self.neg_raw.to_string(),
            self.sentence_count.to_string(),
            self.mean_sentence_len_words.to_string(),
            self.paragraph_count.to_string(),
            self.word_count.to_string(),
            self.char_count.to_string(),
        ]
    }
}

/// Per-100 measures use the analyzed token count as denominator.
pub fn compute_metrics(
    session_id: &SessionId,
    condition: Condition,
    text: &str,
    tokenizer: &dyn Tokenizer,
    lexicons: &LexiconSet,
) -> Result<MetricRow, MetricError> {
    let ts = tokenize(text, tokenizer)?;
    let sr = self_reference(&ts, &lexicons.first_person, &lexicons.introspective)?;
    let em = emotion_counts(&ts, &lexicons.sentiment)?;
    let ss = sentence_stats(text);
    Ok(MetricRow {
        session_id: session_id.clone(),
        condition,
        herdan_c: herdan_c(&ts).ok(),
        first_person_per100: sr.first_person_per100,
        introspective_per100: sr.introspective_per100,
        self_ref_ratio: sr.self_ref_ratio,
        pos_per100: em.pos_per100,
        neg_per100: em.neg_per100,
        pos_raw: em.pos_raw,
        neg_raw: em.neg_raw,
        sentence_count: ss.sentence_count,
        mean_sentence_len_words: ss.mean_sentence_len_words,
        paragraph_count: ss.paragraph_count,
        word_count: word_count(text),
        char_count: text.chars().count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize::{DefaultTokenizer, Token};
    use proptest::prelude::*;

    fn stream(words: &[&str]) -> TokenStream {
        TokenStream {
            tokens: words
                .iter()
                .map(|w| Token {
                    surface: w.to_string(),
                    pos: None,
                })
                .collect(),
            source_length_chars: 0,
        }
    }

    #[test]
    fn herdan_exact_values() {
        let distinct: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let refs: Vec<&str> = distinct.iter().map(String::as_str).collect();
        assert_eq!(herdan_c(&stream(&refs)).unwrap(), 1.0);
        assert_eq!(herdan_c(&stream(&["a"; 10])).unwrap(), 0.0);
        let v8: Vec<String> = (0..16).map(|i| format!("w{}", i % 8)).collect();
        let refs: Vec<&str> = v8.iter().map(String::as_str).collect();
        assert!((herdan_c(&stream(&refs)).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(herdan_c(&stream(&["a"])), Err(MetricError::TooFewTokens(1)));
    }

    #[test]
    fn self_reference_examples() {
        let pronouns = Lexicon::from_words("p", ["i"]);
        let intro = Lexicon::from_words("v", ["think"]);
        let r = self_reference(&stream(&["i", "went", "home"]), &pronouns, &intro).unwrap();
        assert!((r.first_person_per100 - 100.0 / 3.0).abs() < 1e-12);
        let r = self_reference(&stream(&["x", "y"]), &pronouns, &intro).unwrap();
        assert_eq!((r.first_person_per100, r.introspective_per100, r.self_ref_ratio), (0.0, 0.0, 0.0));
        let r = self_reference(&stream(&["i", "i"]), &pronouns, &intro).unwrap();
        assert_eq!(r.self_ref_ratio, 1.0);
        assert_eq!(self_reference(&stream(&[]), &pronouns, &intro), Err(MetricError::EmptyStream));
    }

    #[test]
    fn emotion_examples() {
        let lex = Lexicon::parse("s", "joy\tpos\nodd\tpos\nodd\tneg\n").unwrap();
        let mut words = vec!["x"; 48];
        words.extend(["joy", "joy"]);
        let e = emotion_counts(&stream(&words), &lex).unwrap();
        assert_eq!(e.pos_raw, 2);
        assert_eq!(e.pos_per100, 4.0);
        let e = emotion_counts(&stream(&["odd"]), &lex).unwrap();
        assert_eq!((e.pos_raw, e.neg_raw), (1, 1));
        let e = emotion_counts(&stream(&["joy"]), &Lexicon::default()).unwrap();
        assert_eq!((e.pos_raw, e.neg_raw), (0, 0));
    }

    #[test]
    fn sentence_examples() {
        let s = sentence_stats("A b. C d e!");
        assert_eq!(s.sentence_count, 2);
        assert_eq!(s.mean_sentence_len_words, 2.5);
        assert_eq!(sentence_stats("one\n\ntwo").paragraph_count, 2);
        assert_eq!(sentence_stats("one\ntwo").paragraph_count, 1);
        assert_eq!(sentence_stats("one\r\n \r\n\r\ntwo\n\n\nthree").paragraph_count, 3);
        assert_eq!(sentence_stats(""), SentenceStats::default());
        let s = sentence_stats("Wait... what?! No");
        assert_eq!(s.sentence_count, 3);
        let s = sentence_stats("3.14 is pi.");
        assert_eq!(s.sentence_count, 1);
    }

    #[test]
    fn compute_row() {
        let set = LexiconSet::default();
        let row = compute_metrics(
            &SessionId::new("s1"),
            Condition::AiAssisted,
            "I feel happy today. I think I am sad too.",
            &DefaultTokenizer,
            &set,
        )
        .unwrap();
        assert_eq!(row.word_count, 10);
        assert_eq!(row.pos_raw, 1);
        assert_eq!(row.neg_raw, 1);
        assert_eq!(row.first_person_per100, 30.0);
        assert_eq!(row.introspective_per100, 20.0);
        assert!((row.self_ref_ratio - 0.5).abs() < 1e-15);
        assert_eq!(row.sentence_count, 2);
        assert_eq!(row.char_count, 41);
        assert_eq!(row.csv_record().len(), MetricRow::CSV_HEADER.len());
        let one = compute_metrics(&SessionId::new("s2"), Condition::Unassisted, "Hi.", &DefaultTokenizer, &set).unwrap();
        assert_eq!(one.herdan_c, None);
    }

    proptest! {
        #[test]
        fn herdan_in_unit_interval(words in prop::collection::vec("[a-e]{1,2}", 2..60)) {
            let refs: Vec<&str> = words.iter().map(String::as_str).collect();
            let c = herdan_c(&stream(&refs)).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
        }

        #[test]
        fn measures_shuffle_invariant(words in prop::collection::vec("[a-z]{1,3}|i|me|think|joy", 1..40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let set = LexiconSet::default();
            let mut shuffled = words.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = stream(&words.iter().map(String::as_str).collect::<Vec<_>>());
            let b = stream(&shuffled.iter().map(String::as_str).collect::<Vec<_>>());
            prop_assert_eq!(herdan_c(&a).ok(), herdan_c(&b).ok());
            prop_assert_eq!(
                self_reference(&a, &set.first_person, &set.introspective).unwrap(),
                self_reference(&b, &set.first_person, &set.introspective).unwrap()
            );
            prop_assert_eq!(emotion_counts(&a, &set.sentiment).unwrap(), emotion_counts(&b, &set.sentiment).unwrap());
        }

        #[test]
        fn per100_duplication_invariant(text in "[a-zA-Z ,.]{1,80}") {
            let set = LexiconSet::default();
            let id = SessionId::new("s");
            let once = compute_metrics(&id, Condition::Unassisted, &text, &DefaultTokenizer, &set);
            let twice = compute_metrics(&id, Condition::Unassisted, &format!("{text} {text}"), &DefaultTokenizer, &set);
            if let (Ok(a), Ok(b)) = (once, twice) {
                prop_assert!((a.first_person_per100 - b.first_person_per100).abs() < 1e-9);
                prop_assert!((a.self_ref_ratio - b.self_ref_ratio).abs() < 1e-12);
            }
        }
    }
}
