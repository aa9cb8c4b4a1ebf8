use crate::ingest::strip_list_marker;
use crate::model::{
    validate_question_set, QuestionCard, QuestionSet, QuestionViolation, ThemeCategory, Timestamp,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuestionParseError {
    #[error("MalformedResponse(WrongCount): expected 3 question lines, found {0}")]
    WrongCount(usize),
    #[error("MalformedResponse({})", fmt_violations(.0))]
    Invalid(Vec<QuestionViolation>),
}

fn fmt_violations(v: &[QuestionViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl QuestionParseError {
    pub fn reason(&self) -> String {
        match self {
            QuestionParseError::WrongCount(_) => "WrongCount".into(),
            QuestionParseError::Invalid(v) => fmt_violations(v),
        }
    }
}

fn clean_line(line: &str) -> &str {
    let t = strip_list_marker(line.trim());
    t.trim_matches(['*', '_']).trim()
}

/// Parses a three-line question response into cards (theme left unlabeled).
pub fn parse_question_response(
    raw: &str,
    fingerprint: &str,
    now: Timestamp,
) -> Result<QuestionSet, QuestionParseError> {
    let lines: Vec<&str> = raw
        .lines()
        .map(clean_line)
        .filter(|l| !l.is_empty())
        .collect();
    if lines.len() != QuestionSet::SIZE {
        return Err(QuestionParseError::WrongCount(lines.len()));
    }
    let qs = QuestionSet {
        cards: lines
            .into_iter()
            .map(|text| QuestionCard {
                text: text.to_string(),
                theme: ThemeCategory::Unlabeled,
                generated_at: now,
            })
            .collect(),
        context_fingerprint: fingerprint.to_string(),
    };
    validate_question_set(&qs).map_err(QuestionParseError::Invalid)?;
    Ok(qs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(qs: &QuestionSet) -> Vec<&str> {
        qs.texts().collect()
    }

    #[test]
    fn canonical_form() {
        let qs = parse_question_response("Q1?\nQ2?\nQ3?", "fp", Timestamp(5)).unwrap();
        assert_eq!(texts(&qs), ["Q1?", "Q2?", "Q3?"]);
        assert!(qs.cards.iter().all(|c| c.theme == ThemeCategory::Unlabeled));
        assert_eq!(qs.context_fingerprint, "fp");
    }

    #[test]
    fn bullets_and_numbers_stripped() {
        let qs = parse_question_response("- Q1?\n- Q2?\n- Q3?", "", Timestamp(0)).unwrap();
        assert_eq!(texts(&qs), ["Q1?", "Q2?", "Q3?"]);
        let qs = parse_question_response("1. Q1?\n\n2) Q2?\n3. **Q3?**\n", "", Timestamp(0)).unwrap();
        assert_eq!(texts(&qs), ["Q1?", "Q2?", "Q3?"]);
    }

    #[test]
    fn two_lines_is_wrong_count() {
        let err = parse_question_response("Q1?\nQ2?", "", Timestamp(0)).unwrap_err();
        assert_eq!(err, QuestionParseError::WrongCount(2));
        assert_eq!(err.reason(), "WrongCount");
    }

    #[test]
    fn duplicates_rejected() {
        let err = parse_question_response("Why?\nwhy\nHow?", "", Timestamp(0)).unwrap_err();
        assert_eq!(err, QuestionParseError::Invalid(vec![QuestionViolation::DuplicateCard(0, 1)]));
    }

    proptest! {
        #[test]
        fn success_implies_valid(raw in "([-*0-9.) ]{0,3}[A-Za-z ?]{0,12}\n){0,5}") {
            if let Ok(qs) = parse_question_response(&raw, "", Timestamp(0)) {
                prop_assert!(validate_question_set(&qs).is_ok());
            }
        }
    }
}
