use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::model::{Condition, ParseEnumError, ParticipantId};

/// Which treatment period receives AI questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sequence {
    /// AI questions on days 3-8, unassisted on days 9-14.
    EarlyAi,
    /// Unassisted on days 3-8, AI questions on days 9-14.
    LateAi,
}

impl Sequence {
    pub fn as_str(self) -> &'static str {
        match self {
            Sequence::EarlyAi => "early_ai",
            Sequence::LateAi => "late_ai",
        }
    }
}

impl FromStr for Sequence {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "early_ai" => Ok(Sequence::EarlyAi),
            "late_ai" => Ok(Sequence::LateAi),
            _ => Err(ParseEnumError {
                kind: "sequence",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{date} is outside the study window starting {day1} (days 1-{total})")]
pub struct OutOfStudyWindow {
    pub date: NaiveDate,
    pub day1: NaiveDate,
    pub total: u32,
}

/// Two baseline days, then two six-day treatment periods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudySchedule {
    pub participant_id: ParticipantId,
    pub sequence: Sequence,
    pub day1: NaiveDate,
    pub baseline_days: u32,
    pub period2_days: u32,
    pub period3_days: u32,
}

impl StudySchedule {
    pub fn new(participant_id: ParticipantId, sequence: Sequence, day1: NaiveDate) -> Self {
        Self {
            participant_id,
            sequence,
            day1,
            baseline_days: 2,
            period2_days: 6,
            period3_days: 6,
        }
    }

    pub fn total_days(&self) -> u32 {
        self.baseline_days + self.period2_days + self.period3_days
    }

    /// 1-based study day.
    pub fn study_day(&self, date: NaiveDate) -> Result<u32, OutOfStudyWindow> {
        let offset = (date - self.day1).num_days();
        if offset < 0 || offset >= i64::from(self.total_days()) {
            return Err(OutOfStudyWindow {
                date,
                day1: self.day1,
                total: self.total_days(),
            });
        }
        Ok(offset as u32 + 1)
    }

    /// Period index 1 (baseline), 2 or 3 for a valid study day.
    pub fn period_of_day(&self, day: u32) -> u8 {
        if day <= self.baseline_days {
            1
        } else if day <= self.baseline_days + self.period2_days {
            2
        } else {
            3
        }
    }

    pub fn period(&self, date: NaiveDate) -> Result<u8, OutOfStudyWindow> {
        Ok(self.period_of_day(self.study_day(date)?))
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.total_days()).map(|d| self.day1 + chrono::Days::new(u64::from(d)))
    }
}

pub fn condition_for(schedule: &StudySchedule, date: NaiveDate) -> Result<Condition, OutOfStudyWindow> {
    let ai = match (schedule.period(date)?, schedule.sequence) {
        (1, _) => false,
        (2, seq) => seq == Sequence::EarlyAi,
        (_, seq) => seq == Sequence::LateAi,
    };
    Ok(if ai { Condition::AiAssisted } else { Condition::Unassisted })
}
