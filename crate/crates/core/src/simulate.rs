//! Offline study simulation: synthetic participants run the full two-week
//! protocol through the service with the mock provider, a manual clock and
//! seeded identifiers, so every output is reproducible from the seed.

use std::sync::Arc;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::clock::{ManualClock, SeededIds};
use crate::ingest::{DocumentFormat, DocumentUpload};
use crate::llm::{Gateway, GatewaySettings};
use crate::model::{Condition, ParticipantId, RehearsalStage, Timestamp};
use crate::report::survey::SurveyRow;
use crate::service::{SaveRequest, Service, ServiceError, SetupRequest};
use crate::store::{ExportRow, Participant, Sequence, Store};

/// A short original two-hander used as the simulated production.
pub const SAMPLE_SCRIPT: &str = "\
THE LIGHTHOUSE KEEPER'S DAUGHTER

A kitchen in a lighthouse cottage. Night. Wind against the glass.

MARA: You came back. After eleven years, you came back on the one night the lamp is failing.
TOBIAS: I heard about Father. I took the first boat that would carry me.
MARA: The first boat. There were boats every week for eleven years.
TOBIAS: I know what you think of me.
MARA: You don't. You never stayed long enough to find out.
GRETA: (entering with a lantern) The mechanism has seized again. Someone has to climb.
MARA: I'll go. I always go.
TOBIAS: Let me. I still remember the gears.
GRETA: He remembers the gears. Does he remember the funeral he missed?
MARA: Greta, enough.
TOBIAS: She's right. I missed it. I missed all of it.
GRETA: Then climb, if you want to be useful. The ships won't wait for apologies.
MARA: (alone, to the window) Eleven years of keeping the light, and I still don't know who I was keeping it for.
";

const FILLER: [&str; 180] = [
    "the", "a", "and", "to", "of", "in", "that", "it", "was", "for", "on", "with", "as", "at", "this", "but",
    "from", "by", "not", "all", "there", "when", "so", "then", "into", "out", "up", "over", "again", "still",
    "lamp", "light", "sea", "wind", "glass", "stairs", "tower", "boat", "harbor", "rope", "kitchen", "table",
    "letter", "door", "window", "night", "morning", "storm", "salt", "rain", "gears", "lantern", "brother",
    "sister", "father", "house", "island", "shore", "waves", "rocks", "coat", "cup", "bread", "fire", "clock",
    "years", "days", "hours", "moment", "silence", "voice", "hands", "eyes", "face", "name", "promise", "secret",
    "funeral", "ship", "map", "key", "chair", "floor", "roof", "path", "cliff", "gull", "tide", "fog", "dark",
    "walked", "climbed", "waited", "watched", "held", "opened", "closed", "carried", "turned", "listened",
    "answered", "asked", "kept", "left", "stayed", "returned", "looked", "heard", "said", "knew", "wrote",
    "read", "counted", "fixed", "broke", "lit", "burned", "poured", "sat", "stood", "ran", "pulled", "pushed",
    "cold", "old", "quiet", "heavy", "small", "long", "narrow", "wet", "bright", "empty", "late", "early",
    "slow", "sharp", "thin", "loud", "steady", "grey", "white", "black", "broken", "careful", "strange",
    "every", "another", "nothing", "something", "always", "never", "once", "almost", "only", "even", "perhaps",
    "maybe", "because", "before", "after", "while", "until", "without", "against", "behind", "between",
    "under", "above", "near", "far", "inside", "outside", "tonight", "today", "tomorrow", "yesterday", "corner", "blanket", "engine",
];

const FIRST_PERSON: [&str; 6] = ["i", "me", "my", "myself", "we", "our"];
const INTROSPECTIVE: [&str; 7] = ["think", "feel", "believe", "wonder", "remember", "realize", "imagine"];
const POSITIVE: [&str; 10] = ["happy", "love", "calm", "proud", "grateful", "warm", "relief", "trust", "brave", "free"];
const NEGATIVE: [&str; 10] = ["sad", "angry", "fear", "guilt", "shame", "lonely", "grief", "hurt", "worry", "bitter"];

/// Per-word probabilities and shape parameters of the synthetic diary text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextRates {
    pub first_person: f64,
    pub introspective: f64,
    pub positive: f64,
    pub negative: f64,
    /// Inclusive sentence-count range.
    pub sentences: (usize, usize),
    /// Inclusive words-per-sentence range.
    pub sentence_words: (usize, usize),
    /// How many filler words are in play; larger means more lexical variety.
    pub vocabulary: usize,
}

impl TextRates {
    pub fn unassisted() -> Self {
        Self {
            first_person: 0.06,
            introspective: 0.02,
            positive: 0.015,
            negative: 0.015,
            sentences: (7, 13),
            sentence_words: (8, 14),
            vocabulary: 110,
        }
    }

    pub fn ai() -> Self {
        Self {
            first_person: 0.09,
            introspective: 0.03,
            positive: 0.02,
            negative: 0.03,
            sentences: (6, 11),
            sentence_words: (8, 14),
            vocabulary: 180,
        }
    }
}

/// Builds one diary entry from `rates`.
pub fn generate_text(rates: &TextRates, rng: &mut impl Rng) -> String {
    let n_sent = rng.random_range(rates.sentences.0..=rates.sentences.1);
    let vocab = rates.vocabulary.clamp(1, FILLER.len());
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for s in 0..n_sent {
        let n_words = rng.random_range(rates.sentence_words.0..=rates.sentence_words.1);
        let words: Vec<&str> = (0..n_words)
            .map(|_| {
                let u: f64 = rng.random();
                let mut edge = rates.first_person;
                if u < edge {
                    return FIRST_PERSON[rng.random_range(0..FIRST_PERSON.len())];
                }
                edge += rates.introspective;
                if u < edge {
                    return INTROSPECTIVE[rng.random_range(0..INTROSPECTIVE.len())];
                }
                edge += rates.positive;
                if u < edge {
                    return POSITIVE[rng.random_range(0..POSITIVE.len())];
                }
                edge += rates.negative;
                if u < edge {
                    return NEGATIVE[rng.random_range(0..NEGATIVE.len())];
                }
                FILLER[rng.random_range(0..vocab)]
            })
            .collect();
        let mut sentence = words.join(" ");
        if let Some(first) = sentence.get(..1) {
            sentence = first.to_uppercase() + &sentence[1..];
        }
        sentence.push('.');
        current.push(sentence);
        if current.len() == 4 || s + 1 == n_sent {
            paragraphs.push(current.join(" "));
            current.clear();
        }
    }
    paragraphs.join("\n\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub participants: usize,
    pub seed: u64,
    pub day1: NaiveDate,
    pub unassisted: TextRates,
    pub ai: TextRates,
    /// Probability that an AI session's chosen card is edited.
    pub edit_rate: f64,
    /// Probability that an AI session uses one of the cards at all.
    pub selection_rate: f64,
}

impl SimulationConfig {
    pub fn new(participants: usize, seed: u64) -> Self {
        Self {
            participants,
            seed,
            day1: NaiveDate::from_ymd_opt(2025, 3, 3).expect("valid date"),
            unassisted: TextRates::unassisted(),
            ai: TextRates::ai(),
            edit_rate: 0.164,
            selection_rate: 0.95,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error("need at least 2 participants, got {0}")]
    TooFewParticipants(usize),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub participants: Vec<Participant>,
    pub rows: Vec<ExportRow>,
    pub survey: Vec<SurveyRow>,
}

/// Participants alternate sequences starting with Early-AI.
pub fn sequence_for(index: usize) -> Sequence {
    if index % 2 == 0 {
        Sequence::EarlyAi
    } else {
        Sequence::LateAi
    }
}

fn evening_of(date: NaiveDate) -> Timestamp {
    let dt = date.and_hms_opt(20, 0, 0).expect("valid time").and_utc();
    Timestamp(dt.timestamp_millis())
}

/// Runs the protocol for every participant against `store`.
pub fn run_simulation(cfg: &SimulationConfig, store: Arc<Store>) -> Result<SimulationOutput, SimulationError> {
    if cfg.participants < 2 {
        return Err(SimulationError::TooFewParticipants(cfg.participants));
    }
    let clock = Arc::new(ManualClock::new(evening_of(cfg.day1)));
    let svc = Service::new(
        store.clone(),
        Gateway::mock(),
        GatewaySettings::mock(cfg.seed),
        clock.clone(),
        Arc::new(SeededIds::new(cfg.seed)),
    );
    let script = svc.ingest_script(&DocumentUpload {
        bytes: SAMPLE_SCRIPT.as_bytes().to_vec(),
        declared_format: DocumentFormat::PlainText,
        title: "The Lighthouse Keeper's Daughter".into(),
    })?;
    let analysis = svc.analyze_script(&script.id)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let delay_ai = LogNormal::new((20_000f64).ln(), 0.6).expect("valid lognormal");
    let delay_un = LogNormal::new((35_000f64).ln(), 0.6).expect("valid lognormal");
    let writing = LogNormal::new((540_000f64).ln(), 0.4).expect("valid lognormal");

    let mut participants = Vec::with_capacity(cfg.participants);
    for i in 0..cfg.participants {
        let pid = ParticipantId::new(format!("P{:02}", i + 1));
        let role = &analysis.roles[i % analysis.roles.len()];
        let req = SetupRequest {
            script_id: script.id.clone(),
            role_name: role.name.clone(),
            stage: RehearsalStage::ALL[i % RehearsalStage::ALL.len()],
            d_day: cfg.day1 + Days::new(30),
            sequence: sequence_for(i),
            day1: cfg.day1,
        };
        participants.push(svc.setup_participant(&pid, &req)?);
        let total = participants[i].schedule.total_days();
        for d in 0..total {
            let date = cfg.day1 + Days::new(u64::from(d));
            clock.set(Timestamp(evening_of(date).0 + rng.random_range(0..3_600_000)));
            let opened = svc.open_session(&pid, date)?.log;
            let ai = opened.condition == Condition::AiAssisted;
            let mut delay = if ai { delay_ai.sample(&mut rng) } else { delay_un.sample(&mut rng) };
            // Rare long pauses, the kind winsorization exists for.
            if rng.random_bool(0.01) {
                delay *= 20.0;
            }
            clock.advance(delay.round() as i64);
            svc.keystroke(&opened.session_id, None)?;
            clock.advance(writing.sample(&mut rng).round() as i64);

            let rates = if ai { &cfg.ai } else { &cfg.unassisted };
            let text = generate_text(rates, &mut rng);
            let mut req = SaveRequest {
                text,
                ..Default::default()
            };
            if let Some(qs) = &opened.questions_presented {
                if rng.random_bool(cfg.selection_rate) {
                    let idx = rng.random_range(0..qs.cards.len());
                    req.selected_index = Some(idx as u8);
                    if rng.random_bool(cfg.edit_rate) {
                        let card = &qs.cards[idx].text;
                        req.question_text = Some(format!("{} What changed since then?", card.trim_end()));
                    }
                }
            }
            svc.save_entry(&opened.session_id, req)?;
        }
    }

    let survey = synthetic_survey(&participants, cfg.seed);
    Ok(SimulationOutput {
        participants,
        rows: store.export_rows(),
        survey,
    })
}

/// Survey scores on a 7-point scale: a per-person baseline, a practice gain
/// each period and an extra lift in whichever period had AI questions.
pub fn synthetic_survey(participants: &[Participant], seed: u64) -> Vec<SurveyRow> {
    const MEASURES: [(&str, f64); 3] = [("character_understanding", 0.3), ("identification", 0.2), ("transportation", 0.4)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let base = Normal::new(4.4, 0.7).expect("valid normal");
    let noise = Normal::new(0.0, 0.35).expect("valid normal");
    let mut out = Vec::new();
    for p in participants {
        for (measure, lift) in MEASURES {
            let t1: f64 = base.sample(&mut rng);
            let (l2, l3) = match p.schedule.sequence {
                Sequence::EarlyAi => (lift, 0.0),
                Sequence::LateAi => (0.0, lift),
            };
            let t2 = t1 + 0.3 + l2 + noise.sample(&mut rng);
            let t3 = t2 + 0.2 + l3 + noise.sample(&mut rng);
            let round = |x: f64| (x.clamp(1.0, 7.0) * 100.0).round() / 100.0;
            out.push(SurveyRow {
                participant_id: p.participant_id.to_string(),
                sequence: p.schedule.sequence,
                measure: measure.to_string(),
                t1: round(t1),
                t2: round(t2),
                t3: round(t3),
            });
        }
    }
    out
}
