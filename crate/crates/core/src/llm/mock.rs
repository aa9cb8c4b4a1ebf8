//! Deterministic offline model.
//!
//! Output is a pure function of the bundle and the seed, built only from
//! integer hashing and fixed word banks, so it is identical on every platform.

use std::collections::HashSet;

use sha2::{Digest, Sha256};

use super::prompts::{PromptBundle, Purpose};
use crate::model::{normalize_question_text, RehearsalStage};

/// First 8 bytes of SHA-256 over the length-prefixed parts, big-endian.
pub fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_be_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    let mut buf = [0u8; 8];
    buf.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(buf)
}

pub fn mock_complete(bundle: &PromptBundle, seed: u64) -> String {
    match bundle.purpose {
        Purpose::CharacterExtraction => mock_characters(&bundle.user_text, seed),
        Purpose::QuestionGeneration => mock_questions(&bundle.user_text, seed),
        Purpose::ProfileGeneration => mock_profile(&bundle.user_text, seed),
        Purpose::ScriptSummary => mock_summary(&bundle.user_text, seed),
    }
}

fn field<'a>(text: &'a str, label: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.strip_prefix(label))
        .map(str::trim)
}

/// Everything after the first line equal to `header`.
fn section_after<'a>(text: &'a str, header: &str) -> &'a str {
    match text.find(header) {
        Some(pos) => text[pos + header.len()..].trim_start_matches(['\n', '\r']),
        None => "",
    }
}

// ---------------------------------------------------------------------------
// Characters

const NAME_POOL: [&str; 12] = [
    "Mara", "Tobias", "Inés", "Calloway", "Yun-seo", "Petra", "Abel", "Rosalind", "Dmitri", "Wren", "Oyelaran",
    "Greta",
];

const TRAITS: [&str; 8] = [
    "guarded",
    "restless",
    "loyal but proud",
    "quick-tempered",
    "watchful",
    "hopeful",
    "wry",
    "grief-stricken",
];

/// Speaker cues such as `HAMLET.` or `LADY MACBETH:` at the start of a line.
fn speaker_cues(script: &str) -> Vec<(String, usize)> {
    let mut order: Vec<(String, usize)> = Vec::new();
    for line in script.lines() {
        let line = line.trim_start();
        let Some(end) = line.find(['.', ':']) else { continue };
        let cue = &line[..end];
        let letters = cue.chars().filter(|c| c.is_alphabetic()).count();
        let valid = letters >= 2
            && cue.chars().count() <= 30
            && cue
                .chars()
                .all(|c| c.is_uppercase() || c == ' ' || c == '\'' || c == '-')
            && !matches!(cue, "ACT" | "SCENE" | "END" | "THE END");
        if !valid {
            continue;
        }
        match order.iter_mut().find(|(n, _)| n == cue) {
            Some((_, count)) => *count += 1,
            None => order.push((cue.to_string(), 1)),
        }
    }
    order
}

fn mock_characters(user_text: &str, seed: u64) -> String {
    let script = section_after(user_text, "Full script text:");
    let h = stable_hash(&[b"characters", user_text.as_bytes(), &seed.to_be_bytes()]);
    let mut cast = speaker_cues(script);
    cast.truncate(10);
    let target = 3 + (h % 8) as usize;
    let wanted = if cast.is_empty() { target } else { 3 };
    let mut pool_idx = (h >> 8) as usize;
    while cast.len() < wanted {
        let name = NAME_POOL[pool_idx % NAME_POOL.len()].to_string();
        pool_idx += 1;
        if !cast.iter().any(|(n, _)| *n == name) {
            cast.push((name, 0));
        }
    }
    let mut out = String::new();
    for (i, (name, lines)) in cast.iter().enumerate() {
        let trait_word = TRAITS[((h >> 16) as usize + i) % TRAITS.len()];
        let presence = match lines {
            0 => "mentioned but rarely seen on stage".to_string(),
            1 => "speaks once".to_string(),
            n => format!("speaks {n} times"),
        };
        out.push_str(&format!(
            "- **Name:** {name}\n  - **Profile:** A {trait_word} figure who {presence}; their choices press on the central conflict.\n"
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Questions

/// Lowercase question stems; `{role}` is replaced by the role name.
fn stage_bank(stage: RehearsalStage) -> &'static [&'static str; 10] {
    match stage {
        RehearsalStage::ScriptAnalysis => &[
            "as {role}, what fact about your past do you never say out loud?",
            "as {role}, what do you want most at the moment the play begins?",
            "as {role}, who taught you the rule you live by, and how?",
            "as {role}, what happened the day before your first scene?",
            "as {role}, which relationship do you depend on, and why?",
            "as {role}, what circumstance forces your hand in the opening scene?",
            "as {role}, what do you believe you are owed by the people around you?",
            "as {role}, where did you grow up, and what do you remember of it?",
            "as {role}, what secret are you carrying into the first act?",
            "as {role}, what would you lose if your plan fails?",
        ],
        RehearsalStage::StandingReading => &[
            "as {role}, what is your first reaction when you are challenged in this scene?",
            "as {role}, how do you justify the choice you make at the scene's turning point?",
            "as {role}, who in the room do you watch most closely, and why?",
            "as {role}, what do you hide from your scene partner while you speak?",
            "as {role}, what makes you stay in the room when you could leave?",
            "as {role}, how does your attitude change when someone you trust enters?",
            "as {role}, what do you need from the other person before the scene ends?",
            "as {role}, what reaction do you suppress during this scene?",
            "as {role}, how would you explain your harshest line to a friend?",
            "as {role}, when do you feel most exposed in this scene?",
        ],
        RehearsalStage::SceneDetail => &[
            "as {role}, what small habit do you repeat when you feel anxious?",
            "as {role}, which word do you always say a little differently, and why?",
            "as {role}, what do your hands do when you are lying?",
            "as {role}, how does your voice change when you speak to someone you fear?",
            "as {role}, what emotion arrives first before you speak your key line?",
            "as {role}, what do you notice first when you walk into a room?",
            "as {role}, how do you sit when you think no one is looking?",
            "as {role}, what shift in mood do you feel just before your exit?",
            "as {role}, what do you wear that says something about you?",
            "as {role}, which of your habits would your closest friend tease you about?",
        ],
        RehearsalStage::RunThrough => &[
            "as {role}, what feeling do you carry from one scene into the next?",
            "as {role}, which moment of your backstory feels least convincing to you now?",
            "as {role}, where does your emotional line break, and what bridges it?",
            "as {role}, what do you remember of the previous scene when the next one begins?",
            "as {role}, which of your decisions still surprises you, and how do you explain it?",
            "as {role}, how tired are you by the final scene, and why?",
            "as {role}, what stays constant in you from the first scene to the last?",
            "as {role}, which offstage event do you need to believe in to make your entrance true?",
            "as {role}, where do your actions contradict what you say, and why?",
            "as {role}, what do you want at the end that you did not want at the start?",
        ],
        RehearsalStage::PerformanceOther => &[
            "as {role}, what do you feel in the moment before your first entrance?",
            "as {role}, how has your view of the other characters shifted since the first scene?",
            "as {role}, what memory from before the play still influences your choices?",
            "as {role}, how would you respond if your closest ally suddenly betrayed you?",
            "as {role}, what do you do differently tonight than on the first night?",
            "as {role}, which relationship changes you the most over the evening?",
            "as {role}, what would you say to the audience if you could step out of the play?",
            "as {role}, what action of yours do you regret, and what would you do instead?",
            "as {role}, what emotion do you leave the stage with?",
            "as {role}, what part of your history do you now understand better?",
        ],
    }
}

const FRAMES: [&str; 12] = [
    "",
    "today, ",
    "right now, ",
    "thinking about your next rehearsal, ",
    "before your next entrance, ",
    "looking back on this week, ",
    "with the performance date approaching, ",
    "in tonight's entry, ",
    "if you slow down for a moment, ",
    "after today's work, ",
    "picturing the empty stage, ",
    "as the run continues, ",
];

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn stage_from_label(label: &str) -> RehearsalStage {
    RehearsalStage::ALL
        .into_iter()
        .find(|s| s.label() == label)
        .unwrap_or(RehearsalStage::PerformanceOther)
}

/// The `j`-th candidate question for a role at a stage.
pub fn candidate_question(stage: RehearsalStage, role: &str, j: usize) -> String {
    let bank = stage_bank(stage);
    let stem = bank[j % bank.len()].replace("{role}", role);
    let cycle = j / bank.len();
    let frame = FRAMES[cycle % FRAMES.len()];
    let mut q = capitalize(&format!("{frame}{stem}"));
    let lap = cycle / FRAMES.len();
    if lap > 0 {
        // Candidate space exhausted; mark later laps so texts stay unique.
        q.pop();
        q.push_str(&format!(" (take {})?", lap + 1));
    }
    q
}

fn mock_questions(user_text: &str, seed: u64) -> String {
    let role = field(user_text, "Role Name:").unwrap_or("you");
    let stage = stage_from_label(field(user_text, "Current Rehearsal Stage:").unwrap_or(""));
    let history_block = section_after(user_text, "Previously asked questions (do not repeat):");
    let history: HashSet<String> = history_block
        .lines()
        .filter_map(|l| l.strip_prefix("- "))
        .map(normalize_question_text)
        .collect();
    let start = stable_hash(&[b"questions", &seed.to_be_bytes(), stage.as_str().as_bytes(), role.as_bytes()]);
    let bank = stage_bank(stage).len() * FRAMES.len();
    let mut j = (start % bank as u64) as usize + 3 * history.len();
    let mut picked: Vec<String> = Vec::with_capacity(3);
    while picked.len() < 3 {
        let q = candidate_question(stage, role, j);
        let norm = normalize_question_text(&q);
        if !history.contains(&norm) && !picked.iter().any(|p| normalize_question_text(p) == norm) {
            picked.push(q);
        }
        j += 1;
    }
    picked.join("\n")
}

// ---------------------------------------------------------------------------
// Paragraphs

fn mock_profile(user_text: &str, seed: u64) -> String {
    let role = field(user_text, "Role Name:").unwrap_or("The character");
    let info = field(user_text, "Role Information:").unwrap_or("");
    let h = stable_hash(&[b"profile", user_text.as_bytes(), &seed.to_be_bytes()]);
    let want = ["to be seen", "safety", "the truth", "forgiveness", "control", "a way out"][(h % 6) as usize];
    let trait_word = TRAITS[((h >> 8) % TRAITS.len() as u64) as usize];
    format!(
        "{role} is {trait_word} and wants {want}. {info} Under pressure {role} keeps their own counsel, and the people closest to them pay the price for it."
    )
    .replace("  ", " ")
}

fn mock_summary(user_text: &str, seed: u64) -> String {
    let title = field(user_text, "Script title:").unwrap_or("The play");
    let script = section_after(user_text, "Full script text:");
    let words = script.split_whitespace().count();
    let cast = speaker_cues(script);
    let names: Vec<&str> = cast.iter().take(3).map(|(n, _)| n.as_str()).collect();
    let h = stable_hash(&[b"summary", user_text.as_bytes(), &seed.to_be_bytes()]);
    let setting = ["a coastal town", "a crowded city flat", "a country house", "a theatre at night"][(h % 4) as usize];
    let who = if names.is_empty() {
        "a small group of people".to_string()
    } else {
        names.join(", ")
    };
    format!(
        "{title} follows {who} in {setting}. Across roughly {words} words of text, old loyalties are tested and a long-kept secret surfaces. The central conflict sharpens as each character is forced to choose between what they owe others and what they want for themselves."
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_character_list;
    use crate::llm::parse::parse_question_response;
    use crate::model::{ScriptId, Timestamp};

    fn bundle(purpose: Purpose, user_text: &str) -> PromptBundle {
        PromptBundle {
            system_text: "sys".into(),
            user_text: user_text.into(),
            purpose,
        }
    }

    fn question_user(history: &[String]) -> String {
        let hist = if history.is_empty() {
            "none".to_string()
        } else {
            history.iter().map(|h| format!("- {h}")).collect::<Vec<_>>().join("\n")
        };
        format!(
            "Role Name: Nora\nRole Information: x\nCurrent Rehearsal Stage: Scene Detail Work\n\nPreviously asked questions (do not repeat):\n{hist}"
        )
    }

    #[test]
    fn deterministic_per_seed() {
        let b = bundle(Purpose::QuestionGeneration, &question_user(&[]));
        assert_eq!(mock_complete(&b, 1), mock_complete(&b, 1));
        let e = bundle(Purpose::ScriptSummary, "Script title: X\n\nFull script text:\nA. hi");
        assert_eq!(mock_complete(&e, 1), mock_complete(&e, 1));
    }

    #[test]
    fn stable_hash_is_frozen() {
        // Guards cross-platform determinism of every mock output.
        assert_eq!(stable_hash(&[b"abc"]), stable_hash(&[b"abc"]));
        assert_ne!(stable_hash(&[b"ab", b"c"]), stable_hash(&[b"a", b"bc"]));
    }

    #[test]
    fn history_shifts_questions() {
        let first = mock_complete(&bundle(Purpose::QuestionGeneration, &question_user(&[])), 4);
        let hist: Vec<String> = first.lines().map(normalize_question_text).collect();
        let second = mock_complete(&bundle(Purpose::QuestionGeneration, &question_user(&hist)), 4);
        let a: HashSet<_> = first.lines().map(normalize_question_text).collect();
        let b: HashSet<_> = second.lines().map(normalize_question_text).collect();
        assert!(a.is_disjoint(&b));
        let unrelated: Vec<String> = vec!["x".into(), "y".into(), "z".into()];
        let third = mock_complete(&bundle(Purpose::QuestionGeneration, &question_user(&unrelated)), 4);
        let c: HashSet<_> = third.lines().map(normalize_question_text).collect();
        assert!(a.is_disjoint(&c));
    }

    #[test]
    fn questions_parse_and_address_the_actor() {
        for stage in RehearsalStage::ALL {
            let user = question_user(&[]).replace("Scene Detail Work", stage.label());
            let raw = mock_complete(&bundle(Purpose::QuestionGeneration, &user), 11);
            let qs = parse_question_response(&raw, "fp", Timestamp(0)).unwrap();
            for c in &qs.cards {
                assert!(c.text.contains("Nora"));
                assert!(c.text.contains("you"));
            }
        }
    }

    #[test]
    fn candidates_stay_unique_past_the_bank() {
        let n = 10 * FRAMES.len() * 2 + 5;
        let all: HashSet<String> = (0..n)
            .map(|j| normalize_question_text(&candidate_question(RehearsalStage::RunThrough, "A", j)))
            .collect();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn characters_from_cues_parse_cleanly() {
        let user = "Script title: T\n\nFull script text:\nACT I\nHAMLET. To be.\nOPHÉLIE. My lord.\nHAMLET. Get thee.\nLADY MACBETH: Out.\n";
        let raw = mock_complete(&bundle(Purpose::CharacterExtraction, user), 1);
        let parsed = parse_character_list(&raw, &ScriptId::new("s")).unwrap();
        assert!(parsed.warnings.is_empty());
        let names: Vec<_> = parsed.roles.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["HAMLET", "OPHÉLIE", "LADY MACBETH"]);
        assert!(parsed.roles[0].description.contains("speaks 2 times"));
    }

    #[test]
    fn characters_without_cues_are_synthesized() {
        let raw = mock_complete(
            &bundle(Purpose::CharacterExtraction, "Full script text:\nno cues here at all"),
            3,
        );
        let parsed = parse_character_list(&raw, &ScriptId::new("s")).unwrap();
        assert!((3..=10).contains(&parsed.roles.len()));
        assert!(parsed.warnings.is_empty());
    }
}
