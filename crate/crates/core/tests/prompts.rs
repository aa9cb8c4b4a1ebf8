//! Rendered prompts compared byte-for-byte with `fixtures/golden/`.
//! Set `UPDATE_GOLDEN=1` to rewrite the files after an intended change.

use std::path::PathBuf;

use actorsnote_core::llm::{PromptBundle, TemplateSet};
use actorsnote_core::questions::GenerationContext;
use actorsnote_core::{CharacterProfile, RehearsalStage, RoleProfile, Script, ScriptId, Timestamp};
use chrono::NaiveDate;

fn script() -> Script {
    Script {
        id: ScriptId::new("sc_golden"),
        title: "The Lighthouse".into(),
        raw_text: "MARA: The lamp is out again.\nTOBIAS: Then we wait for morning.".into(),
        summary: Some("Two keepers argue over a failing lamp.".into()),
        ingested_at: Timestamp(0),
    }
}

fn context(stage: RehearsalStage) -> GenerationContext {
    let role = RoleProfile {
        script_id: ScriptId::new("sc_golden"),
        name: "MARA".into(),
        description: "The keeper's daughter.".into(),
    };
    GenerationContext {
        script_summary: "Two keepers argue over a failing lamp.".into(),
        profile: CharacterProfile {
            role: role.clone(),
            profile_text: "Mara stays because leaving feels like betrayal.".into(),
            generated_at: Timestamp(0),
        },
        role,
        stage,
        d_day: NaiveDate::from_ymd_opt(2025, 4, 1).unwrap(),
        history: vec!["what do you owe your father?".into(), "when did you last see the mainland?".into()],
    }
}

fn check(name: &str, bundle: &PromptBundle) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden").join(format!("{name}.txt"));
    let rendered = format!("{}\n----- user -----\n{}", bundle.system_text, bundle.user_text);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &rendered).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(rendered, want, "{name} drifted from {}", path.display());
}

#[test]
fn rendered_prompts_match_golden_files() {
    let t = TemplateSet::default();
    check("character_extraction", &t.render_character_extraction_prompt(&script()));
    check("script_summary", &t.render_summary_prompt(&script()));
    check(
        "profile_generation",
        &t.render_profile_prompt("MARA", "The keeper's daughter.", "Two keepers argue over a failing lamp."),
    );
    for stage in RehearsalStage::ALL {
        check(&format!("question_generation.{}", stage.as_str()), &t.render_question_prompt(&context(stage)));
    }
}

#[test]
fn anchor_phrases_are_verbatim() {
    let t = TemplateSet::default();
    assert!(t.render_character_extraction_prompt(&script()).system_text.contains("up to 10 major characters"));
    let q = t.render_question_prompt(&context(RehearsalStage::RunThrough)).system_text;
    assert!(q.contains("Maieutic Partner"));
    assert!(q.contains("Generate exactly three questions."));
}
