//! Prompt templates and rendering.
//!
//! Templates are plain text with `{{name}}` placeholders. The defaults are
//! compiled in; a directory with same-named files overrides them (used for
//! localized prompt sets).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::Script;
use crate::questions::GenerationContext;

/// Scripts longer than this are truncated before being sent to the model.
pub const LONG_SCRIPT_CHARS: usize = 200_000;
/// How much of a long script is kept.
pub const TRUNCATED_SCRIPT_CHARS: usize = 100_000;
pub const TRUNCATION_NOTICE: &str =
    "[Note: the script was truncated to its first 100,000 characters for length.]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    CharacterExtraction,
    ProfileGeneration,
    QuestionGeneration,
    ScriptSummary,
}

impl Purpose {
    pub const ALL: [Purpose; 4] = [
        Purpose::CharacterExtraction,
        Purpose::ProfileGeneration,
        Purpose::QuestionGeneration,
        Purpose::ScriptSummary,
    ];

    fn file_stem(self) -> &'static str {
        match self {
            Purpose::CharacterExtraction => "character_extraction",
            Purpose::ProfileGeneration => "profile_generation",
            Purpose::QuestionGeneration => "question_generation",
            Purpose::ScriptSummary => "script_summary",
        }
    }

    fn user_placeholders(self) -> &'static [&'static str] {
        match self {
            Purpose::CharacterExtraction | Purpose::ScriptSummary => &["title", "script_text"],
            Purpose::ProfileGeneration => &["role_name", "role_description", "summary"],
            Purpose::QuestionGeneration => &[
                "role_name",
                "role_description",
                "stage",
                "d_day",
                "profile",
                "summary",
                "history",
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub purpose: Purpose,
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("template {file} uses unknown placeholder {{{{{name}}}}}")]
    UnknownPlaceholder { file: String, name: String },
    #[error("template {0} is empty")]
    Empty(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TemplatePair {
    system: String,
    user: String,
}

/// The four system/user template pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    extraction: TemplatePair,
    profile: TemplatePair,
    questions: TemplatePair,
    summary: TemplatePair,
}

impl Default for TemplateSet {
    fn default() -> Self {
        fn pair(system: &str, user: &str) -> TemplatePair {
            TemplatePair {
                system: system.trim_end().to_string(),
                user: user.trim_end().to_string(),
            }
        }
        Self {
            extraction: pair(
                include_str!("../../templates/character_extraction.system.txt"),
                include_str!("../../templates/character_extraction.user.txt"),
            ),
            profile: pair(
                include_str!("../../templates/profile_generation.system.txt"),
                include_str!("../../templates/profile_generation.user.txt"),
            ),
            questions: pair(
                include_str!("../../templates/question_generation.system.txt"),
                include_str!("../../templates/question_generation.user.txt"),
            ),
            summary: pair(
                include_str!("../../templates/script_summary.system.txt"),
                include_str!("../../templates/script_summary.user.txt"),
            ),
        }
    }
}

fn placeholders(template: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                out.insert(after[..end].trim().to_string());
                rest = &after[end + 2..];
            }
            None => break,
        }
    }
    out
}

/// Substitutes `{{key}}` occurrences. Unknown keys are left untouched.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else {
            out.push_str(&rest[start..]);
            return out;
        };
        let key = after[..end].trim();
        match values.iter().find(|(k, _)| *k == key) {
            Some((_, v)) => out.push_str(v),
            None => out.push_str(&rest[start..start + 2 + end + 2]),
        }
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    out
}

impl TemplateSet {
    fn pair(&self, purpose: Purpose) -> &TemplatePair {
        match purpose {
            Purpose::CharacterExtraction => &self.extraction,
            Purpose::ProfileGeneration => &self.profile,
            Purpose::QuestionGeneration => &self.questions,
            Purpose::ScriptSummary => &self.summary,
        }
    }

    fn pair_mut(&mut self, purpose: Purpose) -> &mut TemplatePair {
        match purpose {
            Purpose::CharacterExtraction => &mut self.extraction,
            Purpose::ProfileGeneration => &mut self.profile,
            Purpose::QuestionGeneration => &mut self.questions,
            Purpose::ScriptSummary => &mut self.summary,
        }
    }

    /// Loads `<purpose>.system.txt` / `<purpose>.user.txt` overrides from
    /// `dir`; missing files keep the built-in text.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = TemplateSet::default();
        for purpose in Purpose::ALL {
            for (suffix, allowed) in [("system", &[][..]), ("user", purpose.user_placeholders())] {
                let file = format!("{}.{suffix}.txt", purpose.file_stem());
                let path = dir.join(&file);
                if !path.exists() {
                    continue;
                }
                let text = std::fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let text = text.trim_end().to_string();
                if text.is_empty() {
                    return Err(TemplateError::Empty(file));
                }
                if let Some(name) = placeholders(&text).into_iter().find(|p| !allowed.contains(&p.as_str())) {
                    return Err(TemplateError::UnknownPlaceholder { file, name });
                }
                let pair = set.pair_mut(purpose);
                if suffix == "system" {
                    pair.system = text;
                } else {
                    pair.user = text;
                }
            }
        }
        Ok(set)
    }

    pub fn system_text(&self, purpose: Purpose) -> &str {
        &self.pair(purpose).system
    }

    fn script_bundle(&self, purpose: Purpose, script: &Script) -> PromptBundle {
        let text = bounded_script_text(&script.raw_text);
        let pair = self.pair(purpose);
        PromptBundle {
            system_text: pair.system.clone(),
            user_text: fill(&pair.user, &[("title", &script.title), ("script_text", &text)]),
            purpose,
        }
    }

    pub fn render_character_extraction_prompt(&self, script: &Script) -> PromptBundle {
        self.script_bundle(Purpose::CharacterExtraction, script)
    }

    pub fn render_summary_prompt(&self, script: &Script) -> PromptBundle {
        self.script_bundle(Purpose::ScriptSummary, script)
    }

    pub fn render_profile_prompt(&self, role_name: &str, role_description: &str, summary: &str) -> PromptBundle {
        let pair = self.pair(Purpose::ProfileGeneration);
        PromptBundle {
            system_text: pair.system.clone(),
            user_text: fill(
                &pair.user,
                &[
                    ("role_name", role_name),
                    ("role_description", role_description),
                    ("summary", summary),
                ],
            ),
            purpose: Purpose::ProfileGeneration,
        }
    }

    pub fn render_question_prompt(&self, ctx: &GenerationContext) -> PromptBundle {
        let pair = self.pair(Purpose::QuestionGeneration);
        let history = render_history(&ctx.history);
        let d_day = ctx.d_day.format("%Y-%m-%d").to_string();
        PromptBundle {
            system_text: pair.system.clone(),
            user_text: fill(
                &pair.user,
                &[
                    ("role_name", &ctx.role.name),
                    ("role_description", &ctx.role.description),
                    ("stage", ctx.stage.label()),
                    ("d_day", &d_day),
                    ("profile", &ctx.profile.profile_text),
                    ("summary", &ctx.script_summary),
                    ("history", &history),
                ],
            ),
            purpose: Purpose::QuestionGeneration,
        }
    }
}

pub fn render_history(history: &[String]) -> String {
    if history.is_empty() {
        "none".to_string()
    } else {
        history
            .iter()
            .map(|q| format!("- {q}"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Applies the long-script policy: over [`LONG_SCRIPT_CHARS`] characters, keep
/// the first [`TRUNCATED_SCRIPT_CHARS`] and append a notice.
pub fn bounded_script_text(text: &str) -> String {
    if text.chars().count() <= LONG_SCRIPT_CHARS {
        return text.to_string();
    }
    let cut: String = text.chars().take(TRUNCATED_SCRIPT_CHARS).collect();
    format!("{cut}\n\n{TRUNCATION_NOTICE}")
}

pub fn render_character_extraction_prompt(script: &Script) -> PromptBundle {
    TemplateSet::default().render_character_extraction_prompt(script)
}

pub fn render_question_prompt(ctx: &GenerationContext) -> PromptBundle {
    TemplateSet::default().render_question_prompt(ctx)
}
