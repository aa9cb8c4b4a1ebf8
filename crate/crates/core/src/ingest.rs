//! Script ingestion and character-list parsing.

use std::fmt;
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::{RoleProfile, Script, ScriptId, Timestamp};

pub const MAX_ROLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentFormat {
    PlainText,
    Pdf,
}

impl DocumentFormat {
    /// Maps a MIME type (parameters ignored) to a format.
    pub fn from_mime(mime: &str) -> Result<Self, IngestError> {
        let essence = mime.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
        match essence.as_str() {
            "text/plain" => Ok(DocumentFormat::PlainText),
            "application/pdf" => Ok(DocumentFormat::Pdf),
            _ => Err(IngestError::UnsupportedFormat(essence)),
        }
    }

    pub fn from_filename(name: &str) -> Result<Self, IngestError> {
        let ext = name.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("txt") | Some("text") => Ok(DocumentFormat::PlainText),
            Some("pdf") => Ok(DocumentFormat::Pdf),
            _ => Err(IngestError::UnsupportedFormat(name.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DocumentUpload {
    pub bytes: Vec<u8>,
    pub declared_format: DocumentFormat,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("unsupported document format: {0}")]
    UnsupportedFormat(String),
    #[error("text extraction failed: {0}")]
    ExtractionFailed(String),
    #[error("document is empty after extraction")]
    EmptyAfterExtraction,
    #[error("upload is empty")]
    EmptyUpload,
}

/// Turns document bytes into UTF-8 text.
pub trait TextExtractor: Send + Sync {
    fn extract(&self, bytes: &[u8]) -> Result<String, String>;
}

impl<F> TextExtractor for F
where
    F: Fn(&[u8]) -> Result<String, String> + Send + Sync,
{
    fn extract(&self, bytes: &[u8]) -> Result<String, String> {
        self(bytes)
    }
}

/// Extractor that pipes the document through an external program
/// (e.g. `pdftotext - -`): bytes on stdin, text on stdout.
#[derive(Debug, Clone)]
pub struct CommandExtractor {
    program: String,
    args: Vec<String>,
}

impl CommandExtractor {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }

    /// Parses a whitespace-separated command line.
    pub fn from_command_line(cmd: &str) -> Option<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(Self::new(program, parts.collect()))
    }
}

impl TextExtractor for CommandExtractor {
    fn extract(&self, bytes: &[u8]) -> Result<String, String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| format!("{}: {e}", self.program))?;
        let mut stdin = child.stdin.take().ok_or("stdin unavailable")?;
        let payload = bytes.to_vec();
        // Feed stdin from a separate thread so a chatty child cannot deadlock us.
        let writer = std::thread::spawn(move || stdin.write_all(&payload));
        let out = child.wait_with_output().map_err(|e| e.to_string())?;
        let _ = writer.join();
        if !out.status.success() {
            let err = String::from_utf8_lossy(&out.stderr);
            return Err(format!("{} exited with {}: {}", self.program, out.status, err.trim()));
        }
        String::from_utf8(out.stdout).map_err(|e| format!("extractor produced invalid UTF-8: {e}"))
    }
}

/// Extractor used when none is configured; always fails.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoExtractor;

impl TextExtractor for NoExtractor {
    fn extract(&self, _bytes: &[u8]) -> Result<String, String> {
        Err("no PDF text extractor configured".to_string())
    }
}

/// Normalizes line endings to `\n`, strips trailing whitespace on every line,
/// collapses runs of 3+ newlines to one blank line, and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    let unified = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut out = String::with_capacity(unified.len());
    let mut blank_run = 0usize;
    for line in unified.split('\n') {
        let line = line.trim_end();
        if line.is_empty() {
            blank_run += 1;
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
            if blank_run > 0 {
                out.push('\n');
            }
        }
        blank_run = 0;
        out.push_str(line);
    }
    out
}

pub fn ingest_document(
    doc: &DocumentUpload,
    extractor: &dyn TextExtractor,
    id: ScriptId,
    now: Timestamp,
) -> Result<Script, IngestError> {
    if doc.bytes.is_empty() {
        return Err(IngestError::EmptyUpload);
    }
    let text = match doc.declared_format {
        DocumentFormat::PlainText => String::from_utf8_lossy(&doc.bytes).into_owned(),
        DocumentFormat::Pdf => extractor
            .extract(&doc.bytes)
            .map_err(IngestError::ExtractionFailed)?,
    };
    let raw_text = normalize_whitespace(&text);
    if raw_text.is_empty() {
        return Err(IngestError::EmptyAfterExtraction);
    }
    Ok(Script {
        id,
        title: doc.title.trim().to_string(),
        raw_text,
        summary: None,
        ingested_at: now,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    TruncatedAtTen { dropped: usize },
    MissingProfile(String),
    OrphanProfile(usize),
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::TruncatedAtTen { dropped } => {
                write!(f, "TruncatedAtTen: {dropped} further characters dropped")
            }
            ParseWarning::MissingProfile(name) => write!(f, "MissingProfile: '{name}' has no Profile line"),
            ParseWarning::OrphanProfile(line) => write!(f, "OrphanProfile: line {line} has no preceding Name"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterListParse {
    pub roles: Vec<RoleProfile>,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed response: {0}")]
pub struct MalformedResponse(pub String);

enum Labeled<'a> {
    Name(&'a str),
    Profile(&'a str),
    Other(&'a str),
}

fn label_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^(name|profile)[*_]*\s*:\s*(.*)$").expect("valid regex"))
}

fn classify(line: &str) -> Labeled<'_> {
    let stripped = strip_list_marker(line.trim());
    // Bold markers may wrap the label, the colon, or the value.
    let unbolded = stripped.trim_start_matches(['*', '_']).trim_start();
    if let Some(caps) = label_regex().captures(unbolded) {
        let label = caps.get(1).map_or("", |m| m.as_str());
        let rest = caps.get(2).map_or("", |m| m.as_str());
        let value = rest
            .trim()
            .trim_start_matches(['*', '_'])
            .trim_end_matches(['*', '_'])
            .trim();
        if label.eq_ignore_ascii_case("name") {
            Labeled::Name(value)
        } else {
            Labeled::Profile(value)
        }
    } else {
        Labeled::Other(stripped)
    }
}

/// Removes one leading bullet (`-`, `*`, `•`, `+`) or ordinal (`1.`, `2)`).
pub fn strip_list_marker(line: &str) -> &str {
    let t = line.trim_start();
    for bullet in ["- ", "* ", "• ", "+ ", "– "] {
        if let Some(rest) = t.strip_prefix(bullet) {
            return rest.trim_start();
        }
    }
    let digits = t.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 && digits <= 3 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return r.trim_start();
        }
    }
    t
}

/// Pairs each `Name:` line with the `Profile:` line that follows it.
pub fn parse_character_list(
    raw: &str,
    script_id: &ScriptId,
) -> Result<CharacterListParse, MalformedResponse> {
    let mut roles: Vec<RoleProfile> = Vec::new();
    let mut warnings = Vec::new();
    let mut pending: Option<String> = None;
    let mut current_profile: Option<usize> = None;

    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match classify(line) {
            Labeled::Name(name) => {
                if let Some(prev) = pending.take() {
                    warnings.push(ParseWarning::MissingProfile(prev));
                }
                current_profile = None;
                if !name.is_empty() {
                    pending = Some(name.to_string());
                }
            }
            Labeled::Profile(text) => match pending.take() {
                Some(name) => {
                    roles.push(RoleProfile {
                        script_id: script_id.clone(),
                        name,
                        description: text.to_string(),
                    });
                    current_profile = Some(roles.len() - 1);
                }
                None => warnings.push(ParseWarning::OrphanProfile(lineno + 1)),
            },
            Labeled::Other(text) => {
                // Continuation of a wrapped profile description.
                if let Some(idx) = current_profile {
                    let desc = &mut roles[idx].description;
                    if !desc.is_empty() {
                        desc.push(' ');
                    }
                    desc.push_str(text.trim());
                }
            }
        }
    }
    if let Some(prev) = pending.take() {
        warnings.push(ParseWarning::MissingProfile(prev));
    }
    if roles.is_empty() {
        return Err(MalformedResponse("no Name/Profile pair found".into()));
    }
    if roles.len() > MAX_ROLES {
        let dropped = roles.len() - MAX_ROLES;
        roles.truncate(MAX_ROLES);
        warnings.push(ParseWarning::TruncatedAtTen { dropped });
    }
    Ok(CharacterListParse { roles, warnings })
}

/// Renders roles in the extraction prompt's output schema.
pub fn render_character_list(roles: &[RoleProfile]) -> String {
    let mut out = String::new();
    for role in roles {
        out.push_str(&format!("- **Name:** {}\n  - **Profile:** {}\n", role.name, role.description));
    }
    out
}
