use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub source_length_chars: usize,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("tokenizer adapter failed: {0}")]
pub struct AdapterFailed(pub String);

/// Splits text into `(surface, optional POS tag)` pairs.
pub trait Tokenizer: Send + Sync {
    fn split(&self, text: &str) -> Result<Vec<Token>, AdapterFailed>;
}

/// Unicode word segmentation, lowercased, punctuation dropped, no tags.
#[derive(Debug, Default, Clone, Copy)]
pub struct DefaultTokenizer;

impl Tokenizer for DefaultTokenizer {
    fn split(&self, text: &str) -> Result<Vec<Token>, AdapterFailed> {
        Ok(default_words(text)
            .map(|surface| Token { surface, pos: None })
            .collect())
    }
}

pub fn default_words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.unicode_words().map(str::to_lowercase)
}

/// Word count under the default tokenizer.
pub fn word_count(text: &str) -> usize {
    text.unicode_words().count()
}

/// External analyzer: text on stdin, one token per output line
/// (`surface` or `surface<TAB>POS`). Blank lines and `EOS` are skipped.
#[derive(Debug, Clone)]
pub struct CommandTokenizer {
    program: String,
    args: Vec<String>,
}

impl CommandTokenizer {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }
}

/// Parses adapter output lines.
pub fn parse_adapter_output(out: &str) -> Vec<Token> {
    out.lines()
        .filter(|l| !l.trim().is_empty() && l.trim() != "EOS")
        .map(|l| match l.split_once('\t') {
            Some((surface, pos)) => Token {
                surface: surface.trim().to_string(),
                pos: Some(pos.trim().to_string()).filter(|p| !p.is_empty()),
            },
            None => Token {
                surface: l.trim().to_string(),
                pos: None,
            },
        })
        .filter(|t| !t.surface.is_empty())
        .collect()
}

impl Tokenizer for CommandTokenizer {
    fn split(&self, text: &str) -> Result<Vec<Token>, AdapterFailed> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| AdapterFailed(format!("{}: {e}", self.program)))?;
        let mut stdin = child.stdin.take().ok_or_else(|| AdapterFailed("stdin unavailable".into()))?;
        let payload = text.as_bytes().to_vec();
        let writer = std::thread::spawn(move || stdin.write_all(&payload));
        let out = child.wait_with_output().map_err(|e| AdapterFailed(e.to_string()))?;
        let _ = writer.join();
        if !out.status.success() {
            return Err(AdapterFailed(format!(
                "{} exited with {}: {}",
                self.program,
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let stdout = String::from_utf8(out.stdout).map_err(|e| AdapterFailed(e.to_string()))?;
        Ok(parse_adapter_output(&stdout))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContentClass {
    CommonNoun,
    ProperNoun,
    Verb,
    Adjective,
}

/// Maps Sejong (MeCab-ko), Universal Dependencies and Penn Treebank tags onto
/// the four content classes kept for analysis. Compound tags such as
/// `VV+EP` are classified by their first component.
pub fn content_class(tag: &str) -> Option<ContentClass> {
    let head = tag.split('+').next().unwrap_or("").trim();
    match head {
        "NNG" | "NOUN" | "NN" | "NNS" => Some(ContentClass::CommonNoun),
        "NNP" | "PROPN" | "NNPS" => Some(ContentClass::ProperNoun),
        "VV" | "VERB" | "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" => Some(ContentClass::Verb),
        "VA" | "ADJ" | "JJ" | "JJR" | "JJS" => Some(ContentClass::Adjective),
        _ => None,
    }
}

/// Tokenizes and lowercases. When the adapter supplies any POS tags, only
/// tokens in the four content classes are kept.
pub fn tokenize(text: &str, tokenizer: &dyn Tokenizer) -> Result<TokenStream, AdapterFailed> {
    let raw = tokenizer.split(text)?;
    let tagged = raw.iter().any(|t| t.pos.is_some());
    let tokens = raw
        .into_iter()
        .filter(|t| !tagged || t.pos.as_deref().and_then(content_class).is_some())
        .map(|t| Token {
            surface: t.surface.to_lowercase(),
            pos: t.pos,
        })
        .filter(|t| !t.surface.is_empty())
        .collect();
    Ok(TokenStream {
        tokens,
        source_length_chars: text.chars().count(),
    })
}
