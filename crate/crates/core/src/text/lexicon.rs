use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// A normalized word list, optionally with polarity (sentiment lexicons).
///
/// File format: UTF-8, one entry per line, optional `word<TAB>pos|neg`;
/// lines starting with `#` are comments.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Lexicon {
    pub name: String,
    pub entries: BTreeSet<String>,
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("missing lexicon file {0}")]
    MissingLexicon(PathBuf),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{name}:{line}: unknown polarity '{value}' (expected pos or neg)")]
    BadPolarity { name: String, line: usize, value: String },
}

pub fn normalize_entry(word: &str) -> String {
    word.trim().to_lowercase()
}

impl Lexicon {
    pub fn from_words<'a>(name: &str, words: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            name: name.to_string(),
            entries: words
                .into_iter()
                .map(normalize_entry)
                .filter(|w| !w.is_empty())
                .collect(),
            ..Default::default()
        }
    }

    pub fn parse(name: &str, text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon {
            name: name.to_string(),
            ..Default::default()
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (word, polarity) = match line.split_once('\t') {
                Some((w, p)) => (w, Some(p.trim())),
                None => (line, None),
            };
            let word = normalize_entry(word);
            if word.is_empty() {
                continue;
            }
            match polarity {
                None | Some("") => {}
                Some("pos") => {
                    lex.positive.insert(word.clone());
                }
                Some("neg") => {
                    lex.negative.insert(word.clone());
                }
                Some(other) => {
                    return Err(LexiconError::BadPolarity {
                        name: name.to_string(),
                        line: i + 1,
                        value: other.to_string(),
                    })
                }
            }
            lex.entries.insert(word);
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        if !path.exists() {
            return Err(LexiconError::MissingLexicon(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(&name, &text)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_person() -> Self {
        Self::parse("first_person", include_str!("../../lexicons/first_person.txt")).expect("built-in lexicon")
    }

    pub fn introspective() -> Self {
        Self::parse("introspective", include_str!("../../lexicons/introspective.txt")).expect("built-in lexicon")
    }

    pub fn second_person() -> Self {
        Self::parse("second_person", include_str!("../../lexicons/second_person.txt")).expect("built-in lexicon")
    }

    pub fn sentiment() -> Self {
        Self::parse("sentiment", include_str!("../../lexicons/sentiment.txt")).expect("built-in lexicon")
    }
}

/// The three lexicons the linguistic measures need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconSet {
    pub first_person: Lexicon,
    pub introspective: Lexicon,
    pub sentiment: Lexicon,
}

impl Default for LexiconSet {
    fn default() -> Self {
        Self {
            first_person: Lexicon::first_person(),
            introspective: Lexicon::introspective(),
            sentiment: Lexicon::sentiment(),
        }
    }
}

impl LexiconSet {
    pub const FILES: [&'static str; 3] = ["first_person.txt", "introspective.txt", "sentiment.txt"];

    /// Loads `first_person.txt`, `introspective.txt` and `sentiment.txt`.
    pub fn load_dir(dir: &Path) -> Result<Self, LexiconError> {
        Ok(Self {
            first_person: Lexicon::load(&dir.join(Self::FILES[0]))?,
            introspective: Lexicon::load(&dir.join(Self::FILES[1]))?,
            sentiment: Lexicon::load(&dir.join(Self::FILES[2]))?,
        })
    }
}
