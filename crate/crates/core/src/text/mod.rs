//! Linguistic measures over journal texts.

pub mod lexicon;
pub mod metrics;
pub mod tokenize;
pub mod winsor;

pub use lexicon::{Lexicon, LexiconError, LexiconSet};
pub use metrics::{
    compute_metrics, emotion_counts, herdan_c, self_reference, sentence_stats, EmotionCounts, MetricError,
    MetricRow, SelfReference, SentenceStats,
};
pub use tokenize::{
    content_class, tokenize, word_count, AdapterFailed, CommandTokenizer, ContentClass, DefaultTokenizer, Token,
    TokenStream, Tokenizer,
};
pub use winsor::{upper_cap, winsorize_upper, WinsorError};
