//! Model access: prompt rendering, completion with retry, response parsing,
//! and a deterministic mock provider.

pub mod gateway;
pub mod mock;
pub mod parse;
pub mod prompts;

pub use gateway::{
    Backoff, CompletionResult, Gateway, GatewayError, GatewaySettings, MockProvider, Provider, ProviderConfig,
    ProviderFault, ProviderKind, ScriptedProvider, Sleeper,
};
pub use mock::mock_complete;
pub use parse::{parse_question_response, QuestionParseError};
pub use prompts::{
    render_character_extraction_prompt, render_question_prompt, PromptBundle, Purpose, TemplateError, TemplateSet,
};
