//! Provider-agnostic completion with retry.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mock::mock_complete;
use super::prompts::{PromptBundle, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Hosted,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub provider_kind: ProviderKind,
    pub model_name: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// Only used by the mock provider.
    pub seed: Option<u64>,
    pub temperature: f32,
}

impl ProviderConfig {
    pub fn mock(seed: u64) -> Self {
        Self {
            provider_kind: ProviderKind::Mock,
            model_name: "mock".into(),
            timeout_ms: 30_000,
            max_retries: 3,
            seed: Some(seed),
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.timeout_ms == 0 {
            return Err(GatewayError::InvalidConfig("timeout_ms must be positive".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(GatewayError::InvalidConfig("model_name is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub latency_ms: u64,
    pub attempts: u32,
}

/// What a provider reports for one failed attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderFault {
    Timeout,
    RateLimited,
    /// Auth, schema, or other failures that a retry will not fix.
    Fatal(String),
}

impl ProviderFault {
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderFault::Timeout | ProviderFault::RateLimited)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("provider timed out")]
    Timeout,
    #[error("provider rate limited the request")]
    RateLimited,
    #[error("provider error: {0}")]
    ProviderError(String),
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<GatewayError> },
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
}

impl From<ProviderFault> for GatewayError {
    fn from(f: ProviderFault) -> Self {
        match f {
            ProviderFault::Timeout => GatewayError::Timeout,
            ProviderFault::RateLimited => GatewayError::RateLimited,
            ProviderFault::Fatal(m) => GatewayError::ProviderError(m),
        }
    }
}

pub trait Provider: Send + Sync {
    fn send(&self, bundle: &PromptBundle, cfg: &ProviderConfig) -> Result<String, ProviderFault>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MockProvider;

impl Provider for MockProvider {
    fn send(&self, bundle: &PromptBundle, cfg: &ProviderConfig) -> Result<String, ProviderFault> {
        Ok(mock_complete(bundle, cfg.seed.unwrap_or(0)))
    }
}

/// Exponential backoff with full jitter: the wait before retry `k` (1-based)
/// is uniform in `[0, base * factor^(k-1)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub base_ms: u64,
    pub factor: u32,
    pub cap_ms: u64,
}

impl Default for Backoff {
    fn default() -> Self {
        Self {
            base_ms: 500,
            factor: 2,
            cap_ms: 30_000,
        }
    }
}

impl Backoff {
    pub fn ceiling_ms(&self, retry: u32) -> u64 {
        let exp = retry.saturating_sub(1).min(20);
        self.base_ms
            .saturating_mul(u64::from(self.factor).saturating_pow(exp))
            .min(self.cap_ms)
    }

    pub fn delay(&self, retry: u32, rng: &mut impl Rng) -> Duration {
        Duration::from_millis(rng.random_range(0..=self.ceiling_ms(retry)))
    }
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn Provider>,
    backoff: Backoff,
    sleeper: Sleeper,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway").field("backoff", &self.backoff).finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn Provider>) -> Self {
        Self {
            provider,
            backoff: Backoff::default(),
            sleeper: Arc::new(std::thread::sleep),
        }
    }

    pub fn mock() -> Self {
        Self::new(Arc::new(MockProvider))
    }

    pub fn with_backoff(mut self, backoff: Backoff) -> Self {
        self.backoff = backoff;
        self
    }

    /// Replaces the real sleep (tests pass a no-op or a recorder).
    pub fn with_sleeper(mut self, sleeper: Sleeper) -> Self {
        self.sleeper = sleeper;
        self
    }

    /// Sends the bundle, retrying transient faults up to `cfg.max_retries`
    /// times. With `max_retries == 0` a transient fault is returned as is.
    pub fn complete(&self, bundle: &PromptBundle, cfg: &ProviderConfig) -> Result<CompletionResult, GatewayError> {
        cfg.validate()?;
        let started = Instant::now();
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            match self.provider.send(bundle, cfg) {
                Ok(text) => {
                    return Ok(CompletionResult {
                        text,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempts,
                    })
                }
                Err(fault) if !fault.is_transient() => return Err(fault.into()),
                Err(fault) => {
                    if attempts > cfg.max_retries {
                        let last = GatewayError::from(fault);
                        if cfg.max_retries == 0 {
                            return Err(last);
                        }
                        return Err(GatewayError::RetriesExhausted {
                            attempts,
                            last: Box::new(last),
                        });
                    }
                    let wait = self.backoff.delay(attempts, &mut rand::rng());
                    (self.sleeper)(wait);
                }
            }
        }
    }
}

/// Per-purpose provider settings read from the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct GatewaySettings {
    pub questions: ProviderConfig,
    pub analysis: ProviderConfig,
    pub api_key: Option<String>,
    pub base_url: String,
}

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

impl GatewaySettings {
    pub fn config_for(&self, purpose: Purpose) -> &ProviderConfig {
        match purpose {
            Purpose::QuestionGeneration => &self.questions,
            _ => &self.analysis,
        }
    }

    pub fn provider_kind(&self) -> ProviderKind {
        self.questions.provider_kind
    }

    pub fn mock(seed: u64) -> Self {
        Self {
            questions: ProviderConfig {
                temperature: 0.9,
                ..ProviderConfig::mock(seed)
            },
            analysis: ProviderConfig {
                temperature: 0.2,
                ..ProviderConfig::mock(seed)
            },
            api_key: None,
            base_url: DEFAULT_BASE_URL.into(),
        }
    }

    pub fn from_env() -> Result<Self, GatewayError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Reads `GATEWAY_PROVIDER`, `GATEWAY_MODEL_QUESTIONS`,
    /// `GATEWAY_MODEL_ANALYSIS`, `GATEWAY_API_KEY`, `GATEWAY_TIMEOUT_MS`,
    /// plus the optional `GATEWAY_MAX_RETRIES`, `GATEWAY_SEED` and
    /// `GATEWAY_BASE_URL`.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, GatewayError> {
        let kind = match get("GATEWAY_PROVIDER").as_deref().map(str::trim) {
            None | Some("") | Some("mock") => ProviderKind::Mock,
            Some("hosted") | Some("openai") => ProviderKind::Hosted,
            Some(other) => return Err(GatewayError::InvalidConfig(format!("unknown GATEWAY_PROVIDER '{other}'"))),
        };
        let num = |key: &str, default: u64| -> Result<u64, GatewayError> {
            match get(key) {
                None => Ok(default),
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| GatewayError::InvalidConfig(format!("{key} must be an integer, got '{v}'"))),
            }
        };
        let timeout_ms = num("GATEWAY_TIMEOUT_MS", 30_000)?;
        let max_retries = num("GATEWAY_MAX_RETRIES", 3)? as u32;
        let seed = num("GATEWAY_SEED", 0)?;
        let api_key = get("GATEWAY_API_KEY").filter(|k| !k.trim().is_empty());
        if kind == ProviderKind::Hosted && api_key.is_none() {
            return Err(GatewayError::InvalidConfig("GATEWAY_API_KEY is required for the hosted provider".into()));
        }
        let (q_default, a_default) = match kind {
            ProviderKind::Mock => ("mock", "mock"),
            ProviderKind::Hosted => ("gpt-4o", "gpt-4o-mini"),
        };
        let make = |model: Option<String>, default: &str, temperature: f32| ProviderConfig {
            provider_kind: kind,
            model_name: model.unwrap_or_else(|| default.to_string()),
            timeout_ms,
            max_retries,
            seed: (kind == ProviderKind::Mock).then_some(seed),
            temperature,
        };
        let settings = Self {
            questions: make(get("GATEWAY_MODEL_QUESTIONS"), q_default, 0.9),
            analysis: make(get("GATEWAY_MODEL_ANALYSIS"), a_default, 0.2),
            api_key,
            base_url: get("GATEWAY_BASE_URL").unwrap_or_else(|| DEFAULT_BASE_URL.into()),
        };
        settings.questions.validate()?;
        settings.analysis.validate()?;
        Ok(settings)
    }
}

/// Provider that replays a fixed list of outcomes, then repeats the last one.
/// Used to script faults in tests and demos.
#[derive(Debug)]
pub struct ScriptedProvider {
    outcomes: Vec<Result<String, ProviderFault>>,
    calls: std::sync::atomic::AtomicUsize,
}

impl ScriptedProvider {
    pub fn new(outcomes: Vec<Result<String, ProviderFault>>) -> Self {
        assert!(!outcomes.is_empty(), "scripted provider needs at least one outcome");
        Self {
            outcomes,
            calls: Default::default(),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(std::sync::atomic::Ordering::SeqCst)
    }
}

impl Provider for ScriptedProvider {
    fn send(&self, _bundle: &PromptBundle, _cfg: &ProviderConfig) -> Result<String, ProviderFault> {
        let n = self.calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        self.outcomes[n.min(self.outcomes.len() - 1)].clone()
    }
}
