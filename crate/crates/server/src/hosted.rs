//! Provider for OpenAI-compatible chat-completion endpoints.

use std::time::Duration;

use serde_json::{json, Value};

use actorsnote_core::llm::{PromptBundle, Provider, ProviderConfig, ProviderFault};

#[derive(Debug, Clone)]
pub struct HostedProvider {
    base_url: String,
    api_key: String,
}

impl HostedProvider {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
        }
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url)
    }
}

fn request_body(bundle: &PromptBundle, cfg: &ProviderConfig) -> Value {
    json!({
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "messages": [
            {"role": "system", "content": bundle.system_text},
            {"role": "user", "content": bundle.user_text},
        ],
    })
}

/// Pulls `choices[0].message.content` out of a completion payload.
pub fn completion_text(payload: &Value) -> Option<&str> {
    payload.get("choices")?.get(0)?.get("message")?.get("content")?.as_str()
}

impl Provider for HostedProvider {
    fn send(&self, bundle: &PromptBundle, cfg: &ProviderConfig) -> Result<String, ProviderFault> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let sent = agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(request_body(bundle, cfg));
        let mut resp = match sent {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(ProviderFault::Timeout),
            Err(ureq::Error::Io(e)) if e.kind() == std::io::ErrorKind::TimedOut => return Err(ProviderFault::Timeout),
            Err(e) => return Err(ProviderFault::Fatal(e.to_string())),
        };
        let status = resp.status().as_u16();
        if status == 429 {
            return Err(ProviderFault::RateLimited);
        }
        if status == 408 || status == 504 {
            return Err(ProviderFault::Timeout);
        }
        let body = match resp.body_mut().read_to_string() {
            Ok(b) => b,
            Err(ureq::Error::Timeout(_)) => return Err(ProviderFault::Timeout),
            Err(e) => return Err(ProviderFault::Fatal(e.to_string())),
        };
        if !(200..300).contains(&status) {
            let snippet: String = body.chars().take(200).collect();
            return Err(ProviderFault::Fatal(format!("HTTP {status}: {snippet}")));
        }
        let payload: Value =
            serde_json::from_str(&body).map_err(|e| ProviderFault::Fatal(format!("unreadable completion payload: {e}")))?;
        completion_text(&payload)
            .map(str::to_string)
            .ok_or_else(|| ProviderFault::Fatal("completion payload has no choices[0].message.content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_first_choice() {
        let v = json!({"choices": [{"message": {"role": "assistant", "content": "hi"}}]});
        assert_eq!(completion_text(&v), Some("hi"));
        assert_eq!(completion_text(&json!({"choices": []})), None);
    }

    #[test]
    fn trailing_slash_is_trimmed() {
        let p = HostedProvider::new("http://x/v1/", "k");
        assert_eq!(p.endpoint(), "http://x/v1/chat/completions");
    }
}
