//! Completion endpoint clients.
//!
//! [`CompletionClient`] is the seam between the pipeline and whatever produces
//! text: the HTTP client below speaks the common `chat/completions` and
//! `completions` JSON shapes, and the harness provides a deterministic mock.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Environment variable holding the bearer token for the completion endpoint.
pub const API_KEY_ENV: &str = "CANDREFINE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub stop: Vec<String>,
    pub seed: Option<u64>,
    /// Position of this request within its pool (0 for greedy).
    pub sample_index: u32,
    /// Pool item this request belongs to. Not sent over the wire.
    #[serde(skip)]
    pub item_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub logprob: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ClientError {
    pub message: String,
    pub retryable: bool,
}

impl ClientError {
    pub fn transient(message: impl Into<String>) -> Self {
        ClientError {
            message: message.into(),
            retryable: true,
        }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        ClientError {
            message: message.into(),
            retryable: false,
        }
    }
}

impl fmt::Display for ClientError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ClientError {}

pub trait CompletionClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, ClientError>;

    /// Extra text folded into cache keys so that differently configured
    /// clients serving the same model id never share cache entries.
    fn cache_namespace(&self) -> String {
        String::new()
    }
}

impl<C: CompletionClient + ?Sized> CompletionClient for &C {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, ClientError> {
        (**self).complete(request)
    }

    fn cache_namespace(&self) -> String {
        (**self).cache_namespace()
    }
}

/// Wire shape spoken by the endpoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    /// `POST {base}/chat/completions` with a single user message.
    #[default]
    ChatCompletions,
    /// `POST {base}/completions` with a raw prompt.
    Completions,
}

impl Provider {
    pub fn path(self) -> &'static str {
        match self {
            Provider::ChatCompletions => "chat/completions",
            Provider::Completions => "completions",
        }
    }

    pub fn request_body(self, req: &CompletionRequest) -> Value {
        let mut body = match self {
            Provider::ChatCompletions => json!({
                "model": req.model,
                "messages": [{ "role": "user", "content": req.prompt }],
            }),
            Provider::Completions => json!({
                "model": req.model,
                "prompt": req.prompt,
            }),
        };
        let obj = body.as_object_mut().expect("object literal");
        obj.insert("temperature".into(), json!(req.temperature));
        obj.insert("max_tokens".into(), json!(req.max_new_tokens));
        obj.insert("n".into(), json!(1));
        if !req.stop.is_empty() {
            obj.insert("stop".into(), json!(req.stop));
        }
        if let Some(seed) = req.seed {
            obj.insert("seed".into(), json!(seed));
        }
        body
    }

    pub fn parse_response(self, body: &Value) -> Result<Completion, ClientError> {
        let choice = body
            .get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| ClientError::fatal("response has no choices"))?;
        let text = match self {
            Provider::ChatCompletions => choice.pointer("/message/content"),
            Provider::Completions => choice.get("text"),
        };
        let text = match text {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Null) | None => String::new(),
            Some(other) => return Err(ClientError::fatal(format!("unexpected text field {other}"))),
        };
        Ok(Completion {
            text,
            logprob: sum_logprobs(choice),
        })
    }
}

fn sum_logprobs(choice: &Value) -> Option<f64> {
    let lp = choice.get("logprobs")?;
    if let Some(tokens) = lp.get("token_logprobs").and_then(Value::as_array) {
        return Some(tokens.iter().filter_map(Value::as_f64).sum());
    }
    let content = lp.get("content")?.as_array()?;
    Some(
        content
            .iter()
            .filter_map(|t| t.get("logprob").and_then(Value::as_f64))
            .sum(),
    )
}

/// Blocking HTTP client for OpenAI-compatible endpoints.
pub struct HttpCompletionClient {
    agent: ureq::Agent,
    base_url: String,
    provider: Provider,
    api_key: Option<String>,
}

impl HttpCompletionClient {
    pub fn new(base_url: impl Into<String>, provider: Provider) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(120))
            .build();
        HttpCompletionClient {
            agent,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            provider,
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    fn url(&self) -> String {
        format!("{}/{}", self.base_url, self.provider.path())
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, ClientError> {
        let mut call = self.agent.post(&self.url());
        if let Some(key) = &self.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        let response = call.send_json(self.provider.request_body(request));
        match response {
            Ok(resp) => {
                let body: Value = resp
                    .into_json()
                    .map_err(|e| ClientError::transient(format!("reading response: {e}")))?;
                self.provider.parse_response(&body)
            }
            Err(ureq::Error::Status(code, resp)) => {
                let detail = resp.into_string().unwrap_or_default();
                let message = format!("HTTP {code}: {}", detail.trim());
                if code == 429 || code >= 500 {
                    Err(ClientError::transient(message))
                } else {
                    Err(ClientError::fatal(message))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(ClientError::transient(t.to_string())),
        }
    }
}

/// Exponential backoff schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_delay_ms: u64,
    pub max_delay_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            initial_delay_ms: 500,
            max_delay_ms: 16_000,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn immediate(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            initial_delay_ms: 0,
            max_delay_ms: 0,
            multiplier: 1.0,
        }
    }

    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = self.multiplier.powi(retry.saturating_sub(1) as i32);
        let ms = (self.initial_delay_ms as f64 * factor).min(self.max_delay_ms as f64);
        Duration::from_millis(ms as u64)
    }

    /// Runs `op` until it succeeds, fails fatally, or attempts run out.
    /// Returns the per-attempt error log on failure.
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, ClientError>,
    ) -> Result<T, Vec<String>> {
        let mut log = Vec::new();
        let attempts = self.max_attempts.max(1);
        for attempt in 1..=attempts {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) => {
                    log::warn!("attempt {attempt}/{attempts} failed: {e}");
                    log.push(format!("attempt {attempt}: {e}"));
                    if !e.retryable || attempt == attempts {
                        break;
                    }
                    let delay = self.delay(attempt);
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                }
            }
        }
        Err(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    fn request() -> CompletionRequest {
        CompletionRequest {
            model: "m".into(),
            prompt: "p".into(),
            temperature: 0.7,
            max_new_tokens: 16,
            stop: vec!["\n".into()],
            seed: None,
            sample_index: 1,
            item_id: Some("0".into()),
        }
    }

    #[test]
    fn chat_body_shape() {
        let body = Provider::ChatCompletions.request_body(&request());
        assert_eq!(body["messages"][0]["content"], "p");
        assert_eq!(body["max_tokens"], 16);
        assert_eq!(body["stop"][0], "\n");
        assert!(body.get("seed").is_none());
    }

    #[test]
    fn parses_both_shapes() {
        let chat = json!({"choices": [{"message": {"content": "hi"}}]});
        assert_eq!(Provider::ChatCompletions.parse_response(&chat).unwrap().text, "hi");
        let plain = json!({"choices": [{"text": "yo", "logprobs": {"token_logprobs": [-0.5, -0.25]}}]});
        let c = Provider::Completions.parse_response(&plain).unwrap();
        assert_eq!(c.text, "yo");
        assert_eq!(c.logprob, Some(-0.75));
        assert!(Provider::Completions.parse_response(&json!({})).is_err());
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(1), Duration::from_millis(500));
        assert_eq!(p.delay(2), Duration::from_millis(1000));
        assert_eq!(p.delay(10), Duration::from_millis(16_000));
    }

    #[test]
    fn retries_transient_then_gives_up() {
        let calls = Cell::new(0);
        let out: Result<(), _> = RetryPolicy::immediate(5).run(|| {
            calls.set(calls.get() + 1);
            Err(ClientError::transient("boom"))
        });
        assert_eq!(calls.get(), 5);
        assert_eq!(out.unwrap_err().len(), 5);
    }

    #[test]
    fn fatal_errors_stop_immediately() {
        let calls = Cell::new(0);
        let out: Result<(), _> = RetryPolicy::immediate(5).run(|| {
            calls.set(calls.get() + 1);
            Err(ClientError::fatal("bad request"))
        });
        assert_eq!(calls.get(), 1);
        assert!(out.is_err());
    }

    #[test]
    fn succeeds_after_transient_failures() {
        let calls = Cell::new(0);
        let out = RetryPolicy::immediate(5).run(|| {
            calls.set(calls.get() + 1);
            if calls.get() < 3 {
                Err(ClientError::transient("flaky"))
            } else {
                Ok(42)
            }
        });
        assert_eq!(out.unwrap(), 42);
    }
}
