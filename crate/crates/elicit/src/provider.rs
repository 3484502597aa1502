//! Model back ends.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ElicitError;

/// What a prompt is asking about. Only simulated providers read this; it
/// is not part of the cache key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowQuery {
    pub variable: String,
    pub parents: Vec<(String, usize)>,
    /// The queried state for single-state prompts.
    pub state: Option<usize>,
    pub want: Answer,
    /// True when the prompt carries the real variable names and descriptions.
    pub informed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Probability,
    Tuple,
    StateName,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProviderRequest {
    pub prompt: String,
    pub temperature: f64,
    pub want_token_scores: bool,
    pub query: Option<RowQuery>,
}

impl ProviderRequest {
    pub fn new(prompt: impl Into<String>, temperature: f64) -> Result<Self, ElicitError> {
        if temperature.is_nan() || temperature < 0.0 {
            return Err(ElicitError::Format(format!("temperature {temperature} is negative")));
        }
        Ok(ProviderRequest {
            prompt: prompt.into(),
            temperature,
            want_token_scores: false,
            query: None,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    /// Candidate strings for the first answer token with their probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_scores: Option<Vec<(String, f64)>>,
}

pub trait Provider: Send + Sync {
    /// Stable identifier; part of every cache key.
    fn id(&self) -> String;

    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ElicitError>;
}

/// Token bucket: `rate` requests per second, bursts up to `burst`.
#[derive(Debug)]
pub struct RateLimiter {
    rate: f64,
    burst: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(rate: f64, burst: usize) -> Self {
        let burst = burst.max(1) as f64;
        RateLimiter {
            rate,
            burst,
            state: Mutex::new((burst, Instant::now())),
        }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().expect("rate limiter lock");
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.rate).min(self.burst);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Settings for an OpenAI-style chat-completions endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    pub top_logprobs: u32,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            url: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_attempts: 4,
            backoff_ms: 1000,
            timeout_secs: 120,
            top_logprobs: 20,
        }
    }
}

pub struct HttpProvider {
    cfg: HttpConfig,
    key: String,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(cfg: HttpConfig) -> Result<Self, ElicitError> {
        let key = std::env::var(&cfg.api_key_env).map_err(|_| ElicitError::MissingApiKey(cfg.api_key_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ElicitError::Transport(e.to_string()))?;
        Ok(HttpProvider { cfg, key, client })
    }

    fn body(&self, req: &ProviderRequest) -> Value {
        let mut body = json!({
            "model": self.cfg.model,
            "messages": [{ "role": "user", "content": req.prompt }],
            "temperature": req.temperature,
        });
        if req.want_token_scores {
            body["logprobs"] = json!(true);
            body["top_logprobs"] = json!(self.cfg.top_logprobs);
        }
        body
    }

    fn decode(v: &Value) -> Result<ProviderResponse, ElicitError> {
        let choice = &v["choices"][0];
        let text = choice["message"]["content"]
            .as_str()
            .ok_or_else(|| ElicitError::Transport("reply has no message content".into()))?
            .to_string();
        let token_scores = choice["logprobs"]["content"][0]["top_logprobs"]
            .as_array()
            .map(|cands| {
                cands
                    .iter()
                    .filter_map(|c| Some((c["token"].as_str()?.to_string(), c["logprob"].as_f64()?.exp())))
                    .collect()
            });
        Ok(ProviderResponse { text, token_scores })
    }
}

impl Provider for HttpProvider {
    fn id(&self) -> String {
        format!("http:{}:{}", self.cfg.url, self.cfg.model)
    }

    /// Retries connection failures, 429 and 5xx with exponential backoff.
    fn complete(&self, req: &ProviderRequest) -> Result<ProviderResponse, ElicitError> {
        let body = self.body(req);
        let mut last = String::new();
        for attempt in 0..self.cfg.max_attempts.max(1) {
            if attempt > 0 {
                let delay = self.cfg.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            let sent = self
                .client
                .post(&self.cfg.url)
                .bearer_auth(&self.key)
                .json(&body)
                .send();
            let resp = match sent {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    log::warn!("request failed (attempt {}): {last}", attempt + 1);
                    continue;
                }
            };
            let status = resp.status();
            if status.as_u16() == 429 || status.is_server_error() {
                last = format!("HTTP {status}");
                log::warn!("provider returned {status} (attempt {})", attempt + 1);
                continue;
            }
            if !status.is_success() {
                return Err(ElicitError::Transport(format!(
                    "HTTP {status}: {}",
                    resp.text().unwrap_or_default()
                )));
            }
            let v: Value = resp.json().map_err(|e| ElicitError::Transport(e.to_string()))?;
            return Self::decode(&v);
        }
        Err(ElicitError::Transport(last))
    }
}
