//! Completion-style HTTP endpoint with a persistent response cache.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::prompt::DEFAULT_GENREAD_INSTRUCTION;
use crate::cache::JsonCache;
use crate::error::{Error, Result};
use crate::http::{call_with_retry, RateLimiter, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    /// Cache namespace; defaults to `base_url`.
    #[serde(default)]
    pub id: Option<String>,
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "EndpointConfig::default_parallelism")]
    pub max_parallelism: usize,
    #[serde(default)]
    pub rate_limit_per_sec: Option<f64>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "EndpointConfig::default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub stop: Vec<String>,
    /// Pay-per-token endpoints default to zero-shot prompting.
    #[serde(default)]
    pub expensive: bool,
    #[serde(default = "EndpointConfig::default_instruction")]
    pub genread_instruction: String,
    #[serde(default)]
    pub retry: RetryPolicy,
}

impl EndpointConfig {
    fn default_parallelism() -> usize {
        4
    }
    fn default_max_tokens() -> u32 {
        64
    }
    fn default_instruction() -> String {
        DEFAULT_GENREAD_INSTRUCTION.to_string()
    }

    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            id: None,
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: None,
            max_parallelism: Self::default_parallelism(),
            rate_limit_per_sec: None,
            temperature: 0.0,
            max_tokens: Self::default_max_tokens(),
            stop: Vec::new(),
            expensive: false,
            genread_instruction: Self::default_instruction(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn endpoint_id(&self) -> &str {
        self.id.as_deref().unwrap_or(&self.base_url)
    }

    /// Few-shot count used when none is given explicitly.
    pub fn default_shots(&self) -> usize {
        if self.expensive {
            0
        } else {
            15
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_url.trim().is_empty() || self.model.trim().is_empty() {
            return Err(Error::Config(
                "endpoint.base_url and endpoint.model are required".into(),
            ));
        }
        if self.max_parallelism == 0 {
            return Err(Error::Config(
                "endpoint.max_parallelism must be >= 1".into(),
            ));
        }
        if let Some(r) = self.rate_limit_per_sec {
            if !(r > 0.0) {
                return Err(Error::Config(
                    "endpoint.rate_limit_per_sec must be > 0".into(),
                ));
            }
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::Config("endpoint.temperature must be >= 0".into()));
        }
        Ok(())
    }

    fn cache_key(&self, prompt: &str) -> String {
        JsonCache::key(&[
            "completion",
            self.endpoint_id(),
            &self.model,
            prompt,
            &format!("temperature={}", self.temperature),
            &format!("max_tokens={}", self.max_tokens),
            &format!("stop={:?}", self.stop),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
    #[serde(skip)]
    pub from_cache: bool,
}

/// Anything that turns a prompt into a completion.
pub trait Completer: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<Completion>;

    /// Upper bound on concurrent `complete` calls.
    fn max_parallelism(&self) -> usize {
        1
    }
}

/// Rough token count (≈4 characters per token) for sources that do not
/// report usage.
pub fn approx_token_count(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    text: String,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

pub struct HttpCompleter {
    config: EndpointConfig,
    cache: JsonCache,
    agent: ureq::Agent,
    limiter: Option<RateLimiter>,
    network_calls: AtomicUsize,
}

impl HttpCompleter {
    pub fn new(config: EndpointConfig, cache_dir: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let limiter = config
            .rate_limit_per_sec
            .map(|r| RateLimiter::new(r, config.max_parallelism as f64));
        Ok(Self {
            config,
            cache: JsonCache::new(cache_dir),
            agent: ureq::AgentBuilder::new().build(),
            limiter,
            network_calls: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// HTTP requests issued, retries included.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::Relaxed)
    }

    fn api_key(&self) -> Result<Option<String>> {
        match &self.config.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| Error::Config(format!("environment variable {var} is not set"))),
        }
    }
}

impl Completer for HttpCompleter {
    fn complete(&self, prompt: &str) -> Result<Completion> {
        let key = self.config.cache_key(prompt);
        if let Some(mut c) = self.cache.get::<Completion>(&key) {
            c.from_cache = true;
            return Ok(c);
        }
        let url = format!("{}/completions", self.config.base_url.trim_end_matches('/'));
        let mut body = json!({
            "model": self.config.model,
            "prompt": prompt,
            "max_tokens": self.config.max_tokens,
            "temperature": self.config.temperature,
        });
        if !self.config.stop.is_empty() {
            body["stop"] = json!(self.config.stop);
        }
        let auth = self.api_key()?.map(|k| format!("Bearer {k}"));
        let start = Instant::now();
        let outcome = call_with_retry(&self.config.retry, |timeout: Duration| {
            if let Some(l) = &self.limiter {
                l.acquire();
            }
            self.network_calls.fetch_add(1, Ordering::Relaxed);
            let mut req = self.agent.post(&url).timeout(timeout);
            if let Some(a) = &auth {
                req = req.set("Authorization", a);
            }
            req.send_json(&body)
        })?;
        let latency_ms = start.elapsed().as_millis() as u64;
        if !(200..300).contains(&outcome.status) {
            return Err(Error::Protocol(format!(
                "endpoint returned HTTP {}: {}",
                outcome.status,
                outcome.body.chars().take(200).collect::<String>()
            )));
        }
        let parsed: CompletionResponse = serde_json::from_str(&outcome.body)
            .map_err(|e| Error::Protocol(format!("malformed completion response: {e}")))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Error::Protocol("completion response has no choices".into()))?
            .text;
        let (prompt_tokens, completion_tokens) = match parsed.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (approx_token_count(prompt), approx_token_count(&text)),
        };
        let completion = Completion {
            text,
            prompt_tokens,
            completion_tokens,
            latency_ms,
            from_cache: false,
        };
        self.cache.put(&key, &completion)?;
        Ok(completion)
    }

    fn max_parallelism(&self) -> usize {
        self.config.max_parallelism
    }
}
