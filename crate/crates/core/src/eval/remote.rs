//! Adapter for OpenAI-style `/v1/completions` endpoints.

use super::backend::{Backend, BackendDescriptor, BackendError};
use serde_json::{json, Value};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32, retry_after_secs: Option<u64>) -> Duration {
        let backoff = self.base_delay.saturating_mul(1 << attempt.min(16));
        let hinted = retry_after_secs.map(Duration::from_secs).unwrap_or_default();
        backoff.max(hinted).min(self.max_delay)
    }
}

/// Environment variable holding the API key for `family`, e.g.
/// `NEGSCALE_API_KEY_GPT_NEO` for "GPT-Neo".
pub fn api_key_var(family: &str) -> String {
    let mut name = String::from("NEGSCALE_API_KEY_");
    for c in family.chars() {
        name.push(if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' });
    }
    name
}

pub struct CompletionsBackend {
    descriptor: BackendDescriptor,
    url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl CompletionsBackend {
    /// `descriptor.endpoint` is the base URL; `/v1/completions` is appended
    /// unless already present. The key is read from [`api_key_var`].
    pub fn new(descriptor: BackendDescriptor, retry: RetryPolicy) -> Result<Self, BackendError> {
        let base = descriptor
            .endpoint
            .clone()
            .ok_or_else(|| BackendError::InvalidResponse(format!("{} has no endpoint", descriptor.model_name)))?;
        let base = base.trim_end_matches('/');
        let url = if base.ends_with("/completions") {
            base.to_string()
        } else {
            format!("{base}/v1/completions")
        };
        let api_key = std::env::var(api_key_var(&descriptor.family)).ok();
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(CompletionsBackend {
            descriptor,
            url,
            api_key,
            retry,
            agent,
        })
    }

    fn post(&self, body: &Value) -> Result<Value, BackendError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let err = match self.post_once(body) {
                Ok(v) => return Ok(v),
                Err(e) => e,
            };
            let retry_after = match &err {
                BackendError::Transport { .. } => None,
                BackendError::Quota { retry_after_secs, .. } => *retry_after_secs,
                _ => return Err(err),
            };
            if attempt >= self.retry.max_attempts {
                return Err(match err {
                    BackendError::Transport { message, .. } => BackendError::Transport {
                        message,
                        attempts: attempt,
                    },
                    BackendError::Quota {
                        message,
                        retry_after_secs,
                        ..
                    } => BackendError::Quota {
                        message,
                        attempts: attempt,
                        retry_after_secs,
                    },
                    other => other,
                });
            }
            let wait = self.retry.delay(attempt - 1, retry_after);
            log::debug!("{}: {err}; retrying in {wait:?}", self.descriptor.model_name);
            std::thread::sleep(wait);
        }
    }

    fn post_once(&self, body: &Value) -> Result<Value, BackendError> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let transport = |e: ureq::Error| BackendError::Transport {
            message: e.to_string(),
            attempts: 1,
        };
        let mut resp = req.send_json(body).map_err(transport)?;
        let status = resp.status().as_u16();
        let retry_after_secs = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|s| s.trim().parse().ok());
        let text = resp.body_mut().read_to_string().map_err(transport)?;
        match status {
            200..=299 => serde_json::from_str(&text).map_err(|e| BackendError::InvalidResponse(e.to_string())),
            429 => Err(BackendError::Quota {
                message: text,
                attempts: 1,
                retry_after_secs,
            }),
            500..=599 => Err(BackendError::Transport {
                message: format!("HTTP {status}: {text}"),
                attempts: 1,
            }),
            _ => Err(BackendError::InvalidResponse(format!("HTTP {status}: {text}"))),
        }
    }
}

/// Best log-probability per label over the first position's top tokens,
/// folding surface variants such as `"A"` and `" A"`.
fn fold_label_logprobs(response: &Value, labels: [&str; 2]) -> Result<[f64; 2], BackendError> {
    let top = response
        .pointer("/choices/0/logprobs/top_logprobs/0")
        .and_then(Value::as_object)
        .ok_or_else(|| BackendError::MissingLogprobs("response has no top_logprobs".into()))?;
    let mut scores = [f64::NEG_INFINITY; 2];
    for (token, lp) in top {
        let Some(lp) = lp.as_f64() else { continue };
        for (i, label) in labels.iter().enumerate() {
            if token.trim() == *label {
                scores[i] = scores[i].max(lp);
            }
        }
    }
    if scores.iter().all(|s| s.is_infinite()) {
        return Err(BackendError::MissingLogprobs(format!(
            "neither {} nor {} among top tokens",
            labels[0], labels[1]
        )));
    }
    Ok(scores)
}

impl Backend for CompletionsBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn score_labels(&self, prompt: &str, labels: [&str; 2]) -> Result<[f64; 2], BackendError> {
        let body = json!({
            "model": self.descriptor.model_name,
            "prompt": prompt,
            "max_tokens": 1,
            "temperature": 0,
            "logprobs": 5,
        });
        fold_label_logprobs(&self.post(&body)?, labels)
    }

    fn generate(&self, prompt: &str, max_tokens: usize) -> Result<String, BackendError> {
        let body = json!({
            "model": self.descriptor.model_name,
            "prompt": prompt,
            "max_tokens": max_tokens,
            "temperature": 0,
        });
        self.post(&body)?
            .pointer("/choices/0/text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::InvalidResponse("response has no choices[0].text".into()))
    }
}
