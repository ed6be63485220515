//! Client for `POST {base_url}/chat/completions`.

use automcq_core::{MessageRole, PromptMessage};
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use std::time::Duration;

use super::BackendError;
use crate::config::{BackendConfig, ConfigError};

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f32>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

pub struct OpenAiBackend {
    client: reqwest::Client,
    endpoint: String,
    model: String,
    api_key_var: String,
    temperature: Option<f32>,
    rate_limit_backoff: Duration,
}

impl OpenAiBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, ConfigError> {
        let base = config
            .base_url
            .as_deref()
            .ok_or_else(|| ConfigError("openai backend requires a base URL".into()))?;
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ConfigError(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            client,
            endpoint: format!("{}/chat/completions", base.trim_end_matches('/')),
            model: config.model_name.clone(),
            api_key_var: config.api_key_source.clone(),
            temperature: config.temperature,
            rate_limit_backoff: config.rate_limit_backoff,
        })
    }

    pub async fn complete(&self, messages: &[PromptMessage]) -> Result<String, BackendError> {
        let key = std::env::var(&self.api_key_var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::AuthMissing {
                var: self.api_key_var.clone(),
            })?;
        let body = ChatRequest {
            model: &self.model,
            messages: messages
                .iter()
                .map(|m| ChatMessage {
                    role: match m.role {
                        MessageRole::System => "system",
                        MessageRole::User => "user",
                    },
                    content: &m.content,
                })
                .collect(),
            temperature: self.temperature,
        };

        let mut rate_limited_once = false;
        loop {
            let response = self
                .client
                .post(&self.endpoint)
                .bearer_auth(&key)
                .json(&body)
                .send()
                .await
                .map_err(transport_error)?;
            let status = response.status();
            if status == StatusCode::TOO_MANY_REQUESTS {
                if rate_limited_once {
                    return Err(BackendError::RateLimited);
                }
                rate_limited_once = true;
                tracing::warn!(backoff = ?self.rate_limit_backoff, "rate limited, retrying once");
                tokio::time::sleep(self.rate_limit_backoff).await;
                continue;
            }
            if !status.is_success() {
                let mut text = response.text().await.unwrap_or_default();
                if let Some((cut, _)) = text.char_indices().nth(500) {
                    text.truncate(cut);
                }
                return Err(BackendError::Http {
                    status: status.as_u16(),
                    body: text,
                });
            }
            let parsed: ChatResponse = response.json().await.map_err(|e| {
                if e.is_timeout() {
                    BackendError::Timeout
                } else {
                    BackendError::MalformedResponse(e.to_string())
                }
            })?;
            return parsed
                .choices
                .into_iter()
                .next()
                .and_then(|c| c.message.content)
                .ok_or_else(|| {
                    BackendError::MalformedResponse("no choices[0].message.content".into())
                });
        }
    }
}

fn transport_error(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::Timeout
    } else {
        BackendError::Transport(e.to_string())
    }
}
