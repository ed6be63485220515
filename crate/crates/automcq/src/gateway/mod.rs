//! Question generation through a pluggable model backend.
//!
//! [`Gateway::generate_questions`] runs the prompt, parses and validates the
//! reply, and performs at most one repair round. Every call, successful or
//! not, leaves one [`LlmExchange`] in the supplied [`ExchangeSink`].

mod mock;
mod openai;

use std::sync::{Arc, Mutex};
use std::time::Instant;

use automcq_core::{
    build_repair_prompt, build_system_prompt, build_user_prompt, parse_questions,
    validate_question, GenerationRequest, MCQuestion, MessageRole, ParseError, PromptMessage,
    QuestionId, ResponseIssue, StudentRef,
};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Semaphore;

use crate::config::{BackendConfig, BackendKind, ConfigError};

pub use mock::MockBackend;
pub use openai::OpenAiBackend;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("TIMEOUT: the backend did not answer in time")]
    Timeout,
    #[error("HTTP_ERROR: backend answered with status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("AUTH_MISSING: environment variable {var} is not set")]
    AuthMissing { var: String },
    #[error("RATE_LIMITED: backend is still rate limiting after one retry")]
    RateLimited,
    #[error("TRANSPORT_ERROR: {0}")]
    Transport(String),
    #[error("MALFORMED_RESPONSE: {0}")]
    MalformedResponse(String),
    #[error("INVALID_MESSAGES: {0}")]
    InvalidMessages(&'static str),
}

impl BackendError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Timeout => "TIMEOUT",
            Self::Http { .. } => "HTTP_ERROR",
            Self::AuthMissing { .. } => "AUTH_MISSING",
            Self::RateLimited => "RATE_LIMITED",
            Self::Transport(_) => "TRANSPORT_ERROR",
            Self::MalformedResponse(_) => "MALFORMED_RESPONSE",
            Self::InvalidMessages(_) => "INVALID_MESSAGES",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseOutcome {
    Ok,
    Repaired,
    Failed,
}

/// Audit record of one generation call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub exchange_id: String,
    pub student_ref: StudentRef,
    /// Messages of the final attempt, repair prompt included.
    pub messages: Vec<PromptMessage>,
    /// Text of the final attempt; empty when the backend never answered.
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_response: Option<String>,
    pub parse_outcome: ParseOutcome,
    pub attempts: u8,
    pub latency_ms: u64,
    /// Problems with the first reply (repaired) or the final one (failed).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<ResponseIssue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub recorded_at: DateTime<Utc>,
}

pub type SinkError = Box<dyn std::error::Error + Send + Sync>;

/// Append-only destination for exchanges.
pub trait ExchangeSink: Send + Sync {
    fn record(&self, exchange: &LlmExchange) -> Result<(), SinkError>;
}

impl ExchangeSink for Mutex<Vec<LlmExchange>> {
    fn record(&self, exchange: &LlmExchange) -> Result<(), SinkError> {
        self.lock()
            .map_err(|_| "exchange log poisoned")?
            .push(exchange.clone());
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("GENERATION_FAILED: {}", describe(.issues))]
    Failed { issues: Vec<ResponseIssue> },
    #[error("AUDIT_FAILED: could not record the exchange: {0}")]
    Audit(String),
}

fn describe(issues: &[ResponseIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("{}: {i}", i.code()))
        .collect::<Vec<_>>()
        .join("; ")
}

impl GenerationError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Backend(e) => e.code(),
            Self::Failed { .. } => "GENERATION_FAILED",
            Self::Audit(_) => "AUDIT_FAILED",
        }
    }
}

/// Successful generation: exactly the requested number of valid questions.
#[derive(Debug, Clone)]
pub struct Generated {
    pub questions: Vec<MCQuestion>,
    pub exchange: LlmExchange,
}

enum Backend {
    Mock(MockBackend),
    OpenAi(OpenAiBackend),
}

pub struct Gateway {
    config: BackendConfig,
    backend: Backend,
    admission: Arc<Semaphore>,
}

impl Gateway {
    /// The HTTP client is only built for the OpenAI-compatible backend; the
    /// mock never touches the network.
    pub fn new(config: BackendConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let backend = match config.kind {
            BackendKind::Mock => Backend::Mock(MockBackend::new(config.mock_fault)),
            BackendKind::OpenaiCompatible => Backend::OpenAi(OpenAiBackend::new(&config)?),
        };
        Ok(Self {
            admission: Arc::new(Semaphore::new(config.max_parallel)),
            config,
            backend,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// One completion round-trip, admitted through the `max_parallel` gate.
    pub async fn complete(&self, messages: &[PromptMessage]) -> Result<String, BackendError> {
        match messages.first() {
            None => return Err(BackendError::InvalidMessages("no messages")),
            Some(m) if m.role != MessageRole::System => {
                return Err(BackendError::InvalidMessages(
                    "first message must be the system prompt",
                ))
            }
            Some(_) => {}
        }
        let _permit = self
            .admission
            .acquire()
            .await
            .map_err(|_| BackendError::Transport("admission gate closed".into()))?;
        match &self.backend {
            Backend::Mock(mock) => Ok(mock.complete(messages)),
            Backend::OpenAi(client) => client.complete(messages).await,
        }
    }

    pub async fn generate_questions(
        &self,
        request: &GenerationRequest,
        sink: &dyn ExchangeSink,
    ) -> Result<Generated, GenerationError> {
        let started = Instant::now();
        let expected = request.num_questions as usize;
        let mut messages = vec![build_system_prompt(), build_user_prompt(request)];
        let mut exchange = LlmExchange {
            exchange_id: uuid::Uuid::new_v4().to_string(),
            student_ref: request.student_ref.clone(),
            messages: Vec::new(),
            raw_response: String::new(),
            first_response: None,
            parse_outcome: ParseOutcome::Failed,
            attempts: 1,
            latency_ms: 0,
            issues: Vec::new(),
            error: None,
            recorded_at: Utc::now(),
        };

        let mut result = match self.complete(&messages).await {
            Err(e) => Err(GenerationError::Backend(e)),
            Ok(first) => match evaluate(&first, expected) {
                Ok(questions) => {
                    exchange.parse_outcome = ParseOutcome::Ok;
                    exchange.raw_response = first;
                    Ok(questions)
                }
                Err(issues) => {
                    exchange.attempts = 2;
                    let repair = build_repair_prompt(&first, &issues)
                        .expect("evaluate reports at least one issue");
                    messages.push(repair);
                    exchange.first_response = Some(first);
                    exchange.issues = issues;
                    match self.complete(&messages).await {
                        Err(e) => Err(GenerationError::Backend(e)),
                        Ok(second) => {
                            let evaluated = evaluate(&second, expected);
                            exchange.raw_response = second;
                            match evaluated {
                                Ok(questions) => {
                                    exchange.parse_outcome = ParseOutcome::Repaired;
                                    Ok(questions)
                                }
                                Err(issues) => {
                                    exchange.issues = issues.clone();
                                    Err(GenerationError::Failed { issues })
                                }
                            }
                        }
                    }
                }
            },
        };

        if let Err(e) = &result {
            exchange.error = Some(e.to_string());
        }
        exchange.messages = messages;
        exchange.latency_ms = started.elapsed().as_millis() as u64;
        exchange.recorded_at = Utc::now();
        if let Err(e) = sink.record(&exchange) {
            result = Err(GenerationError::Audit(e.to_string()));
        }
        result.map(|questions| Generated {
            questions,
            exchange,
        })
    }
}

/// Parses and validates one reply. Surplus records are dropped before
/// validation; a deficit is an issue.
fn evaluate(raw: &str, expected: usize) -> Result<Vec<MCQuestion>, Vec<ResponseIssue>> {
    let parsed = parse_questions(raw, expected).map_err(|e| vec![ResponseIssue::Parse(e)])?;
    let mut issues: Vec<ResponseIssue> = parsed
        .issues
        .into_iter()
        .filter(|e| matches!(e, ParseError::CountMismatch { found, .. } if *found < expected))
        .map(ResponseIssue::Parse)
        .collect();
    let mut questions = Vec::with_capacity(expected);
    for (position, raw) in parsed.records.iter().take(expected).enumerate() {
        match validate_question(raw, QuestionId(format!("q{}", position + 1))) {
            Ok(q) => questions.push(q),
            Err(errors) => issues.extend(
                errors
                    .into_iter()
                    .map(|error| ResponseIssue::Question { position, error }),
            ),
        }
    }
    if issues.is_empty() {
        Ok(questions)
    } else {
        Err(issues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use automcq_core::{mock_generate, MockFault};

    fn request(n: u32) -> GenerationRequest {
        GenerationRequest {
            num_questions: n,
            assignment_text: "Develop Flat.java".into(),
            topics: vec!["inheritance and overriding".into()],
            language: "java".into(),
            provided_code: None,
            student_code: "public class Flat extends Building {\n  public double getTax() { return super.getTax() - 75; }\n}\n".into(),
            student_ref: "s1".into(),
        }
    }

    #[test]
    fn evaluate_truncates_surplus() {
        let text = mock_generate(&request(3));
        let qs = evaluate(&text, 2).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[1].question_id.as_str(), "q2");
    }

    #[test]
    fn evaluate_reports_deficit() {
        let text = mock_generate(&request(1));
        let issues = evaluate(&text, 2).unwrap_err();
        assert_eq!(issues[0].code(), "COUNT_MISMATCH");
    }

    async fn run(fault: MockFault) -> (Result<Generated, GenerationError>, Vec<LlmExchange>) {
        let gateway = Gateway::new(BackendConfig::mock().with_fault(fault)).unwrap();
        let sink = Mutex::new(Vec::new());
        let result = gateway.generate_questions(&request(2), &sink).await;
        (result, sink.into_inner().unwrap())
    }

    #[tokio::test]
    async fn clean_generation() {
        let (result, log) = run(MockFault::None).await;
        let generated = result.unwrap();
        assert_eq!(generated.questions.len(), 2);
        assert_eq!(generated.exchange.parse_outcome, ParseOutcome::Ok);
        assert_eq!(generated.exchange.attempts, 1);
        assert_eq!(generated.exchange.messages.len(), 2);
        assert_eq!(log, [generated.exchange]);
    }

    #[tokio::test]
    async fn truncated_first_reply_is_repaired() {
        let (result, log) = run(MockFault::Truncate).await;
        let generated = result.unwrap();
        assert_eq!(generated.exchange.parse_outcome, ParseOutcome::Repaired);
        assert_eq!(generated.exchange.attempts, 2);
        assert_eq!(generated.exchange.messages.len(), 3);
        assert_eq!(generated.exchange.issues[0].code(), "PARSE_FAILURE");
        assert_eq!(log.len(), 1);
    }

    #[tokio::test]
    async fn invalid_index_is_repaired() {
        let (result, _) = run(MockFault::InvalidIndex).await;
        let generated = result.unwrap();
        assert_eq!(generated.exchange.parse_outcome, ParseOutcome::Repaired);
        assert_eq!(
            generated.exchange.issues[0].code(),
            "CORRECT_INDEX_OUT_OF_RANGE"
        );
    }

    #[tokio::test]
    async fn surplus_needs_no_repair() {
        let (result, _) = run(MockFault::Surplus).await;
        let generated = result.unwrap();
        assert_eq!(generated.exchange.attempts, 1);
        assert_eq!(generated.questions.len(), 2);
    }

    #[tokio::test]
    async fn persistent_garbage_fails_after_one_repair() {
        let (result, log) = run(MockFault::AlwaysTruncate).await;
        let err = result.unwrap_err();
        assert_eq!(err.code(), "GENERATION_FAILED");
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].attempts, 2);
        assert_eq!(log[0].parse_outcome, ParseOutcome::Failed);
        assert!(log[0]
            .error
            .as_deref()
            .unwrap()
            .starts_with("GENERATION_FAILED"));
    }

    #[tokio::test]
    async fn complete_checks_message_order() {
        let gateway = Gateway::new(BackendConfig::mock()).unwrap();
        assert!(matches!(
            gateway.complete(&[]).await,
            Err(BackendError::InvalidMessages(_))
        ));
        assert!(matches!(
            gateway.complete(&[PromptMessage::user("hi")]).await,
            Err(BackendError::InvalidMessages(_))
        ));
    }

    struct Broken;
    impl ExchangeSink for Broken {
        fn record(&self, _: &LlmExchange) -> Result<(), SinkError> {
            Err("disk full".into())
        }
    }

    #[tokio::test]
    async fn unrecordable_exchange_fails_the_call() {
        let gateway = Gateway::new(BackendConfig::mock()).unwrap();
        let err = gateway
            .generate_questions(&request(1), &Broken)
            .await
            .unwrap_err();
        assert_eq!(err.code(), "AUDIT_FAILED");
    }
}
