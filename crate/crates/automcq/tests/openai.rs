mod common;

use std::sync::{Arc, Mutex};
use std::time::Duration;

use automcq::config::BackendConfig;
use automcq::gateway::{BackendError, Gateway, GenerationError, LlmExchange, ParseOutcome};
use automcq_core::{build_system_prompt, mock_generate, GenerationRequest, PromptMessage};
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Clone)]
enum Reply {
    Status(u16, &'static str),
    Content(String),
    Raw(&'static str),
    Slow(Duration),
}

#[derive(Clone, Default)]
struct Stub {
    script: Arc<Mutex<Vec<Reply>>>,
    seen: Arc<Mutex<Vec<(HeaderMap, Value)>>>,
}

async fn chat(
    State(stub): State<Stub>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> axum::response::Response {
    stub.seen.lock().unwrap().push((headers, body));
    let reply = {
        let mut script = stub.script.lock().unwrap();
        if script.len() > 1 {
            script.remove(0)
        } else {
            script[0].clone()
        }
    };
    match reply {
        Reply::Status(code, body) => (StatusCode::from_u16(code).unwrap(), body).into_response(),
        Reply::Content(text) => Json(json!({
            "choices": [{ "message": { "role": "assistant", "content": text } }]
        }))
        .into_response(),
        Reply::Raw(body) => {
            (StatusCode::OK, [("content-type", "application/json")], body).into_response()
        }
        Reply::Slow(d) => {
            tokio::time::sleep(d).await;
            Json(json!({ "choices": [] })).into_response()
        }
    }
}

async fn start(script: Vec<Reply>) -> (String, Stub) {
    let stub = Stub {
        script: Arc::new(Mutex::new(script)),
        ..Stub::default()
    };
    let app = Router::new()
        .route("/v1/chat/completions", post(chat))
        .with_state(stub.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), stub)
}

const KEY_VAR: &str = "AUTOMCQ_TEST_OPENAI_KEY";

fn config(base: &str) -> BackendConfig {
    // Every test reads the same variable with the same value.
    unsafe { std::env::set_var(KEY_VAR, "sk-test") };
    let mut c = BackendConfig::openai(base);
    c.api_key_source = KEY_VAR.into();
    c.model_name = "test-model".into();
    c.rate_limit_backoff = Duration::from_millis(10);
    c.timeout = Duration::from_secs(5);
    c
}

fn messages() -> Vec<PromptMessage> {
    vec![build_system_prompt(), PromptMessage::user("hello")]
}

#[tokio::test]
async fn sends_chat_request_and_reads_content() {
    let (base, stub) = start(vec![Reply::Content("[]".into())]).await;
    let mut c = config(&base);
    c.temperature = Some(0.2);
    let gateway = Gateway::new(c).unwrap();
    assert_eq!(gateway.complete(&messages()).await.unwrap(), "[]");
    let seen = stub.seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    let (headers, body) = &seen[0];
    assert_eq!(headers["authorization"], "Bearer sk-test");
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(
        body["messages"][0]["content"],
        build_system_prompt().content
    );
    assert_eq!(body["messages"][1]["role"], "user");
    assert!((body["temperature"].as_f64().unwrap() - 0.2).abs() < 1e-6);
}

#[tokio::test]
async fn one_retry_after_429() {
    let (base, stub) = start(vec![
        Reply::Status(429, "slow down"),
        Reply::Content("ok".into()),
    ])
    .await;
    let gateway = Gateway::new(config(&base)).unwrap();
    assert_eq!(gateway.complete(&messages()).await.unwrap(), "ok");
    assert_eq!(stub.seen.lock().unwrap().len(), 2);
}

#[tokio::test]
async fn persistent_429_is_rate_limited() {
    let (base, stub) = start(vec![Reply::Status(429, "slow down")]).await;
    let gateway = Gateway::new(config(&base)).unwrap();
    assert_eq!(
        gateway.complete(&messages()).await,
        Err(BackendError::RateLimited)
    );
    assert_eq!(stub.seen.lock().unwrap().len(), 2);
}

#[tokio::test]
async fn non_success_is_http_error() {
    let (base, _) = start(vec![Reply::Status(500, "boom")]).await;
    let gateway = Gateway::new(config(&base)).unwrap();
    match gateway.complete(&messages()).await {
        Err(BackendError::Http { status, body }) => {
            assert_eq!(status, 500);
            assert_eq!(body, "boom");
        }
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn missing_key_fails_before_any_request() {
    let (base, stub) = start(vec![Reply::Content("[]".into())]).await;
    let mut c = config(&base);
    c.api_key_source = "AUTOMCQ_TEST_KEY_THAT_IS_NEVER_SET".into();
    let gateway = Gateway::new(c).unwrap();
    let err = gateway.complete(&messages()).await.unwrap_err();
    assert_eq!(err.code(), "AUTH_MISSING");
    assert!(err
        .to_string()
        .contains("AUTOMCQ_TEST_KEY_THAT_IS_NEVER_SET"));
    assert!(stub.seen.lock().unwrap().is_empty());
}

#[tokio::test]
async fn malformed_and_empty_bodies() {
    for reply in [Reply::Raw("not json"), Reply::Raw(r#"{"choices": []}"#)] {
        let (base, _) = start(vec![reply]).await;
        let gateway = Gateway::new(config(&base)).unwrap();
        let err = gateway.complete(&messages()).await.unwrap_err();
        assert_eq!(err.code(), "MALFORMED_RESPONSE");
    }
}

#[tokio::test]
async fn slow_backend_times_out() {
    let (base, _) = start(vec![Reply::Slow(Duration::from_secs(3))]).await;
    let mut c = config(&base);
    c.timeout = Duration::from_millis(200);
    let gateway = Gateway::new(c).unwrap();
    assert_eq!(
        gateway.complete(&messages()).await,
        Err(BackendError::Timeout)
    );
}

#[tokio::test]
async fn unreachable_backend_is_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let gateway = Gateway::new(config(&format!("http://{addr}/v1"))).unwrap();
    let err = gateway.complete(&messages()).await.unwrap_err();
    assert_eq!(err.code(), "TRANSPORT_ERROR");
}

fn request() -> GenerationRequest {
    GenerationRequest {
        num_questions: 2,
        assignment_text: common::ASSIGNMENT.into(),
        topics: vec!["inheritance and overriding".into()],
        language: "java".into(),
        provided_code: Some(common::BUILDING.into()),
        student_code: common::FLAT.into(),
        student_ref: "s".into(),
    }
}

#[tokio::test]
async fn generation_through_http_backend() {
    let reply = format!("Here you go:\n```json\n{}\n```", mock_generate(&request()));
    let (base, stub) = start(vec![Reply::Content(reply)]).await;
    let gateway = Gateway::new(config(&base)).unwrap();
    let sink = Mutex::new(Vec::<LlmExchange>::new());
    let generated = gateway.generate_questions(&request(), &sink).await.unwrap();
    assert_eq!(generated.questions.len(), 2);
    assert_eq!(generated.exchange.parse_outcome, ParseOutcome::Ok);
    assert_eq!(stub.seen.lock().unwrap().len(), 1);
    assert_eq!(sink.lock().unwrap().len(), 1);
}

#[tokio::test]
async fn backend_error_is_still_audited() {
    let (base, _) = start(vec![Reply::Status(503, "down")]).await;
    let gateway = Gateway::new(config(&base)).unwrap();
    let sink = Mutex::new(Vec::<LlmExchange>::new());
    let err = gateway
        .generate_questions(&request(), &sink)
        .await
        .unwrap_err();
    assert!(matches!(
        err,
        GenerationError::Backend(BackendError::Http { status: 503, .. })
    ));
    let log = sink.lock().unwrap();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].parse_outcome, ParseOutcome::Failed);
    assert!(log[0].error.as_deref().unwrap().contains("HTTP_ERROR"));
    assert_eq!(log[0].raw_response, "");
}
