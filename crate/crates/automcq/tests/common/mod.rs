#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use automcq::config::BackendConfig;
use automcq::gateway::Gateway;
use automcq::service::{self, AppState, Role, TokenMap};
use automcq::store::Store;
use automcq_core::MockFault;
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const BUILDING: &str = include_str!("../../../core/tests/fixtures/Building.java");
pub const FLAT: &str = include_str!("../../../core/tests/fixtures/Flat.java");
pub const ASSIGNMENT: &str = include_str!("../../../core/tests/fixtures/assignment.txt");

pub const ALICE: &str = "tok-alice";
pub const BOB: &str = "tok-bob";
pub const CAROL: &str = "tok-carol";
pub const LECTURER: &str = "tok-lecturer";

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

pub fn tokens() -> TokenMap {
    let mut t = TokenMap::default();
    t.insert(ALICE, Role::Student, "alice");
    t.insert(BOB, Role::Student, "bob");
    t.insert(CAROL, Role::Student, "carol");
    t.insert(LECTURER, Role::Lecturer, "dr-k");
    t
}

/// A service over a fresh store in a temporary directory.
pub struct TestApp {
    pub router: Router,
    pub store: Arc<Store>,
    pub dir: tempfile::TempDir,
}

impl TestApp {
    pub fn new(fault: MockFault) -> Self {
        Self::with_practice(fault, false)
    }

    pub fn with_practice(fault: MockFault, practice: bool) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(Store::open(dir.path()).unwrap());
        let gateway = Gateway::new(BackendConfig::mock().with_fault(fault)).unwrap();
        let state =
            AppState::new(store.clone(), Arc::new(gateway), tokens()).with_practice_mode(practice);
        Self {
            router: service::router(state),
            store,
            dir,
        }
    }

    pub async fn call(
        &self,
        method: Method,
        uri: &str,
        token: Option<&str>,
        body: Option<Value>,
    ) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes)
                .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    pub async fn get(&self, uri: &str, token: &str) -> (StatusCode, Value) {
        self.call(Method::GET, uri, Some(token), None).await
    }

    pub async fn post(&self, uri: &str, token: &str, body: Value) -> (StatusCode, Value) {
        self.call(Method::POST, uri, Some(token), Some(body)).await
    }

    /// Creates the worked-example quiz as `token` and returns its id.
    pub async fn create_fixture_quiz(&self, token: &str) -> String {
        let (status, body) = self.post("/api/quizzes", token, fixture_body(2)).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["quiz_id"].as_str().unwrap().to_string()
    }

    /// Correct option indices, read through the lecturer view.
    pub async fn answer_key(&self, quiz_id: &str) -> Vec<i64> {
        let (status, body) = self.get(&format!("/api/quizzes/{quiz_id}"), LECTURER).await;
        assert_eq!(status, StatusCode::OK);
        body["quiz"]["questions"]
            .as_array()
            .unwrap()
            .iter()
            .map(|q| q["correct_index"].as_i64().unwrap())
            .collect()
    }
}

pub fn fixture_body(num: u32) -> Value {
    json!({
        "num_questions": num,
        "assignment_text": ASSIGNMENT.trim(),
        "topics": ["inheritance and overriding"],
        "language": "java",
        "provided_code": BUILDING,
        "student_code": FLAT,
    })
}
