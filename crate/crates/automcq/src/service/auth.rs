//! Bearer tokens mapped to roles. There are no accounts or sessions.

use std::collections::HashMap;
use std::path::Path;

use automcq_core::StudentRef;
use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::error::ApiError;
use super::AppState;
use crate::config::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Student,
    Lecturer,
}

/// The authenticated caller of a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caller {
    pub role: Role,
    /// Stable name for the caller; students submit under it.
    pub subject: StudentRef,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Role(Role),
    Full {
        role: Role,
        #[serde(default)]
        subject: Option<String>,
    },
}

/// Token → caller map.
///
/// The file is a JSON object whose values are either a role name or
/// `{"role": .., "subject": ..}`. Without a subject the caller is named
/// after a digest of the token.
#[derive(Debug, Clone, Default)]
pub struct TokenMap(HashMap<String, Caller>);

impl TokenMap {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: HashMap<String, Entry> = serde_json::from_str(text)
            .map_err(|e| ConfigError(format!("token map is not valid: {e}")))?;
        let mut map = HashMap::with_capacity(raw.len());
        for (token, entry) in raw {
            if token.trim().is_empty() {
                return Err(ConfigError("token map contains an empty token".into()));
            }
            let (role, subject) = match entry {
                Entry::Role(role) => (role, None),
                Entry::Full { role, subject } => (role, subject),
            };
            let subject = subject
                .filter(|s| !s.trim().is_empty())
                .unwrap_or_else(|| default_subject(&token));
            map.insert(
                token,
                Caller {
                    role,
                    subject: subject.into(),
                },
            );
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> std::io::Result<Result<Self, ConfigError>> {
        Ok(Self::from_json(&std::fs::read_to_string(path)?))
    }

    pub fn insert(&mut self, token: impl Into<String>, role: Role, subject: impl Into<StudentRef>) {
        self.0.insert(
            token.into(),
            Caller {
                role,
                subject: subject.into(),
            },
        );
    }

    pub fn get(&self, token: &str) -> Option<&Caller> {
        self.0.get(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn default_subject(token: &str) -> String {
    let digest = Sha256::digest(token.as_bytes());
    let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("user-{hex}")
}

impl Caller {
    pub fn require(&self, role: Role) -> Result<(), ApiError> {
        if self.role == role {
            Ok(())
        } else {
            Err(ApiError::forbidden(match role {
                Role::Student => "only students can do this",
                Role::Lecturer => "only lecturers can do this",
            }))
        }
    }
}

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, ApiError> {
        let header = parts
            .headers
            .get(AUTHORIZATION)
            .ok_or_else(|| ApiError::unauthorized("missing Authorization header"))?;
        let token = header
            .to_str()
            .ok()
            .and_then(|h| h.strip_prefix("Bearer "))
            .map(str::trim)
            .ok_or_else(|| ApiError::unauthorized("expected Authorization: Bearer <token>"))?;
        state
            .tokens
            .get(token)
            .cloned()
            .ok_or_else(|| ApiError::unauthorized("unknown token"))
    }
}
