//! "This question doesn't seem right" reports and their review lifecycle.
//!
//! A flag starts pending and moves exactly once to `resolved_valid` or
//! `resolved_invalid`. A question with any `resolved_invalid` flag is voided
//! for the whole quiz.

use alloc::collections::BTreeSet;
use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{FlagId, QuestionId, QuizId, StudentRef};
use crate::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagStatus {
    Pending,
    ResolvedValid,
    ResolvedInvalid,
}

impl FlagStatus {
    pub fn is_resolved(self) -> bool {
        self != Self::Pending
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pending => "pending",
            Self::ResolvedValid => "resolved_valid",
            Self::ResolvedInvalid => "resolved_invalid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pending" => Some(Self::Pending),
            "resolved_valid" => Some(Self::ResolvedValid),
            "resolved_invalid" => Some(Self::ResolvedInvalid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagRecord {
    pub flag_id: FlagId,
    pub quiz_id: QuizId,
    pub question_id: QuestionId,
    pub student_ref: StudentRef,
    pub status: FlagStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution_note: Option<String>,
    pub created_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlagError {
    #[error("FLAG_ALREADY_RESOLVED: flag {0} is already resolved")]
    AlreadyResolved(FlagId),
    #[error(
        "INVALID_RESOLUTION: a flag can only be resolved to resolved_valid or resolved_invalid"
    )]
    InvalidResolution,
}

impl FlagError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::AlreadyResolved(_) => "FLAG_ALREADY_RESOLVED",
            Self::InvalidResolution => "INVALID_RESOLUTION",
        }
    }
}

impl FlagRecord {
    pub fn open(
        flag_id: FlagId,
        quiz_id: QuizId,
        question_id: QuestionId,
        student_ref: StudentRef,
        created_at: Timestamp,
    ) -> Self {
        Self {
            flag_id,
            quiz_id,
            question_id,
            student_ref,
            status: FlagStatus::Pending,
            resolution_note: None,
            created_at,
            resolved_at: None,
        }
    }

    /// Moves a pending flag to a terminal state.
    pub fn resolve(
        &mut self,
        status: FlagStatus,
        note: Option<String>,
        at: Timestamp,
    ) -> Result<(), FlagError> {
        if self.status.is_resolved() {
            return Err(FlagError::AlreadyResolved(self.flag_id.clone()));
        }
        if !status.is_resolved() {
            return Err(FlagError::InvalidResolution);
        }
        self.status = status;
        self.resolution_note = note;
        self.resolved_at = Some(at);
        Ok(())
    }

    /// `resolved_at` is present exactly when the flag is resolved.
    pub fn is_consistent(&self) -> bool {
        self.status.is_resolved() == self.resolved_at.is_some()
    }

    pub fn is_pending_for(&self, question_id: &QuestionId, student_ref: &StudentRef) -> bool {
        self.status == FlagStatus::Pending
            && &self.question_id == question_id
            && &self.student_ref == student_ref
    }
}

/// Questions voided by `resolved_invalid` flags among `flags`.
pub fn voided_questions<'a>(
    flags: impl IntoIterator<Item = &'a FlagRecord>,
) -> BTreeSet<QuestionId> {
    flags
        .into_iter()
        .filter(|f| f.status == FlagStatus::ResolvedInvalid)
        .map(|f| f.question_id.clone())
        .collect()
}
