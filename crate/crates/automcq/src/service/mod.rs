//! HTTP/JSON API over the store and the generation gateway.
//!
//! Every route needs `Authorization: Bearer <token>`. Mutations of one quiz
//! (submissions, flags, resolutions) are serialized per quiz; different
//! quizzes never wait on each other.

mod auth;
mod error;
mod routes;

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use automcq_core::{
    grade_sheet, Answer, AnswerSheet, FlagRecord, FlagStatus, GradeError, GradeReport,
    LanguageAllowList, MCQuestion, Outcome, QuestionId, Quiz, QuizId, SkeletonWarning, StudentRef,
    Timestamp,
};
use axum::Router;
use serde::{Deserialize, Serialize};

use crate::gateway::Gateway;
use crate::store::Store;

pub use auth::{Caller, Role, TokenMap};
pub use error::{ApiError, ApiJson, ErrorBody};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub gateway: Arc<Gateway>,
    pub tokens: Arc<TokenMap>,
    pub languages: Arc<LanguageAllowList>,
    /// Unlimited attempts, latest sheet wins.
    pub practice_mode: bool,
    locks: Arc<QuizLocks>,
}

impl AppState {
    pub fn new(store: Arc<Store>, gateway: Arc<Gateway>, tokens: TokenMap) -> Self {
        Self {
            store,
            gateway,
            tokens: Arc::new(tokens),
            languages: Arc::new(LanguageAllowList::default()),
            practice_mode: false,
            locks: Arc::default(),
        }
    }

    pub fn with_languages(mut self, languages: LanguageAllowList) -> Self {
        self.languages = Arc::new(languages);
        self
    }

    pub fn with_practice_mode(mut self, on: bool) -> Self {
        self.practice_mode = on;
        self
    }
}

#[derive(Default)]
struct QuizLocks(Mutex<HashMap<QuizId, Arc<tokio::sync::Mutex<()>>>>);

impl QuizLocks {
    async fn lock(&self, quiz: &QuizId) -> tokio::sync::OwnedMutexGuard<()> {
        let lock = {
            let mut map = self.0.lock().unwrap_or_else(|p| p.into_inner());
            map.entry(quiz.clone()).or_default().clone()
        };
        lock.lock_owned().await
    }
}

pub fn router(state: AppState) -> Router {
    routes::router(state)
}

/// What a lecturer sees for a quiz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LecturerQuizView {
    pub quiz: Quiz,
    pub skeleton_warnings: Vec<SkeletonWarning>,
    pub voided: Vec<QuestionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exchange_id: Option<String>,
}

/// Per-question feedback after grading.
///
/// `correct_index` and `explanation` are present only for marked questions
/// and for flagged ones whose flag was resolved as valid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionFeedback {
    pub question_id: QuestionId,
    pub answer: Answer,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag_status: Option<FlagStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionView {
    pub quiz_id: QuizId,
    pub student_ref: StudentRef,
    pub submitted_at: Timestamp,
    pub report: GradeReport,
    pub feedback: Vec<QuestionFeedback>,
}

/// Grades `sheet` and builds the feedback the student may see.
///
/// `flags` may contain any flags; only the sheet owner's flags on this quiz
/// are considered, the latest per question winning.
pub fn submission_view<'a>(
    quiz: &Quiz,
    sheet: &AnswerSheet,
    voided: &BTreeSet<QuestionId>,
    flags: impl IntoIterator<Item = &'a FlagRecord>,
) -> Result<SubmissionView, GradeError> {
    let report = grade_sheet(quiz, sheet, voided)?;
    let mut latest: HashMap<&QuestionId, &FlagRecord> = HashMap::new();
    for flag in flags {
        if flag.quiz_id != quiz.quiz_id || flag.student_ref != sheet.student_ref {
            continue;
        }
        let slot = latest.entry(&flag.question_id).or_insert(flag);
        if (flag.created_at, &flag.flag_id) > (slot.created_at, &slot.flag_id) {
            *slot = flag;
        }
    }
    let feedback = quiz
        .questions
        .iter()
        .zip(&sheet.answers)
        .zip(&report.per_question)
        .map(|((q, answer), outcome)| {
            let flag_status = match answer {
                Answer::Flag => latest.get(&q.question_id).map(|f| f.status),
                Answer::Select(_) => None,
            };
            let reveal = outcome.is_marked()
                || (*outcome == Outcome::FlaggedPending
                    && flag_status == Some(FlagStatus::ResolvedValid));
            QuestionFeedback {
                question_id: q.question_id.clone(),
                answer: *answer,
                outcome: *outcome,
                flag_status,
                correct_index: reveal.then_some(q.correct_index),
                explanation: if reveal { q.explanation.clone() } else { None },
            }
        })
        .collect();
    Ok(SubmissionView {
        quiz_id: quiz.quiz_id.clone(),
        student_ref: sheet.student_ref.clone(),
        submitted_at: sheet.submitted_at,
        report,
        feedback,
    })
}

/// A flag with the question and code it is about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagView {
    #[serde(flatten)]
    pub flag: FlagRecord,
    pub question: MCQuestion,
    pub language: String,
    pub assignment_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provided_code: Option<String>,
    pub student_code: String,
}
