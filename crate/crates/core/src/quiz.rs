//! A quiz binds validated questions to the request that produced them.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{QuestionId, QuizId};
use crate::question::MCQuestion;
use crate::request::GenerationRequest;
use crate::Timestamp;

/// Shown above every generated quiz.
pub const DISCLAIMER: &str = "These questions were generated by AI. Therefore, questions generated may be incorrect. If you think they are incorrect please select 'This question doesn't seem right'. Also, select this option if the question doesn't relate to programming.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuizStatus {
    Draft,
    Published,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quiz {
    pub quiz_id: QuizId,
    pub request: GenerationRequest,
    pub questions: Vec<MCQuestion>,
    pub disclaimer: String,
    pub status: QuizStatus,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuizError {
    #[error("QUESTION_COUNT_MISMATCH: expected {expected} questions, got {got}")]
    QuestionCountMismatch { expected: usize, got: usize },
    #[error("DUPLICATE_QUESTION_ID: {0}")]
    DuplicateQuestionId(QuestionId),
    #[error("DISCLAIMER_MODIFIED: the quiz disclaimer differs from the configured text")]
    DisclaimerModified,
}

impl QuizError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::QuestionCountMismatch { .. } => "QUESTION_COUNT_MISMATCH",
            Self::DuplicateQuestionId(_) => "DUPLICATE_QUESTION_ID",
            Self::DisclaimerModified => "DISCLAIMER_MODIFIED",
        }
    }
}

/// Builds a draft quiz. Questions are expected to be individually valid.
pub fn assemble_quiz(
    quiz_id: QuizId,
    request: GenerationRequest,
    questions: Vec<MCQuestion>,
    created_at: Timestamp,
) -> Result<Quiz, QuizError> {
    let quiz = Quiz {
        quiz_id,
        request,
        questions,
        disclaimer: String::from(DISCLAIMER),
        status: QuizStatus::Draft,
        created_at,
    };
    quiz.check()?;
    Ok(quiz)
}

impl Quiz {
    /// Re-checks the quiz-level invariants, e.g. after loading from disk.
    pub fn check(&self) -> Result<(), QuizError> {
        let expected = self.request.num_questions as usize;
        if self.questions.len() != expected {
            return Err(QuizError::QuestionCountMismatch {
                expected,
                got: self.questions.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for q in &self.questions {
            if !seen.insert(&q.question_id) {
                return Err(QuizError::DuplicateQuestionId(q.question_id.clone()));
            }
        }
        if self.disclaimer != DISCLAIMER {
            return Err(QuizError::DisclaimerModified);
        }
        Ok(())
    }

    pub fn publish(mut self) -> Self {
        self.status = QuizStatus::Published;
        self
    }

    pub fn is_published(&self) -> bool {
        self.status == QuizStatus::Published
    }

    pub fn question(&self, id: &QuestionId) -> Option<&MCQuestion> {
        self.questions.iter().find(|q| &q.question_id == id)
    }

    pub fn question_ids(&self) -> impl Iterator<Item = &QuestionId> {
        self.questions.iter().map(|q| &q.question_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::StudentRef;

    fn request(n: u32) -> GenerationRequest {
        GenerationRequest {
            num_questions: n,
            assignment_text: "a".into(),
            topics: vec![],
            language: "java".into(),
            provided_code: None,
            student_code: "x".into(),
            student_ref: StudentRef::from("s"),
        }
    }

    fn question(id: &str) -> MCQuestion {
        MCQuestion {
            question_id: id.into(),
            stem: "S".into(),
            options: vec!["a".into(), "b".into()],
            correct_index: 0,
            explanation: None,
            topic: None,
        }
    }

    #[test]
    fn assembles_draft_with_disclaimer() {
        let quiz = assemble_quiz(
            "z".into(),
            request(2),
            vec![question("a"), question("b")],
            Timestamp::UNIX_EPOCH,
        )
        .unwrap();
        assert_eq!(quiz.status, QuizStatus::Draft);
        assert_eq!(quiz.disclaimer, DISCLAIMER);
        assert!(quiz.clone().publish().is_published());
    }

    #[test]
    fn count_mismatch() {
        let err = assemble_quiz(
            "z".into(),
            request(2),
            vec![question("a")],
            Timestamp::UNIX_EPOCH,
        )
        .unwrap_err();
        assert_eq!(err.code(), "QUESTION_COUNT_MISMATCH");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = assemble_quiz(
            "z".into(),
            request(2),
            vec![question("a"), question("a")],
            Timestamp::UNIX_EPOCH,
        )
        .unwrap_err();
        assert_eq!(err, QuizError::DuplicateQuestionId("a".into()));
    }

    #[test]
    fn tampered_disclaimer_detected() {
        let mut quiz = assemble_quiz(
            "z".into(),
            request(1),
            vec![question("a")],
            Timestamp::UNIX_EPOCH,
        )
        .unwrap();
        quiz.disclaimer.push(' ');
        assert_eq!(quiz.check(), Err(QuizError::DisclaimerModified));
    }
}
