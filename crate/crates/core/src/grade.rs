//! Flag-aware marking.
//!
//! A flagged question is excluded from both numerator and denominator. A
//! voided question is excluded for every student. When nothing is left to
//! mark the score is undefined rather than zero.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{QuestionId, QuizId, StudentRef};
use crate::quiz::Quiz;
use crate::Timestamp;

/// Wire encoding of [`Answer::Flag`].
pub const FLAG_SENTINEL: i64 = -1;

/// One answer: a chosen option, or the "doesn't seem right" flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    Select(usize),
    Flag,
}

impl Answer {
    pub fn to_wire(self) -> i64 {
        match self {
            Self::Select(i) => i as i64,
            Self::Flag => FLAG_SENTINEL,
        }
    }

    pub fn from_wire(v: i64) -> Option<Self> {
        match v {
            FLAG_SENTINEL => Some(Self::Flag),
            v if v >= 0 => Some(Self::Select(v as usize)),
            _ => None,
        }
    }
}

impl Serialize for Answer {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i64(self.to_wire())
    }
}

impl<'de> Deserialize<'de> for Answer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Self::from_wire(v).ok_or_else(|| {
            de::Error::custom(format_args!(
                "answer must be an option index or {FLAG_SENTINEL} for flag, got {v}"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSheet {
    pub quiz_id: QuizId,
    pub student_ref: StudentRef,
    pub answers: Vec<Answer>,
    pub submitted_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Incorrect,
    FlaggedPending,
    Voided,
}

impl Outcome {
    /// Whether the outcome counts towards the denominator.
    pub fn is_marked(self) -> bool {
        matches!(self, Self::Correct | Self::Incorrect)
    }
}

/// `numerator / denominator`, or undefined when nothing was marked.
///
/// Serialized as a JSON number, or as the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Value(f64),
    Undefined,
}

impl Score {
    pub fn from_counts(numerator: usize, denominator: usize) -> Self {
        if denominator == 0 {
            Self::Undefined
        } else {
            Self::Value(numerator as f64 / denominator as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(v),
            Self::Undefined => None,
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value(v) => write!(f, "{v}"),
            Self::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Value(v) => s.serialize_f64(*v),
            Self::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Number(f64),
            Text(alloc::string::String),
        }
        match Wire::deserialize(d)? {
            Wire::Number(v) => Ok(Self::Value(v)),
            Wire::Text(t) if t == "undefined" => Ok(Self::Undefined),
            Wire::Text(other) => Err(de::Error::custom(format_args!(
                "score must be a number or \"undefined\", got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeReport {
    pub per_question: Vec<Outcome>,
    pub numerator: usize,
    pub denominator: usize,
    pub score: Score,
}

impl GradeReport {
    pub fn from_outcomes(per_question: Vec<Outcome>) -> Self {
        let numerator = per_question
            .iter()
            .filter(|o| **o == Outcome::Correct)
            .count();
        let denominator = per_question.iter().filter(|o| o.is_marked()).count();
        Self {
            per_question,
            numerator,
            denominator,
            score: Score::from_counts(numerator, denominator),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GradeError {
    #[error("SHEET_QUIZ_MISMATCH: sheet is for quiz {sheet}, not {quiz}")]
    SheetQuizMismatch { quiz: QuizId, sheet: QuizId },
    #[error("ANSWER_COUNT_MISMATCH: quiz has {expected} questions, sheet has {got} answers")]
    AnswerCountMismatch { expected: usize, got: usize },
    #[error("ANSWER_INDEX_OUT_OF_RANGE: answer {answer} to question {question} is not one of its {option_count} options")]
    AnswerIndexOutOfRange {
        question: usize,
        answer: usize,
        option_count: usize,
    },
    #[error("UNKNOWN_QUESTION: {0} is not a question of this quiz")]
    UnknownVoidedQuestion(QuestionId),
}

impl GradeError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::SheetQuizMismatch { .. } => "SHEET_QUIZ_MISMATCH",
            Self::AnswerCountMismatch { .. } => "ANSWER_COUNT_MISMATCH",
            Self::AnswerIndexOutOfRange { .. } => "ANSWER_INDEX_OUT_OF_RANGE",
            Self::UnknownVoidedQuestion(_) => "UNKNOWN_QUESTION",
        }
    }
}

/// Checks that a sheet fits the quiz shape, without grading it.
pub fn check_sheet(quiz: &Quiz, sheet: &AnswerSheet) -> Result<(), GradeError> {
    if sheet.quiz_id != quiz.quiz_id {
        return Err(GradeError::SheetQuizMismatch {
            quiz: quiz.quiz_id.clone(),
            sheet: sheet.quiz_id.clone(),
        });
    }
    if sheet.answers.len() != quiz.questions.len() {
        return Err(GradeError::AnswerCountMismatch {
            expected: quiz.questions.len(),
            got: sheet.answers.len(),
        });
    }
    for (question, (q, answer)) in quiz.questions.iter().zip(&sheet.answers).enumerate() {
        if let Answer::Select(answer) = *answer {
            if answer >= q.options.len() {
                return Err(GradeError::AnswerIndexOutOfRange {
                    question,
                    answer,
                    option_count: q.options.len(),
                });
            }
        }
    }
    Ok(())
}

/// Marks a sheet against a quiz given the quiz-wide set of voided questions.
pub fn grade_sheet(
    quiz: &Quiz,
    sheet: &AnswerSheet,
    voided: &BTreeSet<QuestionId>,
) -> Result<GradeReport, GradeError> {
    check_sheet(quiz, sheet)?;
    if let Some(unknown) = voided.iter().find(|id| quiz.question(id).is_none()) {
        return Err(GradeError::UnknownVoidedQuestion(unknown.clone()));
    }
    let outcomes = quiz
        .questions
        .iter()
        .zip(&sheet.answers)
        .map(|(q, answer)| {
            if voided.contains(&q.question_id) {
                return Outcome::Voided;
            }
            match *answer {
                Answer::Flag => Outcome::FlaggedPending,
                Answer::Select(i) if i == q.correct_index => Outcome::Correct,
                Answer::Select(_) => Outcome::Incorrect,
            }
        })
        .collect();
    Ok(GradeReport::from_outcomes(outcomes))
}
