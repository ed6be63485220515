//! The answer-free view a student sees.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{QuestionId, QuizId};
use crate::quiz::Quiz;

/// The reserved final choice on every rendered question.
pub const FLAG_OPTION_TEXT: &str = "This question doesn't seem right";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentView {
    pub quiz_id: QuizId,
    pub disclaimer: String,
    pub questions: Vec<StudentQuestion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentQuestion {
    pub question_id: QuestionId,
    pub stem: String,
    /// Options in generator order followed by [`FLAG_OPTION_TEXT`].
    pub choices: Vec<String>,
}

impl StudentQuestion {
    /// Position of the flag choice, always the last one.
    pub fn flag_position(&self) -> usize {
        self.choices.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("QUIZ_NOT_PUBLISHED: quiz {0} has not been published")]
    QuizNotPublished(QuizId),
}

pub fn render_for_student(quiz: &Quiz) -> Result<StudentView, RenderError> {
    if !quiz.is_published() {
        return Err(RenderError::QuizNotPublished(quiz.quiz_id.clone()));
    }
    let questions = quiz
        .questions
        .iter()
        .map(|q| {
            let mut choices = q.options.clone();
            choices.push(String::from(FLAG_OPTION_TEXT));
            StudentQuestion {
                question_id: q.question_id.clone(),
                stem: q.stem.clone(),
                choices,
            }
        })
        .collect();
    Ok(StudentView {
        quiz_id: quiz.quiz_id.clone(),
        disclaimer: quiz.disclaimer.clone(),
        questions,
    })
}
