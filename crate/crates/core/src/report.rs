//! Quiz-wide aggregates for the lecturer, derived from sheets on every read.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::grade::{grade_sheet, AnswerSheet, GradeError, Outcome, Score};
use crate::ids::{QuestionId, QuizId, StudentRef};
use crate::quiz::Quiz;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTally {
    pub question_id: QuestionId,
    pub correct: usize,
    pub incorrect: usize,
    pub flagged: usize,
    pub voided: usize,
}

impl QuestionTally {
    pub fn total(&self) -> usize {
        self.correct + self.incorrect + self.flagged + self.voided
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentScore {
    pub student_ref: StudentRef,
    pub numerator: usize,
    pub denominator: usize,
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizReport {
    pub quiz_id: QuizId,
    pub submissions: usize,
    pub per_question: Vec<QuestionTally>,
    pub students: Vec<StudentScore>,
}

pub fn quiz_report<'a>(
    quiz: &Quiz,
    sheets: impl IntoIterator<Item = &'a AnswerSheet>,
    voided: &BTreeSet<QuestionId>,
) -> Result<QuizReport, GradeError> {
    let mut per_question: Vec<QuestionTally> = quiz
        .questions
        .iter()
        .map(|q| QuestionTally {
            question_id: q.question_id.clone(),
            correct: 0,
            incorrect: 0,
            flagged: 0,
            voided: 0,
        })
        .collect();
    let mut students = Vec::new();
    let mut submissions = 0;
    for sheet in sheets {
        let report = grade_sheet(quiz, sheet, voided)?;
        submissions += 1;
        for (tally, outcome) in per_question.iter_mut().zip(&report.per_question) {
            match outcome {
                Outcome::Correct => tally.correct += 1,
                Outcome::Incorrect => tally.incorrect += 1,
                Outcome::FlaggedPending => tally.flagged += 1,
                Outcome::Voided => tally.voided += 1,
            }
        }
        students.push(StudentScore {
            student_ref: sheet.student_ref.clone(),
            numerator: report.numerator,
            denominator: report.denominator,
            score: report.score,
        });
    }
    Ok(QuizReport {
        quiz_id: quiz.quiz_id.clone(),
        submissions,
        per_question,
        students,
    })
}
