//! Core model for generated multiple-choice code-comprehension quizzes.
//!
//! Everything in this crate is a pure function over values: request and
//! question validation, quiz assembly, the student-facing render (with the
//! reserved flag choice appended), flag-aware grading, skeleton-code
//! detection, prompt construction, tolerant parsing of model output, and a
//! deterministic offline generator. IO, HTTP and persistence live in the
//! `automcq` crate.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod flag;
pub mod grade;
pub mod ids;
pub mod mock;
pub mod parse;
pub mod prompt;
pub mod question;
pub mod quiz;
pub mod render;
pub mod report;
pub mod request;
pub mod skeleton;

mod text;

pub use flag::{voided_questions, FlagError, FlagRecord, FlagStatus};
pub use grade::{
    check_sheet, grade_sheet, Answer, AnswerSheet, GradeError, GradeReport, Outcome, Score,
};
pub use ids::{FlagId, QuestionId, QuizId, StudentRef};
pub use mock::{mock_generate, mock_generate_with_fault, MockFault};
pub use parse::{parse_questions, ParseError, ParsedQuestions, ResponseIssue};
pub use prompt::{
    build_repair_prompt, build_system_prompt, build_user_prompt, parse_user_prompt, MessageRole,
    NoIssues, PromptFields, PromptMessage, OUTPUT_FORMAT_INSTRUCTIONS, SYSTEM_PROMPT,
};
pub use question::{validate_question, MCQuestion, RawQuestion, ValidationError};
pub use quiz::{assemble_quiz, Quiz, QuizError, QuizStatus, DISCLAIMER};
pub use render::{render_for_student, RenderError, StudentQuestion, StudentView, FLAG_OPTION_TEXT};
pub use report::{quiz_report, QuestionTally, QuizReport, StudentScore};
pub use request::{GenerationRequest, LanguageAllowList, RequestViolation};
pub use skeleton::{skeleton_targeting_warnings, student_authored_lines, SkeletonWarning};

/// Timestamps are UTC instants; callers supply them so the core never reads a clock.
pub type Timestamp = chrono::DateTime<chrono::Utc>;
