//! The parameter bundle handed to the question generator.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::StudentRef;

pub const MIN_QUESTIONS: u32 = 1;
pub const MAX_QUESTIONS: u32 = 10;

/// Everything the generator is told about one submission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub num_questions: u32,
    /// The assignment statement the student was answering.
    pub assignment_text: String,
    #[serde(default)]
    pub topics: Vec<String>,
    pub language: String,
    /// Starter code handed out with the assignment, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provided_code: Option<String>,
    pub student_code: String,
    pub student_ref: StudentRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestViolation {
    NumQuestionsOutOfRange { got: u32 },
    EmptyStudentCode,
    LanguageNotAllowed { language: String },
    EmptyTopic { index: usize },
    EmptyStudentRef,
}

impl RequestViolation {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NumQuestionsOutOfRange { .. } => "NUM_QUESTIONS_OUT_OF_RANGE",
            Self::EmptyStudentCode => "EMPTY_STUDENT_CODE",
            Self::LanguageNotAllowed { .. } => "LANGUAGE_NOT_ALLOWED",
            Self::EmptyTopic { .. } => "EMPTY_TOPIC",
            Self::EmptyStudentRef => "EMPTY_STUDENT_REF",
        }
    }
}

impl fmt::Display for RequestViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NumQuestionsOutOfRange { got } => write!(
                f,
                "num_questions must be between {MIN_QUESTIONS} and {MAX_QUESTIONS}, got {got}"
            ),
            Self::EmptyStudentCode => f.write_str("student_code is empty"),
            Self::LanguageNotAllowed { language } => {
                write!(f, "language {language:?} is not in the allow-list")
            }
            Self::EmptyTopic { index } => write!(f, "topic #{index} is empty"),
            Self::EmptyStudentRef => f.write_str("student_ref is empty"),
        }
    }
}

impl GenerationRequest {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self, languages: &LanguageAllowList) -> Result<(), Vec<RequestViolation>> {
        let mut violations = Vec::new();
        if !(MIN_QUESTIONS..=MAX_QUESTIONS).contains(&self.num_questions) {
            violations.push(RequestViolation::NumQuestionsOutOfRange {
                got: self.num_questions,
            });
        }
        if self.student_code.trim().is_empty() {
            violations.push(RequestViolation::EmptyStudentCode);
        }
        if !languages.contains(&self.language) {
            violations.push(RequestViolation::LanguageNotAllowed {
                language: self.language.clone(),
            });
        }
        for (index, topic) in self.topics.iter().enumerate() {
            if topic.trim().is_empty() {
                violations.push(RequestViolation::EmptyTopic { index });
            }
        }
        if self.student_ref.as_str().trim().is_empty() {
            violations.push(RequestViolation::EmptyStudentRef);
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }
}

/// Languages a request may name. Matching ignores ASCII case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageAllowList(Vec<String>);

impl LanguageAllowList {
    pub fn new<I, S>(languages: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            languages
                .into_iter()
                .map(|l| l.as_ref().trim().to_ascii_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    /// Parses a comma-separated list, dropping empty entries.
    pub fn from_csv(csv: &str) -> Self {
        Self::new(csv.split(','))
    }

    pub fn contains(&self, language: &str) -> bool {
        let language = language.trim();
        self.0.iter().any(|l| l.eq_ignore_ascii_case(language))
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Default for LanguageAllowList {
    fn default() -> Self {
        Self::new([
            "java",
            "python",
            "c",
            "cpp",
            "csharp",
            "javascript",
            "typescript",
            "kotlin",
            "rust",
            "go",
            "haskell",
            "scala",
        ])
    }
}

impl fmt::Display for LanguageAllowList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(","))
    }
}

impl From<&LanguageAllowList> for Vec<String> {
    fn from(list: &LanguageAllowList) -> Self {
        list.iter().map(ToString::to_string).collect()
    }
}
