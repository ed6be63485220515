//! Question records: the loose shape a model returns and the validated form.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ids::QuestionId;
use crate::render::FLAG_OPTION_TEXT;
use crate::text::option_key;

pub const MIN_OPTIONS: usize = 2;
pub const MAX_OPTIONS: usize = 6;

/// A question record as extracted from model output, before any checks.
///
/// Conversion from JSON is lenient: missing fields become empty, scalar
/// options are stringified, and integral numbers or numeric strings are
/// accepted for the index. Validation decides what is acceptable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawQuestion {
    pub stem: String,
    pub options: Vec<String>,
    pub correct_index: Option<i64>,
    pub explanation: Option<String>,
    pub topic: Option<String>,
}

impl RawQuestion {
    pub fn from_value(value: &Value) -> Self {
        let field = |name: &str| value.get(name);
        let text = |name: &str| field(name).and_then(Value::as_str).map(ToString::to_string);
        let options = match field("options") {
            Some(Value::Array(items)) => items.iter().map(scalar_text).collect(),
            _ => Vec::new(),
        };
        Self {
            stem: text("stem").unwrap_or_default(),
            options,
            correct_index: field("correct_index").and_then(index_value),
            explanation: text("explanation"),
            topic: text("topic"),
        }
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn index_value(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64().or_else(|| {
            n.as_f64()
                .filter(|f| (-1e15..1e15).contains(f))
                .map(|f| f as i64)
                .filter(|&i| i as f64 == n.as_f64().unwrap_or(f64::NAN))
        }),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// A validated multiple-choice question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MCQuestion {
    pub question_id: QuestionId,
    pub stem: String,
    pub options: Vec<String>,
    pub correct_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValidationError {
    EmptyStem,
    OptionCountOutOfRange {
        count: usize,
    },
    CorrectIndexOutOfRange {
        index: Option<i64>,
        option_count: usize,
    },
    /// `second` repeats `first` once whitespace and case are ignored.
    DuplicateOptions {
        first: usize,
        second: usize,
    },
    ReservedOptionText {
        index: usize,
    },
}

impl ValidationError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyStem => "EMPTY_STEM",
            Self::OptionCountOutOfRange { .. } => "OPTION_COUNT_OUT_OF_RANGE",
            Self::CorrectIndexOutOfRange { .. } => "CORRECT_INDEX_OUT_OF_RANGE",
            Self::DuplicateOptions { .. } => "DUPLICATE_OPTIONS",
            Self::ReservedOptionText { .. } => "RESERVED_OPTION_TEXT",
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyStem => f.write_str("the question stem is empty"),
            Self::OptionCountOutOfRange { count } => write!(
                f,
                "a question needs between {MIN_OPTIONS} and {MAX_OPTIONS} options, found {count}"
            ),
            Self::CorrectIndexOutOfRange {
                index: Some(i),
                option_count,
            } => write!(
                f,
                "correct_index {i} is not a valid zero-based index into {option_count} options"
            ),
            Self::CorrectIndexOutOfRange {
                index: None,
                option_count,
            } => write!(
                f,
                "correct_index is missing or not an integer (expected 0..{option_count})"
            ),
            Self::DuplicateOptions { first, second } => write!(
                f,
                "options {first} and {second} are the same text ignoring whitespace and case"
            ),
            Self::ReservedOptionText { index } => write!(
                f,
                "option {index} uses the reserved text {FLAG_OPTION_TEXT:?}"
            ),
        }
    }
}

fn non_empty_trimmed(s: Option<&String>) -> Option<String> {
    s.map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(ToString::to_string)
}

/// Checks a raw record against every question invariant.
///
/// On success the returned question has its stem, options, explanation and
/// topic trimmed. On failure every violation is reported, not just the first.
pub fn validate_question(
    raw: &RawQuestion,
    question_id: QuestionId,
) -> Result<MCQuestion, Vec<ValidationError>> {
    let mut errors = Vec::new();

    let stem = raw.stem.trim();
    if stem.is_empty() {
        errors.push(ValidationError::EmptyStem);
    }

    let count = raw.options.len();
    if !(MIN_OPTIONS..=MAX_OPTIONS).contains(&count) {
        errors.push(ValidationError::OptionCountOutOfRange { count });
    }

    let correct_index = raw
        .correct_index
        .and_then(|i| usize::try_from(i).ok())
        .filter(|&i| i < count);
    if correct_index.is_none() {
        errors.push(ValidationError::CorrectIndexOutOfRange {
            index: raw.correct_index,
            option_count: count,
        });
    }

    let keys: Vec<String> = raw.options.iter().map(|o| option_key(o)).collect();
    let reserved = option_key(FLAG_OPTION_TEXT);
    for (second, key) in keys.iter().enumerate() {
        if let Some(first) = keys[..second].iter().position(|k| k == key) {
            errors.push(ValidationError::DuplicateOptions { first, second });
        }
        if *key == reserved {
            errors.push(ValidationError::ReservedOptionText { index: second });
        }
    }

    match correct_index {
        Some(correct_index) if errors.is_empty() => Ok(MCQuestion {
            question_id,
            stem: stem.to_string(),
            options: raw.options.iter().map(|o| o.trim().to_string()).collect(),
            correct_index,
            explanation: non_empty_trimmed(raw.explanation.as_ref()),
            topic: non_empty_trimmed(raw.topic.as_ref()),
        }),
        _ => Err(errors),
    }
}
