//! Tolerant extraction of question records from model output.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::question::{RawQuestion, ValidationError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseError {
    ParseFailure,
    CountMismatch { expected: usize, found: usize },
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::ParseFailure => "PARSE_FAILURE",
            Self::CountMismatch { .. } => "COUNT_MISMATCH",
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ParseFailure => {
                f.write_str("the reply does not contain a JSON array of question objects")
            }
            Self::CountMismatch { expected, found } => {
                write!(
                    f,
                    "expected {expected} questions but the reply contains {found}"
                )
            }
        }
    }
}

/// Anything wrong with a reply that a repair round should fix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResponseIssue {
    Parse(ParseError),
    /// `position` is the zero-based index of the record in the reply.
    Question {
        position: usize,
        error: ValidationError,
    },
}

impl ResponseIssue {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Parse(e) => e.code(),
            Self::Question { error, .. } => error.code(),
        }
    }
}

impl fmt::Display for ResponseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse(e) => e.fmt(f),
            Self::Question { position, error } => write!(f, "question {}: {error}", position + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedQuestions {
    pub records: Vec<RawQuestion>,
    /// Non-fatal problems; the records are still returned.
    pub issues: Vec<ParseError>,
}

/// Pulls the first well-formed JSON array of objects out of `raw`.
///
/// Leading and trailing prose and Markdown fences are ignored. An array whose
/// elements are not all objects (an `options` list, say) is skipped. Never
/// panics, whatever the input.
pub fn parse_questions(raw: &str, expected_count: usize) -> Result<ParsedQuestions, ParseError> {
    let items = first_object_array(raw).ok_or(ParseError::ParseFailure)?;
    let records: Vec<RawQuestion> = items.iter().map(RawQuestion::from_value).collect();
    let mut issues = Vec::new();
    if records.len() != expected_count {
        issues.push(ParseError::CountMismatch {
            expected: expected_count,
            found: records.len(),
        });
    }
    Ok(ParsedQuestions { records, issues })
}

fn first_object_array(raw: &str) -> Option<Vec<Value>> {
    raw.match_indices('[').find_map(|(at, _)| {
        let mut stream = serde_json::Deserializer::from_str(&raw[at..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Array(items))) if items.iter().all(Value::is_object) => Some(items),
            _ => None,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"[
  {"stem": "What does getTax() return in Flat?", "options": ["a", "b", "c", "d"], "correct_index": 1, "explanation": "e", "topic": "overriding"},
  {"stem": "Why call super.getTax()?", "options": ["a", "b", "c", "d"], "correct_index": 0, "explanation": "e", "topic": "inheritance"}
]"#;

    #[test]
    fn bare_array() {
        let p = parse_questions(TWO, 2).unwrap();
        assert_eq!(p.records.len(), 2);
        assert!(p.issues.is_empty());
        assert_eq!(p.records[0].correct_index, Some(1));
    }

    #[test]
    fn fenced_with_preamble() {
        let wrapped =
            alloc::format!("Sure! Here are your questions:\n\n```json\n{TWO}\n```\nGood luck.");
        assert_eq!(parse_questions(&wrapped, 2), parse_questions(TWO, 2));
    }

    #[test]
    fn refusal_is_parse_failure() {
        assert_eq!(
            parse_questions("I cannot help with that.", 2),
            Err(ParseError::ParseFailure)
        );
    }

    #[test]
    fn truncated_outer_array_does_not_fall_back_to_options() {
        let cut = &TWO[..TWO.len() / 2];
        assert_eq!(parse_questions(cut, 2), Err(ParseError::ParseFailure));
    }

    #[test]
    fn bracketed_prose_is_skipped() {
        let text = alloc::format!("[see below] [1, 2] {TWO}");
        assert_eq!(parse_questions(&text, 2).unwrap().records.len(), 2);
    }

    #[test]
    fn nested_under_object_key() {
        let text = alloc::format!("{{\"questions\": {TWO}}}");
        assert_eq!(parse_questions(&text, 2).unwrap().records.len(), 2);
    }

    #[test]
    fn count_mismatch_keeps_records() {
        let p = parse_questions(TWO, 3).unwrap();
        assert_eq!(p.records.len(), 2);
        assert_eq!(
            p.issues,
            [ParseError::CountMismatch {
                expected: 3,
                found: 2
            }]
        );
    }
}
