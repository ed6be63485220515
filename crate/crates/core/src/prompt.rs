//! Prompt messages sent to the generator.
//!
//! The system prompt is fixed text. The user prompt lays the request out as
//! labelled sections in a fixed order and ends with the output-format
//! block. Its exact layout is a reconstruction and is frozen by golden tests.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parse::ResponseIssue;
use crate::request::GenerationRequest;
use crate::text::collapse_whitespace;

pub const SYSTEM_PROMPT: &str = "You are an educational assistant specializing in computer science. Your task is to analyse students' code for the beginner programmer class and generate thoughtful multiple-choice questions that can help them understand and improve their coding skills. You should try and make good distractor options to really test students understanding.";

/// Appended to every user prompt and restated in repair prompts.
pub const OUTPUT_FORMAT_INSTRUCTIONS: &str = r#"OUTPUT FORMAT:
Reply with only a JSON array and no surrounding prose. The array must contain exactly as many objects as NUMBER OF QUESTIONS. Each object must have these fields:
- "stem": string, the question text.
- "options": array of exactly 4 strings, one correct answer and three distractors, all different.
- "correct_index": integer from 0 to 3, the position of the correct answer in "options".
- "explanation": string, why the correct answer is right.
- "topic": string, the topic from TOPICS that the question tests.
Ask about the code the student wrote in STUDENT CODE, not about lines that only appear in PROVIDED CODE."#;

pub const LABEL_NUM_QUESTIONS: &str = "NUMBER OF QUESTIONS";
pub const LABEL_ASSIGNMENT: &str = "ASSIGNMENT";
pub const LABEL_TOPICS: &str = "TOPICS";
pub const LABEL_LANGUAGE: &str = "LANGUAGE";
pub const LABEL_PROVIDED_CODE: &str = "PROVIDED CODE";
pub const LABEL_STUDENT_CODE: &str = "STUDENT CODE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptMessage {
    pub role: MessageRole,
    pub content: String,
}

impl PromptMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: MessageRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: MessageRole::User,
            content: content.into(),
        }
    }
}

pub fn build_system_prompt() -> PromptMessage {
    PromptMessage::system(SYSTEM_PROMPT)
}

/// A backtick fence longer than any backtick run in `texts`, so fenced
/// content is always recoverable verbatim.
fn fence_for<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let longest = texts
        .into_iter()
        .flat_map(|t| t.split(|c| c != '`').map(str::len))
        .max()
        .unwrap_or(0);
    "`".repeat((longest + 1).max(3))
}

fn push_fenced(out: &mut String, fence: &str, language: &str, code: &str) {
    let _ = write!(out, "{fence}{language}\n{code}\n{fence}");
}

pub fn build_user_prompt(request: &GenerationRequest) -> PromptMessage {
    let language = request.language.trim();
    let provided = request.provided_code.as_deref();
    let fence = fence_for(provided.into_iter().chain([request.student_code.as_str()]));

    let mut out = String::new();
    let _ = write!(out, "{LABEL_NUM_QUESTIONS}: {}\n\n", request.num_questions);
    let _ = write!(
        out,
        "{LABEL_ASSIGNMENT}:\n{}\n\n",
        request.assignment_text.trim()
    );

    if request.topics.is_empty() {
        let _ = write!(out, "{LABEL_TOPICS}: any\n\n");
    } else {
        let _ = writeln!(out, "{LABEL_TOPICS}:");
        for topic in &request.topics {
            let _ = writeln!(out, "- {}", collapse_whitespace(topic));
        }
        out.push('\n');
    }

    let _ = write!(out, "{LABEL_LANGUAGE}: {language}\n\n");

    match provided {
        Some(code) => {
            let _ = writeln!(out, "{LABEL_PROVIDED_CODE}:");
            push_fenced(&mut out, &fence, language, code);
            out.push_str("\n\n");
        }
        None => {
            let _ = write!(out, "{LABEL_PROVIDED_CODE}: none\n\n");
        }
    }

    let _ = writeln!(out, "{LABEL_STUDENT_CODE}:");
    push_fenced(&mut out, &fence, language, &request.student_code);
    out.push_str("\n\n");
    out.push_str(OUTPUT_FORMAT_INSTRUCTIONS);
    PromptMessage::user(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("a repair prompt needs at least one problem to report")]
pub struct NoIssues;

/// Follow-up asking the model to fix a reply that could not be used.
pub fn build_repair_prompt(
    raw_response: &str,
    issues: &[ResponseIssue],
) -> Result<PromptMessage, NoIssues> {
    if issues.is_empty() {
        return Err(NoIssues);
    }
    let fence = fence_for([raw_response]);
    let mut out = String::from("Your previous reply could not be used.\n\nPREVIOUS REPLY:\n");
    push_fenced(&mut out, &fence, "text", raw_response);
    out.push_str("\n\nPROBLEMS:\n");
    for issue in issues {
        let _ = writeln!(out, "- {}: {}", issue.code(), issue);
    }
    out.push_str(
        "\nReply again, fixing every problem above and following this format exactly.\n\n",
    );
    out.push_str(OUTPUT_FORMAT_INSTRUCTIONS);
    Ok(PromptMessage::user(out))
}

/// Request fields recovered from a user prompt built by [`build_user_prompt`].
///
/// Topics come back whitespace-collapsed; everything else is exact, apart
/// from the assignment text which is trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptFields {
    pub num_questions: u32,
    pub assignment_text: String,
    pub topics: Vec<String>,
    pub language: String,
    pub provided_code: Option<String>,
    pub student_code: String,
}

/// Inverse of [`build_user_prompt`], used by the offline generator.
///
/// Sections are located from the end of the prompt backwards: fenced code
/// can never contain the fence, and topics and language never span lines,
/// so every marker found this way is the real one.
pub fn parse_user_prompt(content: &str) -> Option<PromptFields> {
    let body = content.strip_suffix(OUTPUT_FORMAT_INSTRUCTIONS)?;
    let body = body.strip_suffix("\n\n")?;

    let fence_len = body.len() - body.trim_end_matches('`').len();
    if fence_len < 3 {
        return None;
    }
    let fence = &body[body.len() - fence_len..];

    let (before_student, student_code) = take_fenced_block(body, LABEL_STUDENT_CODE, fence)?;
    let rest = before_student.strip_suffix("\n\n")?;

    let none_marker = ["\n\n", LABEL_PROVIDED_CODE, ": none"].concat();
    let (rest, provided_code) = if let Some(rest) = rest.strip_suffix(none_marker.as_str()) {
        (rest, None)
    } else {
        let (rest, code) = take_fenced_block(rest, LABEL_PROVIDED_CODE, fence)?;
        (rest.strip_suffix("\n\n")?, Some(code))
    };

    let lang_marker = ["\n\n", LABEL_LANGUAGE, ": "].concat();
    let at = rest.rfind(lang_marker.as_str())?;
    let language = rest[at + lang_marker.len()..].to_string();
    let rest = &rest[..at];

    let any_marker = ["\n\n", LABEL_TOPICS, ": any"].concat();
    let list_marker = ["\n\n", LABEL_TOPICS, ":\n"].concat();
    let (rest, topics) = if let Some(rest) = rest.strip_suffix(any_marker.as_str()) {
        (rest, Vec::new())
    } else {
        let at = rest.rfind(list_marker.as_str())?;
        let topics = rest[at + list_marker.len()..]
            .lines()
            .map(|l| l.strip_prefix("- ").map(ToString::to_string))
            .collect::<Option<Vec<_>>>()?;
        (&rest[..at], topics)
    };

    let head = [LABEL_NUM_QUESTIONS, ": "].concat();
    let rest = rest.strip_prefix(head.as_str())?;
    let (num, rest) = rest.split_once("\n\n")?;
    let num_questions = num.parse().ok()?;
    let assignment_head = [LABEL_ASSIGNMENT, ":\n"].concat();
    let assignment_text = rest.strip_prefix(assignment_head.as_str())?.to_string();

    Some(PromptFields {
        num_questions,
        assignment_text,
        topics,
        language,
        provided_code,
        student_code,
    })
}

/// Splits `text` ending in `LABEL:\n{fence}{lang}\n{code}\n{fence}` into the
/// text before the label and the code.
fn take_fenced_block<'a>(text: &'a str, label: &str, fence: &str) -> Option<(&'a str, String)> {
    let inner = text.strip_suffix(fence)?;
    let opening = [label, ":\n", fence].concat();
    let at = inner.rfind(opening.as_str())?;
    let after = &inner[at + opening.len()..];
    let (_lang, block) = after.split_once('\n')?;
    let code = block.strip_suffix('\n')?;
    Some((&text[..at], code.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::ParseError;
    use crate::question::ValidationError;

    fn request() -> GenerationRequest {
        GenerationRequest {
            num_questions: 2,
            assignment_text: "Develop Flat.java".into(),
            topics: vec!["inheritance and overriding".into()],
            language: "java".into(),
            provided_code: Some("public class Building\n{\n}\n".into()),
            student_code: "public class Flat extends Building {}\n".into(),
            student_ref: "s".into(),
        }
    }

    #[test]
    fn system_prompt_constant() {
        let p = build_system_prompt();
        assert_eq!(p.role, MessageRole::System);
        assert!(p.content.starts_with("You are an educational assistant"));
        assert!(p.content.ends_with("really test students understanding."));
        assert_eq!(p, build_system_prompt());
    }

    #[test]
    fn absent_skeleton_is_written_as_none() {
        let mut r = request();
        r.provided_code = None;
        assert!(build_user_prompt(&r)
            .content
            .contains("PROVIDED CODE: none"));
    }

    #[test]
    fn fence_outgrows_backticks_in_code() {
        let mut r = request();
        r.student_code = "let s = \"```\";\n// ````\n".into();
        let content = build_user_prompt(&r).content;
        assert!(content.contains("STUDENT CODE:\n`````java\n"));
        assert_eq!(
            parse_user_prompt(&content).unwrap().student_code,
            r.student_code
        );
    }

    #[test]
    fn round_trips_through_parser() {
        let r = request();
        let fields = parse_user_prompt(&build_user_prompt(&r).content).unwrap();
        assert_eq!(fields.num_questions, 2);
        assert_eq!(fields.assignment_text, r.assignment_text);
        assert_eq!(fields.topics, r.topics);
        assert_eq!(fields.language, "java");
        assert_eq!(fields.provided_code, r.provided_code);
        assert_eq!(fields.student_code, r.student_code);

        let mut bare = r.clone();
        bare.topics.clear();
        bare.provided_code = None;
        let fields = parse_user_prompt(&build_user_prompt(&bare).content).unwrap();
        assert!(fields.topics.is_empty());
        assert_eq!(fields.provided_code, None);
    }

    #[test]
    fn repair_prompt_lists_problems() {
        let p = build_repair_prompt(
            "not json",
            &[ResponseIssue::Parse(ParseError::ParseFailure)],
        )
        .unwrap();
        assert_eq!(p.role, MessageRole::User);
        assert!(p.content.contains("not json"));
        assert!(p.content.contains("PARSE_FAILURE"));
        assert!(p.content.ends_with(OUTPUT_FORMAT_INSTRUCTIONS));

        let p = build_repair_prompt(
            "[]",
            &[ResponseIssue::Question {
                position: 0,
                error: ValidationError::CorrectIndexOutOfRange {
                    index: Some(7),
                    option_count: 4,
                },
            }],
        )
        .unwrap();
        assert!(p.content.contains("CORRECT_INDEX_OUT_OF_RANGE"));
    }

    #[test]
    fn repair_prompt_refuses_empty_issue_list() {
        assert_eq!(build_repair_prompt("x", &[]), Err(NoIssues));
    }
}
