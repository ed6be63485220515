//! Deterministic offline stand-in for the model.
//!
//! Output depends only on a SHA-256 digest of the student code, topics and
//! question count, so identical requests always produce identical text.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::request::GenerationRequest;
use crate::skeleton::student_authored_lines;

/// Injected misbehaviour, for exercising the repair path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockFault {
    #[default]
    None,
    /// First attempt is cut short; the repair attempt is valid.
    Truncate,
    /// Every attempt is cut short.
    AlwaysTruncate,
    /// First attempt parses but its first question has an out-of-range index.
    InvalidIndex,
    /// Every attempt carries one question more than requested.
    Surplus,
}

impl MockFault {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "" | "none" => Some(Self::None),
            "truncate" => Some(Self::Truncate),
            "always_truncate" => Some(Self::AlwaysTruncate),
            "invalid_index" => Some(Self::InvalidIndex),
            "surplus" => Some(Self::Surplus),
            _ => None,
        }
    }
}

const TEMPLATES: [(&str, [&str; 4]); 4] = [
    (
        "In your code, what is the main purpose of {subject}?",
        [
            "It provides behaviour that other parts of the program rely on",
            "It is never used and could be deleted without any effect",
            "It only exists to satisfy the compiler and does nothing at run time",
            "It reads input typed by the user at the console",
        ],
    ),
    (
        "What would most likely happen if {subject} were removed from your submission?",
        [
            "Code that refers to it would no longer compile or behave correctly",
            "Nothing, the program would behave exactly the same",
            "The program would produce the same output but run faster",
            "Only the comments in the file would change",
        ],
    ),
    (
        "Which statement best describes how {subject} is used in your code?",
        [
            "It is defined once and then referred to where its behaviour is needed",
            "It is copied into every method that needs it",
            "It is only used while the program is being compiled",
            "It is used exclusively for printing error messages",
        ],
    ),
    (
        "Why does your solution need {subject}?",
        [
            "Without it the required behaviour for this task would be missing",
            "It was part of the provided code and cannot be changed",
            "It improves performance but is not otherwise needed",
            "It is required by every program written in this language",
        ],
    ),
];

const NOT_IDENTIFIERS: &[&str] = &[
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "return",
    "super",
    "this",
    "self",
    "new",
    "sizeof",
    "print",
    "println",
    "printf",
    "elif",
    "with",
    "assert",
    "synchronized",
    "and",
    "or",
    "not",
    "in",
    "is",
    "len",
    "range",
    "int",
    "str",
    "float",
    "double",
    "char",
    "long",
    "bool",
];

const DECLARATION_KEYWORDS: &[&str] = &[
    "class",
    "struct",
    "interface",
    "enum",
    "def",
    "fn",
    "function",
    "trait",
    "record",
];

#[derive(Serialize)]
struct MockQuestion {
    stem: String,
    options: Vec<String>,
    correct_index: usize,
    explanation: String,
    topic: String,
}

fn digest(num_questions: u32, topics: &[String], student_code: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(num_questions.to_le_bytes());
    h.update((topics.len() as u64).to_le_bytes());
    for t in topics {
        h.update((t.len() as u64).to_le_bytes());
        h.update(t.as_bytes());
    }
    h.update(student_code.as_bytes());
    h.finalize().into()
}

/// Declared or called names in order of first appearance.
pub fn extract_identifiers(code: &str) -> Vec<String> {
    let bytes = code.as_bytes();
    let mut found: Vec<String> = Vec::new();
    let mut previous: Option<&str> = None;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &code[start..i];
            let mut j = i;
            while j < bytes.len() && (bytes[j] == b' ' || bytes[j] == b'\t') {
                j += 1;
            }
            let declared = previous.is_some_and(|p| DECLARATION_KEYWORDS.contains(&p));
            let called = j < bytes.len() && bytes[j] == b'(';
            let candidate = (declared || called)
                && !NOT_IDENTIFIERS.contains(&word)
                && !DECLARATION_KEYWORDS.contains(&word);
            if candidate && !found.iter().any(|f| f == word) {
                found.push(word.to_string());
            }
            previous = Some(word);
        } else {
            if !c.is_ascii_whitespace() {
                previous = None;
            }
            i += 1;
        }
    }
    found
}

/// Identifiers from the lines the student wrote, or from all of the code
/// when the authored lines declare none.
fn subjects(request: &GenerationRequest) -> Vec<String> {
    let lines: Vec<&str> = request.student_code.lines().collect();
    let authored: Vec<&str> =
        student_authored_lines(request.provided_code.as_deref(), &request.student_code)
            .into_iter()
            .map(|i| lines[i])
            .collect();
    let found = extract_identifiers(&authored.join("\n"));
    if found.is_empty() {
        extract_identifiers(&request.student_code)
    } else {
        found
    }
}

fn questions(request: &GenerationRequest, count: usize) -> Vec<MockQuestion> {
    let h = digest(
        request.num_questions,
        &request.topics,
        &request.student_code,
    );
    let byte = |k: usize| h[k % h.len()] as usize;
    let subjects = subjects(request);
    (0..count)
        .map(|i| {
            let subject = if subjects.is_empty() {
                String::from("the code you submitted")
            } else {
                format!("`{}`", subjects[(byte(i) + i) % subjects.len()])
            };
            let (stem, options) = TEMPLATES[(byte(i + 10) + i) % TEMPLATES.len()];
            let correct_index = byte(i + 20) % options.len();
            // Rotate so the sound answer (listed first) lands on correct_index.
            let options: Vec<String> = (0..options.len())
                .map(|k| options[(k + options.len() - correct_index) % options.len()].to_string())
                .collect();
            let topic = if request.topics.is_empty() {
                String::from("code comprehension")
            } else {
                request.topics[i % request.topics.len()].trim().to_string()
            };
            MockQuestion {
                stem: stem.replace("{subject}", &subject),
                explanation: format!(
                    "\"{}\" is correct: {subject} is part of the behaviour this task asks for.",
                    options[correct_index]
                ),
                options,
                correct_index,
                topic,
            }
        })
        .collect()
}

/// Valid generator output for `request`: exactly `num_questions` questions.
pub fn mock_generate(request: &GenerationRequest) -> String {
    render(&questions(request, request.num_questions as usize))
}

/// Output for the given (1-based) attempt under a fault mode.
pub fn mock_generate_with_fault(
    request: &GenerationRequest,
    fault: MockFault,
    attempt: u32,
) -> String {
    match (fault, attempt) {
        (MockFault::Truncate, 1) | (MockFault::AlwaysTruncate, _) => {
            truncate(mock_generate(request))
        }
        (MockFault::InvalidIndex, 1) => {
            let mut qs = questions(request, request.num_questions as usize);
            if let Some(q) = qs.first_mut() {
                q.correct_index = q.options.len() + 3;
            }
            render(&qs)
        }
        (MockFault::Surplus, _) => render(&questions(request, request.num_questions as usize + 1)),
        _ => mock_generate(request),
    }
}

fn render(questions: &[MockQuestion]) -> String {
    serde_json::to_string_pretty(questions).unwrap_or_default()
}

/// Drops the last 40% of the text, leaving the outer array unterminated.
fn truncate(mut text: String) -> String {
    let mut cut = text.len() * 3 / 5;
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    text.truncate(cut);
    text
}
