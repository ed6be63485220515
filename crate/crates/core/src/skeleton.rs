//! Telling student-authored code apart from the provided skeleton.
//!
//! Detection is a trimmed-line set difference, not a diff: it ignores line
//! order and only answers "did this line come from the skeleton".

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ids::QuestionId;
use crate::question::MCQuestion;
use crate::text::strip_whitespace;

/// Minimum quoted run, in non-whitespace characters, that counts as quoting a line.
pub const MIN_QUOTE_CHARS: usize = 20;

/// Zero-based indices of `student_code` lines the student wrote themselves.
///
/// Blank lines never count. Without a skeleton every non-blank line counts.
pub fn student_authored_lines(provided_code: Option<&str>, student_code: &str) -> BTreeSet<usize> {
    let provided: BTreeSet<&str> = provided_code
        .map(|p| p.lines().map(str::trim).collect())
        .unwrap_or_default();
    student_code
        .lines()
        .enumerate()
        .filter(|(_, line)| {
            let line = line.trim();
            !line.is_empty() && !provided.contains(line)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Advisory note that a question appears to target skeleton code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonWarning {
    pub question_id: QuestionId,
    pub warning: String,
    /// Zero-based line of `provided_code` that was quoted.
    pub provided_line: usize,
}

/// Flags questions whose stem or options quote a skeleton-only line.
///
/// A quote is any run of [`MIN_QUOTE_CHARS`] non-whitespace characters of a
/// skeleton line that shows up in the question text (whitespace ignored on
/// both sides) and does not also show up in a student-authored line.
pub fn skeleton_targeting_warnings(
    questions: &[MCQuestion],
    provided_code: Option<&str>,
    student_code: &str,
) -> Vec<SkeletonWarning> {
    let Some(provided) = provided_code else {
        return Vec::new();
    };
    let student_lines: Vec<&str> = student_code.lines().collect();
    let authored: Vec<String> = student_authored_lines(provided_code, student_code)
        .into_iter()
        .map(|i| strip_whitespace(student_lines[i]))
        .collect();

    // (line index, trimmed line, windows not found in any authored line)
    let skeleton: Vec<(usize, &str, Vec<String>)> = provided
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let windows: Vec<String> = windows(&strip_whitespace(line))
                .into_iter()
                .filter(|w| !authored.iter().any(|a| a.contains(w.as_str())))
                .collect();
            (!windows.is_empty()).then(|| (i, line.trim(), windows))
        })
        .collect();

    let mut warnings = Vec::new();
    for q in questions {
        let texts: Vec<String> = core::iter::once(&q.stem)
            .chain(&q.options)
            .map(|t| strip_whitespace(t))
            .collect();
        let quoted = skeleton.iter().find(|(_, _, ws)| {
            ws.iter()
                .any(|w| texts.iter().any(|t| t.contains(w.as_str())))
        });
        if let Some((line_no, line, _)) = quoted {
            warnings.push(SkeletonWarning {
                question_id: q.question_id.clone(),
                warning: format!("question quotes provided skeleton code: `{line}`"),
                provided_line: *line_no,
            });
        }
    }
    warnings
}

fn windows(stripped: &str) -> Vec<String> {
    let chars: Vec<char> = stripped.chars().collect();
    if chars.len() < MIN_QUOTE_CHARS {
        return Vec::new();
    }
    let mut out: Vec<String> = chars
        .windows(MIN_QUOTE_CHARS)
        .map(|w| w.iter().collect())
        .collect();
    out.sort();
    out.dedup();
    out
}
