//! On-disk quiz documents in lecturer form, answers included.

use std::path::{Path, PathBuf};

use automcq_core::{Quiz, SkeletonWarning};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizFile {
    pub format_version: u32,
    pub quiz: Quiz,
    #[serde(default)]
    pub skeleton_warnings: Vec<SkeletonWarning>,
}

#[derive(Debug, Error)]
pub enum QuizFileError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a quiz file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported format_version {0}, expected {FORMAT_VERSION}")]
    Version(u32),
    #[error("inconsistent quiz: {0}")]
    Quiz(#[from] automcq_core::QuizError),
}

impl QuizFile {
    pub fn new(quiz: Quiz, skeleton_warnings: Vec<SkeletonWarning>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            quiz,
            skeleton_warnings,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, QuizFileError> {
        let file: Self = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(QuizFileError::Version(file.format_version));
        }
        file.quiz.check()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("quiz files always serialize");
        text.push('\n');
        text
    }

    pub fn load(path: &Path) -> Result<Self, QuizFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| QuizFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), QuizFileError> {
        std::fs::write(path, self.to_json()).map_err(|source| QuizFileError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
