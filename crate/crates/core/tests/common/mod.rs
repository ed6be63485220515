#![allow(dead_code)]

use automcq_core::GenerationRequest;

pub const BUILDING: &str = include_str!("../fixtures/Building.java");
pub const FLAT: &str = include_str!("../fixtures/Flat.java");
pub const ASSIGNMENT: &str = include_str!("../fixtures/assignment.txt");

/// The worked example: two questions on inheritance and overriding for a
/// Flat subclass of the provided Building class.
pub fn fixture_request() -> GenerationRequest {
    GenerationRequest {
        num_questions: 2,
        assignment_text: ASSIGNMENT.trim().to_string(),
        topics: vec!["inheritance and overriding".into()],
        language: "java".into(),
        provided_code: Some(BUILDING.into()),
        student_code: FLAT.into(),
        student_ref: "student-1".into(),
    }
}
