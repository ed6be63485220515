use automcq_core::mock::mock_generate_with_fault;
use automcq_core::{parse_user_prompt, GenerationRequest, MessageRole, MockFault, PromptMessage};

/// Offline backend. Reads the request back out of the user prompt and
/// answers with [`automcq_core::mock_generate`] output; the attempt number
/// (for fault injection) is the count of user messages.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend {
    fault: MockFault,
}

impl MockBackend {
    pub fn new(fault: MockFault) -> Self {
        Self { fault }
    }

    pub fn complete(&self, messages: &[PromptMessage]) -> String {
        let users: Vec<&PromptMessage> = messages
            .iter()
            .filter(|m| m.role == MessageRole::User)
            .collect();
        let attempt = users.len().max(1) as u32;
        let first = users.first().map(|m| m.content.as_str()).unwrap_or("");
        let request = match parse_user_prompt(first) {
            Some(fields) => GenerationRequest {
                num_questions: fields.num_questions,
                assignment_text: fields.assignment_text,
                topics: fields.topics,
                language: fields.language,
                provided_code: fields.provided_code,
                student_code: fields.student_code,
                student_ref: "mock".into(),
            },
            // Not one of our prompts: answer with a single question about it.
            None => GenerationRequest {
                num_questions: 1,
                assignment_text: String::new(),
                topics: Vec::new(),
                language: String::new(),
                provided_code: None,
                student_code: messages
                    .iter()
                    .map(|m| m.content.as_str())
                    .collect::<Vec<_>>()
                    .join("\n"),
                student_ref: "mock".into(),
            },
        };
        mock_generate_with_fault(&request, self.fault, attempt)
    }
}
