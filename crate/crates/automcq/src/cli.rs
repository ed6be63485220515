//! The `automcq` command: `generate`, `grade` and `serve`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 backend failure, 3 I/O failure.
//! Standard output carries JSON; diagnostics go to standard error.

use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use automcq_core::{
    assemble_quiz, grade_sheet, skeleton_targeting_warnings, Answer, AnswerSheet,
    GenerationRequest, LanguageAllowList, QuestionId, QuizId, StudentRef, Timestamp,
};
use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use crate::config::{BackendConfig, ServiceConfig};
use crate::gateway::{ExchangeSink, Gateway, GenerationError, LlmExchange, SinkError};
use crate::quiz_file::{QuizFile, QuizFileError};
use crate::service::{self, AppState, TokenMap};
use crate::store::Store;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_BACKEND: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "automcq",
    version,
    about = "Generate and grade multiple-choice quizzes about student code"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a quiz file from a student's code.
    Generate(GenerateArgs),
    /// Grade an answer sheet against a quiz file.
    Grade(GradeArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// The student's source file.
    #[arg(long)]
    pub code: PathBuf,
    /// Assignment text, or a path to a file holding it.
    #[arg(long)]
    pub assignment: String,
    /// Comma-separated topics to focus on.
    #[arg(long, default_value = "")]
    pub topics: String,
    #[arg(long)]
    pub language: String,
    #[arg(long)]
    pub num: u32,
    /// Starter code handed out with the assignment.
    #[arg(long)]
    pub provided: Option<PathBuf>,
    /// mock or openai; defaults to AUTOMCQ_BACKEND, then mock.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "cli")]
    pub student_ref: String,
    /// Mock backend only: none, truncate, always_truncate, invalid_index or surplus.
    #[arg(long)]
    pub mock_fault: Option<String>,
    /// Append the model exchange as a JSON line to this file.
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradeArgs {
    #[arg(long)]
    pub quiz: PathBuf,
    /// JSON sheet with an `answers` array; -1 marks a flag.
    #[arg(long)]
    pub answers: PathBuf,
    /// Comma-separated ids of voided questions.
    #[arg(long, default_value = "")]
    pub voided: String,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Defaults to AUTOMCQ_PORT, then 8080.
    #[arg(long)]
    pub port: Option<u16>,
    /// Defaults to AUTOMCQ_BIND_ADDR, then 0.0.0.0.
    #[arg(long)]
    pub bind: Option<String>,
    /// Defaults to AUTOMCQ_DATA_DIR, then ./automcq-data.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Token map file; defaults to AUTOMCQ_TOKENS.
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    /// Allow resubmission, latest sheet wins.
    #[arg(long)]
    pub practice: bool,
}

/// A failure with its exit code and one-line diagnostic.
#[derive(Debug)]
pub struct CliError {
    pub exit_code: u8,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn backend(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_BACKEND,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<QuizFileError> for CliError {
    fn from(e: QuizFileError) -> Self {
        match e {
            QuizFileError::Io { .. } => Self::io(e.to_string()),
            _ => Self::invalid(e.to_string()),
        }
    }
}

pub async fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => generate(args).await,
        Command::Grade(args) => grade(args),
        Command::Serve(args) => serve(args).await,
    }
}

/// Items of a comma-separated list, trimmed, empties dropped.
pub fn split_csv(csv: &str) -> Vec<String> {
    csv.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {what} {}: {e}", path.display())))
}

fn print_json(value: &serde_json::Value) {
    println!("{value}");
}

/// Writes each exchange as one JSON line, synced before returning.
struct JsonlSink(Mutex<std::fs::File>);

impl ExchangeSink for JsonlSink {
    fn record(&self, exchange: &LlmExchange) -> Result<(), SinkError> {
        let mut line = serde_json::to_vec(exchange)?;
        line.push(b'\n');
        let mut file = self.0.lock().map_err(|_| "audit file poisoned")?;
        file.write_all(&line)?;
        file.sync_data()?;
        Ok(())
    }
}

async fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let student_code = read_text(&args.code, "code file")?;
    let provided_code = args
        .provided
        .as_deref()
        .map(|p| read_text(p, "provided code file"))
        .transpose()?;
    let assignment_path = Path::new(&args.assignment);
    let assignment_text = if assignment_path.is_file() {
        read_text(assignment_path, "assignment file")?
    } else {
        args.assignment.clone()
    };

    let request = GenerationRequest {
        num_questions: args.num,
        assignment_text,
        topics: split_csv(&args.topics),
        language: args.language,
        provided_code,
        student_code,
        student_ref: StudentRef(args.student_ref),
    };
    if let Err(violations) = request.validate(&LanguageAllowList::default()) {
        let message = violations
            .iter()
            .map(|v| format!("{}: {v}", v.code()))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CliError::invalid(format!("invalid request: {message}")));
    }

    let config = BackendConfig::from_lookup(|key| match key {
        "AUTOMCQ_BACKEND" if args.backend.is_some() => args.backend.clone(),
        "AUTOMCQ_MOCK_FAULT" if args.mock_fault.is_some() => args.mock_fault.clone(),
        _ => std::env::var(key).ok(),
    })
    .map_err(|e| CliError::invalid(e.to_string()))?;
    let gateway = Gateway::new(config).map_err(|e| CliError::invalid(e.to_string()))?;

    let memory = Mutex::new(Vec::new());
    let file_sink;
    let sink: &dyn ExchangeSink = match &args.audit {
        Some(path) => {
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| {
                    CliError::io(format!("cannot open audit file {}: {e}", path.display()))
                })?;
            file_sink = JsonlSink(Mutex::new(file));
            &file_sink
        }
        None => &memory,
    };

    let generated = match gateway.generate_questions(&request, sink).await {
        Ok(g) => g,
        Err(e @ GenerationError::Audit(_)) => return Err(CliError::io(e.to_string())),
        Err(e) => return Err(CliError::backend(e.to_string())),
    };
    let warnings = skeleton_targeting_warnings(
        &generated.questions,
        request.provided_code.as_deref(),
        &request.student_code,
    );
    for w in &warnings {
        eprintln!(
            "warning: {} may target provided code (line {}): {}",
            w.question_id,
            w.provided_line + 1,
            w.warning
        );
    }
    let quiz = assemble_quiz(
        QuizId(uuid::Uuid::new_v4().to_string()),
        request,
        generated.questions,
        Utc::now(),
    )
    .map_err(|e| CliError::backend(e.to_string()))?
    .publish();
    let file = QuizFile::new(quiz, warnings);
    file.save(&args.out)?;

    print_json(&json!({
        "quiz_id": file.quiz.quiz_id,
        "out": args.out,
        "questions": file.quiz.questions.len(),
        "skeleton_warnings": file.skeleton_warnings.len(),
        "exchange_id": generated.exchange.exchange_id,
        "parse_outcome": generated.exchange.parse_outcome,
        "attempts": generated.exchange.attempts,
    }));
    Ok(())
}

/// Sheet file; everything but `answers` is optional.
#[derive(Deserialize)]
struct SheetFile {
    #[serde(default)]
    quiz_id: Option<QuizId>,
    #[serde(default)]
    student_ref: Option<StudentRef>,
    answers: Vec<i64>,
    #[serde(default)]
    submitted_at: Option<Timestamp>,
}

fn grade(args: GradeArgs) -> Result<(), CliError> {
    let file = QuizFile::load(&args.quiz)?;
    let text = read_text(&args.answers, "answer sheet")?;
    let raw: SheetFile = serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("answer sheet is not valid: {e}")))?;
    let answers = raw
        .answers
        .iter()
        .map(|&v| {
            Answer::from_wire(v).ok_or_else(|| {
                CliError::invalid(format!(
                    "ANSWER_INDEX_OUT_OF_RANGE: {v} is neither an option index nor -1"
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sheet = AnswerSheet {
        quiz_id: raw.quiz_id.unwrap_or_else(|| file.quiz.quiz_id.clone()),
        student_ref: raw
            .student_ref
            .unwrap_or_else(|| StudentRef::from("anonymous")),
        answers,
        submitted_at: raw.submitted_at.unwrap_or_else(Utc::now),
    };
    let voided: BTreeSet<QuestionId> = split_csv(&args.voided)
        .into_iter()
        .map(QuestionId)
        .collect();
    let report =
        grade_sheet(&file.quiz, &sheet, &voided).map_err(|e| CliError::invalid(e.to_string()))?;
    print_json(&serde_json::to_value(&report).expect("reports always serialize"));
    Ok(())
}

async fn serve(args: ServeArgs) -> Result<(), CliError> {
    let mut config = ServiceConfig::from_env().map_err(|e| CliError::invalid(e.to_string()))?;
    if let Some(port) = args.port {
        config.port = port;
    }
    if let Some(bind) = args.bind {
        config.bind_addr = bind;
    }
    if let Some(dir) = args.data_dir {
        config.data_dir = dir;
    }
    if args.tokens.is_some() {
        config.tokens_path = args.tokens;
    }
    config.practice_mode |= args.practice;

    let tokens = match &config.tokens_path {
        Some(path) => TokenMap::load(path)
            .map_err(|e| CliError::io(format!("cannot read token map {}: {e}", path.display())))?
            .map_err(|e| CliError::invalid(e.to_string()))?,
        None => TokenMap::default(),
    };
    if tokens.is_empty() {
        eprintln!("warning: no tokens configured; every request will be rejected with 401");
    }

    let store = Store::open(&config.data_dir).map_err(|e| CliError::io(e.to_string()))?;
    let store = Arc::new(store);
    let gateway =
        Gateway::new(config.backend.clone()).map_err(|e| CliError::invalid(e.to_string()))?;

    let addr = format!("{}:{}", config.bind_addr, config.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| CliError::io(format!("cannot listen on {addr}: {e}")))?;
    let local: SocketAddr = listener
        .local_addr()
        .map_err(|e| CliError::io(format!("cannot read bound address: {e}")))?;

    let state = AppState::new(store.clone(), Arc::new(gateway), tokens)
        .with_languages(config.languages.clone())
        .with_practice_mode(config.practice_mode);
    print_json(&json!({
        "listening": local.to_string(),
        "data_dir": config.data_dir,
        "backend": config.backend.kind,
    }));
    let _ = std::io::stdout().flush();
    tracing::info!(%local, "serving");

    axum::serve(listener, service::router(state))
        .with_graceful_shutdown(shutdown_signal())
        .await
        .map_err(|e| CliError::io(format!("server failed: {e}")))?;

    store
        .checkpoint()
        .map_err(|e| CliError::io(format!("cannot flush store: {e}")))?;
    tracing::info!("stopped");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
