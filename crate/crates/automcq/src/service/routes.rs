use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::Deserialize;

use automcq_core::{
    assemble_quiz, quiz_report, render_for_student, skeleton_targeting_warnings, Answer,
    AnswerSheet, FlagError, FlagId, FlagRecord, FlagStatus, GenerationRequest, QuizId, QuizReport,
    StudentRef, StudentView,
};

use super::auth::{Caller, Role};
use super::error::{ApiError, ApiJson};
use super::{submission_view, AppState, FlagView, LecturerQuizView, SubmissionView};
use crate::gateway::GenerationError;
use crate::store::{Op, State as Data, StoredQuiz};

pub(super) fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/quizzes", post(create_quiz))
        .route("/api/quizzes/{id}", get(get_quiz))
        .route(
            "/api/quizzes/{id}/answers",
            post(submit_answers).get(get_answers),
        )
        .route("/api/quizzes/{id}/report", get(get_report))
        .route("/api/review/flags", get(list_flags))
        .route("/api/review/flags/{id}/resolution", post(resolve_flag))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such route") })
        .with_state(state)
}

fn new_id() -> String {
    uuid::Uuid::new_v4().to_string()
}

fn quiz_not_found(id: &QuizId) -> ApiError {
    ApiError::not_found("quiz", id)
}

/// A generation request; `student_ref` defaults to the caller.
#[derive(Deserialize)]
struct CreateQuiz {
    num_questions: u32,
    assignment_text: String,
    #[serde(default)]
    topics: Vec<String>,
    language: String,
    #[serde(default)]
    provided_code: Option<String>,
    student_code: String,
    #[serde(default)]
    student_ref: Option<StudentRef>,
}

async fn create_quiz(
    State(st): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<CreateQuiz>,
) -> Result<(StatusCode, Json<StudentView>), ApiError> {
    let student_ref = match body.student_ref {
        Some(s) if caller.role == Role::Student && s != caller.subject => {
            return Err(ApiError::forbidden(
                "students can only request quizzes for themselves",
            ))
        }
        Some(s) => s,
        None => caller.subject.clone(),
    };
    let request = GenerationRequest {
        num_questions: body.num_questions,
        assignment_text: body.assignment_text,
        topics: body.topics,
        language: body.language,
        provided_code: body.provided_code,
        student_code: body.student_code,
        student_ref,
    };
    if let Err(violations) = request.validate(&st.languages) {
        let message = violations
            .iter()
            .map(|v| format!("{}: {v}", v.code()))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(ApiError::bad_request("INVALID_REQUEST", message).with_details(violations));
    }

    let generated = match st.gateway.generate_questions(&request, &*st.store).await {
        Ok(g) => g,
        Err(GenerationError::Audit(m)) => {
            return Err(ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "AUDIT_FAILED",
                m,
            ))
        }
        Err(e) => {
            let err = ApiError::new(StatusCode::BAD_GATEWAY, e.code(), e.to_string());
            return Err(match e {
                GenerationError::Failed { issues } => {
                    err.with_details(serde_json::json!({ "issues": issues }))
                }
                _ => err,
            });
        }
    };

    let skeleton_warnings = skeleton_targeting_warnings(
        &generated.questions,
        request.provided_code.as_deref(),
        &request.student_code,
    );
    let quiz = assemble_quiz(QuizId(new_id()), request, generated.questions, Utc::now())
        .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, e.code(), e.to_string()))?
        .publish();
    let view = render_for_student(&quiz).map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "RENDER_FAILED",
            e.to_string(),
        )
    })?;
    st.store.commit(Op::PutQuiz(Box::new(StoredQuiz {
        quiz,
        skeleton_warnings,
        exchange_id: Some(generated.exchange.exchange_id),
    })))?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_quiz(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<QuizId>,
) -> Result<Response, ApiError> {
    st.store.read(|data| {
        let stored = data.quiz(&id).ok_or_else(|| quiz_not_found(&id))?;
        Ok(match caller.role {
            Role::Student => {
                Json(render_for_student(&stored.quiz).map_err(|_| quiz_not_found(&id))?)
                    .into_response()
            }
            Role::Lecturer => Json(LecturerQuizView {
                quiz: stored.quiz.clone(),
                skeleton_warnings: stored.skeleton_warnings.clone(),
                voided: data.voided(&id).into_iter().collect(),
                exchange_id: stored.exchange_id.clone(),
            })
            .into_response(),
        })
    })
}

/// An answer sheet; quiz and student are implied by the route and token.
#[derive(Deserialize)]
struct SubmitAnswers {
    answers: Vec<i64>,
    #[serde(default)]
    quiz_id: Option<QuizId>,
    #[serde(default)]
    student_ref: Option<StudentRef>,
}

fn view_of(data: &Data, sheet: &AnswerSheet) -> Result<SubmissionView, ApiError> {
    let stored = data
        .quiz(&sheet.quiz_id)
        .ok_or_else(|| quiz_not_found(&sheet.quiz_id))?;
    submission_view(
        &stored.quiz,
        sheet,
        &data.voided(&sheet.quiz_id),
        data.flags_for_quiz(&sheet.quiz_id),
    )
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.code(), e.to_string()))
}

async fn submit_answers(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<QuizId>,
    ApiJson(body): ApiJson<SubmitAnswers>,
) -> Result<Json<SubmissionView>, ApiError> {
    caller.require(Role::Student)?;
    if let Some(sheet_quiz) = &body.quiz_id {
        if sheet_quiz != &id {
            return Err(ApiError::bad_request(
                "SHEET_QUIZ_MISMATCH",
                format!("sheet is for quiz {sheet_quiz}, not {id}"),
            ));
        }
    }
    if body
        .student_ref
        .as_ref()
        .is_some_and(|s| s != &caller.subject)
    {
        return Err(ApiError::forbidden(
            "students can only submit their own answers",
        ));
    }
    let answers = body
        .answers
        .iter()
        .enumerate()
        .map(|(position, &v)| {
            Answer::from_wire(v).ok_or_else(|| {
                ApiError::bad_request(
                    "ANSWER_INDEX_OUT_OF_RANGE",
                    format!("answer {v} at position {position} is neither an option index nor -1"),
                )
                .with_details(serde_json::json!({ "position": position, "answer": v }))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let _guard = st.locks.lock(&id).await;
    let now = Utc::now();
    let sheet = AnswerSheet {
        quiz_id: id.clone(),
        student_ref: caller.subject.clone(),
        answers,
        submitted_at: now,
    };
    let op = st.store.read(|data| {
        let stored = data.quiz(&id).ok_or_else(|| quiz_not_found(&id))?;
        if let Some(prior) = data.sheet_for(&id, &caller.subject) {
            if !st.practice_mode {
                return Err(ApiError::conflict(
                    "ALREADY_SUBMITTED",
                    format!(
                        "{} has already submitted answers for quiz {id}",
                        caller.subject
                    ),
                )
                .with_details(view_of(data, prior)?));
            }
        }
        automcq_core::check_sheet(&stored.quiz, &sheet)
            .map_err(|e| ApiError::bad_request(e.code(), e.to_string()))?;
        let new_flags = stored
            .quiz
            .questions
            .iter()
            .zip(&sheet.answers)
            .filter(|(q, a)| {
                **a == Answer::Flag
                    && data
                        .pending_flag(&id, &q.question_id, &caller.subject)
                        .is_none()
            })
            .map(|(q, _)| {
                FlagRecord::open(
                    FlagId(new_id()),
                    id.clone(),
                    q.question_id.clone(),
                    caller.subject.clone(),
                    now,
                )
            })
            .collect();
        Ok(Op::PutSheet {
            sheet: sheet.clone(),
            new_flags,
        })
    })?;
    st.store.commit(op)?;
    Ok(Json(st.store.read(|data| view_of(data, &sheet))?))
}

#[derive(Deserialize)]
struct AnswersQuery {
    student: Option<StudentRef>,
}

/// A student's own graded submission; lecturers name the student.
async fn get_answers(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<QuizId>,
    Query(query): Query<AnswersQuery>,
) -> Result<Json<SubmissionView>, ApiError> {
    let student = match caller.role {
        Role::Student => match query.student {
            Some(s) if s != caller.subject => {
                return Err(ApiError::forbidden(
                    "students can only read their own answers",
                ))
            }
            _ => caller.subject,
        },
        Role::Lecturer => query.student.ok_or_else(|| {
            ApiError::bad_request("MISSING_STUDENT", "lecturers must pass ?student=<ref>")
        })?,
    };
    st.store.read(|data| {
        data.quiz(&id).ok_or_else(|| quiz_not_found(&id))?;
        let sheet = data.sheet_for(&id, &student).ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "NO_SUBMISSION",
                format!("{student} has not submitted answers for quiz {id}"),
            )
        })?;
        view_of(data, sheet).map(Json)
    })
}

async fn get_report(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<QuizId>,
) -> Result<Json<QuizReport>, ApiError> {
    caller.require(Role::Lecturer)?;
    st.store.read(|data| {
        let stored = data.quiz(&id).ok_or_else(|| quiz_not_found(&id))?;
        quiz_report(&stored.quiz, data.sheets(&id), &data.voided(&id))
            .map(Json)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.code(), e.to_string()))
    })
}

#[derive(Deserialize)]
struct FlagsQuery {
    status: Option<String>,
}

fn parse_status(s: &str) -> Result<FlagStatus, ApiError> {
    FlagStatus::parse(s).ok_or_else(|| {
        ApiError::bad_request(
            "INVALID_STATUS",
            format!("unknown status {s:?}; expected pending, resolved_valid or resolved_invalid"),
        )
    })
}

async fn list_flags(
    State(st): State<AppState>,
    caller: Caller,
    Query(query): Query<FlagsQuery>,
) -> Result<Json<Vec<FlagView>>, ApiError> {
    caller.require(Role::Lecturer)?;
    let status = query.status.as_deref().map(parse_status).transpose()?;
    let mut views: Vec<FlagView> = st.store.read(|data| {
        data.flags
            .values()
            .filter(|f| status.is_none_or(|s| f.status == s))
            .filter_map(|f| {
                let stored = data.quiz(&f.quiz_id)?;
                let request = &stored.quiz.request;
                Some(FlagView {
                    flag: f.clone(),
                    question: stored.quiz.question(&f.question_id)?.clone(),
                    language: request.language.clone(),
                    assignment_text: request.assignment_text.clone(),
                    provided_code: request.provided_code.clone(),
                    student_code: request.student_code.clone(),
                })
            })
            .collect()
    });
    views.sort_by(|a, b| {
        (a.flag.created_at, &a.flag.flag_id).cmp(&(b.flag.created_at, &b.flag.flag_id))
    });
    Ok(Json(views))
}

#[derive(Deserialize)]
struct Resolution {
    status: String,
    #[serde(default)]
    note: Option<String>,
}

async fn resolve_flag(
    State(st): State<AppState>,
    caller: Caller,
    Path(id): Path<FlagId>,
    ApiJson(body): ApiJson<Resolution>,
) -> Result<Json<FlagRecord>, ApiError> {
    caller.require(Role::Lecturer)?;
    let status = parse_status(&body.status)?;
    if !status.is_resolved() {
        let e = FlagError::InvalidResolution;
        return Err(ApiError::bad_request(e.code(), e.to_string()));
    }
    let quiz = st
        .store
        .read(|data| data.flags.get(&id).map(|f| f.quiz_id.clone()))
        .ok_or_else(|| ApiError::not_found("flag", &id))?;

    let _guard = st.locks.lock(&quiz).await;
    let mut flag = st
        .store
        .read(|data| data.flags.get(&id).cloned())
        .ok_or_else(|| ApiError::not_found("flag", &id))?;
    let note = body.note.filter(|n| !n.trim().is_empty());
    flag.resolve(status, note, Utc::now())
        .map_err(|e| match e {
            FlagError::AlreadyResolved(_) => ApiError::conflict(e.code(), e.to_string()),
            FlagError::InvalidResolution => ApiError::bad_request(e.code(), e.to_string()),
        })?;
    st.store.commit(Op::PutFlag(flag.clone()))?;
    Ok(Json(flag))
}
