//! Single-directory document store: an fsync'd append log plus snapshots.
//!
//! Layout of the data directory:
//!
//! - `LOCK`: held exclusively while a store is open
//! - `snapshot.json`: full state as of `seq`
//! - `wal.jsonl`: one `{seq, op, record}` line per write since the snapshot
//!
//! A write is acknowledged only after its log line is synced. On open the
//! snapshot is loaded and newer log lines are replayed; a torn final line
//! (crash mid-append) is dropped.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use automcq_core::grade::check_sheet;
use automcq_core::{
    voided_questions, AnswerSheet, FlagId, FlagRecord, FlagStatus, QuestionId, Quiz, QuizId,
    SkeletonWarning, StudentRef,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{ExchangeSink, LlmExchange, SinkError};

const SNAPSHOT: &str = "snapshot.json";
const WAL: &str = "wal.jsonl";
const LOCK: &str = "LOCK";
const DEFAULT_CHECKPOINT_EVERY: usize = 1000;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("data directory {0} is in use by another process")]
    Locked(PathBuf),
    #[error("store is corrupt: {0}")]
    Corrupt(String),
    #[error("write rejected: {0}")]
    Conflict(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A quiz together with what was computed when it was created.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredQuiz {
    pub quiz: Quiz,
    #[serde(default)]
    pub skeleton_warnings: Vec<SkeletonWarning>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exchange_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "record", rename_all = "snake_case")]
pub enum Op {
    PutQuiz(Box<StoredQuiz>),
    /// Replaces any earlier sheet by the same student for the same quiz and
    /// opens the flags raised by it, atomically.
    PutSheet {
        sheet: AnswerSheet,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        new_flags: Vec<FlagRecord>,
    },
    PutFlag(FlagRecord),
    PutExchange(Box<LlmExchange>),
}

#[derive(Debug, Serialize, Deserialize)]
struct LogEntry {
    seq: u64,
    #[serde(flatten)]
    op: Op,
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    state: State,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub quizzes: BTreeMap<QuizId, StoredQuiz>,
    pub sheets: BTreeMap<QuizId, Vec<AnswerSheet>>,
    pub flags: BTreeMap<FlagId, FlagRecord>,
    pub exchanges: Vec<LlmExchange>,
}

impl State {
    pub fn quiz(&self, id: &QuizId) -> Option<&StoredQuiz> {
        self.quizzes.get(id)
    }

    pub fn sheets(&self, quiz: &QuizId) -> &[AnswerSheet] {
        self.sheets.get(quiz).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sheet_for(&self, quiz: &QuizId, student: &StudentRef) -> Option<&AnswerSheet> {
        self.sheets(quiz).iter().find(|s| &s.student_ref == student)
    }

    pub fn flags_for_quiz<'a>(
        &'a self,
        quiz: &'a QuizId,
    ) -> impl Iterator<Item = &'a FlagRecord> + 'a {
        self.flags.values().filter(move |f| &f.quiz_id == quiz)
    }

    pub fn voided(&self, quiz: &QuizId) -> std::collections::BTreeSet<QuestionId> {
        voided_questions(self.flags_for_quiz(quiz))
    }

    pub fn pending_flag(
        &self,
        quiz: &QuizId,
        question: &QuestionId,
        student: &StudentRef,
    ) -> Option<&FlagRecord> {
        self.flags
            .values()
            .find(|f| &f.quiz_id == quiz && f.is_pending_for(question, student))
    }

    /// Rejects writes that would break a stored invariant.
    pub fn check(&self, op: &Op) -> Result<(), StoreError> {
        let conflict = |m: String| Err(StoreError::Conflict(m));
        match op {
            Op::PutQuiz(stored) => {
                stored
                    .quiz
                    .check()
                    .map_err(|e| StoreError::Conflict(e.to_string()))?;
                match self.quiz(&stored.quiz.quiz_id) {
                    Some(existing) if existing.quiz.is_published() && existing != &**stored => {
                        conflict(format!(
                            "quiz {} is published and immutable",
                            stored.quiz.quiz_id
                        ))
                    }
                    _ => Ok(()),
                }
            }
            Op::PutSheet { sheet, new_flags } => {
                let Some(stored) = self.quiz(&sheet.quiz_id) else {
                    return conflict(format!("unknown quiz {}", sheet.quiz_id));
                };
                check_sheet(&stored.quiz, sheet)
                    .map_err(|e| StoreError::Conflict(e.to_string()))?;
                for (i, flag) in new_flags.iter().enumerate() {
                    if flag.quiz_id != sheet.quiz_id || flag.student_ref != sheet.student_ref {
                        return conflict(format!(
                            "flag {} does not belong to this sheet",
                            flag.flag_id
                        ));
                    }
                    if self.flags.contains_key(&flag.flag_id) {
                        return conflict(format!("flag {} already exists", flag.flag_id));
                    }
                    if new_flags[..i]
                        .iter()
                        .any(|f| f.flag_id == flag.flag_id || f.question_id == flag.question_id)
                    {
                        return conflict(format!("flag {} repeats an earlier one", flag.flag_id));
                    }
                    self.check_flag(flag)?;
                }
                Ok(())
            }
            Op::PutFlag(flag) => self.check_flag(flag),
            Op::PutExchange(_) => Ok(()),
        }
    }

    fn check_flag(&self, flag: &FlagRecord) -> Result<(), StoreError> {
        let conflict = |m: String| Err(StoreError::Conflict(m));
        if !flag.is_consistent() {
            return conflict("resolved_at must be set exactly when resolved".into());
        }
        let Some(stored) = self.quiz(&flag.quiz_id) else {
            return conflict(format!("unknown quiz {}", flag.quiz_id));
        };
        if stored.quiz.question(&flag.question_id).is_none() {
            return conflict(format!("unknown question {}", flag.question_id));
        }
        match self.flags.get(&flag.flag_id) {
            Some(existing) if existing == flag => Ok(()),
            Some(existing) => {
                let same_subject = existing.quiz_id == flag.quiz_id
                    && existing.question_id == flag.question_id
                    && existing.student_ref == flag.student_ref;
                if existing.status == FlagStatus::Pending
                    && flag.status.is_resolved()
                    && same_subject
                {
                    Ok(())
                } else {
                    conflict(format!(
                        "flag {} cannot move from {} to {}",
                        flag.flag_id,
                        existing.status.as_str(),
                        flag.status.as_str()
                    ))
                }
            }
            None if flag.status != FlagStatus::Pending => {
                conflict("new flags must be pending".into())
            }
            None => match self.pending_flag(&flag.quiz_id, &flag.question_id, &flag.student_ref) {
                Some(other) => conflict(format!(
                    "student already has pending flag {} on this question",
                    other.flag_id
                )),
                None => Ok(()),
            },
        }
    }

    fn apply(&mut self, op: Op) {
        match op {
            Op::PutQuiz(stored) => {
                self.quizzes.insert(stored.quiz.quiz_id.clone(), *stored);
            }
            Op::PutSheet { sheet, new_flags } => {
                for flag in new_flags {
                    self.flags.insert(flag.flag_id.clone(), flag);
                }
                let sheets = self.sheets.entry(sheet.quiz_id.clone()).or_default();
                match sheets
                    .iter_mut()
                    .find(|s| s.student_ref == sheet.student_ref)
                {
                    Some(existing) => *existing = sheet,
                    None => sheets.push(sheet),
                }
            }
            Op::PutFlag(flag) => {
                self.flags.insert(flag.flag_id.clone(), flag);
            }
            Op::PutExchange(exchange) => self.exchanges.push(*exchange),
        }
    }
}

struct LogWriter {
    file: File,
    seq: u64,
    since_checkpoint: usize,
}

pub struct Store {
    dir: PathBuf,
    state: RwLock<State>,
    log: Mutex<LogWriter>,
    checkpoint_every: usize,
    _lock: File,
}

impl Store {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::open_with(dir, DEFAULT_CHECKPOINT_EVERY)
    }

    /// `checkpoint_every` log entries trigger a snapshot; zero disables that.
    pub fn open_with(dir: impl AsRef<Path>, checkpoint_every: usize) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;

        let lock_path = dir.join(LOCK);
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(io_err(&lock_path))?;
        lock.try_lock().map_err(|e| match e {
            fs::TryLockError::WouldBlock => StoreError::Locked(dir.clone()),
            fs::TryLockError::Error(source) => StoreError::Io {
                path: lock_path.clone(),
                source,
            },
        })?;

        let snapshot_path = dir.join(SNAPSHOT);
        let (mut seq, mut state) = match fs::read(&snapshot_path) {
            Ok(bytes) => {
                let snap: Snapshot = serde_json::from_slice(&bytes)
                    .map_err(|e| StoreError::Corrupt(format!("{SNAPSHOT}: {e}")))?;
                (snap.seq, snap.state)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (0, State::default()),
            Err(e) => return Err(io_err(&snapshot_path)(e)),
        };

        let wal_path = dir.join(WAL);
        let bytes = match fs::read(&wal_path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(&wal_path)(e)),
        };
        let mut good_len = 0;
        let mut replayed = 0;
        let mut rest = bytes.as_slice();
        while !rest.is_empty() {
            let Some(nl) = rest.iter().position(|b| *b == b'\n') else {
                break; // unterminated tail: torn write
            };
            let line = &rest[..nl];
            let entry: LogEntry = match serde_json::from_slice(line) {
                Ok(entry) => entry,
                Err(e) if rest.len() == nl + 1 => {
                    tracing::warn!(error = %e, "dropping unreadable final log line");
                    break;
                }
                Err(e) => {
                    return Err(StoreError::Corrupt(format!(
                        "{WAL} line at byte {good_len}: {e}"
                    )))
                }
            };
            if entry.seq > seq {
                state.check(&entry.op).map_err(|e| {
                    StoreError::Corrupt(format!("replaying seq {}: {e}", entry.seq))
                })?;
                state.apply(entry.op);
                seq = entry.seq;
                replayed += 1;
            }
            good_len += nl + 1;
            rest = &rest[nl + 1..];
        }

        let mut file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .read(true)
            .write(true)
            .open(&wal_path)
            .map_err(io_err(&wal_path))?;
        if good_len < bytes.len() {
            file.set_len(good_len as u64).map_err(io_err(&wal_path))?;
            file.sync_all().map_err(io_err(&wal_path))?;
        }
        file.seek(SeekFrom::End(0)).map_err(io_err(&wal_path))?;

        Ok(Self {
            dir,
            state: RwLock::new(state),
            log: Mutex::new(LogWriter {
                file,
                seq,
                since_checkpoint: replayed,
            }),
            checkpoint_every,
            _lock: lock,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Runs `f` against the current state.
    pub fn read<R>(&self, f: impl FnOnce(&State) -> R) -> R {
        f(&self.state.read().unwrap_or_else(|p| p.into_inner()))
    }

    pub fn seq(&self) -> u64 {
        self.log.lock().unwrap_or_else(|p| p.into_inner()).seq
    }

    /// Durably appends `op`; returns its sequence number once it is on disk.
    pub fn commit(&self, op: Op) -> Result<u64, StoreError> {
        let mut log = self.log.lock().unwrap_or_else(|p| p.into_inner());
        self.read(|state| state.check(&op))?;

        let entry = LogEntry {
            seq: log.seq + 1,
            op,
        };
        let mut line = serde_json::to_vec(&entry)
            .map_err(|e| StoreError::Corrupt(format!("cannot encode entry: {e}")))?;
        line.push(b'\n');
        let wal_path = self.dir.join(WAL);
        log.file.write_all(&line).map_err(io_err(&wal_path))?;
        log.file.sync_data().map_err(io_err(&wal_path))?;

        log.seq = entry.seq;
        log.since_checkpoint += 1;
        self.state
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .apply(entry.op);

        if self.checkpoint_every > 0 && log.since_checkpoint >= self.checkpoint_every {
            self.checkpoint_locked(&mut log)?;
        }
        Ok(log.seq)
    }

    /// Writes a snapshot and empties the log.
    pub fn checkpoint(&self) -> Result<(), StoreError> {
        let mut log = self.log.lock().unwrap_or_else(|p| p.into_inner());
        self.checkpoint_locked(&mut log)
    }

    fn checkpoint_locked(&self, log: &mut LogWriter) -> Result<(), StoreError> {
        let bytes = self.read(|state| {
            serde_json::to_vec(&SnapshotRef {
                seq: log.seq,
                state,
            })
        });
        let bytes =
            bytes.map_err(|e| StoreError::Corrupt(format!("cannot encode snapshot: {e}")))?;
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        {
            let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(&bytes).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        let snapshot = self.dir.join(SNAPSHOT);
        fs::rename(&tmp, &snapshot).map_err(io_err(&snapshot))?;
        if let Ok(d) = File::open(&self.dir) {
            let _ = d.sync_all();
        }
        let wal_path = self.dir.join(WAL);
        log.file.set_len(0).map_err(io_err(&wal_path))?;
        log.file
            .seek(SeekFrom::Start(0))
            .map_err(io_err(&wal_path))?;
        log.file.sync_all().map_err(io_err(&wal_path))?;
        log.since_checkpoint = 0;
        Ok(())
    }
}

#[derive(Serialize)]
struct SnapshotRef<'a> {
    seq: u64,
    state: &'a State,
}

impl ExchangeSink for Store {
    fn record(&self, exchange: &LlmExchange) -> Result<(), SinkError> {
        self.commit(Op::PutExchange(Box::new(exchange.clone())))?;
        Ok(())
    }
}
