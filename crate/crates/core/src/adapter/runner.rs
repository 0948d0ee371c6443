//! Bounded-concurrency query execution with in-order, resumable output.
//!
//! Workers pull questions from a shared cursor; completed responses are
//! re-ordered back into question order before they reach the sink. Because
//! emission is strictly in input order, the response log of an interrupted
//! run is always a prefix of the full run, and resuming means skipping the
//! question ids already on disk.

use super::{AdapterError, ModelAdapter, ResponseRecord};
use crate::question::QuestionRecord;
use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("query {question_id} failed: {source}")]
    Adapter {
        question_id: String,
        #[source]
        source: AdapterError,
    },
    #[error("failed to persist response: {0}")]
    Sink(#[from] crate::jsonl::JsonlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    /// Responses produced by this invocation.
    pub completed: usize,
    /// Questions skipped because their ids were already done.
    pub skipped: usize,
}

/// Answer every question not yet in `completed_ids`, with `workers` threads,
/// delivering responses to `sink` in question order.
///
/// The first adapter error aborts the run; responses for questions earlier
/// in the order are still delivered, so a rerun resumes where this one
/// stopped.
pub fn run_queries<F>(
    questions: &[QuestionRecord],
    adapter: &dyn ModelAdapter,
    workers: usize,
    completed_ids: &HashSet<String>,
    mut sink: F,
) -> Result<RunOutcome, RunError>
where
    F: FnMut(ResponseRecord) -> Result<(), crate::jsonl::JsonlError>,
{
    let pending: Vec<&QuestionRecord> = questions
        .iter()
        .filter(|q| !completed_ids.contains(&q.question_id))
        .collect();
    let skipped = questions.len() - pending.len();
    if pending.is_empty() {
        return Ok(RunOutcome {
            completed: 0,
            skipped,
        });
    }

    let workers = workers.max(1).min(pending.len());
    let cursor = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<ResponseRecord, AdapterError>)>();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let pending = &pending;
            let cursor = &cursor;
            let stop = &stop;
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let index = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(question) = pending.get(index) else {
                    break;
                };
                let started = Instant::now();
                let result = adapter.answer(question).map(|answer| ResponseRecord {
                    question_id: question.question_id.clone(),
                    raw_text: answer.text,
                    latency_ms: started.elapsed().as_millis() as u64,
                    adapter: adapter.name().to_string(),
                    attempt_count: answer.attempts,
                    request_hash: answer.request_hash,
                    ts: unix_millis(),
                });
                if result.is_err() {
                    stop.store(true, Ordering::Relaxed);
                }
                if tx.send((index, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut buffer: BTreeMap<usize, ResponseRecord> = BTreeMap::new();
        let mut next_emit = 0usize;
        let mut completed = 0usize;
        let mut first_error: Option<(usize, RunError)> = None;
        for (index, result) in rx {
            match result {
                Ok(record) => {
                    buffer.insert(index, record);
                }
                Err(source) => {
                    stop.store(true, Ordering::Relaxed);
                    let err = RunError::Adapter {
                        question_id: pending[index].question_id.clone(),
                        source,
                    };
                    match &first_error {
                        Some((at, _)) if *at <= index => {}
                        _ => first_error = Some((index, err)),
                    }
                }
            }
            // Emit the contiguous prefix (stopping short of any error index
            // keeps the on-disk log a clean prefix of the question order).
            let error_at = first_error.as_ref().map(|(at, _)| *at);
            while error_at != Some(next_emit) {
                let Some(record) = buffer.remove(&next_emit) else {
                    break;
                };
                sink(record)?;
                completed += 1;
                next_emit += 1;
            }
        }
        if let Some((_, err)) = first_error {
            return Err(err);
        }
        Ok(RunOutcome { completed, skipped })
    })
}

fn unix_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
