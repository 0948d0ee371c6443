//! Replay adapter: answers from a prior run log.

use super::{Answer, AdapterError, ModelAdapter, ResponseRecord};
use crate::jsonl::{read_jsonl, JsonlError};
use crate::question::QuestionRecord;
use std::collections::HashMap;
use std::path::Path;

/// Replays a logged run keyed by `question_id`. Any analysis driven through
/// a replay of its own log reproduces the original reports byte-for-byte.
#[derive(Debug)]
pub struct ReplayAdapter {
    entries: HashMap<String, String>,
}

impl ReplayAdapter {
    pub fn from_log(path: &Path) -> Result<Self, JsonlError> {
        let records: Vec<ResponseRecord> = read_jsonl(path)?;
        Ok(Self::from_records(&records))
    }

    pub fn from_records(records: &[ResponseRecord]) -> Self {
        let entries = records
            .iter()
            .map(|r| (r.question_id.clone(), r.raw_text.clone()))
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ModelAdapter for ReplayAdapter {
    fn name(&self) -> &str {
        "replay"
    }

    fn answer(&self, question: &QuestionRecord) -> Result<Answer, AdapterError> {
        let text = self
            .entries
            .get(&question.question_id)
            .ok_or_else(|| AdapterError::ReplayMiss(question.question_id.clone()))?;
        Ok(Answer::local("replay", question, text.clone()))
    }
}
