//! Answer sources behind one uniform interface.
//!
//! - [`OracleAdapter`] — echoes the gold answer; pins perfect-score
//!   invariants in tests and smoke runs.
//! - [`RandomAdapter`] — seeded uniform baseline (counts 1..=10, fair
//!   yes/no, uniform verdicts).
//! - [`ReplayAdapter`] — replays a logged run for byte-exact re-analysis.
//! - [`HttpAdapter`] — chat-completions endpoint with retries, rate
//!   limiting and greedy decoding.

mod http;
mod oracle;
mod random;
mod rate_limit;
mod replay;
mod runner;

pub use http::{HttpAdapter, ImageTransport, ModelEndpointConfig};
pub use oracle::{render_gold, OracleAdapter};
pub use random::RandomAdapter;
pub use rate_limit::{Clock, RateLimiter, SystemClock};
pub use replay::ReplayAdapter;
pub use runner::{run_queries, RunError, RunOutcome};

use crate::jsonl::Schema;
use crate::question::QuestionRecord;
use crate::seed::sha256_hex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("no replay entry for question {0}")]
    ReplayMiss(String),
    #[error("missing API key environment variable {0}")]
    MissingApiKey(String),
    #[error("invalid endpoint config: {0}")]
    Config(String),
    #[error("cannot read image {path}: {source}")]
    Image {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("remote error (status {status}): {message}")]
    Remote { status: u16, message: String },
    #[error("unexpected response shape: {0}")]
    Protocol(String),
}

/// Raw answer plus how it was obtained.
#[derive(Debug, Clone)]
pub struct Answer {
    pub text: String,
    pub attempts: u32,
    /// Content hash of the request this answer responds to.
    pub request_hash: String,
}

impl Answer {
    pub fn local(adapter: &str, question: &QuestionRecord, text: String) -> Self {
        let payload = format!("{adapter}|{}|{}", question.question_id, question.prompt);
        Self {
            text,
            attempts: 1,
            request_hash: sha256_hex(payload.as_bytes())[..16].to_string(),
        }
    }
}

/// Anything that can answer a rendered question.
pub trait ModelAdapter: Sync {
    fn name(&self) -> &str;
    fn answer(&self, question: &QuestionRecord) -> Result<Answer, AdapterError>;
}

/// One logged model response; the run log is a JSONL of these and is the
/// input both to analysis and to the replay adapter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub question_id: String,
    pub raw_text: String,
    pub latency_ms: u64,
    pub adapter: String,
    pub attempt_count: u32,
    pub request_hash: String,
    /// Unix milliseconds at completion.
    pub ts: u64,
}

impl Schema for ResponseRecord {
    const TAG: &'static str = "rr/1";
}
