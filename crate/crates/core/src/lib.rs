//! Core library for building object-counting VQA benchmarks from COCO-style
//! annotations and measuring how consistently vision-language models answer
//! counting questions.
//!
//! The pipeline is a chain of pure, deterministic stages:
//!
//! 1. [`coco`] — parse instance annotations into `(image, category, count)`
//!    triples under crowd-exclusion rules.
//! 2. [`sampler`] — flatten the category/answer distribution with double
//!    k-uniform sampling under a recorded seed.
//! 3. [`question`] — render the primal, binary and comparison question
//!    families from byte-pinned templates.
//! 4. [`adapter`] — obtain answers from a remote chat-completions endpoint or
//!    from deterministic local adapters (oracle, random, replay).
//! 5. [`parse`] — map raw model text to semantic answers, with an explicit
//!    unparseable outcome.
//! 6. [`metrics`] / [`consistency`] — score runs (macro/weighted F1, MAE,
//!    accuracy, yes-ratio) and quantify inner/outer answer inconsistency.
//! 7. [`train`] — emit instruction-tuning datasets that pair counting answers
//!    with their verification and comparison forms.
//!
//! Every stage that draws randomness derives per-record sub-seeds from a
//! single run seed, so outputs are reproducible byte-for-byte.

pub mod adapter;
pub mod analyze;
pub mod coco;
pub mod consistency;
pub mod jsonl;
pub mod metrics;
pub mod parse;
pub mod plural;
pub mod question;
pub mod sampler;
pub mod seed;
pub mod train;

pub use adapter::{
    Answer, HttpAdapter, ImageTransport, ModelAdapter, ModelEndpointConfig, OracleAdapter,
    RandomAdapter, RateLimiter, ReplayAdapter, ResponseRecord,
};
pub use analyze::{analyze_run, AnalysisOutput};
pub use coco::{build_count_dataset, load_annotations, AnnotationFile, CountInstance};
pub use consistency::{ConsistencyReport, RateReport};
pub use metrics::{
    bucket_class, eval_binary, eval_compare_option, eval_compare_verdict, eval_counting,
    EvalReport,
};
pub use parse::{parse_response, ParseStatus, ParsedAnswer};
pub use question::{
    gen_binary, gen_compare, gen_primal, BinarySetting, CompareOption, CompareStyle, Family,
    GoldAnswer, PairingConfig, QuestionRecord, Verdict,
};
pub use sampler::{
    double_k_uniform_sample, expected_output_size, CapSemantics, SampleManifest, SamplerConfig,
};
pub use train::{
    gen_cons_i, gen_cons_i_ii, gen_cons_ii, gen_direct, TrainManifest, TrainMethod, TrainSample,
};
