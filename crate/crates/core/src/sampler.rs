//! Double k-uniform sampling.
//!
//! Counting datasets built from detection annotations are heavily skewed:
//! most answers are 1 and a handful of categories dominate. Sampling caps
//! the number of retained instances per `(category, count)` cell, flattening
//! both the answer and the category distribution at once. Selection is a
//! seeded shuffle followed by a first-come cap, so the output is a
//! deterministic function of `(input multiset, seed)`.

use crate::coco::CountInstance;
use crate::seed::{self, fisher_yates, rng_from_seed};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::num::NonZeroU32;

/// Which cap the per-cell guard enforces.
///
/// The strict reading keeps at most `k` instances per cell; the off-by-one
/// variant (`admit while tally <= k`) keeps up to `k + 1`. Both are offered
/// so a run manifest can state exactly which was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapSemantics {
    /// Cap = k.
    Prose,
    /// Cap = k + 1.
    Pseudocode,
}

impl CapSemantics {
    pub fn cap(self, k: NonZeroU32) -> u32 {
        match self {
            CapSemantics::Prose => k.get(),
            CapSemantics::Pseudocode => k.get() + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Per-(category, count) retention cap parameter.
    pub k: NonZeroU32,
    pub seed: u64,
    pub cap_semantics: CapSemantics,
}

impl SamplerConfig {
    pub fn new(k: NonZeroU32, seed: u64) -> Self {
        Self {
            k,
            seed,
            cap_semantics: CapSemantics::Prose,
        }
    }

    fn cap(&self) -> u32 {
        self.cap_semantics.cap(self.k)
    }
}

/// Per-(category, count) admission tally.
#[derive(Debug, Default)]
pub struct SamplerTally {
    admitted: HashMap<(String, u32), u32>,
}

impl SamplerTally {
    pub fn new() -> Self {
        Self::default()
    }

    /// Admit the instance if its cell is below `cap`, updating the tally.
    pub fn admit(&mut self, category: &str, count: u32, cap: u32) -> bool {
        let cell = self
            .admitted
            .entry((category.to_string(), count))
            .or_insert(0);
        if *cell < cap {
            *cell += 1;
            true
        } else {
            false
        }
    }

    pub fn get(&self, category: &str, count: u32) -> u32 {
        self.admitted
            .get(&(category.to_string(), count))
            .copied()
            .unwrap_or(0)
    }
}

/// Manifest describing one sampling run; enough to replay it exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleManifest {
    pub seed: u64,
    pub k: u32,
    pub cap_semantics: CapSemantics,
    pub input_sha256: String,
    pub output_size: usize,
    pub generator_name: String,
}

/// Cap every `(category, count)` cell of the dataset at the configured
/// limit, selecting survivors with a seeded Fisher-Yates shuffle.
///
/// The pool is canonically sorted before shuffling, so selection depends
/// only on `(seed, input multiset)`, never on input order. The output is a
/// subset of the input, re-sorted by `(image_id, category)` so artifacts
/// diff cleanly across runs.
pub fn double_k_uniform_sample(
    instances: &[CountInstance],
    cfg: &SamplerConfig,
) -> Vec<CountInstance> {
    let mut pool: Vec<&CountInstance> = instances.iter().collect();
    pool.sort();
    fisher_yates(&mut pool, &mut rng_from_seed(cfg.seed));

    let cap = cfg.cap();
    let mut tally = SamplerTally::new();
    let mut kept: Vec<CountInstance> = pool
        .into_iter()
        .filter(|inst| tally.admit(&inst.category, inst.count, cap))
        .cloned()
        .collect();
    kept.sort_by(|a, b| {
        (a.image_id, &a.category, a.count).cmp(&(b.image_id, &b.category, b.count))
    });
    kept
}

/// Closed-form output size: the sum over `(category, count)` cells of
/// `min(occurrences, cap)`. Equals the sampled size for every seed.
pub fn expected_output_size(instances: &[CountInstance], cfg: &SamplerConfig) -> usize {
    let mut occurrences: HashMap<(&str, u32), usize> = HashMap::new();
    for inst in instances {
        *occurrences
            .entry((inst.category.as_str(), inst.count))
            .or_insert(0) += 1;
    }
    let cap = cfg.cap() as usize;
    occurrences.values().map(|&n| n.min(cap)).sum()
}

/// Sample and produce the run manifest in one step.
pub fn sample_with_manifest(
    instances: &[CountInstance],
    cfg: &SamplerConfig,
) -> (Vec<CountInstance>, SampleManifest) {
    let output = double_k_uniform_sample(instances, cfg);
    let manifest = SampleManifest {
        seed: cfg.seed,
        k: cfg.k.get(),
        cap_semantics: cfg.cap_semantics,
        input_sha256: dataset_sha256(instances),
        output_size: output.len(),
        generator_name: seed::GENERATOR_NAME.to_string(),
    };
    (output, manifest)
}

/// Order-insensitive content hash of a dataset (hex sha256 of the sorted
/// JSONL serialization).
pub fn dataset_sha256(instances: &[CountInstance]) -> String {
    let mut sorted: Vec<&CountInstance> = instances.iter().collect();
    sorted.sort();
    let mut bytes = Vec::new();
    for inst in sorted {
        bytes.extend_from_slice(serde_json::to_string(inst).expect("serializable").as_bytes());
        bytes.push(b'\n');
    }
    seed::sha256_hex(&bytes)
}
