//! Instruction-tuning dataset generation.
//!
//! Three methods over the same counting triples, all emitted as
//! conversation-shaped JSONL:
//!
//! - direct: the plain counting question with the bare count as the answer;
//! - cons_I: a count-verification clause chained with the counting question,
//!   answered "Yes(No). n." — half the statements use the true count, half a
//!   nearby distractor;
//! - cons_II: a two-category comparison chained with both counting
//!   questions, answered with the winner and both counts.
//!
//! Unlike benchmark construction, no cap sampling is applied here: training
//! keeps the full data distribution.

use crate::coco::CountInstance;
use crate::jsonl::Schema;
use crate::plural::{count_form, pluralize};
use crate::question::{distractor_count, primal_prompt};
use crate::seed::{derive_seed, fisher_yates, rng_from_seed, sha256_hex};
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

/// Default size of the comparison subset; comparison pairs vastly outnumber
/// instances, so the pool is capped to keep the combined dataset balanced.
pub const DEFAULT_CONS_II_TARGET: usize = 100_000;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{count} training samples use held-out evaluation images (first: {first})")]
    Leakage { count: usize, first: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainMethod {
    #[serde(rename = "direct")]
    Direct,
    #[serde(rename = "cons_I")]
    ConsI,
    #[serde(rename = "cons_II")]
    ConsII,
}

impl TrainMethod {
    pub fn tag(self) -> &'static str {
        match self {
            TrainMethod::Direct => "direct",
            TrainMethod::ConsI => "cons_I",
            TrainMethod::ConsII => "cons_II",
        }
    }
}

/// One training conversation: a prompt about an image and its reference
/// answer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub id: String,
    pub image: String,
    pub prompt: String,
    pub answer: String,
    pub method: TrainMethod,
}

impl Schema for TrainSample {
    const TAG: &'static str = "ts/1";
}

// Wire shape: {id, image, method, conversations: [user, assistant]} with an
// "<image>\n" placeholder opening the user turn, convertible to common
// finetuning formats.
#[derive(Serialize, Deserialize)]
struct Turn {
    role: String,
    text: String,
}

#[derive(Serialize, Deserialize)]
struct TrainSampleWire {
    id: String,
    image: String,
    method: TrainMethod,
    conversations: Vec<Turn>,
}

impl Serialize for TrainSample {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TrainSampleWire {
            id: self.id.clone(),
            image: self.image.clone(),
            method: self.method,
            conversations: vec![
                Turn {
                    role: "user".into(),
                    text: format!("<image>\n{}", self.prompt),
                },
                Turn {
                    role: "assistant".into(),
                    text: self.answer.clone(),
                },
            ],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TrainSample {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = TrainSampleWire::deserialize(deserializer)?;
        let [user, assistant] = wire.conversations.as_slice() else {
            return Err(D::Error::custom("expected exactly two conversation turns"));
        };
        if user.role != "user" || assistant.role != "assistant" {
            return Err(D::Error::custom("expected user then assistant turns"));
        }
        let prompt = user
            .text
            .strip_prefix("<image>\n")
            .unwrap_or(&user.text)
            .to_string();
        Ok(TrainSample {
            id: wire.id,
            image: wire.image,
            prompt,
            answer: assistant.text.clone(),
            method: wire.method,
        })
    }
}

fn sample_id(method: TrainMethod, image: &str, prompt: &str) -> String {
    let payload = format!("{}|{image}|{prompt}", method.tag());
    sha256_hex(payload.as_bytes())[..16].to_string()
}

fn make_sample(method: TrainMethod, image: &str, prompt: String, answer: String) -> TrainSample {
    TrainSample {
        id: sample_id(method, image, &prompt),
        image: image.to_string(),
        prompt,
        answer,
        method,
    }
}

/// Verification-plus-count prompt.
pub fn cons_i_prompt(stated: u32, category: &str) -> String {
    let verb = if stated == 1 { "is" } else { "are" };
    format!(
        "There {verb} {stated} {} in this picture, is that correct? How many {} are there in this picture?",
        count_form(category, stated),
        pluralize(category)
    )
}

/// Comparison-plus-counts prompt.
pub fn cons_ii_prompt(first: &str, second: &str) -> String {
    format!(
        "Which object is more in this picture, {first} or {second}? \
         How many {} are there in this picture? How many {} are there in this picture?",
        pluralize(first),
        pluralize(second)
    )
}

fn cons_ii_answer(first: &str, second: &str, n1: u32, n2: u32) -> String {
    match n1.cmp(&n2) {
        std::cmp::Ordering::Greater => format!("{first}. {n1}. {n2}."),
        std::cmp::Ordering::Less => format!("{second}. {n1}. {n2}."),
        std::cmp::Ordering::Equal => format!(
            "The number of {first} and {second} are the same in this picture. {n1}. {n2}."
        ),
    }
}

/// Plain counting conversations, one per instance.
pub fn gen_direct(instances: &[CountInstance]) -> Vec<TrainSample> {
    instances
        .iter()
        .map(|inst| {
            make_sample(
                TrainMethod::Direct,
                &inst.image_ref,
                primal_prompt(&inst.category),
                inst.count.to_string(),
            )
        })
        .collect()
}

/// Verification conversations, one per instance. A seeded per-record coin
/// states the true count half the time and a distractor otherwise; the
/// answer affirms or denies and always ends with the true count.
pub fn gen_cons_i(instances: &[CountInstance], seed: u64) -> Vec<TrainSample> {
    instances
        .iter()
        .map(|inst| {
            let key = format!("train_cons_I|{}|{}", inst.image_ref, inst.category);
            let mut rng = rng_from_seed(derive_seed(seed, &key));
            let stated = if rng.gen_bool(0.5) {
                inst.count
            } else {
                distractor_count(inst.count, &mut rng)
            };
            let verdict = if stated == inst.count { "Yes" } else { "No" };
            make_sample(
                TrainMethod::ConsI,
                &inst.image_ref,
                cons_i_prompt(stated, &inst.category),
                format!("{verdict}. {}.", inst.count),
            )
        })
        .collect()
}

/// Comparison conversations over category pairs sharing an image, seed-
/// selected up to `target_count`. When fewer pairs exist than requested,
/// all of them are emitted (the caller can compare sizes and warn).
pub fn gen_cons_ii(
    instances: &[CountInstance],
    target_count: usize,
    seed: u64,
) -> Vec<TrainSample> {
    let mut by_image: BTreeMap<u64, Vec<&CountInstance>> = BTreeMap::new();
    for inst in instances {
        by_image.entry(inst.image_id).or_default().push(inst);
    }

    let mut pool: Vec<(&CountInstance, &CountInstance)> = Vec::new();
    for (_, mut members) in by_image {
        members.sort_by(|a, b| a.category.cmp(&b.category));
        members.dedup_by(|a, b| a.category == b.category);
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                pool.push((members[i], members[j]));
            }
        }
    }

    let mut rng = rng_from_seed(derive_seed(seed, "train_cons_II"));
    fisher_yates(&mut pool, &mut rng);
    pool.truncate(target_count);

    pool.into_iter()
        .map(|(a, b)| {
            // Present the pair in either order so position carries no signal.
            let (first, second) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            make_sample(
                TrainMethod::ConsII,
                &first.image_ref,
                cons_ii_prompt(&first.category, &second.category),
                cons_ii_answer(&first.category, &second.category, first.count, second.count),
            )
        })
        .collect()
}

/// The combined consistency dataset: all cons_I conversations plus the
/// capped cons_II subset, shuffled together under the seed.
pub fn gen_cons_i_ii(instances: &[CountInstance], seed: u64) -> Vec<TrainSample> {
    let mut samples = gen_cons_i(instances, seed);
    samples.extend(gen_cons_ii(instances, DEFAULT_CONS_II_TARGET, seed));
    fisher_yates(
        &mut samples,
        &mut rng_from_seed(derive_seed(seed, "train_cons_I_II")),
    );
    samples
}

/// Drop instances whose image is in the held-out set, returning how many
/// were removed.
pub fn filter_holdout(
    instances: Vec<CountInstance>,
    holdout: &HashSet<String>,
) -> (Vec<CountInstance>, usize) {
    let before = instances.len();
    let kept: Vec<CountInstance> = instances
        .into_iter()
        .filter(|inst| !holdout.contains(&inst.image_ref))
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Verify that no emitted sample touches a held-out evaluation image.
pub fn assert_no_leakage(
    samples: &[TrainSample],
    holdout: &HashSet<String>,
) -> Result<(), TrainError> {
    let leaked: Vec<&TrainSample> = samples
        .iter()
        .filter(|s| holdout.contains(&s.image))
        .collect();
    match leaked.first() {
        Some(first) => Err(TrainError::Leakage {
            count: leaked.len(),
            first: first.image.clone(),
        }),
        None => Ok(()),
    }
}

/// Companion manifest written next to each training JSONL.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainManifest {
    pub method: String,
    pub seed: u64,
    pub count: usize,
    pub source_hash: String,
    #[serde(default)]
    pub holdout_excluded: usize,
}
