//! Question generation for all evaluation families.
//!
//! Prompts are rendered from pinned templates (golden-file tested), covering
//! three families:
//!
//! - primal: "how many X" with a single-number answer,
//! - binary: yes/no verification of a stated count, in three settings
//!   (ground truth / model's own prior answer / coin-flip distractor),
//! - compare: which of two categories is more numerous, free-form (style I)
//!   or multiple-choice (style II); every pair is also asked with the
//!   category order flipped so order sensitivity can be measured.

use crate::coco::CountInstance;
use crate::jsonl::Schema;
use crate::plural::{count_form, pluralize};
use crate::seed::{derive_seed, fisher_yates, rng_from_seed, sha256_hex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuestionGenError {
    #[error("setting II requires prior primal answers")]
    PriorAnswersRequired,
    #[error("no prior primal answer for image {image_ref:?} category {category:?}")]
    MissingPriorAnswer { image_ref: String, category: String },
}

/// Question family. The three `train_*` variants are the instruction-tuning
/// shapes emitted by the training-data generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "primal")]
    Primal,
    #[serde(rename = "binary_I")]
    BinaryI,
    #[serde(rename = "binary_II")]
    BinaryII,
    #[serde(rename = "binary_III")]
    BinaryIII,
    #[serde(rename = "compare_I")]
    CompareI,
    #[serde(rename = "compare_II")]
    CompareII,
    #[serde(rename = "train_direct")]
    TrainDirect,
    #[serde(rename = "train_cons_I")]
    TrainConsI,
    #[serde(rename = "train_cons_II")]
    TrainConsII,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::Primal => "primal",
            Family::BinaryI => "binary_I",
            Family::BinaryII => "binary_II",
            Family::BinaryIII => "binary_III",
            Family::CompareI => "compare_I",
            Family::CompareII => "compare_II",
            Family::TrainDirect => "train_direct",
            Family::TrainConsI => "train_cons_I",
            Family::TrainConsII => "train_cons_II",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Comparison outcome relative to the category order of the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FirstGreater,
    SecondGreater,
    Same,
}

impl Verdict {
    pub fn from_counts(first: u32, second: u32) -> Self {
        match first.cmp(&second) {
            std::cmp::Ordering::Greater => Verdict::FirstGreater,
            std::cmp::Ordering::Less => Verdict::SecondGreater,
            std::cmp::Ordering::Equal => Verdict::Same,
        }
    }

    /// The same verdict expressed in the opposite category order.
    pub fn flipped(self) -> Self {
        match self {
            Verdict::FirstGreater => Verdict::SecondGreater,
            Verdict::SecondGreater => Verdict::FirstGreater,
            Verdict::Same => Verdict::Same,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::FirstGreater => "first_greater",
            Verdict::SecondGreater => "second_greater",
            Verdict::Same => "same",
        }
    }
}

/// Multiple-choice option for style-II comparison questions.
/// A = more of the first category, B = more of the second, C = same.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOption {
    A,
    B,
    C,
}

impl CompareOption {
    pub fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::FirstGreater => CompareOption::A,
            Verdict::SecondGreater => CompareOption::B,
            Verdict::Same => CompareOption::C,
        }
    }

    pub fn to_verdict(self) -> Verdict {
        match self {
            CompareOption::A => Verdict::FirstGreater,
            CompareOption::B => Verdict::SecondGreater,
            CompareOption::C => Verdict::Same,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CompareOption::A => "A",
            CompareOption::B => "B",
            CompareOption::C => "C",
        }
    }
}

/// Reference answer attached to a question, shaped by its family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoldAnswer {
    Number { number: u32 },
    YesNo { yes_no: bool },
    Verdict { verdict: Verdict },
    Option { option: CompareOption },
    Compound { compound: Vec<GoldAnswer> },
}

impl GoldAnswer {
    pub fn as_number(&self) -> Option<u32> {
        match self {
            GoldAnswer::Number { number } => Some(*number),
            _ => None,
        }
    }

    pub fn as_yes_no(&self) -> Option<bool> {
        match self {
            GoldAnswer::YesNo { yes_no } => Some(*yes_no),
            _ => None,
        }
    }

    pub fn as_verdict(&self) -> Option<Verdict> {
        match self {
            GoldAnswer::Verdict { verdict } => Some(*verdict),
            _ => None,
        }
    }

    pub fn as_option(&self) -> Option<CompareOption> {
        match self {
            GoldAnswer::Option { option } => Some(*option),
            _ => None,
        }
    }
}

/// One rendered question: prompt text plus the metadata needed to score it
/// and join it with its siblings (flip twin, verification target).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub family: Family,
    pub image_ref: String,
    pub prompt: String,
    /// One category for primal/binary, two (in prompt order) for compare.
    pub categories: Vec<String>,
    /// The count stated in a binary prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queried_count: Option<u32>,
    /// Links a comparison question with its category-order-flipped twin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip_group: Option<String>,
    pub gold: GoldAnswer,
}

impl Schema for QuestionRecord {
    const TAG: &'static str = "qr/1";
}

impl QuestionRecord {
    fn new(
        family: Family,
        image_ref: &str,
        prompt: String,
        categories: Vec<String>,
        queried_count: Option<u32>,
        flip_group: Option<String>,
        gold: GoldAnswer,
    ) -> Self {
        let question_id = content_id(family, image_ref, &categories, queried_count, &prompt);
        Self {
            question_id,
            family,
            image_ref: image_ref.to_string(),
            prompt,
            categories,
            queried_count,
            flip_group,
            gold,
        }
    }
}

// Stable content hash so re-generated questions dedupe and response caches
// stay valid across runs.
fn content_id(
    family: Family,
    image_ref: &str,
    categories: &[String],
    queried_count: Option<u32>,
    prompt: &str,
) -> String {
    let m = queried_count.map_or(String::new(), |m| m.to_string());
    let payload = format!(
        "{}|{image_ref}|{}|{m}|{prompt}",
        family.tag(),
        categories.join(",")
    );
    sha256_hex(payload.as_bytes())[..16].to_string()
}

pub fn primal_prompt(category: &str) -> String {
    format!(
        "How many {} are there in this picture? Answer in a single number.",
        pluralize(category)
    )
}

pub fn binary_prompt(n: u32, category: &str) -> String {
    let verb = if n == 1 { "is" } else { "are" };
    format!(
        "There {verb} {n} {} in this picture, is that correct? Answer yes or no.",
        count_form(category, n)
    )
}

pub fn compare_i_prompt(first: &str, second: &str) -> String {
    format!(
        "Which object has a larger number in this picture, {first} or {second}? \
         If they have the same number, answer same."
    )
}

pub fn compare_ii_prompt(first: &str, second: &str) -> String {
    let (p1, p2) = (pluralize(first), pluralize(second));
    format!(
        "Please select the correct option according to the given picture. \
         A. There are more {p1} than {p2} in this picture. \
         B. There are more {p2} than {p1} in this picture. \
         C. The number of {p1} and {p2} are the same in this picture."
    )
}

/// One "how many X" question per instance.
pub fn gen_primal(instances: &[CountInstance]) -> Vec<QuestionRecord> {
    instances
        .iter()
        .map(|inst| {
            QuestionRecord::new(
                Family::Primal,
                &inst.image_ref,
                primal_prompt(&inst.category),
                vec![inst.category.clone()],
                None,
                None,
                GoldAnswer::Number { number: inst.count },
            )
        })
        .collect()
}

/// How the stated count of a binary question is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinarySetting {
    /// Stated count = ground truth (gold answer is always yes).
    I,
    /// Stated count = the model's own prior primal answer.
    II,
    /// Fair coin: ground truth, or a distractor near it.
    III,
}

impl BinarySetting {
    pub fn family(self) -> Family {
        match self {
            BinarySetting::I => Family::BinaryI,
            BinarySetting::II => Family::BinaryII,
            BinarySetting::III => Family::BinaryIII,
        }
    }
}

/// Prior primal answers keyed by `(image_ref, category)`.
pub type PriorAnswers = HashMap<(String, String), u32>;

/// Inclusive bounds of the distractor window around a true count: radius 3,
/// floored at 1 so a stated count of 0 can never be drawn.
pub fn distractor_window(truth: u32) -> (u32, u32) {
    (truth.saturating_sub(3).max(1), truth + 3)
}

/// Uniform draw from the distractor window, excluding the truth itself.
pub fn distractor_count(truth: u32, rng: &mut ChaCha8Rng) -> u32 {
    let (lo, hi) = distractor_window(truth);
    loop {
        let n = rng.gen_range(lo..=hi);
        if n != truth {
            return n;
        }
    }
}

/// One yes/no verification question per instance.
///
/// Setting II requires `prior_answers` to cover every instance; a gap is an
/// error rather than a silent skip. Setting III derives a per-record
/// sub-seed from `(seed, image_ref, category)`, so generation is
/// partition-order independent.
pub fn gen_binary(
    instances: &[CountInstance],
    setting: BinarySetting,
    prior_answers: Option<&PriorAnswers>,
    seed: u64,
) -> Result<Vec<QuestionRecord>, QuestionGenError> {
    if setting == BinarySetting::II && prior_answers.is_none() {
        return Err(QuestionGenError::PriorAnswersRequired);
    }
    instances
        .iter()
        .map(|inst| {
            let n = match setting {
                BinarySetting::I => inst.count,
                BinarySetting::II => {
                    let key = (inst.image_ref.clone(), inst.category.clone());
                    *prior_answers.unwrap().get(&key).ok_or_else(|| {
                        QuestionGenError::MissingPriorAnswer {
                            image_ref: inst.image_ref.clone(),
                            category: inst.category.clone(),
                        }
                    })?
                }
                BinarySetting::III => {
                    let key = format!("binary_III|{}|{}", inst.image_ref, inst.category);
                    let mut rng = rng_from_seed(derive_seed(seed, &key));
                    if rng.gen_bool(0.5) {
                        inst.count
                    } else {
                        distractor_count(inst.count, &mut rng)
                    }
                }
            };
            Ok(QuestionRecord::new(
                setting.family(),
                &inst.image_ref,
                binary_prompt(n, &inst.category),
                vec![inst.category.clone()],
                Some(n),
                None,
                GoldAnswer::YesNo {
                    yes_no: n == inst.count,
                },
            ))
        })
        .collect()
}

/// Free-form (I) or multiple-choice (II) comparison prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareStyle {
    I,
    II,
}

impl CompareStyle {
    pub fn family(self) -> Family {
        match self {
            CompareStyle::I => Family::CompareI,
            CompareStyle::II => Family::CompareII,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PairingConfig {
    /// Cap on category pairs drawn per image.
    pub max_pairs_per_image: usize,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            max_pairs_per_image: 3,
        }
    }
}

/// Comparison questions over category pairs present in the same image.
///
/// Every selected pair yields two records sharing a `flip_group`: the base
/// order and the flipped order. Images with fewer than two categories
/// contribute nothing. Pair selection above the per-image cap is seeded and
/// independent of style, so styles I and II ask about identical pairs.
pub fn gen_compare(
    instances: &[CountInstance],
    style: CompareStyle,
    pairing: &PairingConfig,
    seed: u64,
) -> Vec<QuestionRecord> {
    let mut by_image: BTreeMap<u64, Vec<&CountInstance>> = BTreeMap::new();
    for inst in instances {
        by_image.entry(inst.image_id).or_default().push(inst);
    }

    let mut records = Vec::new();
    for (_, mut members) in by_image {
        members.sort_by(|a, b| a.category.cmp(&b.category));
        members.dedup_by(|a, b| a.category == b.category);
        if members.len() < 2 {
            continue;
        }
        let image_ref = &members[0].image_ref;

        let mut pairs: Vec<(&CountInstance, &CountInstance)> = Vec::new();
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                pairs.push((members[i], members[j]));
            }
        }
        if pairs.len() > pairing.max_pairs_per_image {
            let key = format!("compare_pairs|{image_ref}");
            fisher_yates(&mut pairs, &mut rng_from_seed(derive_seed(seed, &key)));
            pairs.truncate(pairing.max_pairs_per_image);
            pairs.sort_by(|a, b| (&a.0.category, &a.1.category).cmp(&(&b.0.category, &b.1.category)));
        }

        for (first, second) in pairs {
            let group = flip_group_id(image_ref, &first.category, &second.category, style);
            records.push(compare_record(style, first, second, &group));
            records.push(compare_record(style, second, first, &group));
        }
    }
    records
}

fn flip_group_id(image_ref: &str, c1: &str, c2: &str, style: CompareStyle) -> String {
    let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
    let style_tag = match style {
        CompareStyle::I => "I",
        CompareStyle::II => "II",
    };
    format!(
        "fg{}",
        &sha256_hex(format!("{image_ref}|{lo}|{hi}|{style_tag}").as_bytes())[..16]
    )
}

fn compare_record(
    style: CompareStyle,
    first: &CountInstance,
    second: &CountInstance,
    flip_group: &str,
) -> QuestionRecord {
    let verdict = Verdict::from_counts(first.count, second.count);
    let (prompt, gold) = match style {
        CompareStyle::I => (
            compare_i_prompt(&first.category, &second.category),
            GoldAnswer::Verdict { verdict },
        ),
        CompareStyle::II => (
            compare_ii_prompt(&first.category, &second.category),
            GoldAnswer::Option {
                option: CompareOption::from_verdict(verdict),
            },
        ),
    };
    QuestionRecord::new(
        style.family(),
        &first.image_ref,
        prompt,
        vec![first.category.clone(), second.category.clone()],
        None,
        Some(flip_group.to_string()),
        gold,
    )
}
