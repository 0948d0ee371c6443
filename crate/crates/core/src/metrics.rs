//! Evaluation metrics: macro/weighted F1 over bucketed count classes, MAE,
//! accuracy and yes-ratio.
//!
//! Counts of 10 or more collapse into a single "10+" class for F-scores
//! (those answers are too rare to score individually), while MAE always uses
//! the raw numbers so the severity of a miss is preserved. Unparseable
//! responses match no class: they hurt recall and accuracy, are excluded
//! from MAE, and surface as `unparseable_rate`.

use crate::question::{CompareOption, Verdict};
use serde::{Deserialize, Serialize, Serializer};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("gold and prediction lists differ in length ({gold} vs {pred})")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("gold count must be at least 1")]
    ZeroGoldCount,
}

/// Class label for a gold count: "1".."9" or "10+".
pub fn bucket_class(n: u32) -> Result<String, MetricsError> {
    if n == 0 {
        return Err(MetricsError::ZeroGoldCount);
    }
    Ok(bucket_label(n))
}

// Predictions may be 0; give them a label so they show up in the per-class
// table as a never-matching prediction instead of being rejected.
fn bucket_label(n: u32) -> String {
    if n >= 10 {
        "10+".to_string()
    } else {
        n.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    #[serde(serialize_with = "round3")]
    pub precision: f64,
    #[serde(serialize_with = "round3")]
    pub recall: f64,
    #[serde(serialize_with = "round3")]
    pub f1: f64,
    pub support: usize,
}

/// Scores for one run of one question family.
///
/// Serialized values round to 3 decimals; in-memory values keep full
/// precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(serialize_with = "round3")]
    pub macro_f1: f64,
    #[serde(serialize_with = "round3")]
    pub weighted_f1: f64,
    /// Mean absolute error over parsed numeric answers; absent for
    /// non-numeric families and when nothing parsed.
    #[serde(serialize_with = "round3_opt")]
    pub mae: Option<f64>,
    #[serde(serialize_with = "round3")]
    pub accuracy: f64,
    /// Fraction of questions answered "yes"; binary families only.
    #[serde(serialize_with = "round3_opt")]
    pub yes_ratio: Option<f64>,
    pub per_class: BTreeMap<String, ClassMetrics>,
    #[serde(serialize_with = "round3")]
    pub unparseable_rate: f64,
    pub n_questions: usize,
}

fn round3<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1000.0).round() / 1000.0)
}

fn round3_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_some(&((x * 1000.0).round() / 1000.0)),
        None => s.serialize_none(),
    }
}

// Shared classification machinery over string class labels. Classes are
// everything seen in gold or parsed predictions; macro-F1 averages only
// classes with gold support, weighted-F1 weights by support.
fn label_report(gold: &[String], pred: &[Option<String>]) -> EvalReport {
    let n = gold.len();
    let mut support: BTreeMap<&str, usize> = BTreeMap::new();
    let mut true_pos: BTreeMap<&str, usize> = BTreeMap::new();
    let mut false_pos: BTreeMap<&str, usize> = BTreeMap::new();
    let mut correct = 0usize;
    let mut unparsed = 0usize;

    for (g, p) in gold.iter().zip(pred) {
        *support.entry(g).or_insert(0) += 1;
        match p {
            Some(p) if p == g => {
                *true_pos.entry(g).or_insert(0) += 1;
                correct += 1;
            }
            Some(p) => {
                *false_pos.entry(p).or_insert(0) += 1;
            }
            None => unparsed += 1,
        }
    }

    let mut labels: Vec<&str> = support.keys().copied().collect();
    for p in pred.iter().flatten() {
        if !labels.contains(&p.as_str()) {
            labels.push(p);
        }
    }
    labels.sort_unstable();

    let mut per_class = BTreeMap::new();
    let mut macro_sum = 0.0;
    let mut macro_n = 0usize;
    let mut weighted_sum = 0.0;
    for label in labels {
        let tp = true_pos.get(label).copied().unwrap_or(0) as f64;
        let fp = false_pos.get(label).copied().unwrap_or(0) as f64;
        let sup = support.get(label).copied().unwrap_or(0);
        let fn_ = sup as f64 - tp;
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        if sup > 0 {
            macro_sum += f1;
            macro_n += 1;
            weighted_sum += f1 * sup as f64;
        }
        per_class.insert(
            label.to_string(),
            ClassMetrics {
                precision,
                recall,
                f1,
                support: sup,
            },
        );
    }

    EvalReport {
        macro_f1: if macro_n > 0 { macro_sum / macro_n as f64 } else { 0.0 },
        weighted_f1: if n > 0 { weighted_sum / n as f64 } else { 0.0 },
        mae: None,
        accuracy: if n > 0 { correct as f64 / n as f64 } else { 0.0 },
        yes_ratio: None,
        per_class,
        unparseable_rate: if n > 0 { unparsed as f64 / n as f64 } else { 0.0 },
        n_questions: n,
    }
}

fn check_lengths<G, P>(gold: &[G], pred: &[P]) -> Result<(), MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    Ok(())
}

/// Score the counting task: F-scores over bucketed classes, MAE over raw
/// parsed numbers, accuracy over bucket equality.
pub fn eval_counting(gold: &[u32], pred: &[Option<u32>]) -> Result<EvalReport, MetricsError> {
    check_lengths(gold, pred)?;
    let gold_labels: Vec<String> = gold
        .iter()
        .map(|&n| bucket_class(n))
        .collect::<Result<_, _>>()?;
    let pred_labels: Vec<Option<String>> = pred.iter().map(|p| p.map(bucket_label)).collect();
    let mut report = label_report(&gold_labels, &pred_labels);

    let mut abs_sum = 0.0;
    let mut parsed = 0usize;
    for (&g, p) in gold.iter().zip(pred) {
        if let Some(p) = p {
            abs_sum += (f64::from(*p) - f64::from(g)).abs();
            parsed += 1;
        }
    }
    report.mae = (parsed > 0).then(|| abs_sum / parsed as f64);
    Ok(report)
}

/// Score yes/no verification questions: accuracy plus the yes-ratio bias
/// indicator (parsed yes answers over all questions).
pub fn eval_binary(gold: &[bool], pred: &[Option<bool>]) -> Result<EvalReport, MetricsError> {
    check_lengths(gold, pred)?;
    let to_label = |b: bool| if b { "yes".to_string() } else { "no".to_string() };
    let gold_labels: Vec<String> = gold.iter().copied().map(to_label).collect();
    let pred_labels: Vec<Option<String>> = pred.iter().map(|p| p.map(to_label)).collect();
    let mut report = label_report(&gold_labels, &pred_labels);
    let yes = pred.iter().filter(|p| **p == Some(true)).count();
    report.yes_ratio = Some(if gold.is_empty() {
        0.0
    } else {
        yes as f64 / gold.len() as f64
    });
    Ok(report)
}

/// Score free-form comparison answers against gold verdicts.
pub fn eval_compare_verdict(
    gold: &[Verdict],
    pred: &[Option<Verdict>],
) -> Result<EvalReport, MetricsError> {
    check_lengths(gold, pred)?;
    let gold_labels: Vec<String> = gold.iter().map(|v| v.label().to_string()).collect();
    let pred_labels: Vec<Option<String>> =
        pred.iter().map(|p| p.map(|v| v.label().to_string())).collect();
    Ok(label_report(&gold_labels, &pred_labels))
}

/// Score multiple-choice comparison answers against gold options.
pub fn eval_compare_option(
    gold: &[CompareOption],
    pred: &[Option<CompareOption>],
) -> Result<EvalReport, MetricsError> {
    check_lengths(gold, pred)?;
    let gold_labels: Vec<String> = gold.iter().map(|o| o.label().to_string()).collect();
    let pred_labels: Vec<Option<String>> =
        pred.iter().map(|p| p.map(|o| o.label().to_string())).collect();
    Ok(label_report(&gold_labels, &pred_labels))
}
