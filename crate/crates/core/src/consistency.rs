//! Inner and outer answer-consistency rates.
//!
//! Inner inconsistency is self-contradiction within one task: assenting to
//! two mutually exclusive count statements, or changing a comparison verdict
//! when the category order is flipped. Outer inconsistency is contradiction
//! with the model's own direct count: denying its own stated count, or
//! giving a verdict incompatible with its own two counts.
//!
//! Every rate carries its evaluable denominator and the contingency cells
//! behind it; items dropped for unparseable or unpaired answers are counted,
//! never silently discarded.

use crate::parse::ParsedAnswer;
use crate::question::{QuestionRecord, Verdict};
use serde::{Deserialize, Serialize, Serializer};
use std::collections::{BTreeMap, HashMap};

/// One consistency rate with its supporting counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    #[serde(serialize_with = "round3")]
    pub rate: f64,
    /// Items with every needed answer parsed (and a testable contradiction,
    /// where that applies).
    pub n_evaluable: usize,
    pub n_skipped: usize,
    /// True when no item was evaluable; `rate` is reported as 0 then.
    pub undefined: bool,
    pub contingency: BTreeMap<String, usize>,
}

fn round3<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1000.0).round() / 1000.0)
}

impl RateReport {
    fn from_counts(numerator: usize, evaluable: usize, skipped: usize) -> Self {
        Self {
            rate: if evaluable > 0 {
                numerator as f64 / evaluable as f64
            } else {
                0.0
            },
            n_evaluable: evaluable,
            n_skipped: skipped,
            undefined: evaluable == 0,
            contingency: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, count: usize) -> Self {
        self.contingency.insert(key.to_string(), count);
        self
    }
}

/// Consistency rates for one run. Each section is present only when the run
/// contained the question families it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Inner inconsistency of verification answers: yes to both the true
    /// count and a different model-stated count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary_inner: Option<RateReport>,
    /// Outer inconsistency: the model denies its own prior count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary_outer: Option<RateReport>,
    /// Verdict changes under category-order flips, free-form prompts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_inner_i: Option<RateReport>,
    /// Verdict changes under option-order flips, multiple-choice prompts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_inner_ii: Option<RateReport>,
    /// Agreement between comparison verdicts and the model's own two primal
    /// counts (a consistency rate: higher is better).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_outer: Option<RateReport>,
}

/// One instance asked in both binary settings: with the true count and with
/// the model's own prior answer.
#[derive(Debug, Clone)]
pub struct BinaryInnerItem {
    pub stated_truth: u32,
    pub stated_model: u32,
    pub answer_to_truth: Option<bool>,
    pub answer_to_model: Option<bool>,
}

/// Join of setting-I and setting-II questions with their parsed answers.
#[derive(Debug, Default)]
pub struct BinaryInnerJoin {
    pub items: Vec<BinaryInnerItem>,
    pub unpaired: usize,
}

/// Inner inconsistency rate for binary questions.
///
/// An item is evaluable only when the two stated counts differ (otherwise
/// no contradiction is testable) and both answers parsed; it is inconsistent
/// when the model assents to both statements.
pub fn binary_inner(join: &BinaryInnerJoin) -> RateReport {
    let mut cells: BTreeMap<&str, usize> = BTreeMap::new();
    let mut equal_counts = 0usize;
    let mut unparseable = 0usize;
    for item in &join.items {
        if item.stated_truth == item.stated_model {
            equal_counts += 1;
            continue;
        }
        match (item.answer_to_truth, item.answer_to_model) {
            (Some(a), Some(b)) => {
                let key = match (a, b) {
                    (true, true) => "yes_yes",
                    (true, false) => "yes_no",
                    (false, true) => "no_yes",
                    (false, false) => "no_no",
                };
                *cells.entry(key).or_insert(0) += 1;
            }
            _ => unparseable += 1,
        }
    }
    let evaluable: usize = cells.values().sum();
    let inconsistent = cells.get("yes_yes").copied().unwrap_or(0);
    let skipped = equal_counts + unparseable + join.unpaired;
    let mut report = RateReport::from_counts(inconsistent, evaluable, skipped)
        .with("excluded_equal_counts", equal_counts)
        .with("excluded_unparseable", unparseable)
        .with("excluded_unpaired", join.unpaired);
    for (k, v) in cells {
        report.contingency.insert(k.to_string(), v);
    }
    report
}

/// Outer inconsistency for binary setting II: the fraction of parsed
/// answers saying "no" to the model's own stated count.
pub fn binary_outer(answers: &[Option<bool>]) -> RateReport {
    let yes = answers.iter().filter(|a| **a == Some(true)).count();
    let no = answers.iter().filter(|a| **a == Some(false)).count();
    let unparseable = answers.len() - yes - no;
    RateReport::from_counts(no, yes + no, unparseable)
        .with("yes", yes)
        .with("no", no)
        .with("excluded_unparseable", unparseable)
}

/// A comparison question and its flipped twin, both verdicts normalized to
/// one shared category order.
#[derive(Debug, Clone)]
pub struct FlipPair {
    pub first: Option<Verdict>,
    pub second: Option<Verdict>,
}

#[derive(Debug, Default)]
pub struct FlipJoin {
    pub pairs: Vec<FlipPair>,
    pub unpaired: usize,
}

/// Inner inconsistency for comparison questions: normalized verdicts of a
/// flip pair disagree.
pub fn compare_inner(join: &FlipJoin) -> RateReport {
    let mut agree = 0usize;
    let mut disagree = 0usize;
    let mut unparseable = 0usize;
    for pair in &join.pairs {
        match (pair.first, pair.second) {
            (Some(a), Some(b)) if a == b => agree += 1,
            (Some(_), Some(_)) => disagree += 1,
            _ => unparseable += 1,
        }
    }
    RateReport::from_counts(disagree, agree + disagree, unparseable + join.unpaired)
        .with("agree", agree)
        .with("disagree", disagree)
        .with("excluded_unparseable", unparseable)
        .with("excluded_unpaired", join.unpaired)
}

/// One comparison verdict joined with the model's own primal counts for the
/// two categories, in the verdict's category order.
#[derive(Debug, Clone)]
pub struct CompareOuterItem {
    pub primal_first: Option<u32>,
    pub primal_second: Option<u32>,
    pub verdict: Option<Verdict>,
}

/// Outer consistency for comparison questions: the verdict matches the sign
/// relation of the model's own primal counts.
pub fn compare_outer(items: &[CompareOuterItem]) -> RateReport {
    let mut consistent = 0usize;
    let mut inconsistent = 0usize;
    let mut skipped = 0usize;
    for item in items {
        match (item.primal_first, item.primal_second, item.verdict) {
            (Some(a), Some(b), Some(v)) => {
                if Verdict::from_counts(a, b) == v {
                    consistent += 1;
                } else {
                    inconsistent += 1;
                }
            }
            _ => skipped += 1,
        }
    }
    RateReport::from_counts(consistent, consistent + inconsistent, skipped)
        .with("consistent", consistent)
        .with("inconsistent", inconsistent)
        .with("excluded_missing_answer", skipped)
}

type AnswerIndex<'a> = HashMap<&'a str, &'a ParsedAnswer>;

fn index_answers<'a>(answers: &'a [ParsedAnswer]) -> AnswerIndex<'a> {
    answers.iter().map(|a| (a.question_id.as_str(), a)).collect()
}

/// Pair setting-I and setting-II questions by `(image_ref, category)` and
/// attach both parsed answers.
pub fn join_binary_inner(
    questions_truth: &[QuestionRecord],
    questions_model: &[QuestionRecord],
    answers: &[ParsedAnswer],
) -> BinaryInnerJoin {
    let index = index_answers(answers);
    let key = |q: &QuestionRecord| {
        (
            q.image_ref.clone(),
            q.categories.first().cloned().unwrap_or_default(),
        )
    };
    let by_key: HashMap<(String, String), &QuestionRecord> =
        questions_model.iter().map(|q| (key(q), q)).collect();

    let mut join = BinaryInnerJoin::default();
    let mut matched = 0usize;
    for q_truth in questions_truth {
        let Some(q_model) = by_key.get(&key(q_truth)) else {
            join.unpaired += 1;
            continue;
        };
        matched += 1;
        let (Some(stated_truth), Some(stated_model)) =
            (q_truth.queried_count, q_model.queried_count)
        else {
            join.unpaired += 1;
            continue;
        };
        join.items.push(BinaryInnerItem {
            stated_truth,
            stated_model,
            answer_to_truth: index.get(q_truth.question_id.as_str()).and_then(|a| a.yes_no()),
            answer_to_model: index.get(q_model.question_id.as_str()).and_then(|a| a.yes_no()),
        });
    }
    join.unpaired += questions_model.len().saturating_sub(matched);
    join
}

fn verdict_of(q: &QuestionRecord, answer: Option<&ParsedAnswer>) -> Option<Verdict> {
    let parsed = answer?;
    match q.family {
        crate::question::Family::CompareII => parsed.option().map(|o| o.to_verdict()),
        _ => parsed.verdict(),
    }
}

// Normalize a record's verdict to the sorted order of its category pair.
fn normalized_verdict(q: &QuestionRecord, answer: Option<&ParsedAnswer>) -> Option<Verdict> {
    let v = verdict_of(q, answer)?;
    if q.categories.len() == 2 && q.categories[0] > q.categories[1] {
        Some(v.flipped())
    } else {
        Some(v)
    }
}

/// Group one comparison family's questions by `flip_group` and normalize
/// both members' verdicts to a shared category order.
pub fn join_flip_pairs(questions: &[QuestionRecord], answers: &[ParsedAnswer]) -> FlipJoin {
    let index = index_answers(answers);
    let mut groups: BTreeMap<&str, Vec<&QuestionRecord>> = BTreeMap::new();
    let mut ungrouped = 0usize;
    for q in questions {
        match q.flip_group.as_deref() {
            Some(group) => groups.entry(group).or_default().push(q),
            // A compare question without a flip twin cannot be checked.
            None => ungrouped += 1,
        }
    }

    let mut join = FlipJoin {
        unpaired: ungrouped,
        ..FlipJoin::default()
    };
    for (_, members) in groups {
        if members.len() != 2 {
            join.unpaired += members.len();
            continue;
        }
        join.pairs.push(FlipPair {
            first: normalized_verdict(members[0], index.get(members[0].question_id.as_str()).copied()),
            second: normalized_verdict(members[1], index.get(members[1].question_id.as_str()).copied()),
        });
    }
    join
}

/// Attach the model's parsed primal counts to every comparison record, in
/// that record's category order.
pub fn join_compare_outer(
    primal_questions: &[QuestionRecord],
    compare_questions: &[QuestionRecord],
    answers: &[ParsedAnswer],
) -> Vec<CompareOuterItem> {
    let index = index_answers(answers);
    let mut primal_counts: HashMap<(&str, &str), Option<u32>> = HashMap::new();
    for q in primal_questions {
        let Some(category) = q.categories.first() else {
            continue;
        };
        let parsed = index.get(q.question_id.as_str()).and_then(|a| a.number());
        primal_counts.insert((q.image_ref.as_str(), category.as_str()), parsed);
    }

    compare_questions
        .iter()
        .map(|q| {
            let lookup = |category: &str| {
                primal_counts
                    .get(&(q.image_ref.as_str(), category))
                    .copied()
                    .flatten()
            };
            CompareOuterItem {
                primal_first: q.categories.first().and_then(|c| lookup(c)),
                primal_second: q.categories.get(1).and_then(|c| lookup(c)),
                verdict: verdict_of(q, index.get(q.question_id.as_str()).copied()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coco::CountInstance;
    use crate::parse::parse_response;
    use crate::question::{gen_binary, gen_compare, BinarySetting, CompareStyle, PairingConfig};
    use rand::Rng;

    fn item(
        stated_truth: u32,
        stated_model: u32,
        a: Option<bool>,
        b: Option<bool>,
    ) -> BinaryInnerItem {
        BinaryInnerItem {
            stated_truth,
            stated_model,
            answer_to_truth: a,
            answer_to_model: b,
        }
    }

    #[test]
    fn assenting_to_contradictory_statements_is_inconsistent() {
        let join = BinaryInnerJoin {
            items: vec![item(1, 2, Some(true), Some(true))],
            unpaired: 0,
        };
        let r = binary_inner(&join);
        assert_eq!(r.rate, 1.0);
        assert_eq!(r.n_evaluable, 1);
        assert_eq!(r.contingency["yes_yes"], 1);
    }

    #[test]
    fn equal_stated_counts_are_excluded() {
        let join = BinaryInnerJoin {
            items: vec![
                item(2, 2, Some(true), Some(true)),
                item(1, 3, Some(true), Some(false)),
            ],
            unpaired: 0,
        };
        let r = binary_inner(&join);
        assert_eq!(r.n_evaluable, 1);
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.contingency["excluded_equal_counts"], 1);
    }

    #[test]
    fn empty_denominator_is_flagged_undefined() {
        let join = BinaryInnerJoin {
            items: vec![item(2, 2, Some(true), Some(true))],
            unpaired: 0,
        };
        let r = binary_inner(&join);
        assert!(r.undefined);
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn random_yes_no_inner_inconsistency_near_quarter() {
        let mut rng = crate::seed::rng_from_seed(11);
        let items: Vec<BinaryInnerItem> = (0..10_000)
            .map(|_| item(1, 2, Some(rng.gen_bool(0.5)), Some(rng.gen_bool(0.5))))
            .collect();
        let r = binary_inner(&BinaryInnerJoin { items, unpaired: 0 });
        assert!((r.rate - 0.25).abs() < 0.015, "rate {}", r.rate);
    }

    #[test]
    fn binary_outer_rates() {
        // A model that always affirms its own answer never self-contradicts.
        let affirm: Vec<Option<bool>> = vec![Some(true); 50];
        assert_eq!(binary_outer(&affirm).rate, 0.0);
        let deny: Vec<Option<bool>> = vec![Some(false); 50];
        assert_eq!(binary_outer(&deny).rate, 1.0);
        let mut rng = crate::seed::rng_from_seed(3);
        let random: Vec<Option<bool>> = (0..10_000).map(|_| Some(rng.gen_bool(0.5))).collect();
        let r = binary_outer(&random);
        assert!((r.rate - 0.5).abs() < 0.015, "rate {}", r.rate);
        let with_gaps = vec![Some(true), None, Some(false)];
        let r = binary_outer(&with_gaps);
        assert_eq!(r.n_evaluable, 2);
        assert_eq!(r.n_skipped, 1);
        assert_eq!(r.rate, 0.5);
    }

    fn inst(image_id: u64, category: &str, count: u32) -> CountInstance {
        CountInstance {
            image_id,
            image_ref: format!("img{image_id}.jpg"),
            category: category.to_string(),
            count,
        }
    }

    #[test]
    fn flip_pair_disagreement_detected_for_free_form() {
        // (backpack, dog) answered "Dog", flipped (dog, backpack) answered
        // "Backpack": both claim the second category, which is contradictory.
        let d = vec![inst(1, "backpack", 1), inst(1, "dog", 1)];
        let qs = gen_compare(&d, CompareStyle::I, &PairingConfig::default(), 0);
        let answers = vec![
            parse_response(&qs[0], "Dog"),
            parse_response(&qs[1], "Backpack"),
        ];
        let join = join_flip_pairs(&qs, &answers);
        let r = compare_inner(&join);
        assert_eq!(r.n_evaluable, 1);
        assert_eq!(r.rate, 1.0);
    }

    #[test]
    fn flip_pair_same_option_letter_is_inconsistent_for_multiple_choice() {
        let d = vec![inst(1, "bicycle", 5), inst(1, "dog", 1)];
        let qs = gen_compare(&d, CompareStyle::II, &PairingConfig::default(), 0);
        // "B" to both orders claims opposite winners.
        let answers = vec![parse_response(&qs[0], "B"), parse_response(&qs[1], "B")];
        let r = compare_inner(&join_flip_pairs(&qs, &answers));
        assert_eq!(r.rate, 1.0);
        // Mirrored letters are consistent.
        let answers = vec![parse_response(&qs[0], "B"), parse_response(&qs[1], "A")];
        let r = compare_inner(&join_flip_pairs(&qs, &answers));
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn unparseable_side_excludes_the_pair_but_counts_it() {
        let d = vec![inst(1, "backpack", 1), inst(1, "dog", 1)];
        let qs = gen_compare(&d, CompareStyle::I, &PairingConfig::default(), 0);
        let answers = vec![
            parse_response(&qs[0], "Dog"),
            parse_response(&qs[1], "no idea"),
        ];
        let r = compare_inner(&join_flip_pairs(&qs, &answers));
        assert!(r.undefined);
        assert_eq!(r.n_skipped, 1);
        assert_eq!(r.contingency["excluded_unparseable"], 1);
    }

    #[test]
    fn flip_normalization_is_an_involution() {
        for v in [Verdict::FirstGreater, Verdict::SecondGreater, Verdict::Same] {
            assert_eq!(v.flipped().flipped(), v);
        }
    }

    #[test]
    fn verdict_against_own_counts() {
        // Model said 1 cat, 2 dogs, then claimed more cats than dogs.
        let conflicted = CompareOuterItem {
            primal_first: Some(1),
            primal_second: Some(2),
            verdict: Some(Verdict::FirstGreater),
        };
        let r = compare_outer(&[conflicted]);
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.contingency["inconsistent"], 1);

        let agreeing = CompareOuterItem {
            primal_first: Some(1),
            primal_second: Some(2),
            verdict: Some(Verdict::SecondGreater),
        };
        assert_eq!(compare_outer(&[agreeing]).rate, 1.0);
    }

    #[test]
    fn random_verdicts_against_fixed_counts_near_third() {
        let mut rng = crate::seed::rng_from_seed(17);
        let verdicts = [Verdict::FirstGreater, Verdict::SecondGreater, Verdict::Same];
        let items: Vec<CompareOuterItem> = (0..10_000)
            .map(|_| CompareOuterItem {
                primal_first: Some(2),
                primal_second: Some(5),
                verdict: Some(verdicts[rng.gen_range(0..3)]),
            })
            .collect();
        let r = compare_outer(&items);
        assert!((r.rate - 1.0 / 3.0).abs() < 0.015, "rate {}", r.rate);
    }

    #[test]
    fn join_binary_inner_pairs_by_instance() {
        let d = vec![inst(1, "dog", 2), inst(2, "cat", 3)];
        let q1 = gen_binary(&d, BinarySetting::I, None, 0).unwrap();
        let mut prior = crate::question::PriorAnswers::new();
        prior.insert(("img1.jpg".into(), "dog".into()), 5);
        prior.insert(("img2.jpg".into(), "cat".into()), 3);
        let q2 = gen_binary(&d, BinarySetting::II, Some(&prior), 0).unwrap();
        let mut answers = Vec::new();
        for q in q1.iter().chain(q2.iter()) {
            answers.push(parse_response(q, "Yes"));
        }
        let join = join_binary_inner(&q1, &q2, &answers);
        assert_eq!(join.items.len(), 2);
        assert_eq!(join.unpaired, 0);
        let r = binary_inner(&join);
        // img2/cat has equal stated counts (3 == 3): excluded. img1/dog is
        // a yes-yes contradiction.
        assert_eq!(r.n_evaluable, 1);
        assert_eq!(r.rate, 1.0);
    }

    #[test]
    fn join_compare_outer_uses_record_order() {
        let d = vec![inst(1, "cat", 1), inst(1, "dog", 2)];
        let primal = crate::question::gen_primal(&d);
        let compare = gen_compare(&d, CompareStyle::I, &PairingConfig::default(), 0);
        let mut answers = vec![
            parse_response(&primal[0], "1"),
            parse_response(&primal[1], "2"),
        ];
        // Claim "cat" (first in base order): conflicts with own counts 1 < 2.
        answers.push(parse_response(&compare[0], "Cat"));
        // Claim "dog" on the flipped record (dog, cat): dog is first there,
        // and own counts say dog (2) > cat (1): consistent.
        answers.push(parse_response(&compare[1], "Dog"));
        let items = join_compare_outer(&primal, &compare, &answers);
        let r = compare_outer(&items);
        assert_eq!(r.n_evaluable, 2);
        assert_eq!(r.contingency["consistent"], 1);
        assert_eq!(r.contingency["inconsistent"], 1);
    }
}
