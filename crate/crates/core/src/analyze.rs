//! Run analysis: join questions with responses and produce the evaluation
//! and consistency reports.

use crate::adapter::ResponseRecord;
use crate::consistency::{
    binary_inner, binary_outer, compare_inner, compare_outer, join_binary_inner, join_compare_outer,
    join_flip_pairs, ConsistencyReport,
};
use crate::metrics::{
    eval_binary, eval_compare_option, eval_compare_verdict, eval_counting, EvalReport, MetricsError,
};
use crate::parse::{parse_response, ParsedAnswer};
use crate::question::{Family, QuestionRecord};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("{count} questions have no response (first: {first})")]
    MissingResponses { count: usize, first: String },
    #[error("{count} responses reference unknown questions (first: {first})")]
    UnknownResponses { count: usize, first: String },
    #[error("duplicate response for question {0}")]
    DuplicateResponse(String),
    #[error("duplicate question id {0}")]
    DuplicateQuestion(String),
    #[error("question {question_id} has a gold answer incompatible with family {family}")]
    GoldShape {
        question_id: String,
        family: Family,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Everything `analyze` produces for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisOutput {
    /// Per-family evaluation reports, keyed by family tag.
    pub eval: BTreeMap<String, EvalReport>,
    pub consistency: ConsistencyReport,
}

/// Score a run: parse every response against its question, evaluate each
/// family present, and compute whichever consistency rates the run's
/// families support.
pub fn analyze_run(
    questions: &[QuestionRecord],
    responses: &[ResponseRecord],
) -> Result<AnalysisOutput, AnalyzeError> {
    let mut question_ids: HashMap<&str, &QuestionRecord> = HashMap::new();
    for q in questions {
        if question_ids.insert(&q.question_id, q).is_some() {
            return Err(AnalyzeError::DuplicateQuestion(q.question_id.clone()));
        }
    }

    let mut raw_by_id: HashMap<&str, &str> = HashMap::new();
    let mut unknown = Vec::new();
    for r in responses {
        if !question_ids.contains_key(r.question_id.as_str()) {
            unknown.push(r.question_id.clone());
            continue;
        }
        if raw_by_id.insert(&r.question_id, &r.raw_text).is_some() {
            return Err(AnalyzeError::DuplicateResponse(r.question_id.clone()));
        }
    }
    if let Some(first) = unknown.first() {
        return Err(AnalyzeError::UnknownResponses {
            count: unknown.len(),
            first: first.clone(),
        });
    }
    let missing: Vec<&QuestionRecord> = questions
        .iter()
        .filter(|q| !raw_by_id.contains_key(q.question_id.as_str()))
        .collect();
    if let Some(first) = missing.first() {
        return Err(AnalyzeError::MissingResponses {
            count: missing.len(),
            first: first.question_id.clone(),
        });
    }

    let answers: Vec<ParsedAnswer> = questions
        .iter()
        .map(|q| parse_response(q, raw_by_id[q.question_id.as_str()]))
        .collect();
    let answer_by_id: HashMap<&str, &ParsedAnswer> =
        answers.iter().map(|a| (a.question_id.as_str(), a)).collect();

    let mut by_family: BTreeMap<Family, Vec<&QuestionRecord>> = BTreeMap::new();
    for q in questions {
        by_family.entry(q.family).or_default().push(q);
    }

    let mut eval = BTreeMap::new();
    for (&family, members) in &by_family {
        let report = eval_family(family, members, &answer_by_id)?;
        if let Some(report) = report {
            eval.insert(family.tag().to_string(), report);
        }
    }

    let consistency = consistency_report(&by_family, &answers);
    Ok(AnalysisOutput { eval, consistency })
}

fn eval_family(
    family: Family,
    members: &[&QuestionRecord],
    answers: &HashMap<&str, &ParsedAnswer>,
) -> Result<Option<EvalReport>, AnalyzeError> {
    let gold_err = |q: &QuestionRecord| AnalyzeError::GoldShape {
        question_id: q.question_id.clone(),
        family,
    };
    let answer = |q: &QuestionRecord| answers[q.question_id.as_str()];
    let report = match family {
        Family::Primal => {
            let gold = members
                .iter()
                .map(|q| q.gold.as_number().ok_or_else(|| gold_err(q)))
                .collect::<Result<Vec<_>, _>>()?;
            let pred: Vec<Option<u32>> = members.iter().map(|q| answer(q).number()).collect();
            Some(eval_counting(&gold, &pred)?)
        }
        Family::BinaryI | Family::BinaryII | Family::BinaryIII => {
            let gold = members
                .iter()
                .map(|q| q.gold.as_yes_no().ok_or_else(|| gold_err(q)))
                .collect::<Result<Vec<_>, _>>()?;
            let pred: Vec<Option<bool>> = members.iter().map(|q| answer(q).yes_no()).collect();
            Some(eval_binary(&gold, &pred)?)
        }
        Family::CompareI => {
            let gold = members
                .iter()
                .map(|q| q.gold.as_verdict().ok_or_else(|| gold_err(q)))
                .collect::<Result<Vec<_>, _>>()?;
            let pred = members.iter().map(|q| answer(q).verdict()).collect::<Vec<_>>();
            Some(eval_compare_verdict(&gold, &pred)?)
        }
        Family::CompareII => {
            let gold = members
                .iter()
                .map(|q| q.gold.as_option().ok_or_else(|| gold_err(q)))
                .collect::<Result<Vec<_>, _>>()?;
            let pred = members.iter().map(|q| answer(q).option()).collect::<Vec<_>>();
            Some(eval_compare_option(&gold, &pred)?)
        }
        // Training records are generated, not evaluated.
        Family::TrainDirect | Family::TrainConsI | Family::TrainConsII => None,
    };
    Ok(report)
}

fn consistency_report(
    by_family: &BTreeMap<Family, Vec<&QuestionRecord>>,
    answers: &[ParsedAnswer],
) -> ConsistencyReport {
    let owned = |family: Family| -> Option<Vec<QuestionRecord>> {
        by_family
            .get(&family)
            .map(|qs| qs.iter().map(|q| (*q).clone()).collect())
    };
    let binary_i = owned(Family::BinaryI);
    let binary_ii = owned(Family::BinaryII);
    let compare_i = owned(Family::CompareI);
    let compare_ii = owned(Family::CompareII);
    let primal = owned(Family::Primal);

    let answer_by_id: HashMap<&str, &crate::parse::ParsedAnswer> =
        answers.iter().map(|a| (a.question_id.as_str(), a)).collect();

    let mut report = ConsistencyReport::default();
    if let (Some(qi), Some(qii)) = (&binary_i, &binary_ii) {
        report.binary_inner = Some(binary_inner(&join_binary_inner(qi, qii, answers)));
    }
    if let Some(qii) = &binary_ii {
        let parsed: Vec<Option<bool>> = qii
            .iter()
            .map(|q| {
                answer_by_id
                    .get(q.question_id.as_str())
                    .and_then(|a| a.yes_no())
            })
            .collect();
        report.binary_outer = Some(binary_outer(&parsed));
    }
    if let Some(qs) = &compare_i {
        report.compare_inner_i = Some(compare_inner(&join_flip_pairs(qs, answers)));
    }
    if let Some(qs) = &compare_ii {
        report.compare_inner_ii = Some(compare_inner(&join_flip_pairs(qs, answers)));
    }
    if let Some(primal) = &primal {
        let mut all_compare: Vec<QuestionRecord> = Vec::new();
        all_compare.extend(compare_i.iter().flatten().cloned());
        all_compare.extend(compare_ii.iter().flatten().cloned());
        if !all_compare.is_empty() {
            let items = join_compare_outer(primal, &all_compare, answers);
            report.compare_outer = Some(compare_outer(&items));
        }
    }
    report
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt3_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), fmt3)
}

/// Markdown report with one row per family plus the consistency table.
pub fn render_markdown(model: &str, output: &AnalysisOutput) -> String {
    let mut s = String::new();
    s.push_str(&format!("# countcheck report - {model}\n\n"));
    s.push_str("## Family scores\n\n");
    s.push_str("| family | questions | macro-F1 | weighted-F1 | MAE | accuracy | yes-ratio | unparseable |\n");
    s.push_str("|---|---|---|---|---|---|---|---|\n");
    for (family, r) in &output.eval {
        s.push_str(&format!(
            "| {family} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.n_questions,
            fmt3(r.macro_f1),
            fmt3(r.weighted_f1),
            fmt3_opt(r.mae),
            fmt3(r.accuracy),
            fmt3_opt(r.yes_ratio),
            fmt3(r.unparseable_rate),
        ));
    }
    s.push_str("\n## Consistency\n\n");
    s.push_str("| check | rate | evaluable | skipped | note |\n");
    s.push_str("|---|---|---|---|---|\n");
    let mut row = |name: &str, rate: &Option<crate::consistency::RateReport>| {
        if let Some(r) = rate {
            s.push_str(&format!(
                "| {name} | {} | {} | {} | {} |\n",
                fmt3(r.rate),
                r.n_evaluable,
                r.n_skipped,
                if r.undefined { "undefined (no evaluable items)" } else { "" },
            ));
        }
    };
    row("binary inner inconsistency", &output.consistency.binary_inner);
    row("binary outer inconsistency", &output.consistency.binary_outer);
    row(
        "compare inner inconsistency (free-form)",
        &output.consistency.compare_inner_i,
    );
    row(
        "compare inner inconsistency (multiple-choice)",
        &output.consistency.compare_inner_ii,
    );
    row("compare outer consistency", &output.consistency.compare_outer);
    s
}

/// Counting-task CSV: `model,macro_f1,weighted_f1,mae`, one row per run.
pub fn render_csv(model: &str, output: &AnalysisOutput) -> String {
    let mut s = String::from("model,macro_f1,weighted_f1,mae\n");
    if let Some(r) = output.eval.get(Family::Primal.tag()) {
        s.push_str(&format!(
            "{model},{},{},{}\n",
            fmt3(r.macro_f1),
            fmt3(r.weighted_f1),
            r.mae.map_or_else(String::new, fmt3),
        ));
    }
    s
}
