//! Gold-echoing adapter.

use super::{Answer, AdapterError, ModelAdapter};
use crate::question::{CompareOption, GoldAnswer, QuestionRecord, Verdict};

/// Answers every question with its gold answer rendered as minimal text
/// ("4", "Yes", "dog", "B", "same"). Composed with the full pipeline it must
/// produce perfect scores, which pins a lot of plumbing at once.
#[derive(Debug, Default, Clone, Copy)]
pub struct OracleAdapter;

impl OracleAdapter {
    pub fn new() -> Self {
        Self
    }
}

/// Minimal-text rendering of a gold answer in its question's context.
pub fn render_gold(question: &QuestionRecord) -> String {
    render(&question.gold, &question.categories)
}

fn render(gold: &GoldAnswer, categories: &[String]) -> String {
    match gold {
        GoldAnswer::Number { number } => number.to_string(),
        GoldAnswer::YesNo { yes_no } => if *yes_no { "Yes" } else { "No" }.to_string(),
        GoldAnswer::Verdict { verdict } => match verdict {
            Verdict::FirstGreater => categories
                .first()
                .cloned()
                .unwrap_or_else(|| "first".to_string()),
            Verdict::SecondGreater => categories
                .get(1)
                .cloned()
                .unwrap_or_else(|| "second".to_string()),
            Verdict::Same => "same".to_string(),
        },
        GoldAnswer::Option { option } => match option {
            CompareOption::A => "A",
            CompareOption::B => "B",
            CompareOption::C => "C",
        }
        .to_string(),
        GoldAnswer::Compound { compound } => {
            let parts: Vec<String> = compound.iter().map(|g| render(g, categories)).collect();
            format!("{}.", parts.join(". "))
        }
    }
}

impl ModelAdapter for OracleAdapter {
    fn name(&self) -> &str {
        "oracle"
    }

    fn answer(&self, question: &QuestionRecord) -> Result<Answer, AdapterError> {
        Ok(Answer::local("oracle", question, render_gold(question)))
    }
}
