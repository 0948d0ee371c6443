//! Seeded uniform-random baseline adapter.

use super::{Answer, AdapterError, ModelAdapter};
use crate::question::{Family, QuestionRecord};
use crate::seed::{derive_seed, rng_from_seed};
use rand::Rng;

/// Uniform random answers: counts in 1..=10, fair yes/no, uniform choice
/// among the two categories and "same", uniform A/B/C. Each question's draw
/// is derived from `(seed, question_id)`, so answers are stable across
/// re-runs and independent of question order.
#[derive(Debug, Clone, Copy)]
pub struct RandomAdapter {
    seed: u64,
}

impl RandomAdapter {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl ModelAdapter for RandomAdapter {
    fn name(&self) -> &str {
        "random"
    }

    fn answer(&self, question: &QuestionRecord) -> Result<Answer, AdapterError> {
        let key = format!("random|{}", question.question_id);
        let mut rng = rng_from_seed(derive_seed(self.seed, &key));
        let text = match question.family {
            Family::Primal | Family::TrainDirect => rng.gen_range(1u32..=10).to_string(),
            Family::BinaryI | Family::BinaryII | Family::BinaryIII => {
                if rng.gen_bool(0.5) { "Yes" } else { "No" }.to_string()
            }
            Family::CompareI => match rng.gen_range(0u32..3) {
                0 => question.categories.first().cloned().unwrap_or_default(),
                1 => question.categories.get(1).cloned().unwrap_or_default(),
                _ => "same".to_string(),
            },
            Family::CompareII => ["A", "B", "C"][rng.gen_range(0usize..3)].to_string(),
            Family::TrainConsI => format!(
                "{}. {}.",
                if rng.gen_bool(0.5) { "Yes" } else { "No" },
                rng.gen_range(1u32..=10)
            ),
            Family::TrainConsII => {
                let winner = match rng.gen_range(0u32..3) {
                    0 => question.categories.first().cloned().unwrap_or_default(),
                    1 => question.categories.get(1).cloned().unwrap_or_default(),
                    _ => "same".to_string(),
                };
                format!(
                    "{winner}. {}. {}.",
                    rng.gen_range(1u32..=10),
                    rng.gen_range(1u32..=10)
                )
            }
        };
        Ok(Answer::local("random", question, text))
    }
}
