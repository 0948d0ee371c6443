//! Response parsing: raw model text to semantic answers.
//!
//! Every parser is total — any string maps to either a typed value or the
//! explicit unparseable outcome, never an error. Unparseable responses are
//! first-class data: metrics count them as wrong and report their rate
//! rather than dropping rows.

use crate::plural::pluralize;
use crate::question::{CompareOption, Family, GoldAnswer, QuestionRecord, Verdict};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Parsed,
    Unparseable,
}

/// Semantic reading of one raw response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedAnswer {
    pub question_id: String,
    pub status: ParseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<GoldAnswer>,
}

impl ParsedAnswer {
    fn parsed(question_id: &str, value: GoldAnswer) -> Self {
        Self {
            question_id: question_id.to_string(),
            status: ParseStatus::Parsed,
            value: Some(value),
        }
    }

    fn unparseable(question_id: &str) -> Self {
        Self {
            question_id: question_id.to_string(),
            status: ParseStatus::Unparseable,
            value: None,
        }
    }

    pub fn number(&self) -> Option<u32> {
        self.value.as_ref().and_then(GoldAnswer::as_number)
    }

    pub fn yes_no(&self) -> Option<bool> {
        self.value.as_ref().and_then(GoldAnswer::as_yes_no)
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.value.as_ref().and_then(GoldAnswer::as_verdict)
    }

    pub fn option(&self) -> Option<CompareOption> {
        self.value.as_ref().and_then(GoldAnswer::as_option)
    }
}

const NUMBER_WORDS: &[(&str, u32)] = &[
    ("zero", 0),
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
    ("ten", 10),
    ("eleven", 11),
    ("twelve", 12),
    ("thirteen", 13),
    ("fourteen", 14),
    ("fifteen", 15),
    ("sixteen", 16),
    ("seventeen", 17),
    ("eighteen", 18),
    ("nineteen", 19),
    ("twenty", 20),
];

/// First integer in the text: a digit run if any, otherwise the first
/// English number word up to twenty. Digits always beat words.
pub fn parse_number(raw: &str) -> Option<u32> {
    if let Some(n) = first_digit_run(raw) {
        return Some(n);
    }
    for token in alpha_tokens(raw) {
        let lower = token.to_ascii_lowercase();
        if let Some((_, n)) = NUMBER_WORDS.iter().find(|(w, _)| *w == lower) {
            return Some(*n);
        }
    }
    None
}

/// Every digit-run integer in the text, in order of appearance.
pub fn parse_all_numbers(raw: &str) -> Vec<u32> {
    let mut out = Vec::new();
    let bytes = raw.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push(saturating_u32(&raw[start..i]));
        } else {
            i += 1;
        }
    }
    out
}

fn first_digit_run(raw: &str) -> Option<u32> {
    let bytes = raw.as_bytes();
    let start = bytes.iter().position(u8::is_ascii_digit)?;
    let len = bytes[start..]
        .iter()
        .take_while(|b| b.is_ascii_digit())
        .count();
    Some(saturating_u32(&raw[start..start + len]))
}

fn saturating_u32(digits: &str) -> u32 {
    digits.parse::<u64>().map_or(u32::MAX, |n| n.min(u64::from(u32::MAX)) as u32)
}

fn alpha_tokens(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(|c: char| !c.is_alphabetic()).filter(|t| !t.is_empty())
}

fn leading_token(raw: &str) -> Option<&str> {
    raw.split(|c: char| !c.is_alphanumeric()).find(|t| !t.is_empty())
}

/// Yes/no by case-insensitive leading-token match.
pub fn parse_yes_no(raw: &str) -> Option<bool> {
    match leading_token(raw)?.to_ascii_lowercase().as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Multiple-choice option by case-insensitive leading-token match.
pub fn parse_option(raw: &str) -> Option<CompareOption> {
    match leading_token(raw)?.to_ascii_lowercase().as_str() {
        "a" => Some(CompareOption::A),
        "b" => Some(CompareOption::B),
        "c" => Some(CompareOption::C),
        _ => None,
    }
}

/// Free-form comparison answer, interpreted in the prompt's category order.
///
/// "same"/"equal" wins first (an equality statement usually names both
/// categories); otherwise a mention of exactly one category decides, and a
/// mention of both without an equality word is an ambiguous tie.
pub fn parse_compare(raw: &str, first: &str, second: &str) -> Option<Verdict> {
    let text = raw.to_ascii_lowercase();
    let mentions = |category: &str| {
        contains_phrase(&text, &category.to_ascii_lowercase())
            || contains_phrase(&text, &pluralize(category).to_ascii_lowercase())
    };
    let has_same = contains_phrase(&text, "same") || contains_phrase(&text, "equal");
    if has_same {
        return Some(Verdict::Same);
    }
    match (mentions(first), mentions(second)) {
        (true, true) | (false, false) => None,
        (true, false) => Some(Verdict::FirstGreater),
        (false, true) => Some(Verdict::SecondGreater),
    }
}

// Word-boundary substring search (phrase may contain spaces).
fn contains_phrase(text: &str, phrase: &str) -> bool {
    if phrase.is_empty() {
        return false;
    }
    let mut from = 0;
    while let Some(pos) = text[from..].find(phrase) {
        let start = from + pos;
        let end = start + phrase.len();
        let left_ok = start == 0
            || !text[..start]
                .chars()
                .next_back()
                .is_some_and(char::is_alphanumeric);
        let right_ok =
            end == text.len() || !text[end..].chars().next().is_some_and(char::is_alphanumeric);
        if left_ok && right_ok {
            return true;
        }
        from = start + phrase.len().max(1);
    }
    false
}

/// Parse a raw response against its question's family.
pub fn parse_response(question: &QuestionRecord, raw: &str) -> ParsedAnswer {
    let id = &question.question_id;
    match question.family {
        Family::Primal | Family::TrainDirect => match parse_number(raw) {
            Some(n) => ParsedAnswer::parsed(id, GoldAnswer::Number { number: n }),
            None => ParsedAnswer::unparseable(id),
        },
        Family::BinaryI | Family::BinaryII | Family::BinaryIII => match parse_yes_no(raw) {
            Some(b) => ParsedAnswer::parsed(id, GoldAnswer::YesNo { yes_no: b }),
            None => ParsedAnswer::unparseable(id),
        },
        Family::CompareI => {
            let (first, second) = match (question.categories.first(), question.categories.get(1)) {
                (Some(a), Some(b)) => (a, b),
                _ => return ParsedAnswer::unparseable(id),
            };
            match parse_compare(raw, first, second) {
                Some(v) => ParsedAnswer::parsed(id, GoldAnswer::Verdict { verdict: v }),
                None => ParsedAnswer::unparseable(id),
            }
        }
        Family::CompareII => match parse_option(raw) {
            Some(o) => ParsedAnswer::parsed(id, GoldAnswer::Option { option: o }),
            None => ParsedAnswer::unparseable(id),
        },
        Family::TrainConsI => match (parse_yes_no(raw), parse_number(raw)) {
            (Some(b), Some(n)) => ParsedAnswer::parsed(
                id,
                GoldAnswer::Compound {
                    compound: vec![
                        GoldAnswer::YesNo { yes_no: b },
                        GoldAnswer::Number { number: n },
                    ],
                },
            ),
            _ => ParsedAnswer::unparseable(id),
        },
        Family::TrainConsII => {
            let (first, second) = match (question.categories.first(), question.categories.get(1)) {
                (Some(a), Some(b)) => (a, b),
                _ => return ParsedAnswer::unparseable(id),
            };
            let verdict = parse_compare(raw, first, second);
            let numbers = parse_all_numbers(raw);
            match (verdict, numbers.as_slice()) {
                (Some(v), [n1, n2, ..]) => ParsedAnswer::parsed(
                    id,
                    GoldAnswer::Compound {
                        compound: vec![
                            GoldAnswer::Verdict { verdict: v },
                            GoldAnswer::Number { number: *n1 },
                            GoldAnswer::Number { number: *n2 },
                        ],
                    },
                ),
                _ => ParsedAnswer::unparseable(id),
            }
        }
    }
}
