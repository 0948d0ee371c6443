//! English pluralization for category names.
//!
//! Detection vocabularies use short noun phrases ("dog", "wine glass",
//! "traffic light"). Plurals come from an irregular table first, then naive
//! suffix rules applied to the last word. "person" pluralizes to "persons"
//! here because that is the form the question templates use.

/// Names whose plural is not produced by the suffix rules.
const IRREGULAR: &[(&str, &str)] = &[
    ("person", "persons"),
    ("scissors", "scissors"),
    ("skis", "skis"),
    ("sheep", "sheep"),
    ("mouse", "mice"),
];

/// Plural form of a category name.
pub fn pluralize(name: &str) -> String {
    if let Some((_, plural)) = IRREGULAR.iter().find(|(singular, _)| *singular == name) {
        return (*plural).to_string();
    }
    match name.rsplit_once(' ') {
        Some((head, last)) => format!("{head} {}", pluralize_word(last)),
        None => pluralize_word(name),
    }
}

fn pluralize_word(word: &str) -> String {
    if let Some((_, plural)) = IRREGULAR.iter().find(|(singular, _)| *singular == word) {
        return (*plural).to_string();
    }
    let lower = word.to_ascii_lowercase();
    if lower.ends_with('s')
        || lower.ends_with('x')
        || lower.ends_with('z')
        || lower.ends_with("ch")
        || lower.ends_with("sh")
    {
        return format!("{word}es");
    }
    if let Some(stripped) = word.strip_suffix('y') {
        let before_y = stripped.chars().last();
        if before_y.is_some_and(|c| !"aeiou".contains(c.to_ascii_lowercase())) {
            return format!("{stripped}ies");
        }
    }
    format!("{word}s")
}

/// Singular or plural form depending on the count.
pub fn count_form(name: &str, n: u32) -> String {
    if n == 1 {
        name.to_string()
    } else {
        pluralize(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_and_suffix_rules() {
        assert_eq!(pluralize("motorcycle"), "motorcycles");
        assert_eq!(pluralize("dog"), "dogs");
        assert_eq!(pluralize("bus"), "buses");
        assert_eq!(pluralize("sandwich"), "sandwiches");
        assert_eq!(pluralize("toothbrush"), "toothbrushes");
    }

    #[test]
    fn irregular_table() {
        assert_eq!(pluralize("person"), "persons");
        assert_eq!(pluralize("scissors"), "scissors");
        assert_eq!(pluralize("skis"), "skis");
        assert_eq!(pluralize("sheep"), "sheep");
        assert_eq!(pluralize("mouse"), "mice");
    }

    #[test]
    fn multi_word_pluralizes_last_word() {
        assert_eq!(pluralize("wine glass"), "wine glasses");
        assert_eq!(pluralize("traffic light"), "traffic lights");
        assert_eq!(pluralize("teddy bear"), "teddy bears");
        assert_eq!(pluralize("hot dog"), "hot dogs");
    }

    #[test]
    fn count_form_switches_on_one() {
        assert_eq!(count_form("motorcycle", 1), "motorcycle");
        assert_eq!(count_form("motorcycle", 2), "motorcycles");
        assert_eq!(count_form("person", 0), "persons");
    }
}
