use super::{Criterion, HarnessError};
use crate::corpus::Vocabulary;
use crate::grammar::{Category, ContentClass, Gender};
use crate::probe::{Label, LabeledSplit};

fn digit_word(token: &str, prefix: char) -> Option<usize> {
    let rest = token.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

/// Label and test membership of a word, or `None` if it is not part of the
/// evaluation at all.
fn classify(criterion: Criterion, token: &str) -> Option<(Label, bool)> {
    use Label::{Negative, Positive};
    match criterion {
        Criterion::Nonconflation => {
            let test = matches!(token, "v3" | "v4" | "w3" | "w4");
            Some((Label::from_bool(digit_word(token, 'w').is_some()), test))
        }
        Criterion::Sparseness => {
            let pos = digit_word(token, 'w').is_some() || digit_word(token, 'x').is_some();
            let test = digit_word(token, 'u').is_some() || digit_word(token, 'x').is_some();
            Some((Label::from_bool(pos), test))
        }
        Criterion::Ambiguity => {
            let w = digit_word(token, 'w');
            Some((Label::from_bool(w.is_some()), matches!(w, Some(i) if i < 5)))
        }
        Criterion::Multifacet => {
            let (class, _) = ContentClass::parse_word(token)?;
            let label = match class.gender() {
                Gender::Feminine => Positive,
                Gender::Masculine => Negative,
            };
            Some((label, class.category() == Category::Adjective))
        }
    }
}

/// Words every corpus of the criterion must contain for the split to be
/// meaningful.
fn required_test_words(criterion: Criterion) -> Vec<String> {
    match criterion {
        Criterion::Nonconflation => ["v3", "v4", "w3", "w4"].map(String::from).to_vec(),
        Criterion::Sparseness => (0..10)
            .flat_map(|i| [format!("u{i}"), format!("x{i}")])
            .collect(),
        Criterion::Ambiguity => (0..5).map(|i| format!("w{i}")).collect(),
        Criterion::Multifacet => [ContentClass::AdjFem, ContentClass::AdjMasc]
            .into_iter()
            .flat_map(|c| (0..5).map(move |i| c.word(i)))
            .collect(),
    }
}

/// Builds the train/test split of a criterion over the words of `vocab`.
///
/// Train words absent from the corpus are simply not used; a missing test
/// word means the corpus does not belong to the criterion.
pub fn label_words(criterion: Criterion, vocab: &Vocabulary) -> Result<LabeledSplit, HarnessError> {
    for w in required_test_words(criterion) {
        if vocab.id(&w).is_none() {
            return Err(HarnessError::VocabularyMismatch { criterion, word: w });
        }
    }
    let mut split = LabeledSplit::default();
    let mut tokens: Vec<&str> = vocab.tokens().iter().map(String::as_str).collect();
    tokens.sort_unstable();
    for t in tokens {
        if let Some((label, test)) = classify(criterion, t) {
            let part = if test {
                &mut split.test
            } else {
                &mut split.train
            };
            part.push((t.to_string(), label));
        }
    }
    Ok(split)
}
