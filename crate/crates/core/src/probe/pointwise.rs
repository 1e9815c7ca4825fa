use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::embedding::{cosine, norm, EmbeddingSet};
use crate::grammar::{Category, ContentClass, Gender};

/// Outcome of a point-based evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEval {
    pub accuracy: f64,
    pub successes: usize,
    pub total: usize,
    /// Queries or candidates dropped because their vector is zero.
    pub skipped: Vec<String>,
}

impl PointEval {
    pub fn error_rate(&self) -> f64 {
        1.0 - self.accuracy
    }

    fn finish(successes: usize, total: usize, skipped: Vec<String>) -> Result<Self, ProbeError> {
        if total == 0 {
            return Err(ProbeError::EmptyTest);
        }
        Ok(Self {
            accuracy: successes as f64 / total as f64,
            successes,
            total,
            skipped,
        })
    }
}

fn nonzero<'a>(
    e: &'a EmbeddingSet,
    t: &str,
    skipped: &mut Vec<String>,
) -> Result<Option<&'a [f64]>, ProbeError> {
    let v = e
        .get(t)
        .ok_or_else(|| ProbeError::MissingVector(t.to_string()))?;
    if norm(v) > 0.0 {
        Ok(Some(v))
    } else {
        log::warn!("{t} has a zero vector and is excluded");
        if !skipped.iter().any(|s| s == t) {
            skipped.push(t.to_string());
        }
        Ok(None)
    }
}

/// Index of the candidate with the highest cosine to `v`; ties go to the
/// earliest candidate.
fn nearest<'c>(v: &[f64], candidates: &[(&'c str, &[f64])]) -> Option<&'c str> {
    let mut best: Option<(&str, f64)> = None;
    for &(t, c) in candidates {
        if let Some(s) = cosine(v, c) {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((t, s));
            }
        }
    }
    best.map(|(t, _)| t)
}

/// Fraction of queries whose cosine-nearest candidate (other than the query
/// itself) has the same label. Zero vectors are excluded with a warning.
pub fn nearest_neighbor_eval<F, K>(
    e: &EmbeddingSet,
    queries: &[&str],
    candidates: &[&str],
    label: F,
) -> Result<PointEval, ProbeError>
where
    F: Fn(&str) -> K,
    K: PartialEq,
{
    let mut skipped = Vec::new();
    let mut pool = Vec::with_capacity(candidates.len());
    for &c in candidates {
        if let Some(v) = nonzero(e, c, &mut skipped)? {
            pool.push((c, v));
        }
    }
    let (mut successes, mut total) = (0, 0);
    for &q in queries {
        let Some(v) = nonzero(e, q, &mut skipped)? else {
            continue;
        };
        let others: Vec<_> = pool.iter().copied().filter(|&(c, _)| c != q).collect();
        if let Some(n) = nearest(v, &others) {
            total += 1;
            if label(n) == label(q) {
                successes += 1;
            }
        }
    }
    PointEval::finish(successes, total, skipped)
}

/// `<x^{c1 g1}_i, x^{c1 g2}_j, x^{c2 g2}_k>`; the expected answer has class
/// `(c2, g1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyTriple {
    pub categories: (Category, Category),
    pub genders: (Gender, Gender),
    pub indices: (usize, usize, usize),
}

impl AnalogyTriple {
    pub fn new(
        categories: (Category, Category),
        genders: (Gender, Gender),
        indices: (usize, usize, usize),
    ) -> Result<Self, ProbeError> {
        if categories.0 == categories.1 {
            return Err(ProbeError::BadTriple("categories must differ".into()));
        }
        if genders.0 == genders.1 {
            return Err(ProbeError::BadTriple("genders must differ".into()));
        }
        if indices.0 >= 5 || indices.1 >= 5 || indices.2 >= 5 {
            return Err(ProbeError::BadTriple(format!(
                "index out of range in {indices:?}"
            )));
        }
        Ok(Self {
            categories,
            genders,
            indices,
        })
    }

    pub fn words(&self) -> [String; 3] {
        let (c1, c2) = self.categories;
        let (g1, g2) = self.genders;
        let (i, j, k) = self.indices;
        [
            ContentClass::new(c1, g1).word(i),
            ContentClass::new(c1, g2).word(j),
            ContentClass::new(c2, g2).word(k),
        ]
    }

    pub fn answer_class(&self) -> ContentClass {
        ContentClass::new(self.categories.1, self.genders.0)
    }
}

/// All 500 valid triples in a fixed order.
pub fn enumerate_analogy_triples() -> Vec<AnalogyTriple> {
    use Category::{Adjective, Noun};
    use Gender::{Feminine, Masculine};
    let mut out = Vec::with_capacity(500);
    for categories in [(Noun, Adjective), (Adjective, Noun)] {
        for genders in [(Feminine, Masculine), (Masculine, Feminine)] {
            for i in 0..5 {
                for j in 0..5 {
                    for k in 0..5 {
                        out.push(AnalogyTriple {
                            categories,
                            genders,
                            indices: (i, j, k),
                        });
                    }
                }
            }
        }
    }
    out
}

/// `n` triples drawn without replacement from the full enumeration.
pub fn sample_analogy_triples<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<AnalogyTriple> {
    let all = enumerate_analogy_triples();
    all.choose_multiple(rng, n.min(all.len()))
        .copied()
        .collect()
}

/// Vector-offset analogy over the 20 content words: the word nearest to
/// `a - b + c` (excluding all three) must belong to the expected class.
pub fn analogy_eval(e: &EmbeddingSet, triples: &[AnalogyTriple]) -> Result<PointEval, ProbeError> {
    let mut skipped = Vec::new();
    let words: Vec<String> = ContentClass::ALL
        .into_iter()
        .flat_map(|c| (0..5).map(move |i| c.word(i)))
        .collect();
    let mut pool = Vec::with_capacity(words.len());
    for w in &words {
        if let Some(v) = nonzero(e, w, &mut skipped)? {
            pool.push((w.as_str(), v));
        }
    }
    let (mut successes, mut total) = (0, 0);
    for t in triples {
        let [a, b, c] = t.words();
        let va = e
            .get(&a)
            .ok_or_else(|| ProbeError::MissingVector(a.clone()))?;
        let vb = e
            .get(&b)
            .ok_or_else(|| ProbeError::MissingVector(b.clone()))?;
        let vc = e
            .get(&c)
            .ok_or_else(|| ProbeError::MissingVector(c.clone()))?;
        let s: Vec<f64> = va
            .iter()
            .zip(vb)
            .zip(vc)
            .map(|((x, y), z)| x - y + z)
            .collect();
        if norm(&s) == 0.0 {
            log::warn!("offset vector for {a} - {b} + {c} is zero; triple skipped");
            continue;
        }
        let others: Vec<_> = pool
            .iter()
            .copied()
            .filter(|&(w, _)| w != a && w != b && w != c)
            .collect();
        if let Some(n) = nearest(&s, &others) {
            total += 1;
            if ContentClass::parse_word(n).map(|(cls, _)| cls) == Some(t.answer_class()) {
                successes += 1;
            }
        }
    }
    PointEval::finish(successes, total, skipped)
}
