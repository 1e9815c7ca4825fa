//! Position-sensitive PPMI count vectors over the immediate left and right
//! neighbours.
//!
//! For relative position `r` the entry of word `w` for context word `v` is
//! `max(0, ln(N_r(w,v) N_r / (N_r(w,.) N_r(.,v))))`; each of the two parts is
//! then scaled to unit length. No smoothing or shifting is applied.

use std::collections::BTreeMap;

use crate::corpus::{Corpus, TokenId};
use crate::embedding::EmbeddingSet;
use crate::Offset;

/// Co-occurrence counts for one relative position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OffsetCounts {
    rows: Vec<BTreeMap<TokenId, u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl OffsetCounts {
    fn new(v: usize) -> Self {
        Self {
            rows: vec![BTreeMap::new(); v],
            row_sums: vec![0; v],
            col_sums: vec![0; v],
            total: 0,
        }
    }

    fn add(&mut self, w: TokenId, v: TokenId) {
        *self.rows[w as usize].entry(v).or_insert(0) += 1;
        self.row_sums[w as usize] += 1;
        self.col_sums[v as usize] += 1;
        self.total += 1;
    }

    /// `N_r(w, v)`.
    pub fn get(&self, w: TokenId, v: TokenId) -> u64 {
        self.rows[w as usize].get(&v).copied().unwrap_or(0)
    }

    pub fn row(&self, w: TokenId) -> &BTreeMap<TokenId, u64> {
        &self.rows[w as usize]
    }

    /// `N_r(w, .)`.
    pub fn row_sum(&self, w: TokenId) -> u64 {
        self.row_sums[w as usize]
    }

    /// `N_r(., v)`.
    pub fn col_sum(&self, v: TokenId) -> u64 {
        self.col_sums[v as usize]
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Left (`r = -1`) and right (`r = +1`) neighbour counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoocTable {
    vocab_size: usize,
    parts: [OffsetCounts; 2],
}

impl CoocTable {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn part(&self, r: Offset) -> &OffsetCounts {
        &self.parts[r.index()]
    }
}

/// Counts neighbour events; windows never cross sentence boundaries.
pub fn count_cooccurrences(corpus: &Corpus) -> CoocTable {
    let v = corpus.vocab().len();
    let mut left = OffsetCounts::new(v);
    let mut right = OffsetCounts::new(v);
    for s in corpus.sentences() {
        for pair in s.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            right.add(a, b);
            left.add(b, a);
        }
    }
    CoocTable {
        vocab_size: v,
        parts: [left, right],
    }
}

/// Sparse PPMI vectors: per word, the left and right parts as sorted
/// `(context id, weight)` lists.
#[derive(Debug, Clone, PartialEq)]
pub struct PpmiVectors {
    vocab_size: usize,
    parts: Vec<[Vec<(TokenId, f64)>; 2]>,
}

impl PpmiVectors {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn part(&self, w: TokenId, r: Offset) -> &[(TokenId, f64)] {
        &self.parts[w as usize][r.index()]
    }

    /// Dense row of width `2V`: left part followed by right part.
    pub fn dense(&self, w: TokenId) -> Vec<f64> {
        let v = self.vocab_size;
        let mut out = vec![0.0; 2 * v];
        for r in Offset::BOTH {
            for &(c, x) in self.part(w, r) {
                out[r.index() * v + c as usize] = x;
            }
        }
        out
    }
}

fn pmi_part(counts: &OffsetCounts, w: TokenId, normalize: bool) -> Vec<(TokenId, f64)> {
    let n = counts.total as f64;
    let row_sum = counts.row_sum(w) as f64;
    let mut out: Vec<(TokenId, f64)> = counts
        .row(w)
        .iter()
        .filter_map(|(&v, &nwv)| {
            let pmi = (nwv as f64 * n / (row_sum * counts.col_sum(v) as f64)).ln();
            (pmi > 0.0).then_some((v, pmi))
        })
        .collect();
    if normalize {
        let norm = out.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|(_, x)| *x /= norm);
        }
    }
    out
}

fn transform(t: &CoocTable, normalize: bool) -> PpmiVectors {
    let parts = (0..t.vocab_size as TokenId)
        .map(|w| Offset::BOTH.map(|r| pmi_part(t.part(r), w, normalize)))
        .collect();
    PpmiVectors {
        vocab_size: t.vocab_size,
        parts,
    }
}

/// Positive PMI per relative position, each part length-normalized. Parts
/// with no positive entry stay zero.
pub fn ppmi_transform(t: &CoocTable) -> PpmiVectors {
    transform(t, true)
}

/// PPMI weights before length normalization.
pub fn ppmi_unnormalized(t: &CoocTable) -> PpmiVectors {
    transform(t, false)
}

/// Explicit `2V`-dimensional PPMI embeddings for every vocabulary word.
pub fn train_ppmi(corpus: &Corpus) -> EmbeddingSet {
    let vectors = ppmi_transform(&count_cooccurrences(corpus));
    let v = corpus.vocab().len();
    let mut data = Vec::with_capacity(v * 2 * v);
    for w in 0..v as TokenId {
        data.extend(vectors.dense(w));
    }
    EmbeddingSet::from_rows(corpus.vocab().tokens().to_vec(), 2 * v, data)
        .expect("vocabulary tokens are unique")
}
