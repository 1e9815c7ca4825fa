//! Token interning, in-memory corpora and the plain-text corpus format (one
//! sentence per line, tokens separated by single spaces).

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::grammar::{GrammarError, SentenceSampler};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("token `{0}` cannot be written: tokens must be non-empty and contain no whitespace")]
    BadToken(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

pub type TokenId = u32;

/// Bijection between tokens and dense ids, with corpus frequencies. Ids are
/// assigned in order of first occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    counts: Vec<u64>,
}

impl Vocabulary {
    fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.index.get(token) {
            self.counts[id as usize] += 1;
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        self.counts.push(1);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, id: TokenId) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Tokenized sentences over an interned vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<Vec<TokenId>>,
    vocab: Vocabulary,
    /// Free-form provenance, e.g. the grammar and seed that produced it.
    pub provenance: Option<String>,
}

impl Corpus {
    pub fn sentences(&self) -> &[Vec<TokenId>] {
        &self.sentences
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn sentence_tokens(&self, i: usize) -> Vec<&str> {
        self.sentences[i]
            .iter()
            .map(|&t| self.vocab.token(t))
            .collect()
    }

    /// Iterates sentences as token strings.
    pub fn iter_tokens(&self) -> impl Iterator<Item = Vec<&str>> + '_ {
        (0..self.sentences.len()).map(|i| self.sentence_tokens(i))
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = Some(p.into());
        self
    }
}

/// Interns every token of `sentences`.
pub fn build_corpus<I, S, T>(sentences: I) -> Corpus
where
    I: IntoIterator<Item = S>,
    S: AsRef<[T]>,
    T: AsRef<str>,
{
    let mut vocab = Vocabulary::default();
    let sentences = sentences
        .into_iter()
        .map(|s| {
            s.as_ref()
                .iter()
                .map(|t| vocab.intern(t.as_ref()))
                .collect()
        })
        .collect();
    Corpus {
        sentences,
        vocab,
        provenance: None,
    }
}

/// Draws `n` sentences from a grammar.
pub fn sample_corpus<R: Rng + ?Sized>(
    sampler: &SentenceSampler<'_>,
    n: usize,
    rng: &mut R,
) -> Corpus {
    let g = sampler.grammar();
    let mut buf = Vec::with_capacity(4);
    let mut vocab = Vocabulary::default();
    // map grammar symbols to vocabulary ids lazily, preserving first occurrence
    let mut remap: Vec<Option<TokenId>> = vec![None; g.num_symbols()];
    let mut sentences = Vec::with_capacity(n);
    for _ in 0..n {
        buf.clear();
        sampler.sample_into(rng, &mut buf);
        let s = buf
            .iter()
            .map(|&sym| match remap[sym.index()] {
                Some(id) => {
                    vocab.counts[id as usize] += 1;
                    id
                }
                None => {
                    let id = vocab.intern(g.name(sym));
                    remap[sym.index()] = Some(id);
                    id
                }
            })
            .collect();
        sentences.push(s);
    }
    Corpus {
        sentences,
        vocab,
        provenance: None,
    }
}

/// Combines `base` with `rare` and shuffles the result; every sentence of both
/// inputs appears exactly once. Token ids are reassigned in first-occurrence
/// order of the shuffled corpus.
pub fn merge_and_shuffle<R, S, T>(base: &Corpus, rare: &[S], rng: &mut R) -> Corpus
where
    R: Rng + ?Sized,
    S: AsRef<[T]>,
    T: AsRef<str>,
{
    let mut all: Vec<Vec<&str>> = base.iter_tokens().collect();
    all.extend(
        rare.iter()
            .map(|s| s.as_ref().iter().map(AsRef::as_ref).collect::<Vec<&str>>()),
    );
    all.shuffle(rng);
    let mut merged = build_corpus(&all);
    merged.provenance = base.provenance.clone();
    merged
}

/// Writes one sentence per line. Fails on tokens that would not survive a
/// round trip.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    for t in corpus.vocab.tokens() {
        if t.is_empty() || t.contains(char::is_whitespace) {
            return Err(CorpusError::BadToken(t.clone()));
        }
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_corpus(corpus, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_corpus<W: Write>(corpus: &Corpus, w: &mut W) -> io::Result<()> {
    for s in &corpus.sentences {
        let mut first = true;
        for &t in s {
            if !first {
                w.write_all(b" ")?;
            }
            first = false;
            w.write_all(corpus.vocab.token(t).as_bytes())?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    read_corpus(BufReader::new(fs::File::open(path)?))
}

/// Parses the corpus format. Blank lines are skipped with a warning.
pub fn read_corpus<R: BufRead>(r: R) -> Result<Corpus, CorpusError> {
    let mut sentences: Vec<Vec<String>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            log::warn!("corpus line {} is blank; skipped", i + 1);
            continue;
        }
        let tokens: Vec<String> = line.split(' ').map(str::to_string).collect();
        if tokens
            .iter()
            .any(|t| t.is_empty() || t.contains(char::is_whitespace))
        {
            return Err(CorpusError::Malformed {
                line: i + 1,
                message: "tokens must be separated by single spaces".into(),
            });
        }
        sentences.push(tokens);
    }
    Ok(build_corpus(&sentences))
}
