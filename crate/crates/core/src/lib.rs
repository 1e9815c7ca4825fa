//! Intrinsic evaluation of word representations with criterion grammars.
//!
//! Small probabilistic grammars generate corpora in which one linguistic
//! phenomenon (conflation, sparseness, ambiguity, multifacetedness) is
//! isolated. Six representation models are trained on each corpus: a
//! position-sensitive PPMI count model and five learned models (LBL, CBOW,
//! CWIN, SKIP, SSKIP). A linear max-margin probe then tests whether the
//! relevant facet can be read from the vectors; nearest-neighbour and
//! analogy evaluations serve as point-based baselines.

pub mod corpus;
pub mod embedding;
pub mod grammar;
pub mod harness;
pub mod neural;
pub mod ppmi;
pub mod probe;

use serde::{Deserialize, Serialize};

pub use corpus::{build_corpus, Corpus, TokenId, Vocabulary};
pub use embedding::EmbeddingSet;
pub use grammar::Pcfg;
pub use harness::{Criterion, ExperimentPlan, ExperimentReport, Model};
pub use neural::{ModelKind, Space, TrainConfig};
pub use probe::{LabeledSplit, LinearProbe, ProbeConfig};

/// Relative position of an immediate neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Offset {
    /// `r = -1`
    Left,
    /// `r = +1`
    Right,
}

impl Offset {
    pub const BOTH: [Offset; 2] = [Offset::Left, Offset::Right];

    pub fn index(self) -> usize {
        match self {
            Offset::Left => 0,
            Offset::Right => 1,
        }
    }

    pub fn delta(self) -> isize {
        match self {
            Offset::Left => -1,
            Offset::Right => 1,
        }
    }
}
