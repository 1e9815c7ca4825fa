//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use facet_core::corpus::sample_corpus;
use facet_core::grammar::{
    build_ambiguity_grammar, build_conflation_grammar, AmbiguityParams, SentenceSampler,
};
use facet_core::{Corpus, EmbeddingSet, LabeledSplit, Pcfg};

pub const SEED: u64 = 42;

pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED)
}

pub fn conflation_grammar() -> Pcfg {
    build_conflation_grammar()
}

pub fn ambiguity_grammar() -> Pcfg {
    build_ambiguity_grammar(AmbiguityParams::from_alpha(1.5)).expect("valid skew")
}

pub fn corpus(g: &Pcfg, sentences: usize) -> Corpus {
    let sampler = SentenceSampler::new(g).expect("built-in grammar");
    sample_corpus(&sampler, sentences, &mut rng())
}

/// `n` labeled points in `dim` dimensions, the two classes offset along the
/// first axis, split into `n_train` training and the rest test words.
pub fn probe_problem(n: usize, n_train: usize, dim: usize) -> (EmbeddingSet, LabeledSplit) {
    use facet_core::probe::Label;
    use rand::Rng;

    let mut rng = rng();
    let mut e = EmbeddingSet::new(dim);
    let mut split = LabeledSplit::default();
    for i in 0..n {
        let positive = i % 2 == 0;
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        v[0] += if positive { 0.5 } else { -0.5 };
        let token = format!("t{i}");
        e.push(token.clone(), &v).expect("unique tokens");
        let part = if i < n_train {
            &mut split.train
        } else {
            &mut split.test
        };
        part.push((token, Label::from_bool(positive)));
    }
    (e, split)
}
