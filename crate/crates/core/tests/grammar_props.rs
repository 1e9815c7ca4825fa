mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use facet_core::corpus::{build_corpus, merge_and_shuffle, sample_corpus};
use facet_core::grammar::{
    build_conflation_grammar, parse_grammar, serialize_grammar, Probability, SentenceSampler,
};
use facet_core::Pcfg;

#[test]
fn sampling_frequencies_of_all_grammars() {
    common::all_grammar_frequencies();
}

/// Random non-recursive grammars: nonterminal `N{k}` only rewrites to
/// terminals and higher-numbered nonterminals.
fn arb_grammar() -> impl Strategy<Value = Vec<(String, Vec<String>, Probability)>> {
    let rule = (proptest::collection::vec(0usize..8, 1..4), 1u64..6);
    proptest::collection::vec(proptest::collection::vec(rule, 1..4), 1..5).prop_map(|levels| {
        let depth = levels.len();
        let mut out = Vec::new();
        for (k, rules) in levels.iter().enumerate() {
            let den: u64 = rules.iter().map(|(_, w)| w).sum();
            for (i, (syms, w)) in rules.iter().enumerate() {
                let rhs = syms
                    .iter()
                    .map(|&s| {
                        // reference the next level so every nonterminal is reachable
                        if i == 0 && k + 1 < depth && s % 2 == 0 {
                            format!("N{}", k + 1)
                        } else {
                            format!("t{s}")
                        }
                    })
                    .collect();
                let prob = if i % 2 == 0 {
                    Probability::ratio(*w, den)
                } else {
                    Probability::Decimal(*w as f64 / den as f64)
                };
                out.push((format!("N{k}"), rhs, prob));
            }
        }
        out
    })
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(rules in arb_grammar()) {
        let g = Pcfg::from_rules(rules).unwrap();
        let text = serialize_grammar(&g);
        let back = parse_grammar(&text);
        if g.validate().is_empty() {
            let back = back.unwrap();
            prop_assert_eq!(serialize_grammar(&back), text);
            prop_assert_eq!(back.rules().len(), g.rules().len());
            for (a, b) in g.rules().iter().zip(back.rules()) {
                prop_assert_eq!(a.prob.value(), b.prob.value());
            }
        } else {
            prop_assert!(back.is_err());
        }
    }

    #[test]
    fn merge_and_shuffle_is_a_permutation(
        base in proptest::collection::vec(proptest::collection::vec(0u8..5, 1..4), 0..30),
        rare in proptest::collection::vec(proptest::collection::vec(5u8..9, 1..4), 0..10),
        seed in any::<u64>(),
    ) {
        let tok = |s: &Vec<u8>| s.iter().map(|x| format!("s{x}")).collect::<Vec<_>>();
        let base: Vec<Vec<String>> = base.iter().map(tok).collect();
        let rare: Vec<Vec<String>> = rare.iter().map(tok).collect();
        let corpus = build_corpus(base.clone());
        let merged = merge_and_shuffle(&corpus, &rare, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut got: Vec<Vec<String>> =
            merged.iter_tokens().map(|s| s.into_iter().map(String::from).collect()).collect();
        let mut want: Vec<Vec<String>> = base.into_iter().chain(rare).collect();
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn vocabulary_counts_match_a_recount(seed in any::<u64>(), n in 1usize..300) {
        let g = build_conflation_grammar();
        let sampler = SentenceSampler::new(&g).unwrap();
        let c = sample_corpus(&sampler, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut recount: HashMap<&str, u64> = HashMap::new();
        for s in c.iter_tokens() {
            for t in s {
                *recount.entry(t).or_default() += 1;
            }
        }
        prop_assert_eq!(recount.len(), c.vocab().len());
        for (id, tok) in c.vocab().tokens().iter().enumerate() {
            prop_assert_eq!(c.vocab().count(id as u32), recount[tok.as_str()]);
        }
        prop_assert_eq!(c.vocab().total(), c.num_tokens() as u64);
    }
}
