mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use facet_core::corpus::sample_corpus;
use facet_core::grammar::{build_conflation_grammar, SentenceSampler};
use facet_core::neural::{train, NoiseDistribution};
use facet_core::{ModelKind, TrainConfig};

#[test]
fn analytic_gradients_match_finite_differences() {
    common::all_gradient_checks();
}

#[test]
fn noise_sampler_matches_its_distribution() {
    let counts = [50u64, 1, 7, 300, 12, 0, 2, 90, 33, 5];
    let noise = NoiseDistribution::from_counts(&counts);
    // independent reference: count^0.75 normalized
    let w: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let z: f64 = w.iter().sum();
    let n = 1_000_000usize;
    let mut hits = vec![0usize; counts.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..n {
        hits[noise.sample(&mut rng) as usize] += 1;
    }
    for (i, &h) in hits.iter().enumerate() {
        let p = w[i] / z;
        assert!((noise.probabilities()[i] - p).abs() < 1e-12);
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (h as f64 - n as f64 * p).abs() <= 4.0 * sd,
            "word {i}: {h} draws, expected {:.0} +- {sd:.1}",
            n as f64 * p
        );
    }
    assert_eq!(hits[5], 0);
}

#[test]
fn loss_decreases_over_the_first_epochs() {
    let g = build_conflation_grammar();
    let sampler = SentenceSampler::new(&g).unwrap();
    let corpus = sample_corpus(&sampler, 20_000, &mut ChaCha8Rng::seed_from_u64(11));
    for kind in ModelKind::ALL {
        let cfg = TrainConfig {
            epochs: 3,
            seed: 5,
            ..TrainConfig::new(kind)
        };
        let out = train(&corpus, &cfg).unwrap();
        let l = &out.epoch_losses;
        assert_eq!(l.len(), 3);
        for e in 1..3 {
            assert!(l[e] <= l[e - 1] * 1.01, "{kind}: epoch losses {l:?}");
        }
        assert!(l[2] < l[0], "{kind}: epoch losses {l:?}");
        assert!(out.params.all_finite());
    }
}

#[test]
fn training_is_reproducible_from_the_seed() {
    let g = build_conflation_grammar();
    let sampler = SentenceSampler::new(&g).unwrap();
    let corpus = sample_corpus(&sampler, 2_000, &mut ChaCha8Rng::seed_from_u64(3));
    for kind in ModelKind::ALL {
        let cfg = TrainConfig {
            dim: 10,
            epochs: 2,
            seed: 9,
            ..TrainConfig::new(kind)
        };
        let a = train(&corpus, &cfg).unwrap();
        let b = train(&corpus, &cfg).unwrap();
        assert_eq!(a.params, b.params, "{kind}");
        let c = train(&corpus, &TrainConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.params, c.params, "{kind}");
    }
}
