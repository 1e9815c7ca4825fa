use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{EmbeddingPair, Event, EventGradient};
use super::noise::NoiseDistribution;
use super::{ModelKind, NeuralError, TrainConfig};
use crate::corpus::{Corpus, TokenId};
use crate::Offset;

/// Learning rate never decays below this fraction of its initial value.
pub const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EmbeddingPair,
    /// Mean event loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub updates: u64,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(f64::NAN)
    }
}

/// Provenance written next to exported vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSidecar {
    pub model: ModelKind,
    pub config: TrainConfig,
    pub seed: u64,
    pub space: super::Space,
    pub vocab_size: usize,
    pub final_loss: f64,
    pub epoch_losses: Vec<f64>,
    pub updates: u64,
}

fn for_each_event(kind: ModelKind, sentence: &[TokenId], mut f: impl FnMut(Event)) {
    let n = sentence.len();
    for pos in 0..n {
        let left = (pos > 0).then(|| sentence[pos - 1]);
        let right = (pos + 1 < n).then(|| sentence[pos + 1]);
        match kind {
            ModelKind::Skip | ModelKind::Sskip => {
                let center = sentence[pos];
                if let Some(c) = left {
                    f(Event::Pair {
                        center,
                        context: c,
                        offset: Offset::Left,
                    });
                }
                if let Some(c) = right {
                    f(Event::Pair {
                        center,
                        context: c,
                        offset: Offset::Right,
                    });
                }
            }
            _ => {
                if left.is_some() || right.is_some() {
                    f(Event::Window {
                        left,
                        right,
                        center: sentence[pos],
                    });
                }
            }
        }
    }
}

/// Events one epoch would produce without subsampling.
pub fn events_per_epoch(kind: ModelKind, corpus: &Corpus) -> u64 {
    let mut n = 0;
    for s in corpus.sentences() {
        for_each_event(kind, s, |_| n += 1);
    }
    n
}

/// Trains one model by sequential SGD on the negative-sampling objective.
///
/// Sentences are visited in corpus order every epoch. The learning rate
/// decays linearly with the number of processed events, from its initial
/// value to `MIN_LR_FRACTION` of it. All randomness (initialization, noise
/// words, subsampling) comes from one generator seeded with `cfg.seed`.
pub fn train(corpus: &Corpus, cfg: &TrainConfig) -> Result<TrainOutcome, NeuralError> {
    cfg.validate()?;
    if corpus.is_empty() || corpus.num_tokens() == 0 {
        return Err(NeuralError::EmptyCorpus);
    }
    let kind = cfg.kind;
    let vocab = corpus.vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = EmbeddingPair::initialize(
        kind,
        cfg.dim,
        vocab.tokens().to_vec(),
        cfg.cbow_mean,
        &mut rng,
    );
    let noise = NoiseDistribution::from_counts(vocab.counts());

    let per_epoch = events_per_epoch(kind, corpus);
    if per_epoch == 0 {
        return Err(NeuralError::EmptyCorpus);
    }
    let total = per_epoch * cfg.epochs as u64;
    let keep = subsample_keep_probabilities(vocab.counts(), cfg.subsample);

    let mut grad = EventGradient::for_params(&params);
    let mut negatives: Vec<TokenId> = Vec::with_capacity(cfg.negatives);
    let mut kept: Vec<TokenId> = Vec::new();
    let mut progress = 0u64;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut n_events = 0u64;
        for sentence in corpus.sentences() {
            let s: &[TokenId] = match &keep {
                None => sentence,
                Some(keep) => {
                    kept.clear();
                    kept.extend(
                        sentence
                            .iter()
                            .copied()
                            .filter(|&w| rng.gen::<f64>() < keep[w as usize]),
                    );
                    &kept
                }
            };
            let scheduled = if keep.is_some() {
                let mut n = 0u64;
                for_each_event(kind, sentence, |_| n += 1);
                n
            } else {
                0
            };
            let mut done = 0u64;
            for_each_event(kind, s, |e| {
                let lr =
                    cfg.learning_rate * (1.0 - progress as f64 / total as f64).max(MIN_LR_FRACTION);
                let target = e.target();
                negatives.clear();
                for _ in 0..cfg.negatives {
                    let n = noise.sample(&mut rng);
                    if n != target {
                        negatives.push(n);
                    }
                }
                loss_sum += params.backprop(&e, &negatives, &mut grad);
                params.apply(&grad, lr);
                n_events += 1;
                progress += 1;
                done += 1;
            });
            // dropped events still advance the schedule
            progress += scheduled.saturating_sub(done);
        }
        let mean = if n_events > 0 {
            loss_sum / n_events as f64
        } else {
            0.0
        };
        if !mean.is_finite() || !params.all_finite() {
            return Err(NeuralError::Diverged { epoch: epoch + 1 });
        }
        log::debug!("{kind} epoch {}: mean loss {mean:.6}", epoch + 1);
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome {
        params,
        epoch_losses,
        updates: progress,
    })
}

/// Keep probabilities of the usual frequent-word subsampling rule, or `None`
/// when subsampling is disabled.
fn subsample_keep_probabilities(counts: &[u64], threshold: f64) -> Option<Vec<f64>> {
    if threshold <= 0.0 {
        return None;
    }
    let total: u64 = counts.iter().sum();
    let t = threshold * total as f64;
    Some(
        counts
            .iter()
            .map(|&c| {
                let c = c as f64;
                (((c / t).sqrt() + 1.0) * t / c).min(1.0)
            })
            .collect(),
    )
}
