//! The five learned models, trained from scratch with negative sampling.
//!
//! | kind  | context representation `h`              | target            |
//! |-------|------------------------------------------|-------------------|
//! | SKIP  | `in(w)`                                  | `out(c)`          |
//! | SSKIP | `in(w)`                                  | `out(c, r)`       |
//! | CBOW  | `in(l) + in(r)`                          | `out(w)`          |
//! | CWIN  | `[in(l); in(r)]`                         | `out2(w)` (2d)    |
//! | LBL   | `c_-1 * in(l) + c_+1 * in(r)` (per dim)  | `out(w) + b(w)`   |

mod gradcheck;
mod model;
mod noise;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gradcheck::{analytic_gradient, gradient_check, GradientCheck, ParamRef};
pub use model::{log_sigmoid, sigmoid, EmbeddingPair, Event, EventGradient};
pub use noise::{NoiseDistribution, NOISE_POWER};
pub use train::{events_per_epoch, train, TrainOutcome, TrainSidecar, MIN_LR_FRACTION};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("corpus has no training events")]
    EmptyCorpus,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("training diverged: non-finite parameters after epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lbl,
    Cbow,
    Cwin,
    Skip,
    Sskip,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Lbl,
        ModelKind::Cbow,
        ModelKind::Cwin,
        ModelKind::Skip,
        ModelKind::Sskip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lbl => "lbl",
            ModelKind::Cbow => "cbow",
            ModelKind::Cwin => "cwin",
            ModelKind::Skip => "skip",
            ModelKind::Sskip => "sskip",
        }
    }

    pub fn default_learning_rate(self) -> f64 {
        match self {
            ModelKind::Skip | ModelKind::Sskip => 0.025,
            ModelKind::Cbow | ModelKind::Cwin | ModelKind::Lbl => 0.05,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model `{s}`"))
    }
}

/// Which learned space is exported for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    #[default]
    Input,
    Target,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Input => "input",
            Space::Target => "target",
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Space {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "input" => Ok(Space::Input),
            "target" => Ok(Space::Target),
            _ => Err(format!("unknown space `{s}` (expected input or target)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Context window; only 1 is supported.
    pub window: usize,
    /// Frequent-word subsampling threshold; 0 disables it.
    pub subsample: f64,
    pub seed: u64,
    /// Average instead of sum the CBOW context vectors.
    pub cbow_mean: bool,
}

impl TrainConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            dim: 100,
            negatives: 10,
            epochs: 20,
            learning_rate: kind.default_learning_rate(),
            window: 1,
            subsample: 0.0,
            seed: 1,
            cbow_mean: false,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::Config(m.to_string()));
        if self.dim < 1 {
            return bad("dim must be at least 1");
        }
        if self.negatives < 1 {
            return bad("at least one negative sample is required");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be finite and positive");
        }
        if self.window != 1 {
            return bad("only window = 1 is supported");
        }
        if !(self.subsample.is_finite() && self.subsample >= 0.0) {
            return bad("subsample threshold must be finite and non-negative");
        }
        Ok(())
    }
}
