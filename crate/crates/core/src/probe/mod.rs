//! Subspace probes (a linear max-margin classifier over word vectors) and
//! the point-based nearest-neighbour and analogy evaluations.

mod pointwise;
mod svm;

use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{dot, EmbeddingSet};

pub use pointwise::{
    analogy_eval, enumerate_analogy_triples, nearest_neighbor_eval, sample_analogy_triples,
    AnalogyTriple, PointEval,
};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("need at least two training points, got {0}")]
    TooFew(usize),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("{0} feature vectors but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("feature vector {0} contains a non-finite value")]
    NonFinite(usize),
    #[error("dimension mismatch: probe has {expected}, vector has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty test set")]
    EmptyTest,
    #[error("no vector for `{0}`")]
    MissingVector(String),
    #[error("train and test share `{0}`")]
    Overlap(String),
    #[error("{0} has a zero vector; cosine similarity is undefined")]
    ZeroVector(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("invalid analogy triple: {0}")]
    BadTriple(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "+1")]
    Positive,
    #[serde(rename = "-1")]
    Negative,
}

impl Label {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "+1",
            Label::Negative => "-1",
        })
    }
}

impl FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+1" | "1" => Ok(Label::Positive),
            "-1" => Ok(Label::Negative),
            _ => Err(format!("bad label `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Hinge-loss weight.
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    /// Cap on optimizer passes; one pass is as many pair updates as there
    /// are training points.
    pub max_passes: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-4,
            max_passes: 100_000,
        }
    }
}

/// A fitted linear classifier `sign(w.x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: ProbeConfig,
    pub iterations: usize,
    /// False when the pass cap was reached first.
    pub converged: bool,
}

/// Fits the soft-margin SVM `1/2 |w|^2 + C sum hinge(y (w.x + b))`.
pub fn fit<V: AsRef<[f64]>>(
    cfg: &ProbeConfig,
    x: &[V],
    y: &[Label],
) -> Result<LinearProbe, ProbeError> {
    if x.len() != y.len() {
        return Err(ProbeError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(ProbeError::TooFew(x.len()));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(ProbeError::SingleClass);
    }
    let dim = x[0].as_ref().len();
    for (i, v) in x.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(ProbeError::Dimension {
                expected: dim,
                got: v.len(),
            });
        }
        if v.iter().any(|f| !f.is_finite()) {
            return Err(ProbeError::NonFinite(i));
        }
    }
    let rows: Vec<&[f64]> = x.iter().map(AsRef::as_ref).collect();
    let signs: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let max_iter = cfg.max_passes.saturating_mul(rows.len());
    let sol = svm::solve(&rows, &signs, cfg.c, cfg.tolerance, max_iter);
    if !sol.converged {
        log::warn!(
            "probe stopped at the iteration cap ({} updates) before reaching tolerance {}",
            sol.iterations,
            cfg.tolerance
        );
    }
    let mut weights = vec![0.0; dim];
    for ((a, s), row) in sol.alpha.iter().zip(&signs).zip(&rows) {
        if *a != 0.0 {
            for (w, x) in weights.iter_mut().zip(row.iter()) {
                *w += a * s * x;
            }
        }
    }
    Ok(LinearProbe {
        weights,
        bias: sol.bias,
        config: *cfg,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

impl LinearProbe {
    pub fn decision(&self, x: &[f64]) -> Result<f64, ProbeError> {
        if x.len() != self.weights.len() {
            return Err(ProbeError::Dimension {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }

    /// Exact zeros are resolved to the positive class.
    pub fn predict(&self, x: &[f64]) -> Result<Label, ProbeError> {
        Ok(Label::from_bool(self.decision(x)? >= 0.0))
    }

    pub fn accuracy<V: AsRef<[f64]>>(&self, test: &[(V, Label)]) -> Result<f64, ProbeError> {
        if test.is_empty() {
            return Err(ProbeError::EmptyTest);
        }
        let mut correct = 0;
        for (x, l) in test {
            if self.predict(x.as_ref())? == *l {
                correct += 1;
            }
        }
        Ok(correct as f64 / test.len() as f64)
    }

    /// Primal objective at this probe's weights and bias.
    pub fn objective<V: AsRef<[f64]>>(&self, x: &[V], y: &[Label]) -> f64 {
        primal_objective(&self.weights, self.bias, self.config.c, x, y)
    }
}

pub fn primal_objective<V: AsRef<[f64]>>(w: &[f64], b: f64, c: f64, x: &[V], y: &[Label]) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(x, l)| (1.0 - l.sign() * (dot(w, x.as_ref()) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Train,
    Test,
}

/// Train and test words with binary labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSplit {
    pub train: Vec<(String, Label)>,
    pub test: Vec<(String, Label)>,
}

impl LabeledSplit {
    /// Fails if a word is in both parts.
    pub fn check_disjoint(&self) -> Result<(), ProbeError> {
        let train: std::collections::HashSet<&str> =
            self.train.iter().map(|(t, _)| t.as_str()).collect();
        match self.test.iter().find(|(t, _)| train.contains(t.as_str())) {
            Some((t, _)) => Err(ProbeError::Overlap(t.clone())),
            None => Ok(()),
        }
    }

    /// `token<TAB>{+1|-1}<TAB>{train|test}` per line, train words first.
    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (part, rows) in [("train", &self.train), ("test", &self.test)] {
            for (t, l) in rows {
                writeln!(w, "{t}\t{l}\t{part}")?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ProbeError> {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, ProbeError> {
        let mut split = LabeledSplit::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: String| ProbeError::Malformed {
                line: i + 1,
                message: m,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [t, l, p] = fields[..] else {
                return Err(bad("expected token<TAB>label<TAB>part".into()));
            };
            let l: Label = l.parse().map_err(bad)?;
            match p {
                "train" => split.train.push((t.to_string(), l)),
                "test" => split.test.push((t.to_string(), l)),
                _ => return Err(bad(format!("bad part `{p}`"))),
            }
        }
        split.check_disjoint()?;
        Ok(split)
    }

    pub fn load(path: &Path) -> Result<Self, ProbeError> {
        Self::read(BufReader::new(fs::File::open(path)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPrediction {
    pub token: String,
    pub label: Label,
    pub predicted: Label,
    pub decision: f64,
}

impl WordPrediction {
    pub fn correct(&self) -> bool {
        self.label == self.predicted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub n_test: usize,
    pub predictions: Vec<WordPrediction>,
    pub converged: bool,
    pub iterations: usize,
}

fn lookup<'a>(e: &'a EmbeddingSet, t: &str) -> Result<&'a [f64], ProbeError> {
    e.get(t)
        .ok_or_else(|| ProbeError::MissingVector(t.to_string()))
}

/// Fits a probe on the split's train words and scores its test words.
pub fn evaluate_split(
    e: &EmbeddingSet,
    split: &LabeledSplit,
    cfg: &ProbeConfig,
) -> Result<SplitEvaluation, ProbeError> {
    split.check_disjoint()?;
    if split.test.is_empty() {
        return Err(ProbeError::EmptyTest);
    }
    let x = split
        .train
        .iter()
        .map(|(t, _)| lookup(e, t))
        .collect::<Result<Vec<_>, _>>()?;
    let y: Vec<Label> = split.train.iter().map(|(_, l)| *l).collect();
    let probe = fit(cfg, &x, &y)?;
    let mut predictions = Vec::with_capacity(split.test.len());
    for (t, l) in &split.test {
        let v = lookup(e, t)?;
        let decision = probe.decision(v)?;
        predictions.push(WordPrediction {
            token: t.clone(),
            label: *l,
            predicted: Label::from_bool(decision >= 0.0),
            decision,
        });
    }
    let correct = predictions.iter().filter(|p| p.correct()).count();
    Ok(SplitEvaluation {
        accuracy: correct as f64 / predictions.len() as f64,
        correct,
        n_test: predictions.len(),
        predictions,
        converged: probe.converged,
        iterations: probe.iterations,
    })
}
