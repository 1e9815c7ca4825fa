//! End-to-end criterion experiments: generate a corpus, train every model,
//! label the vocabulary, probe, and aggregate.

mod labels;
mod report;
mod seed;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{merge_and_shuffle, sample_corpus, Corpus};
use crate::embedding::EmbeddingSet;
use crate::grammar::{
    build_ambiguity_grammar, build_conflation_grammar, build_multifacet_grammar,
    build_sparseness_grammar, sample_mu, AmbiguityParams, ContentClass, GrammarError, MuMapping,
    Pcfg, SentenceSampler,
};
use crate::neural::{self, ModelKind, Space, TrainConfig};
use crate::ppmi::train_ppmi;
use crate::probe::{
    analogy_eval, enumerate_analogy_triples, evaluate_split, nearest_neighbor_eval,
    sample_analogy_triples, LabeledSplit, PointEval, ProbeConfig, SplitEvaluation,
};

pub use labels::label_words;
pub use report::{
    emit_curve, emit_report, load_report, render_curve, FailureRecord, GroupSummary, ReportSummary,
};
pub use seed::derive_seed;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("corpus for {criterion} lacks test word `{word}`")]
    VocabularyMismatch { criterion: Criterion, word: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Nonconflation,
    Sparseness,
    Ambiguity,
    Multifacet,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::Nonconflation,
        Criterion::Sparseness,
        Criterion::Ambiguity,
        Criterion::Multifacet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Nonconflation => "nonconflation",
            Criterion::Sparseness => "sparseness",
            Criterion::Ambiguity => "ambiguity",
            Criterion::Multifacet => "multifacet",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Criterion::Nonconflation | Criterion::Sparseness => 5,
            Criterion::Ambiguity => 50,
            Criterion::Multifacet => 10,
        }
    }

    /// Reduced trial counts for quick runs.
    pub fn smoke_trials(self) -> usize {
        match self {
            Criterion::Nonconflation | Criterion::Sparseness => 5,
            Criterion::Ambiguity => 10,
            Criterion::Multifacet => 3,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown criterion `{s}`"))
    }
}

/// The six representation models, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ppmi,
    Lbl,
    Cbow,
    Cwin,
    Skip,
    Sskip,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::Ppmi,
        Model::Lbl,
        Model::Cbow,
        Model::Cwin,
        Model::Skip,
        Model::Sskip,
    ];

    pub fn name(self) -> &'static str {
        match self.kind() {
            None => "ppmi",
            Some(k) => k.name(),
        }
    }

    /// The learned model behind this entry; `None` for PPMI.
    pub fn kind(self) -> Option<ModelKind> {
        match self {
            Model::Ppmi => None,
            Model::Lbl => Some(ModelKind::Lbl),
            Model::Cbow => Some(ModelKind::Cbow),
            Model::Cwin => Some(ModelKind::Cwin),
            Model::Skip => Some(ModelKind::Skip),
            Model::Sskip => Some(ModelKind::Sskip),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model `{s}`"))
    }
}

/// Shared hyperparameters of the learned models. The learning rate defaults
/// per model kind when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: Option<f64>,
    pub subsample: f64,
    pub cbow_mean: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let c = TrainConfig::new(ModelKind::Skip);
        Self {
            dim: c.dim,
            negatives: c.negatives,
            epochs: c.epochs,
            learning_rate: None,
            subsample: c.subsample,
            cbow_mean: c.cbow_mean,
        }
    }
}

impl TrainSettings {
    pub fn config(&self, kind: ModelKind, seed: u64) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            negatives: self.negatives,
            epochs: self.epochs,
            learning_rate: self.learning_rate.unwrap_or(kind.default_learning_rate()),
            subsample: self.subsample,
            seed,
            cbow_mean: self.cbow_mean,
            ..TrainConfig::new(kind)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub criterion: Criterion,
    pub models: Vec<Model>,
    pub trials: usize,
    /// Restricts the run to these trial indices (all when `None`).
    pub only_trials: Option<Vec<usize>>,
    pub sentences: usize,
    /// Skew grid; used by the ambiguity criterion only.
    pub alphas: Vec<f64>,
    pub master_seed: u64,
    pub train: TrainSettings,
    /// Spaces of the learned models to evaluate. PPMI has one explicit space.
    pub spaces: Vec<Space>,
    pub probe: ProbeConfig,
    /// L2-normalize vectors before probing.
    pub normalize: bool,
    /// Sample this many analogy triples per trial instead of using all 500.
    pub analogy_sample: Option<usize>,
    /// Keep the evaluated vectors in the report.
    pub keep_vectors: bool,
}

/// `1.0, 1.1, ..., 2.0`.
pub fn default_alpha_grid() -> Vec<f64> {
    (10..=20).map(|i| i as f64 / 10.0).collect()
}

impl ExperimentPlan {
    pub fn new(criterion: Criterion) -> Self {
        Self {
            criterion,
            models: Model::ALL.to_vec(),
            trials: criterion.default_trials(),
            only_trials: None,
            sentences: 100_000,
            alphas: if criterion == Criterion::Ambiguity {
                default_alpha_grid()
            } else {
                Vec::new()
            },
            master_seed: 0,
            train: TrainSettings::default(),
            spaces: vec![Space::Input],
            probe: ProbeConfig::default(),
            normalize: false,
            analogy_sample: None,
            keep_vectors: false,
        }
    }

    pub fn smoke(mut self) -> Self {
        self.trials = self.criterion.smoke_trials();
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Plan(m));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.models.is_empty() {
            return bad("no models selected".into());
        }
        if self.sentences < 1 {
            return bad("sentence count must be positive".into());
        }
        if self.spaces.is_empty() && self.models.iter().any(|m| m.kind().is_some()) {
            return bad("no embedding space selected".into());
        }
        if let Some(only) = &self.only_trials {
            if let Some(t) = only.iter().find(|&&t| t >= self.trials) {
                return bad(format!("trial {t} is outside 0..{}", self.trials));
            }
        }
        if self.criterion == Criterion::Ambiguity {
            if self.alphas.is_empty() {
                return bad("the ambiguity criterion needs an alpha grid".into());
            }
            if let Some(a) = self.alphas.iter().find(|a| !(1.0..=2.0).contains(*a)) {
                return bad(format!("alpha {a} is outside [1, 2]"));
            }
        } else if !self.alphas.is_empty() {
            return bad(format!(
                "an alpha grid only applies to ambiguity, not {}",
                self.criterion
            ));
        }
        let mut cfg = self.train.config(ModelKind::Skip, 0);
        cfg.learning_rate = self.train.learning_rate.unwrap_or(0.025);
        cfg.validate()
            .map_err(|e| HarnessError::Plan(e.to_string()))?;
        Ok(())
    }

    fn alpha_grid(&self) -> Vec<Option<f64>> {
        if self.criterion == Criterion::Ambiguity {
            self.alphas.iter().copied().map(Some).collect()
        } else {
            vec![None]
        }
    }

    fn trial_indices(&self) -> Vec<usize> {
        match &self.only_trials {
            Some(t) => {
                let mut t = t.clone();
                t.sort_unstable();
                t.dedup();
                t
            }
            None => (0..self.trials).collect(),
        }
    }

    /// Every (trial, alpha, model) work item in report order.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut out = Vec::new();
        for trial in self.trial_indices() {
            for alpha in self.alpha_grid() {
                for &model in &self.models {
                    out.push(CellSpec {
                        model,
                        trial,
                        alpha,
                        seed: derive_seed(
                            self.master_seed,
                            self.criterion.name(),
                            model.name(),
                            trial,
                            alpha,
                        ),
                        corpus_seed: self.corpus_seed(trial, alpha),
                    });
                }
            }
        }
        out
    }

    pub fn corpus_seed(&self, trial: usize, alpha: Option<f64>) -> u64 {
        derive_seed(
            self.master_seed,
            self.criterion.name(),
            "corpus",
            trial,
            alpha,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub model: Model,
    pub trial: usize,
    pub alpha: Option<f64>,
    /// Training seed of a learned model.
    pub seed: u64,
    /// Seed of the corpus (and of the paradigm map for multifacet).
    pub corpus_seed: u64,
}

/// A generated criterion corpus with the auxiliary data it was built from.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub corpus: Corpus,
    pub grammar: Pcfg,
    pub mu: Option<MuMapping>,
    pub rare: Option<Vec<Vec<String>>>,
}

/// Samples the corpus of one criterion trial. The paradigm map (multifacet)
/// and the shuffle of the rare sentences (sparseness) draw from the same
/// seeded stream as the sentences.
pub fn generate_corpus(
    criterion: Criterion,
    sentences: usize,
    alpha: Option<f64>,
    seed: u64,
) -> Result<GeneratedCorpus, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (grammar, mu, rare) = match criterion {
        Criterion::Nonconflation => (build_conflation_grammar(), None, None),
        Criterion::Sparseness => {
            let (g, rare) = build_sparseness_grammar();
            (g, None, Some(rare))
        }
        Criterion::Ambiguity => {
            let alpha =
                alpha.ok_or_else(|| HarnessError::Plan("ambiguity needs an alpha".into()))?;
            (
                build_ambiguity_grammar(AmbiguityParams::from_alpha(alpha))?,
                None,
                None,
            )
        }
        Criterion::Multifacet => {
            let mu = sample_mu(&mut rng);
            (build_multifacet_grammar(&mu), Some(mu), None)
        }
    };
    let sampler = SentenceSampler::new(&grammar)?;
    let mut corpus = sample_corpus(&sampler, sentences, &mut rng);
    if let Some(rare) = &rare {
        corpus = merge_and_shuffle(&corpus, rare, &mut rng);
    }
    let provenance = match alpha {
        Some(a) => format!("{criterion} alpha={a} seed={seed}"),
        None => format!("{criterion} seed={seed}"),
    };
    drop(sampler);
    Ok(GeneratedCorpus {
        corpus: corpus.with_provenance(provenance),
        grammar,
        mu,
        rare,
    })
}

/// Evaluation of one exported space of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceResult {
    /// `explicit` for PPMI, otherwise the learned space.
    pub space: String,
    pub dim: usize,
    pub probe: SplitEvaluation,
    pub similarity: Option<PointEval>,
    pub analogy: Option<PointEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellData {
    pub vocab_size: usize,
    pub final_loss: Option<f64>,
    pub spaces: Vec<SpaceResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub spec: CellSpec,
    pub outcome: Result<CellData, String>,
    #[serde(skip)]
    pub vectors: Vec<(String, EmbeddingSet)>,
}

impl CellResult {
    pub fn data(&self) -> Option<&CellData> {
        self.outcome.as_ref().ok()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub package: String,
    pub version: String,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub plan: ExperimentPlan,
    pub provenance: Provenance,
    pub cells: Vec<CellResult>,
    /// Train/test split of every (trial, alpha).
    #[serde(skip)]
    pub splits: Vec<(usize, Option<f64>, LabeledSplit)>,
}

impl ExperimentReport {
    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|c| c.outcome.is_ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (&CellSpec, &str)> {
        self.cells.iter().filter_map(|c| match &c.outcome {
            Ok(_) => None,
            Err(e) => Some((&c.spec, e.as_str())),
        })
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary::from_report(self)
    }
}

fn content_words() -> Vec<String> {
    ContentClass::ALL
        .into_iter()
        .flat_map(|c| (0..5).map(move |i| c.word(i)))
        .collect()
}

fn evaluate_space(
    plan: &ExperimentPlan,
    spec: &CellSpec,
    space: String,
    vectors: &EmbeddingSet,
    split: &LabeledSplit,
) -> Result<SpaceResult, String> {
    let probe = evaluate_split(vectors, split, &plan.probe).map_err(|e| format!("probe: {e}"))?;
    let (similarity, analogy) = if plan.criterion == Criterion::Multifacet {
        let queries: Vec<&str> = split.test.iter().map(|(t, _)| t.as_str()).collect();
        let words = content_words();
        let candidates: Vec<&str> = words.iter().map(String::as_str).collect();
        let gender = |t: &str| ContentClass::parse_word(t).map(|(c, _)| c.gender());
        let nn = nearest_neighbor_eval(vectors, &queries, &candidates, gender)
            .map_err(|e| format!("nearest neighbour: {e}"))?;
        let triples = match plan.analogy_sample {
            None => enumerate_analogy_triples(),
            Some(n) => {
                let seed = derive_seed(
                    plan.master_seed,
                    plan.criterion.name(),
                    "analogy",
                    spec.trial,
                    spec.alpha,
                );
                sample_analogy_triples(n, &mut ChaCha8Rng::seed_from_u64(seed))
            }
        };
        let an = analogy_eval(vectors, &triples).map_err(|e| format!("analogy: {e}"))?;
        (Some(nn), Some(an))
    } else {
        (None, None)
    };
    Ok(SpaceResult {
        space,
        dim: vectors.dim(),
        probe,
        similarity,
        analogy,
    })
}

fn run_cell(plan: &ExperimentPlan, spec: CellSpec) -> CellResult {
    let mut vectors = Vec::new();
    let outcome = run_cell_inner(plan, &spec, &mut vectors);
    if let Err(e) = &outcome {
        log::error!(
            "{} {} trial {}{}: {e}",
            plan.criterion,
            spec.model,
            spec.trial,
            spec.alpha
                .map(|a| format!(" alpha {a}"))
                .unwrap_or_default()
        );
    }
    if !plan.keep_vectors {
        vectors.clear();
    }
    CellResult {
        spec,
        outcome,
        vectors,
    }
}

fn run_cell_inner(
    plan: &ExperimentPlan,
    spec: &CellSpec,
    kept: &mut Vec<(String, EmbeddingSet)>,
) -> Result<CellData, String> {
    let generated = generate_corpus(plan.criterion, plan.sentences, spec.alpha, spec.corpus_seed)
        .map_err(|e| e.to_string())?;
    let corpus = &generated.corpus;
    let split = label_words(plan.criterion, corpus.vocab()).map_err(|e| e.to_string())?;
    let prepare = |e: EmbeddingSet| if plan.normalize { e.l2_normalized() } else { e };
    let mut spaces = Vec::new();
    let final_loss = match spec.model.kind() {
        None => {
            let e = prepare(train_ppmi(corpus));
            spaces.push(evaluate_space(plan, spec, "explicit".into(), &e, &split)?);
            kept.push(("explicit".into(), e));
            None
        }
        Some(kind) => {
            let cfg = plan.train.config(kind, spec.seed);
            let outcome = neural::train(corpus, &cfg).map_err(|e| format!("training: {e}"))?;
            for &space in &plan.spaces {
                let e = prepare(outcome.params.export_vectors(space));
                spaces.push(evaluate_space(plan, spec, space.name().into(), &e, &split)?);
                kept.push((space.name().into(), e));
            }
            Some(outcome.final_loss())
        }
    };
    Ok(CellData {
        vocab_size: corpus.vocab().len(),
        final_loss,
        spaces,
    })
}

/// Runs every cell of the plan on a pool of `jobs` workers. Results do not
/// depend on `jobs`. Stage failures are recorded per cell, never dropped.
pub fn run_experiment(
    plan: &ExperimentPlan,
    jobs: usize,
) -> Result<ExperimentReport, HarnessError> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let cells = plan.cells();
    log::info!(
        "{}: {} cells on {} workers",
        plan.criterion,
        cells.len(),
        jobs.max(1)
    );
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .into_par_iter()
            .map(|spec| {
                let r = run_cell(plan, spec);
                if let Some(d) = r.data() {
                    log::info!(
                        "{} {} trial {}{}: accuracy {}",
                        plan.criterion,
                        spec.model,
                        spec.trial,
                        spec.alpha
                            .map(|a| format!(" alpha {a}"))
                            .unwrap_or_default(),
                        d.spaces
                            .iter()
                            .map(|s| format!("{}={}", s.space, s.probe.accuracy))
                            .collect::<Vec<_>>()
                            .join(" ")
                    );
                }
                r
            })
            .collect()
    });
    let mut splits = Vec::new();
    for trial in plan.trial_indices() {
        for alpha in plan.alpha_grid() {
            // corpora are cheap to regenerate; the split only depends on the vocabulary
            if let Ok(g) = generate_corpus(
                plan.criterion,
                plan.sentences,
                alpha,
                plan.corpus_seed(trial, alpha),
            ) {
                if let Ok(s) = label_words(plan.criterion, g.corpus.vocab()) {
                    splits.push((trial, alpha, s));
                }
            }
        }
    }
    Ok(ExperimentReport {
        plan: plan.clone(),
        provenance: Provenance {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: plan.master_seed,
        },
        cells: results,
        splits,
    })
}
