use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use facet_core::corpus::{load_corpus, save_corpus};
use facet_core::grammar::parse_grammar;
use facet_core::harness::{
    default_alpha_grid, emit_report, generate_corpus, label_words, load_report, run_experiment,
    Criterion, ExperimentPlan, Model, ReportSummary,
};
use facet_core::neural::{self, Space, TrainConfig, TrainSidecar};
use facet_core::ppmi::train_ppmi;
use facet_core::probe::{evaluate_split, LabeledSplit, ProbeConfig};
use facet_core::EmbeddingSet;

#[derive(Parser, Debug)]
#[command(
    name = "facet",
    version,
    about = "Criterion-grammar corpora, embedding training and subspace probes"
)]
struct Cli {
    /// Log verbosity.
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Info)]
    log_level: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a criterion corpus.
    Gen(GenArgs),
    /// Train one model on a corpus and write its vectors.
    Train(TrainArgs),
    /// Fit a probe on a labeled split and score its test words.
    Probe(ProbeArgs),
    /// Run a whole criterion experiment.
    Run(RunArgs),
    /// Re-emit the tables and chart of an existing report directory.
    Report(ReportArgs),
    /// Check a grammar file.
    GrammarValidate(GrammarArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CriterionArg {
    Nonconflation,
    Sparseness,
    Ambiguity,
    Multifacet,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Nonconflation => Criterion::Nonconflation,
            CriterionArg::Sparseness => Criterion::Sparseness,
            CriterionArg::Ambiguity => Criterion::Ambiguity,
            CriterionArg::Multifacet => Criterion::Multifacet,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ExperimentArg {
    Nonconflation,
    Sparseness,
    Ambiguity,
    Multifacet,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    Ppmi,
    Lbl,
    Cbow,
    Cwin,
    Skip,
    Sskip,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Ppmi => Model::Ppmi,
            ModelArg::Lbl => Model::Lbl,
            ModelArg::Cbow => Model::Cbow,
            ModelArg::Cwin => Model::Cwin,
            ModelArg::Skip => Model::Skip,
            ModelArg::Sskip => Model::Sskip,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SpaceArg {
    Input,
    Target,
}

impl From<SpaceArg> for Space {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Input => Space::Input,
            SpaceArg::Target => Space::Target,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long, value_enum)]
    criterion: CriterionArg,
    #[arg(long, default_value_t = 100_000)]
    sentences: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sense skew, beta = 2^-alpha; required for ambiguity.
    #[arg(long, required_if_eq("criterion", "ambiguity"))]
    alpha: Option<f64>,
    /// Corpus file; sidecars are written next to it.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    neg: usize,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    /// Initial learning rate [default: 0.025 for skip and sskip, 0.05 otherwise]
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, value_enum, default_value_t = SpaceArg::Input)]
    space: SpaceArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Frequent-word subsampling threshold (0 disables).
    #[arg(long, default_value_t = 0.0)]
    subsample: f64,
    /// Average the CBOW context vectors instead of summing them.
    #[arg(long)]
    cbow_mean: bool,
    /// Vector file; a JSON sidecar goes to `<output>.json`.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ProbeOptions {
    /// Hinge-loss weight.
    #[arg(short = 'c', long = "svm-c", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 100_000)]
    max_passes: usize,
    /// L2-normalize vectors before probing.
    #[arg(long)]
    normalize: bool,
}

impl ProbeOptions {
    fn config(&self) -> ProbeConfig {
        ProbeConfig {
            c: self.c,
            tolerance: self.tolerance,
            max_passes: self.max_passes,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct ProbeArgs {
    #[arg(long)]
    vectors: PathBuf,
    /// Split file with `token<TAB>label<TAB>part` lines.
    #[arg(long)]
    split: PathBuf,
    #[command(flatten)]
    probe: ProbeOptions,
    /// JSON result file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct RunArgs {
    #[arg(long, value_enum)]
    experiment: ExperimentArg,
    /// Models to train [default: all six]
    #[arg(long, value_enum, value_delimiter = ',')]
    models: Vec<ModelArg>,
    /// Trials per criterion [default: 5, 5, 50, 10; with --smoke 5, 5, 10, 3]
    #[arg(long)]
    trials: Option<usize>,
    /// Run only these trial indices.
    #[arg(long, value_delimiter = ',')]
    only_trials: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    sentences: usize,
    /// Ambiguity alpha grid [default: 1.0,1.1,...,2.0]
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    /// Spaces of the learned models to evaluate.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "input")]
    spaces: Vec<SpaceArg>,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    neg: usize,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    /// Initial learning rate [default: per model]
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    cbow_mean: bool,
    #[command(flatten)]
    probe: ProbeOptions,
    /// Sample this many analogy triples per trial instead of all 500.
    #[arg(long)]
    analogy_sample: Option<usize>,
    /// Write the evaluated vectors to `vectors/`.
    #[arg(long)]
    keep_vectors: bool,
    /// Reduced trial counts.
    #[arg(long)]
    smoke: bool,
    /// Worker threads [default: available parallelism]
    #[arg(long)]
    jobs: Option<usize>,
    /// Report directory.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    /// Existing report directory.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct GrammarArgs {
    file: PathBuf,
}

fn print_config<T: Serialize>(name: &str, args: &T) -> Result<()> {
    println!("{name} config: {}", serde_json::to_string(args)?);
    Ok(())
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    print_config("gen", args)?;
    let criterion = Criterion::from(args.criterion);
    if args.alpha.is_some() && criterion != Criterion::Ambiguity {
        bail!("--alpha only applies to the ambiguity criterion");
    }
    let g = generate_corpus(criterion, args.sentences, args.alpha, args.seed)?;
    save_corpus(&g.corpus, &args.output)?;
    let split = label_words(criterion, g.corpus.vocab())?;
    split.save(&sidecar(&args.output, ".split.tsv"))?;
    if let Some(mu) = &g.mu {
        fs::write(
            sidecar(&args.output, ".mu.json"),
            serde_json::to_string_pretty(&mu.to_map())? + "\n",
        )?;
    }
    if let Some(rare) = &g.rare {
        write_with(&sidecar(&args.output, ".rare.txt"), |w| {
            for s in rare {
                writeln!(w, "{}", s.join(" "))?;
            }
            Ok(())
        })?;
    }
    println!(
        "wrote {} sentences ({} word types) to {}",
        g.corpus.len(),
        g.corpus.vocab().len(),
        args.output.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PpmiSidecar {
    model: &'static str,
    vocab_size: usize,
    dim: usize,
}

fn train(args: &TrainArgs) -> Result<()> {
    print_config("train", args)?;
    let corpus = load_corpus(&args.corpus)?;
    let meta = sidecar(&args.output, ".json");
    match Model::from(args.model).kind() {
        None => {
            let e = train_ppmi(&corpus);
            e.save(&args.output)?;
            let s = PpmiSidecar {
                model: "ppmi",
                vocab_size: e.len(),
                dim: e.dim(),
            };
            fs::write(&meta, serde_json::to_string_pretty(&s)? + "\n")?;
            println!("wrote {} PPMI vectors of dimension {}", e.len(), e.dim());
        }
        Some(kind) => {
            let cfg = TrainConfig {
                dim: args.dim,
                negatives: args.neg,
                epochs: args.epochs,
                learning_rate: args.lr.unwrap_or(kind.default_learning_rate()),
                subsample: args.subsample,
                seed: args.seed,
                cbow_mean: args.cbow_mean,
                ..TrainConfig::new(kind)
            };
            let out = neural::train(&corpus, &cfg)?;
            let space = Space::from(args.space);
            let e = out.params.export_vectors(space);
            e.save(&args.output)?;
            let s = TrainSidecar {
                model: kind,
                config: cfg.clone(),
                seed: cfg.seed,
                space,
                vocab_size: e.len(),
                final_loss: out.final_loss(),
                epoch_losses: out.epoch_losses.clone(),
                updates: out.updates,
            };
            fs::write(&meta, serde_json::to_string_pretty(&s)? + "\n")?;
            println!(
                "wrote {} {space} vectors of dimension {} (final loss {:.6})",
                e.len(),
                e.dim(),
                out.final_loss()
            );
        }
    }
    Ok(())
}

fn probe(args: &ProbeArgs) -> Result<()> {
    print_config("probe", args)?;
    let mut e = EmbeddingSet::load(&args.vectors)?;
    if args.probe.normalize {
        e = e.l2_normalized();
    }
    let split = LabeledSplit::load(&args.split)?;
    let r = evaluate_split(&e, &split, &args.probe.config())?;
    fs::write(&args.output, serde_json::to_string_pretty(&r)? + "\n")?;
    println!("test accuracy {} ({}/{})", r.accuracy, r.correct, r.n_test);
    if !r.converged {
        println!("warning: probe stopped at the iteration cap");
    }
    Ok(())
}

fn plan_for(args: &RunArgs, criterion: Criterion) -> Result<ExperimentPlan> {
    let mut p = ExperimentPlan::new(criterion);
    if args.smoke {
        p = p.smoke();
    }
    if let Some(t) = args.trials {
        p.trials = t;
    }
    if !args.only_trials.is_empty() {
        p.only_trials = Some(args.only_trials.clone());
    }
    if !args.models.is_empty() {
        p.models = args.models.iter().map(|&m| m.into()).collect();
    }
    p.master_seed = args.seed;
    p.sentences = args.sentences;
    if criterion == Criterion::Ambiguity {
        p.alphas = if args.alphas.is_empty() {
            default_alpha_grid()
        } else {
            args.alphas.clone()
        };
    } else if !args.alphas.is_empty() && args.experiment != ExperimentArg::All {
        bail!("--alphas only applies to the ambiguity experiment");
    }
    p.spaces = args.spaces.iter().map(|&s| s.into()).collect();
    p.train.dim = args.dim;
    p.train.negatives = args.neg;
    p.train.epochs = args.epochs;
    p.train.learning_rate = args.lr;
    p.train.cbow_mean = args.cbow_mean;
    p.probe = args.probe.config();
    p.normalize = args.probe.normalize;
    p.analogy_sample = args.analogy_sample;
    p.keep_vectors = args.keep_vectors;
    p.validate()?;
    Ok(p)
}

fn print_summary(s: &ReportSummary) {
    println!("{}:", s.experiment);
    for g in &s.groups {
        let alpha = g.alpha.map(|a| format!(" alpha {a:?}")).unwrap_or_default();
        let mut line = format!(
            "  {:<6}{alpha} {:<8} accuracy {:.3} ({}/{} decisions, {}/{} perfect trials)",
            g.model.name(),
            g.space,
            g.mean_accuracy,
            g.correct,
            g.decisions,
            g.perfect_trials,
            g.trials
        );
        if let Some(a) = g.similarity_accuracy {
            line += &format!(" similarity {a:.3}");
        }
        if let Some(a) = g.analogy_accuracy {
            line += &format!(" analogy {a:.3}");
        }
        println!("{line}");
    }
    for f in &s.failures {
        println!("  FAILED {} trial {}: {}", f.model, f.trial, f.error);
    }
}

fn run(args: &RunArgs) -> Result<bool> {
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let criteria: Vec<Criterion> = match args.experiment {
        ExperimentArg::All => Criterion::ALL.to_vec(),
        ExperimentArg::Nonconflation => vec![Criterion::Nonconflation],
        ExperimentArg::Sparseness => vec![Criterion::Sparseness],
        ExperimentArg::Ambiguity => vec![Criterion::Ambiguity],
        ExperimentArg::Multifacet => vec![Criterion::Multifacet],
    };
    let plans = criteria
        .iter()
        .map(|&c| plan_for(args, c))
        .collect::<Result<Vec<_>>>()?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        jobs: usize,
        plans: &'a [ExperimentPlan],
    }
    print_config(
        "run",
        &Resolved {
            jobs,
            plans: &plans,
        },
    )?;
    let mut complete = true;
    for plan in &plans {
        let dir = if plans.len() > 1 {
            args.output.join(plan.criterion.name())
        } else {
            args.output.clone()
        };
        let report = run_experiment(plan, jobs)?;
        let summary = emit_report(&report, &dir)?;
        print_summary(&summary);
        complete &= summary.complete;
    }
    Ok(complete)
}

fn report(args: &ReportArgs) -> Result<bool> {
    print_config("report", args)?;
    let r =
        load_report(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let summary = emit_report(&r, &args.output)?;
    print_summary(&summary);
    Ok(summary.complete)
}

fn grammar_validate(args: &GrammarArgs) -> Result<()> {
    print_config("grammar-validate", args)?;
    let text = fs::read_to_string(&args.file)
        .with_context(|| format!("reading {}", args.file.display()))?;
    let g = parse_grammar(&text)?;
    println!(
        "ok: {} rules, {} nonterminals, {} terminals",
        g.rules().len(),
        g.nonterminals().count(),
        g.terminals().count()
    );
    if let Some(lang) = g.language() {
        println!("finite language of {} sentences", lang.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.log_level {
        LogLevel::Error => log::LevelFilter::Error,
        LogLevel::Warn => log::LevelFilter::Warn,
        LogLevel::Info => log::LevelFilter::Info,
        LogLevel::Debug => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match &cli.command {
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Train(a) => train(a).map(|_| true),
        Command::Probe(a) => probe(a).map(|_| true),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::GrammarValidate(a) => grammar_validate(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some cells failed; see summary.json");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
