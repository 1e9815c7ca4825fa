//! Reproduction criteria, one PASS/FAIL line each.
//!
//! The default scale fits a single-core machine: nonconflation and sparseness
//! use their full five seeds, PPMI always runs 50 ambiguity trials per alpha,
//! the neural ambiguity runs use one trial per alpha and multifacetedness
//! three trials. `FACET_ACCEPTANCE=full` switches to 50 and 10 trials.
//! Positional arguments `1`..`5` select criteria; any other filter skips the
//! suite so that `cargo test <name>` stays fast.

mod common;

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use facet_core::harness::{run_experiment, Criterion, ExperimentPlan, ExperimentReport, Model};
use facet_core::probe::{evaluate_split, Label};
use facet_core::Space;

const NEURAL: [Model; 5] = [
    Model::Lbl,
    Model::Cbow,
    Model::Cwin,
    Model::Skip,
    Model::Sskip,
];

struct Scale {
    full: bool,
    ambiguity_neural_trials: usize,
    multifacet_trials: usize,
}

impl Scale {
    fn from_env() -> Self {
        let full = std::env::var("FACET_ACCEPTANCE").is_ok_and(|v| v == "full");
        Self {
            full,
            ambiguity_neural_trials: if full { 50 } else { 1 },
            multifacet_trials: if full { 10 } else { 3 },
        }
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn plan(criterion: Criterion, models: &[Model], trials: usize) -> ExperimentPlan {
    let mut p = ExperimentPlan::new(criterion);
    p.models = models.to_vec();
    p.trials = trials;
    p.spaces = vec![Space::Input, Space::Target];
    p.keep_vectors = true;
    p
}

fn run(p: &ExperimentPlan) -> ExperimentReport {
    let r = run_experiment(p, jobs()).expect("valid plan");
    assert!(
        r.is_complete(),
        "failed cells: {:?}",
        r.failures().collect::<Vec<_>>()
    );
    r
}

/// Per-trial accuracy of every (model, alpha, variant), where the variant is
/// a space name with `+norm` marking a probe on L2-normalized vectors.
type Accuracies = BTreeMap<(Model, String, String), Vec<f64>>;

fn alpha_key(a: Option<f64>) -> String {
    a.map(|a| format!("{a:.1}")).unwrap_or_default()
}

fn accuracies(r: &ExperimentReport) -> Accuracies {
    let mut out = Accuracies::new();
    for c in &r.cells {
        let (_, _, split) = r
            .splits
            .iter()
            .find(|(t, a, _)| *t == c.spec.trial && *a == c.spec.alpha)
            .expect("split of every trial");
        let key = |v: String| (c.spec.model, alpha_key(c.spec.alpha), v);
        for s in &c.data().unwrap().spaces {
            out.entry(key(s.space.clone()))
                .or_default()
                .push(s.probe.accuracy);
        }
        for (space, e) in &c.vectors {
            if c.spec.model == Model::Ppmi {
                continue;
            }
            let ev = evaluate_split(&e.l2_normalized(), split, &r.plan.probe).unwrap();
            out.entry(key(format!("{space}+norm")))
                .or_default()
                .push(ev.accuracy);
        }
    }
    out
}

fn primary(model: Model) -> &'static str {
    if model == Model::Ppmi {
        "explicit"
    } else {
        "input"
    }
}

fn get<'a>(acc: &'a Accuracies, model: Model, alpha: &str, variant: &str) -> &'a [f64] {
    acc.get(&(model, alpha.to_string(), variant.to_string()))
        .map_or(&[], Vec::as_slice)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn fmt_trials(x: &[f64]) -> String {
    x.iter()
        .map(|a| format!("{a:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Prints the per-trial accuracies of every variant of a seeded criterion.
fn print_variants(acc: &Accuracies, alpha: &str) {
    for m in Model::ALL {
        let variants = if m == Model::Ppmi {
            vec!["explicit"]
        } else {
            vec!["input", "input+norm", "target", "target+norm"]
        };
        let cols: Vec<String> = variants
            .iter()
            .map(|v| format!("{v}=[{}]", fmt_trials(get(acc, m, alpha, v))))
            .collect();
        println!("    {:<6} {}", m.name(), cols.join(" "));
    }
}

struct Verdict {
    ok: bool,
    details: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            ok: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.ok &= ok;
        self.details
            .push(format!("{} {what}", if ok { "ok  " } else { "MISS" }));
    }
}

fn report_line(n: usize, name: &str, v: &Verdict, started: Instant) -> bool {
    println!(
        "{} criterion {n} {name} ({:.0}s)",
        if v.ok { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    for d in &v.details {
        println!("    {d}");
    }
    v.ok
}

fn count(x: &[f64], pred: impl Fn(f64) -> bool) -> usize {
    x.iter().filter(|&&a| pred(a)).count()
}

fn nonconflation() -> bool {
    let t = Instant::now();
    let r = run(&plan(Criterion::Nonconflation, &Model::ALL, 5));
    let acc = accuracies(&r);
    let mut v = Verdict::new();

    let ppmi = get(&acc, Model::Ppmi, "", "explicit");
    let w_wrong = r
        .cells
        .iter()
        .filter(|c| c.spec.model == Model::Ppmi)
        .filter(|c| {
            c.data().unwrap().spaces[0]
                .probe
                .predictions
                .iter()
                .filter(|p| p.label == Label::Positive)
                .all(|p| !p.correct())
        })
        .count();
    v.check(
        count(ppmi, |a| a == 0.5) == 5 && w_wrong == 5,
        format!(
            "ppmi = 0.50 with w3, w4 misclassified in 5/5: [{}], w-words wrong in {w_wrong}/5",
            fmt_trials(ppmi)
        ),
    );
    let cbow = get(&acc, Model::Cbow, "", "input");
    v.check(
        count(cbow, |a| a <= 0.5) >= 4,
        format!("cbow <= 0.50 in >= 4/5: [{}]", fmt_trials(cbow)),
    );
    for m in [Model::Lbl, Model::Skip, Model::Sskip, Model::Cwin] {
        let a = get(&acc, m, "", "input");
        v.check(
            count(a, |x| x == 1.0) >= 4,
            format!("{m} = 1.00 in >= 4/5: [{}]", fmt_trials(a)),
        );
    }
    let ok = report_line(1, "nonconflation", &v, t);
    println!("    per-trial accuracy by space:");
    print_variants(&acc, "");
    ok
}

fn sparseness() -> bool {
    let t = Instant::now();
    let r = run(&plan(Criterion::Sparseness, &Model::ALL, 5));
    let acc = accuracies(&r);
    let mut v = Verdict::new();

    let per_word = r
        .cells
        .iter()
        .filter(|c| c.spec.model == Model::Ppmi)
        .filter(|c| {
            c.data().unwrap().spaces[0]
                .probe
                .predictions
                .iter()
                .all(|p| {
                    // u_i must be right, x_i wrong
                    p.correct() == p.token.starts_with('u')
                })
        })
        .count();
    let ppmi = get(&acc, Model::Ppmi, "", "explicit");
    v.check(
        count(ppmi, |a| a == 0.5) == 5 && per_word == 5,
        format!(
            "ppmi = 0.50 (all u right, all x wrong) in 5/5: [{}], per-word pattern in {per_word}/5",
            fmt_trials(ppmi)
        ),
    );
    for m in NEURAL {
        let a = get(&acc, m, "", "input");
        v.check(
            count(a, |x| x == 1.0) >= 4,
            format!("{m} = 1.00 in >= 4/5: [{}]", fmt_trials(a)),
        );
    }
    let ok = report_line(2, "sparseness", &v, t);
    println!("    per-trial accuracy by space:");
    print_variants(&acc, "");
    ok
}

fn ambiguity(scale: &Scale) -> bool {
    let t = Instant::now();
    let ppmi = run(&plan(Criterion::Ambiguity, &[Model::Ppmi], 50));
    let neural = run(&plan(
        Criterion::Ambiguity,
        &NEURAL,
        scale.ambiguity_neural_trials,
    ));
    let mut acc = accuracies(&ppmi);
    acc.extend(accuracies(&neural));
    let alphas: Vec<String> = ppmi
        .plan
        .alphas
        .iter()
        .map(|&a| alpha_key(Some(a)))
        .collect();
    let m_at = |m: Model, a: &str, variant: &str| mean(get(&acc, m, a, variant));
    let mut v = Verdict::new();

    let at1: Vec<String> = Model::ALL
        .iter()
        .map(|&m| format!("{m}={:.2}", m_at(m, "1.0", primary(m))))
        .collect();
    v.check(
        Model::ALL
            .iter()
            .all(|&m| m_at(m, "1.0", primary(m)) >= 0.95),
        format!("(a) every model >= 0.95 at alpha 1.0: {}", at1.join(" ")),
    );
    let ppmi_curve: Vec<(f64, f64)> = ppmi
        .plan
        .alphas
        .iter()
        .map(|&a| (a, m_at(Model::Ppmi, &alpha_key(Some(a)), "explicit")))
        .collect();
    let high = ppmi_curve
        .iter()
        .filter(|(a, _)| *a <= 1.3 + 1e-9)
        .all(|(_, x)| *x >= 0.80);
    let low = ppmi_curve
        .iter()
        .filter(|(a, _)| *a >= 1.6 - 1e-9)
        .all(|(_, x)| *x <= 0.05);
    let curve: Vec<String> = ppmi_curve
        .iter()
        .map(|(a, x)| format!("{a:.1}:{x:.2}"))
        .collect();
    v.check(
        high && low,
        format!(
            "(b) ppmi >= 0.80 for alpha <= 1.3 and <= 0.05 for alpha >= 1.6: {}",
            curve.join(" ")
        ),
    );
    let (skip2, cwin2) = (
        m_at(Model::Skip, "2.0", "input"),
        m_at(Model::Cwin, "2.0", "input"),
    );
    v.check(
        skip2 >= 0.90 && cwin2 >= 0.90,
        format!("(c) skip and cwin >= 0.90 at alpha 2.0: skip={skip2:.2} cwin={cwin2:.2}"),
    );
    let tail: Vec<String> = ppmi
        .plan
        .alphas
        .iter()
        .filter(|&&a| a >= 1.5 - 1e-9)
        .map(|&a| alpha_key(Some(a)))
        .collect();
    let robust = |m: Model, variant: &str| {
        mean(&tail.iter().map(|a| m_at(m, a, variant)).collect::<Vec<_>>())
    };
    let r_in: BTreeMap<Model, f64> = NEURAL.iter().map(|&m| (m, robust(m, "input"))).collect();
    let cbow_lowest = NEURAL
        .iter()
        .filter(|&&m| m != Model::Cbow)
        .all(|m| r_in[&Model::Cbow] < r_in[m]);
    let top_two =
        r_in[&Model::Skip].min(r_in[&Model::Cwin]) >= r_in[&Model::Lbl].max(r_in[&Model::Sskip]);
    let ranks: Vec<String> = r_in.iter().map(|(m, x)| format!("{m}={x:.3}")).collect();
    v.check(
        cbow_lowest && top_two,
        format!(
            "(d) mean over alpha 1.5..2.0 ranks cbow lowest, skip and cwin on top: {}",
            ranks.join(" ")
        ),
    );
    let ok = report_line(3, "ambiguity", &v, t);
    println!(
        "    mean accuracy per alpha ({} ppmi / {} neural trials):",
        ppmi.plan.trials, neural.plan.trials
    );
    println!("    {:<18} {}", "", alphas.join("  "));
    for m in Model::ALL {
        let variants: &[&str] = if m == Model::Ppmi {
            &["explicit"]
        } else {
            &["input", "input+norm", "target", "target+norm"]
        };
        for var in variants {
            let row: Vec<String> = alphas
                .iter()
                .map(|a| format!("{:.2}", m_at(m, a, var)))
                .collect();
            println!("    {:<6} {:<11} {}", m.name(), var, row.join("  "));
        }
    }
    ok
}

fn multifacet(scale: &Scale) -> bool {
    let t = Instant::now();
    let r = run(&plan(
        Criterion::Multifacet,
        &Model::ALL,
        scale.multifacet_trials,
    ));
    let acc = accuracies(&r);
    let s = r.summary();
    let mut v = Verdict::new();

    let svm: Vec<String> = Model::ALL
        .iter()
        .map(|&m| format!("{m}=[{}]", fmt_trials(get(&acc, m, "", primary(m)))))
        .collect();
    v.check(
        Model::ALL
            .iter()
            .all(|&m| get(&acc, m, "", primary(m)).iter().all(|&a| a == 1.0)),
        format!(
            "svm gender accuracy 1.00 for all models in all trials: {}",
            svm.join(" ")
        ),
    );
    let err = |m: Model, f: fn(&facet_core::harness::GroupSummary) -> Option<f64>| {
        1.0 - f(s.primary(m, None).unwrap()).unwrap()
    };
    for (m, centre) in [(Model::Ppmi, 0.29), (Model::Lbl, 0.25)] {
        let e = err(m, |g| g.similarity_accuracy);
        v.check(
            (e - centre).abs() <= 0.10 + 1e-12,
            format!(
                "{m} nearest-neighbour error {:.1}% within {:.0} +- 10 points",
                e * 100.0,
                centre * 100.0
            ),
        );
    }
    for (m, centre) in [(Model::Ppmi, 0.16), (Model::Lbl, 0.14)] {
        let e = err(m, |g| g.analogy_accuracy);
        v.check(
            (e - centre).abs() <= 0.08 + 1e-12,
            format!(
                "{m} analogy error {:.1}% within {:.0} +- 8 points",
                e * 100.0,
                centre * 100.0
            ),
        );
    }
    let ok = report_line(4, "multifacetedness", &v, t);
    println!(
        "    nearest-neighbour / analogy error of every model ({} trials):",
        r.plan.trials
    );
    for m in Model::ALL {
        println!(
            "    {:<6} nn {:.1}%  analogy {:.1}%",
            m.name(),
            err(m, |g| g.similarity_accuracy) * 100.0,
            err(m, |g| g.analogy_accuracy) * 100.0
        );
    }
    println!("    per-trial svm accuracy by space:");
    print_variants(&acc, "");
    ok
}

fn properties() -> bool {
    let t = Instant::now();
    let mut v = Verdict::new();
    let suites: [(&str, fn()); 5] = [
        (
            "grammar sampling within 4 sd for all four grammars",
            common::all_grammar_frequencies,
        ),
        ("ppmi equals the brute-force oracle on 100 corpora", || {
            common::ppmi_matches_brute_force(100)
        }),
        (
            "gradient checks below 1e-4 for all five models",
            common::all_gradient_checks,
        ),
        (
            "probe matches the exact small-instance oracle",
            common::smo_matches_oracle,
        ),
        (
            "byte-identical reports across runs and jobs",
            common::reports_are_reproducible,
        ),
    ];
    for (name, f) in suites {
        let ok = panic::catch_unwind(AssertUnwindSafe(f)).is_ok();
        v.check(ok, name.to_string());
    }
    report_line(5, "property suites", &v, t)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut selected: Vec<usize> = args
        .iter()
        .filter_map(|a| a.parse().ok())
        .filter(|n| (1..=5).contains(n))
        .collect();
    if selected.is_empty() {
        if !args.is_empty() {
            return ExitCode::SUCCESS;
        }
        selected = (1..=5).collect();
    }
    let scale = Scale::from_env();
    println!(
        "acceptance: {} scale, {} worker(s), ambiguity {} neural trial(s) per alpha, multifacet {} trial(s)",
        if scale.full { "full" } else { "default" },
        jobs(),
        scale.ambiguity_neural_trials,
        scale.multifacet_trials
    );
    let mut passed = 0;
    for &n in &selected {
        let ok = match n {
            1 => nonconflation(),
            2 => sparseness(),
            3 => ambiguity(&scale),
            4 => multifacet(&scale),
            _ => properties(),
        };
        passed += usize::from(ok);
    }
    println!("acceptance: {passed}/{} criteria passed", selected.len());
    if passed == selected.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
