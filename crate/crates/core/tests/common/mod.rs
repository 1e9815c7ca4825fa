//! Oracles shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use facet_core::corpus::build_corpus;
use facet_core::grammar::{
    build_ambiguity_grammar, build_conflation_grammar, build_multifacet_grammar,
    build_sparseness_grammar, sample_mu, AmbiguityParams, SentenceSampler,
};
use facet_core::harness::{emit_report, run_experiment, Criterion, ExperimentPlan};
use facet_core::neural::{gradient_check, EmbeddingPair, Event};
use facet_core::ppmi::train_ppmi;
use facet_core::probe::{fit, primal_objective, Label};
use facet_core::{ModelKind, Offset, Pcfg, ProbeConfig, Space};

/// Every sentence type of `g` must be drawn within 4 standard deviations
/// of its binomial expectation.
pub fn check_frequencies(g: &Pcfg, n: usize, seed: u64) {
    let lang = g.language().expect("finite grammar");
    let total: f64 = lang.iter().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() < 1e-9, "language mass {total}");
    let sampler = SentenceSampler::new(g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: HashMap<Vec<String>, usize> = HashMap::new();
    for _ in 0..n {
        let s = sampler.sample(&mut rng);
        *counts
            .entry(s.into_iter().map(String::from).collect())
            .or_default() += 1;
    }
    let mut seen = 0;
    for (sentence, p) in &lang {
        let expected = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        let got = counts.get(sentence).copied().unwrap_or(0);
        seen += got;
        assert!(
            (got as f64 - expected).abs() <= 4.0 * sd,
            "{sentence:?}: {got} draws, expected {expected:.1} +- {sd:.1}"
        );
    }
    assert_eq!(seen, n, "sampled a sentence outside the language");
}

/// Sampling frequencies of all four criterion grammars.
pub fn all_grammar_frequencies() {
    check_frequencies(&build_conflation_grammar(), 200_000, 1);
    let (g, _) = build_sparseness_grammar();
    check_frequencies(&g, 1_000_000, 2);
    for alpha in [1.0, 1.5, 2.0] {
        let g = build_ambiguity_grammar(AmbiguityParams::from_alpha(alpha)).unwrap();
        check_frequencies(&g, 1_000_000, 3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..3 {
        let g = build_multifacet_grammar(&sample_mu(&mut rng));
        check_frequencies(&g, 200_000, 5);
    }
}

/// Dense PPMI vectors straight from the definition, keyed by token. Columns
/// are ordered `[left context ids..., right context ids...]` using `order`.
pub fn brute_force(sentences: &[Vec<String>], order: &[String]) -> HashMap<String, Vec<f64>> {
    let v = order.len();
    let pos: HashMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let mut out = HashMap::new();
    for w in order {
        let mut row = vec![0.0; 2 * v];
        for side in 0..2 {
            // (word, neighbour) pairs at this relative position
            let mut pairs: Vec<(&str, &str)> = Vec::new();
            for s in sentences {
                for j in 0..s.len() {
                    let k = if side == 0 {
                        j.checked_sub(1)
                    } else {
                        Some(j + 1)
                    };
                    if let Some(k) = k.filter(|&k| k < s.len()) {
                        pairs.push((&s[j], &s[k]));
                    }
                }
            }
            let n = pairs.len() as f64;
            let nw = pairs.iter().filter(|p| p.0 == w).count() as f64;
            let mut block = vec![0.0; v];
            for c in order {
                let nwc = pairs.iter().filter(|p| p.0 == w && p.1 == c).count() as f64;
                let nc = pairs.iter().filter(|p| p.1 == c).count() as f64;
                if nwc > 0.0 {
                    block[pos[c.as_str()]] = (nwc * n / (nw * nc)).ln().max(0.0);
                }
            }
            let len = block.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 0.0 {
                block.iter_mut().for_each(|x| *x /= len);
            }
            row[side * v..(side + 1) * v].copy_from_slice(&block);
        }
        out.insert(w.clone(), row);
    }
    out
}

pub fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let types = rng.gen_range(2..8);
    let n = rng.gen_range(1..25);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..6);
            (0..len)
                .map(|_| format!("t{}", rng.gen_range(0..types)))
                .collect()
        })
        .collect()
}

/// PPMI against the definition on `cases` random mini-corpora.
pub fn ppmi_matches_brute_force(cases: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..cases {
        let sentences = random_corpus(&mut rng);
        let c = build_corpus(sentences.clone());
        let e = train_ppmi(&c);
        assert_eq!(e.dim(), 2 * c.vocab().len());
        let oracle = brute_force(&sentences, c.vocab().tokens());
        for t in c.vocab().tokens() {
            let got = e.get(t).unwrap();
            for (i, (a, b)) in got.iter().zip(&oracle[t]).enumerate() {
                assert!(
                    (a - b).abs() <= 1e-12,
                    "case {case} word {t} column {i}: {a} vs {b}"
                );
            }
        }
    }
}

const DIM: usize = 7;
const VOCAB: usize = 12;

/// Parameters with every block set to random values of moderate size, so
/// that no gradient is trivially zero.
fn random_params(kind: ModelKind, cbow_mean: bool, rng: &mut ChaCha8Rng) -> EmbeddingPair {
    let tokens: Vec<String> = (0..VOCAB).map(|i| format!("t{i}")).collect();
    let mut p = EmbeddingPair::initialize(kind, DIM, tokens, cbow_mean, rng);
    for w in 0..VOCAB as u32 {
        p.input_vector_mut(w)
            .iter_mut()
            .for_each(|x| *x = rng.gen_range(-0.8..0.8));
        if let Some(b) = p.bias_mut(w) {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    let rows = if kind == ModelKind::Sskip {
        2 * VOCAB
    } else {
        VOCAB
    };
    for r in 0..rows {
        p.target_vector_mut(r)
            .iter_mut()
            .for_each(|x| *x = rng.gen_range(-0.8..0.8));
    }
    for side in Offset::BOTH {
        if let Some(c) = p.position_weights_mut(side) {
            c.iter_mut().for_each(|x| *x = rng.gen_range(0.2..1.5));
        }
    }
    p
}

fn random_event(kind: ModelKind, rng: &mut ChaCha8Rng) -> Event {
    let w = |rng: &mut ChaCha8Rng| rng.gen_range(0..VOCAB as u32);
    match kind {
        ModelKind::Skip | ModelKind::Sskip => Event::Pair {
            center: w(rng),
            context: w(rng),
            offset: if rng.gen() {
                Offset::Left
            } else {
                Offset::Right
            },
        },
        _ => {
            let (left, right) = match rng.gen_range(0..3) {
                0 => (Some(w(rng)), None),
                1 => (None, Some(w(rng))),
                _ => (Some(w(rng)), Some(w(rng))),
            };
            Event::Window {
                left,
                right,
                center: w(rng),
            }
        }
    }
}

/// Finite-difference checks on 100 random events per model.
pub fn all_gradient_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for kind in ModelKind::ALL {
        let means: &[bool] = if kind == ModelKind::Cbow {
            &[false, true]
        } else {
            &[false]
        };
        for &mean in means {
            let mut worst = 0.0f64;
            for i in 0..100 {
                let p = random_params(kind, mean, &mut rng);
                let e = random_event(kind, &mut rng);
                let k = rng.gen_range(1..6);
                let negatives: Vec<u32> = (0..k).map(|_| rng.gen_range(0..VOCAB as u32)).collect();
                let c = gradient_check(&p, &e, &negatives, 1e-5).unwrap();
                assert!(c.checked > 0);
                assert!(
                    c.max_relative_deviation < 1e-4,
                    "{kind} mean={mean} event {i} {e:?}: deviation {} at {:?}",
                    c.max_relative_deviation,
                    c.worst
                );
                worst = worst.max(c.max_relative_deviation);
            }
            println!("{kind} mean={mean}: worst relative deviation {worst:.2e}");
        }
    }
}

/// Solves `a x = rhs` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / a[r][r];
    }
    Some(x)
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Margin,
    Violator,
    Outside,
}

/// Exact soft-margin solution by enumerating which points sit on the margin
/// (`y f = 1`, at most `d + 1` of them), violate it (`y f < 1`) or lie
/// outside (`y f > 1`). Any assignment whose stationarity system is solvable
/// and consistent satisfies the KKT conditions of the convex primal, so it
/// is a global optimum.
fn oracle(x: &[Vec<f64>], y: &[f64], c: f64) -> Option<(Vec<f64>, f64)> {
    let n = x.len();
    let d = x[0].len();
    let max_margin = (d + 1).min(n);
    let mut roles = vec![Role::Outside; n];
    fn rec(
        i: usize,
        margin: usize,
        max_margin: usize,
        roles: &mut Vec<Role>,
        check: &mut dyn FnMut(&[Role]) -> Option<(Vec<f64>, f64)>,
    ) -> Option<(Vec<f64>, f64)> {
        if i == roles.len() {
            return check(roles);
        }
        for r in [Role::Outside, Role::Violator, Role::Margin] {
            if r == Role::Margin && margin == max_margin {
                continue;
            }
            roles[i] = r;
            let m = margin + usize::from(r == Role::Margin);
            if let Some(s) = rec(i + 1, m, max_margin, roles, check) {
                return Some(s);
            }
        }
        None
    }
    let mut check = |roles: &[Role]| -> Option<(Vec<f64>, f64)> {
        let f: Vec<usize> = (0..n).filter(|&i| roles[i] == Role::Margin).collect();
        let u: Vec<usize> = (0..n).filter(|&i| roles[i] == Role::Violator).collect();
        // unknowns: w (d), b, lambda_F
        let m = d + 1 + f.len();
        let mut a = vec![vec![0.0; m]; m];
        let mut rhs = vec![0.0; m];
        // w - sum_F lambda y x = C sum_U y x
        for k in 0..d {
            a[k][k] = 1.0;
            for (j, &i) in f.iter().enumerate() {
                a[k][d + 1 + j] = -y[i] * x[i][k];
            }
            rhs[k] = c * u.iter().map(|&i| y[i] * x[i][k]).sum::<f64>();
        }
        // sum_F lambda y = -C sum_U y
        for (j, &i) in f.iter().enumerate() {
            a[d][d + 1 + j] = y[i];
        }
        rhs[d] = -c * u.iter().map(|&i| y[i]).sum::<f64>();
        // y_i (w x_i + b) = 1 on the margin
        for (j, &i) in f.iter().enumerate() {
            for k in 0..d {
                a[d + 1 + j][k] = y[i] * x[i][k];
            }
            a[d + 1 + j][d] = y[i];
            rhs[d + 1 + j] = 1.0;
        }
        let sol = solve(a, rhs)?;
        let w = sol[..d].to_vec();
        let b = sol[d];
        let eps = 1e-9;
        for (j, _) in f.iter().enumerate() {
            let l = sol[d + 1 + j];
            if l < -eps || l > c + eps {
                return None;
            }
        }
        for i in 0..n {
            let yf = y[i] * (w.iter().zip(&x[i]).map(|(a, b)| a * b).sum::<f64>() + b);
            let ok = match roles[i] {
                Role::Margin => true,
                Role::Violator => yf <= 1.0 + eps,
                Role::Outside => yf >= 1.0 - eps,
            };
            if !ok {
                return None;
            }
        }
        Some((w, b))
    };
    rec(0, 0, max_margin, &mut roles, &mut check)
}

fn decide(w: &[f64], b: f64, x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b
}

/// Offsets minimizing the primal for fixed `w`. The objective is piecewise
/// linear in `b` with kinks where a point reaches its margin.
fn bias_interval(w: &[f64], c: f64, x: &[Vec<f64>], y: &[Label]) -> (f64, f64) {
    let kinks: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xi, l)| l.sign() - decide(w, 0.0, xi))
        .collect();
    let obj = |b: f64| primal_objective(w, b, c, x, y);
    let best = kinks.iter().map(|&b| obj(b)).fold(f64::INFINITY, f64::min);
    let at_best: Vec<f64> = kinks
        .iter()
        .copied()
        .filter(|&b| obj(b) <= best + 1e-9)
        .collect();
    let lo = at_best.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = at_best.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<Label>) {
    loop {
        let n = rng.gen_range(3..=10);
        let d = rng.gen_range(1..=3);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<Label> = (0..n).map(|_| Label::from_bool(rng.gen())).collect();
        if y.contains(&Label::Positive) && y.contains(&Label::Negative) {
            return (x, y);
        }
    }
}

/// SMO objective, weights, offset and decisions against [`oracle`].
pub fn smo_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cfg = ProbeConfig {
        tolerance: 1e-8,
        ..ProbeConfig::default()
    };
    let mut compared = 0;
    for case in 0..300 {
        let (x, y) = random_instance(&mut rng);
        let c = [0.3, 1.0, 10.0][case % 3];
        let cfg = ProbeConfig { c, ..cfg };
        let ys: Vec<f64> = y.iter().map(|l| l.sign()).collect();
        let Some((w, b)) = oracle(&x, &ys, c) else {
            continue;
        };
        compared += 1;
        let p = fit(&cfg, &x, &y).unwrap();
        assert!(p.converged, "case {case}");
        let best = primal_objective(&w, b, c, &x, &y);
        let got = p.objective(&x, &y);
        assert!(
            got - best <= 1e-6 * best.max(1.0),
            "case {case}: objective {got} vs optimum {best}"
        );
        // w is unique; b may range over an interval of equally good offsets
        for (a, o) in p.weights.iter().zip(&w) {
            assert!(
                (a - o).abs() <= 1e-3 * (1.0 + o.abs()),
                "case {case}: w {:?} vs {w:?}",
                p.weights
            );
        }
        let (lo, hi) = bias_interval(&w, c, &x, &y);
        assert!(
            p.bias >= lo - 1e-3 && p.bias <= hi + 1e-3,
            "case {case}: b {} outside [{lo}, {hi}]",
            p.bias
        );
        // fresh points whose side is the same for every optimal offset
        for _ in 0..20 {
            let q: Vec<f64> = (0..x[0].len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (o_lo, o_hi) = (decide(&w, lo, &q), decide(&w, hi, &q));
            if o_lo.abs() > 1e-2 && o_hi.abs() > 1e-2 && (o_lo > 0.0) == (o_hi > 0.0) {
                assert_eq!(
                    p.predict(&q).unwrap(),
                    Label::from_bool(o_lo >= 0.0),
                    "case {case} at {q:?}"
                );
            }
        }
    }
    assert!(compared >= 200, "oracle solved only {compared} instances");
}

pub fn tiny_plan(criterion: Criterion) -> ExperimentPlan {
    let mut p = ExperimentPlan::new(criterion);
    p.sentences = 1500;
    p.trials = 2;
    p.train.dim = 6;
    p.train.epochs = 1;
    p.spaces = vec![Space::Input, Space::Target];
    if criterion == Criterion::Ambiguity {
        p.alphas = vec![1.0, 1.7];
    }
    if criterion == Criterion::Multifacet {
        p.analogy_sample = Some(40);
    }
    p
}

fn emitted(plan: &ExperimentPlan, jobs: usize, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let r = run_experiment(plan, jobs).unwrap();
    assert!(r.is_complete());
    emit_report(&r, dir).unwrap();
    let mut files = Vec::new();
    for entry in walk(dir) {
        let rel = entry.strip_prefix(dir).unwrap().display().to_string();
        files.push((rel, fs::read(&entry).unwrap()));
    }
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

/// Every criterion emits identical report directories for repeated runs and
/// for different worker counts.
pub fn reports_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for criterion in Criterion::ALL {
        let plan = tiny_plan(criterion);
        let a = emitted(&plan, 1, &tmp.path().join(format!("{criterion}-a")));
        let b = emitted(&plan, 1, &tmp.path().join(format!("{criterion}-b")));
        let c = emitted(&plan, 3, &tmp.path().join(format!("{criterion}-c")));
        assert!(a.iter().any(|(f, _)| f == "report.csv"));
        assert_eq!(a, b, "{criterion}: repeated run differs");
        assert_eq!(a, c, "{criterion}: jobs=3 differs from jobs=1");
    }
}
