use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    CellResult, Criterion, ExperimentPlan, ExperimentReport, HarnessError, Model, Provenance,
};
use crate::probe::LabeledSplit;

/// Aggregate over the trials of one (model, alpha, space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub model: Model,
    pub alpha: Option<f64>,
    pub space: String,
    pub trials: usize,
    pub mean_accuracy: f64,
    /// Correct test decisions summed over trials.
    pub correct: usize,
    pub decisions: usize,
    /// `correct / decisions`.
    pub proportion: f64,
    pub per_trial: Vec<f64>,
    /// Trials in which every test word was classified correctly.
    pub perfect_trials: usize,
    pub similarity_accuracy: Option<f64>,
    pub analogy_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub model: Model,
    pub trial: usize,
    pub alpha: Option<f64>,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportSummary {
    pub experiment: Criterion,
    /// False if any cell failed; the groups then cover completed cells only.
    pub complete: bool,
    pub cells: usize,
    pub failures: Vec<FailureRecord>,
    pub groups: Vec<GroupSummary>,
    pub plan: ExperimentPlan,
    pub provenance: Provenance,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

impl ReportSummary {
    pub fn from_report(r: &ExperimentReport) -> Self {
        let mut keys: Vec<(usize, Option<f64>, String, Model)> = Vec::new();
        for c in &r.cells {
            if let Some(d) = c.data() {
                let m = model_rank(&r.plan, c.spec.model);
                for s in &d.spaces {
                    let k = (m, c.spec.alpha, s.space.clone(), c.spec.model);
                    if !keys.contains(&k) {
                        keys.push(k);
                    }
                }
            }
        }
        keys.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.partial_cmp(&b.1).expect("finite alphas"))
                .then(a.2.cmp(&b.2))
        });
        let groups = keys
            .into_iter()
            .map(|(_, alpha, space, model)| {
                let mut per_trial = Vec::new();
                let (mut correct, mut decisions, mut perfect) = (0, 0, 0);
                let (mut sim, mut ana) = (Vec::new(), Vec::new());
                for c in &r.cells {
                    if c.spec.model != model || c.spec.alpha != alpha {
                        continue;
                    }
                    let Some(d) = c.data() else { continue };
                    for s in d.spaces.iter().filter(|s| s.space == space) {
                        let ok = s.probe.predictions.iter().filter(|p| p.correct()).count();
                        per_trial.push(s.probe.accuracy);
                        correct += ok;
                        decisions += s.probe.predictions.len();
                        if ok == s.probe.predictions.len() {
                            perfect += 1;
                        }
                        if let Some(p) = &s.similarity {
                            sim.push(p.accuracy);
                        }
                        if let Some(p) = &s.analogy {
                            ana.push(p.accuracy);
                        }
                    }
                }
                GroupSummary {
                    model,
                    alpha,
                    space,
                    trials: per_trial.len(),
                    mean_accuracy: mean(&per_trial).unwrap_or(0.0),
                    correct,
                    decisions,
                    proportion: if decisions > 0 {
                        correct as f64 / decisions as f64
                    } else {
                        0.0
                    },
                    per_trial,
                    perfect_trials: perfect,
                    similarity_accuracy: mean(&sim),
                    analogy_accuracy: mean(&ana),
                }
            })
            .collect();
        let failures = r
            .failures()
            .map(|(s, e)| FailureRecord {
                model: s.model,
                trial: s.trial,
                alpha: s.alpha,
                error: e.to_string(),
            })
            .collect::<Vec<_>>();
        Self {
            experiment: r.plan.criterion,
            complete: failures.is_empty(),
            cells: r.cells.len(),
            failures,
            groups,
            plan: r.plan.clone(),
            provenance: r.provenance.clone(),
        }
    }

    pub fn group(&self, model: Model, alpha: Option<f64>, space: &str) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.model == model && g.alpha == alpha && g.space == space)
    }

    /// The group of `model` in the primary space: `explicit` for PPMI, the
    /// first planned space otherwise.
    pub fn primary(&self, model: Model, alpha: Option<f64>) -> Option<&GroupSummary> {
        self.group(model, alpha, &primary_space(&self.plan, model))
    }
}

fn primary_space(plan: &ExperimentPlan, model: Model) -> String {
    match model.kind() {
        None => "explicit".into(),
        Some(_) => plan
            .spaces
            .first()
            .map(|s| s.name())
            .unwrap_or("input")
            .into(),
    }
}

fn model_rank(plan: &ExperimentPlan, m: Model) -> usize {
    Model::ALL
        .iter()
        .position(|&x| x == m)
        .unwrap_or(plan.models.len())
}

/// Alphas keep a decimal point (`1.0`, not `1`).
fn fmt_alpha(a: Option<f64>) -> String {
    a.map(|a| format!("{a:?}")).unwrap_or_default()
}

fn csv(r: &ExperimentReport) -> String {
    let mut rows: Vec<(usize, usize, Option<f64>, String, String)> = Vec::new();
    let exp = r.plan.criterion.name();
    for c in &r.cells {
        let s = &c.spec;
        let rank = model_rank(&r.plan, s.model);
        match &c.outcome {
            Ok(d) => {
                for sp in &d.spaces {
                    let line = format!(
                        "{exp},{},{},{},{},{},{},{}",
                        s.model,
                        s.trial,
                        fmt_alpha(s.alpha),
                        sp.space,
                        sp.probe.accuracy,
                        sp.probe.n_test,
                        s.seed
                    );
                    rows.push((rank, s.trial, s.alpha, sp.space.clone(), line));
                }
            }
            Err(_) => {
                let line = format!(
                    "{exp},{},{},{},{},NA,0,{}",
                    s.model,
                    s.trial,
                    fmt_alpha(s.alpha),
                    primary_space(&r.plan, s.model),
                    s.seed
                );
                rows.push((rank, s.trial, s.alpha, String::new(), line));
            }
        }
    }
    rows.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.partial_cmp(&b.2).expect("finite alphas"))
            .then(a.3.cmp(&b.3))
    });
    let mut out = String::from("experiment,model,trial,alpha,space,test_accuracy,n_test,seed\n");
    for (.., line) in rows {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn split_name(trial: usize, alpha: Option<f64>) -> String {
    match alpha {
        Some(a) => format!("trial{trial}_alpha{a:?}"),
        None => format!("trial{trial}"),
    }
}

/// Writes `report.csv`, `summary.json`, `cells.json`, `splits/`, the
/// ambiguity curve and, if the plan kept them, `vectors/`.
pub fn emit_report(r: &ExperimentReport, dir: &Path) -> Result<ReportSummary, HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), csv(r))?;
    let summary = r.summary();
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    fs::write(
        dir.join("cells.json"),
        serde_json::to_string_pretty(&r.cells)? + "\n",
    )?;
    let splits = dir.join("splits");
    fs::create_dir_all(&splits)?;
    for (trial, alpha, s) in &r.splits {
        let mut f = std::io::BufWriter::new(fs::File::create(
            splits.join(split_name(*trial, *alpha) + ".tsv"),
        )?);
        s.write(&mut f)?;
        f.flush()?;
    }
    if r.plan.criterion == Criterion::Ambiguity {
        emit_curve(&summary, &dir.join("curve.svg"))?;
    }
    if r.plan.keep_vectors {
        let vdir = dir.join("vectors");
        fs::create_dir_all(&vdir)?;
        for c in &r.cells {
            for (space, e) in &c.vectors {
                let name = format!(
                    "{}_{}_{space}.txt",
                    c.spec.model,
                    split_name(c.spec.trial, c.spec.alpha)
                );
                let mut f = std::io::BufWriter::new(fs::File::create(vdir.join(name))?);
                e.write(&mut f)?;
                f.flush()?;
            }
        }
    }
    Ok(summary)
}

fn parse_split_name(stem: &str) -> Option<(usize, Option<f64>)> {
    let rest = stem.strip_prefix("trial")?;
    match rest.split_once("_alpha") {
        Some((t, a)) => Some((t.parse().ok()?, Some(a.parse().ok()?))),
        None => Some((rest.parse().ok()?, None)),
    }
}

/// Reads a directory written by [`emit_report`] back into a report. Vectors
/// are not restored.
pub fn load_report(dir: &Path) -> Result<ExperimentReport, HarnessError> {
    let summary: ReportSummary =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
    let cells: Vec<CellResult> =
        serde_json::from_str(&fs::read_to_string(dir.join("cells.json"))?)?;
    let mut splits = Vec::new();
    let sdir = dir.join("splits");
    if sdir.is_dir() {
        for entry in fs::read_dir(&sdir)? {
            let path = entry?.path();
            let Some(key) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(parse_split_name)
            else {
                continue;
            };
            let split = LabeledSplit::load(&path)
                .map_err(|e| HarnessError::Plan(format!("{}: {e}", path.display())))?;
            splits.push((key.0, key.1, split));
        }
    }
    splits.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).expect("finite alphas"))
    });
    Ok(ExperimentReport {
        plan: summary.plan,
        provenance: summary.provenance,
        cells,
        splits,
    })
}

const COLORS: [&str; 6] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
];

/// Accuracy against alpha, one polyline per model in its primary space.
pub fn render_curve(s: &ReportSummary) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 120.0, 20.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let mut alphas: Vec<f64> = s.groups.iter().filter_map(|g| g.alpha).collect();
    alphas.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    alphas.dedup();
    let (lo, hi) = match (alphas.first(), alphas.last()) {
        (Some(&lo), Some(&hi)) if hi > lo => (lo, hi),
        (Some(&lo), _) => (lo - 0.5, lo + 0.5),
        _ => (1.0, 2.0),
    };
    let x = |a: f64| left + (a - lo) / (hi - lo) * pw;
    let y = |v: f64| top + (1.0 - v) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<line x1="{left}" y1="{yy:.2}" x2="{x2}" y2="{yy:.2}" stroke="#dddddd"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{v:.2}</text>"##,
            yy = y(v),
            x2 = left + pw,
            tx = left - 6.0,
            ty = y(v) + 4.0
        );
    }
    for &a in &alphas {
        let _ = writeln!(
            out,
            r#"<text x="{xx:.2}" y="{ty}" text-anchor="middle">{a:?}</text>"#,
            xx = x(a),
            ty = top + ph + 18.0
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{cx}" y="{cy}" text-anchor="middle">alpha = -log2(beta)</text>"#,
        cx = left + pw / 2.0,
        cy = h - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{cy}" text-anchor="middle" transform="rotate(-90 15 {cy})">test accuracy</text>"#,
        cy = top + ph / 2.0
    );
    let mut series = 0;
    for (i, m) in Model::ALL.into_iter().enumerate() {
        let space = primary_space(&s.plan, m);
        let mut pts: Vec<(f64, f64)> = s
            .groups
            .iter()
            .filter(|g| g.model == m && g.space == space)
            .filter_map(|g| g.alpha.map(|a| (a, g.mean_accuracy)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(a, v)| format!("{:.2},{:.2}", x(a), y(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-model="{m}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(a, v) in &pts {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x(a),
                y(v)
            );
        }
        let ly = top + 10.0 + 18.0 * series as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{lx2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{tx}" y="{ty}">{}</text>"#,
            m.name().to_uppercase(),
            lx2 = lx + 20.0,
            tx = lx + 26.0,
            ty = ly + 4.0
        );
        series += 1;
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_curve(s: &ReportSummary, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, render_curve(s))?;
    Ok(())
}
