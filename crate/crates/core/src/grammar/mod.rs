//! Probabilistic context-free grammars: representation, validation, a
//! line-oriented text format, sampling, and the four built-in criterion
//! grammars.

mod builtin;
mod parse;
mod sample;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{
    build_ambiguity_grammar, build_conflation_grammar, build_multifacet_grammar,
    build_sparseness_grammar, sample_mu, AmbiguityParams, Category, ContentClass, Gender,
    MuMapping, PARADIGM_MARKERS,
};
pub use parse::{parse_grammar, serialize_grammar};
pub use sample::{sample_sentence, SentenceSampler};

/// Tolerance on the per-nonterminal probability sum for decimal inputs.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no rules")]
    NoRules,
    #[error("invalid grammar: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("ambiguity parameter beta = {0} must lie strictly between 0 and 1")]
    InvalidBeta(f64),
    #[error("paradigm mapping: {0}")]
    InvalidMu(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Index of a symbol within one grammar's alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolId(pub u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A rule probability, kept exact when written as a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Probability {
    Ratio { num: u64, den: u64 },
    Decimal(f64),
}

impl Probability {
    pub fn ratio(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den);
        Probability::Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Probability::Ratio { num, den } => num as f64 / den as f64,
            Probability::Decimal(x) => x,
        }
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Probability::Ratio { num, den } => write!(f, "{num}/{den}"),
            Probability::Decimal(x) => write!(f, "{x}"),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub lhs: SymbolId,
    pub rhs: Vec<SymbolId>,
    pub prob: Probability,
}

/// A problem found by [`Pcfg::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ProbabilitySum { lhs: String, sum: f64 },
    NonPositiveProbability { lhs: String, prob: f64 },
    EmptyRhs { lhs: String },
    Unreachable { symbol: String },
    Recursive { cycle: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilitySum { lhs, sum } => write!(f, "{lhs} sums to {sum}"),
            Violation::NonPositiveProbability { lhs, prob } => {
                write!(f, "{lhs} has a rule with probability {prob}")
            }
            Violation::EmptyRhs { lhs } => write!(f, "{lhs} has an empty right-hand side"),
            Violation::Unreachable { symbol } => write!(f, "{symbol} is unreachable"),
            Violation::Recursive { cycle } => write!(f, "recursive: {}", cycle.join(" -> ")),
        }
    }
}

/// Weighted context-free grammar. Nonterminals are exactly the symbols that
/// appear on some left-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Pcfg {
    names: Vec<String>,
    index: HashMap<String, SymbolId>,
    nonterminal: Vec<bool>,
    start: SymbolId,
    rules: Vec<Rule>,
    by_lhs: Vec<Vec<usize>>,
}

impl Pcfg {
    /// Builds a grammar from `(lhs, rhs, prob)` triples. The first rule's
    /// left-hand side is the start symbol.
    pub fn from_rules<I, S>(rules: I) -> Result<Self, GrammarError>
    where
        I: IntoIterator<Item = (S, Vec<S>, Probability)>,
        S: AsRef<str>,
    {
        let mut b = PcfgBuilder::default();
        for (lhs, rhs, prob) in rules {
            b.rule(lhs.as_ref(), rhs.iter().map(AsRef::as_ref), prob);
        }
        b.finish()
    }

    pub fn start(&self) -> SymbolId {
        self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn symbol(&self, name: &str) -> Option<SymbolId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.names[id.index()]
    }

    pub fn num_symbols(&self) -> usize {
        self.names.len()
    }

    pub fn is_nonterminal(&self, id: SymbolId) -> bool {
        self.nonterminal[id.index()]
    }

    /// Rules whose left-hand side is `lhs`, in file order.
    pub fn rules_for(&self, lhs: SymbolId) -> impl Iterator<Item = &Rule> {
        self.by_lhs[lhs.index()].iter().map(|&i| &self.rules[i])
    }

    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        self.names
            .iter()
            .zip(&self.nonterminal)
            .filter(|(_, &nt)| !nt)
            .map(|(n, _)| n.as_str())
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.names
            .iter()
            .zip(&self.nonterminal)
            .filter(|(_, &nt)| nt)
            .map(|(n, _)| n.as_str())
    }

    /// Checks probability sums, reachability from the start symbol and
    /// absence of recursion. An empty list means the grammar is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (sym, rule_ids) in self.by_lhs.iter().enumerate() {
            if rule_ids.is_empty() {
                continue;
            }
            let lhs = self.names[sym].clone();
            let mut exact: Option<(u128, u128)> = Some((0, 1));
            let mut sum = 0.0;
            for &ri in rule_ids {
                let r = &self.rules[ri];
                if r.rhs.is_empty() {
                    out.push(Violation::EmptyRhs { lhs: lhs.clone() });
                }
                let p = r.prob.value();
                if !(p > 0.0 && p <= 1.0) {
                    out.push(Violation::NonPositiveProbability {
                        lhs: lhs.clone(),
                        prob: p,
                    });
                }
                sum += p;
                exact = match (exact, r.prob) {
                    (Some((n, d)), Probability::Ratio { num, den }) => {
                        let (num, den) = (num as u128, den as u128);
                        let (nn, nd) = (n * den + num * d, d * den);
                        let g = gcd128(nn, nd);
                        Some((nn / g, nd / g))
                    }
                    _ => None,
                };
            }
            let ok = match exact {
                Some((n, d)) => n == d,
                None => (sum - 1.0).abs() <= SUM_TOLERANCE,
            };
            if !ok {
                out.push(Violation::ProbabilitySum { lhs, sum });
            }
        }

        let mut reached = vec![false; self.names.len()];
        let mut stack = vec![self.start];
        reached[self.start.index()] = true;
        while let Some(s) = stack.pop() {
            for r in self.rules_for(s) {
                for &c in &r.rhs {
                    if !reached[c.index()] {
                        reached[c.index()] = true;
                        stack.push(c);
                    }
                }
            }
        }
        for (i, seen) in reached.iter().enumerate() {
            if !seen {
                out.push(Violation::Unreachable {
                    symbol: self.names[i].clone(),
                });
            }
        }

        if let Some(cycle) = self.find_cycle() {
            out.push(Violation::Recursive {
                cycle: cycle.into_iter().map(|s| self.names[s].clone()).collect(),
            });
        }
        out
    }

    /// Depth-first search for a cycle in the nonterminal dependency graph.
    fn find_cycle(&self) -> Option<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.names.len();
        let mut mark = vec![Mark::New; n];
        let mut path = Vec::new();

        fn visit(
            g: &Pcfg,
            s: usize,
            mark: &mut [Mark],
            path: &mut Vec<usize>,
        ) -> Option<Vec<usize>> {
            mark[s] = Mark::Active;
            path.push(s);
            for r in g.rules_for(SymbolId(s as u32)) {
                for &c in &r.rhs {
                    let c = c.index();
                    match mark[c] {
                        Mark::Active => {
                            let from = path.iter().position(|&p| p == c).unwrap();
                            let mut cycle = path[from..].to_vec();
                            cycle.push(c);
                            return Some(cycle);
                        }
                        Mark::New => {
                            if let Some(cy) = visit(g, c, mark, path) {
                                return Some(cy);
                            }
                        }
                        Mark::Done => {}
                    }
                }
            }
            path.pop();
            mark[s] = Mark::Done;
            None
        }

        for s in 0..n {
            if mark[s] == Mark::New {
                if let Some(c) = visit(self, s, &mut mark, &mut path) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Enumerates the finite language with exact sentence probabilities by
    /// expanding every derivation. Only meaningful for non-recursive grammars;
    /// returns `None` if a cycle is present.
    pub fn language(&self) -> Option<Vec<(Vec<String>, f64)>> {
        if self.find_cycle().is_some() {
            return None;
        }
        let mut memo: HashMap<SymbolId, Vec<(Vec<SymbolId>, f64)>> = HashMap::new();
        let yields = self.yields_of(self.start, &mut memo);
        let mut merged: HashMap<Vec<SymbolId>, f64> = HashMap::new();
        for (y, p) in yields {
            *merged.entry(y).or_insert(0.0) += p;
        }
        let mut out: Vec<(Vec<String>, f64)> = merged
            .into_iter()
            .map(|(y, p)| (y.iter().map(|&s| self.name(s).to_string()).collect(), p))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Some(out)
    }

    fn yields_of(
        &self,
        sym: SymbolId,
        memo: &mut HashMap<SymbolId, Vec<(Vec<SymbolId>, f64)>>,
    ) -> Vec<(Vec<SymbolId>, f64)> {
        if !self.is_nonterminal(sym) {
            return vec![(vec![sym], 1.0)];
        }
        if let Some(v) = memo.get(&sym) {
            return v.clone();
        }
        let mut out = Vec::new();
        for r in self.rules_for(sym) {
            let mut partial: Vec<(Vec<SymbolId>, f64)> = vec![(Vec::new(), r.prob.value())];
            for &c in &r.rhs {
                let sub = self.yields_of(c, memo);
                let mut next = Vec::with_capacity(partial.len() * sub.len());
                for (prefix, p) in &partial {
                    for (suffix, q) in &sub {
                        let mut y = prefix.clone();
                        y.extend_from_slice(suffix);
                        next.push((y, p * q));
                    }
                }
                partial = next;
            }
            out.extend(partial);
        }
        memo.insert(sym, out.clone());
        out
    }

    /// Probability that the grammar yields exactly `tokens` (0 if never).
    pub fn sentence_probability<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let Some(lang) = self.language() else {
            return f64::NAN;
        };
        lang.iter()
            .find(|(y, _)| {
                y.len() == tokens.len() && y.iter().zip(tokens).all(|(a, b)| a == b.as_ref())
            })
            .map_or(0.0, |(_, p)| *p)
    }

    /// Fails with [`GrammarError::Invalid`] unless [`Pcfg::validate`] is clean.
    pub fn ensure_valid(&self) -> Result<(), GrammarError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(GrammarError::Invalid(v))
        }
    }
}

#[derive(Default)]
pub(crate) struct PcfgBuilder {
    names: Vec<String>,
    index: HashMap<String, SymbolId>,
    rules: Vec<(SymbolId, Vec<SymbolId>, Probability)>,
}

impl PcfgBuilder {
    fn intern(&mut self, name: &str) -> SymbolId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = SymbolId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub(crate) fn rule<'a>(
        &mut self,
        lhs: &str,
        rhs: impl IntoIterator<Item = &'a str>,
        prob: Probability,
    ) -> &mut Self {
        let l = self.intern(lhs);
        let r = rhs.into_iter().map(|s| self.intern(s)).collect();
        self.rules.push((l, r, prob));
        self
    }

    pub(crate) fn finish(self) -> Result<Pcfg, GrammarError> {
        let Some(&(start, _, _)) = self.rules.first() else {
            return Err(GrammarError::NoRules);
        };
        let n = self.names.len();
        let mut nonterminal = vec![false; n];
        let mut by_lhs = vec![Vec::new(); n];
        let mut rules = Vec::with_capacity(self.rules.len());
        for (i, (lhs, rhs, prob)) in self.rules.into_iter().enumerate() {
            nonterminal[lhs.index()] = true;
            by_lhs[lhs.index()].push(i);
            rules.push(Rule { lhs, rhs, prob });
        }
        Ok(Pcfg {
            names: self.names,
            index: self.index,
            nonterminal,
            start,
            rules,
            by_lhs,
        })
    }
}
