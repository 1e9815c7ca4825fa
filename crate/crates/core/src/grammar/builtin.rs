//! The four criterion grammars: conflation, sparseness, ambiguity and
//! multifacetedness.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GrammarError, Pcfg, PcfgBuilder, Probability};

fn ratio(n: u64, d: u64) -> Probability {
    Probability::ratio(n, d)
}

fn finish(b: PcfgBuilder) -> Pcfg {
    let g = b.finish().expect("built-in grammar has rules");
    debug_assert!(g.validate().is_empty(), "{:?}", g.validate());
    g
}

/// `v_i` occur only in a-b and b-a contexts, `w_i` in all four; the left and
/// right neighbour marginals of both classes coincide.
pub fn build_conflation_grammar() -> Pcfg {
    let mut b = PcfgBuilder::default();
    b.rule("S", ["a", "V", "b"], ratio(1, 4))
        .rule("S", ["b", "V", "a"], ratio(1, 4))
        .rule("S", ["a", "W", "a"], ratio(1, 8))
        .rule("S", ["a", "W", "b"], ratio(1, 8))
        .rule("S", ["b", "W", "a"], ratio(1, 8))
        .rule("S", ["b", "W", "b"], ratio(1, 8));
    for i in 0..5 {
        b.rule("V", [format!("v{i}").as_str()], ratio(1, 5));
    }
    for i in 0..5 {
        b.rule("W", [format!("w{i}").as_str()], ratio(1, 5));
    }
    finish(b)
}

fn class_rules(
    b: &mut PcfgBuilder,
    nonterminal: &str,
    prefix: &str,
    range: std::ops::Range<u32>,
    p: Probability,
) {
    for i in range {
        b.rule(nonterminal, [format!("{prefix}{i}").as_str()], p);
    }
}

/// Frequent `v_i`/`w_i` plus the twenty singleton sentences `a_i u_i b_i` and
/// `c_i x_i d_i` that are merged into the sampled corpus.
pub fn build_sparseness_grammar() -> (Pcfg, Vec<Vec<String>>) {
    let mut b = PcfgBuilder::default();
    b.rule("S", ["A", "V", "B"], ratio(1, 2))
        .rule("S", ["C", "W", "D"], ratio(1, 2));
    for (nt, prefix) in [
        ("A", "a"),
        ("B", "b"),
        ("C", "c"),
        ("D", "d"),
        ("V", "v"),
        ("W", "w"),
    ] {
        class_rules(&mut b, nt, prefix, 0..10, ratio(1, 10));
    }
    let mut rare = Vec::with_capacity(20);
    for i in 0..10 {
        rare.push(vec![format!("a{i}"), format!("u{i}"), format!("b{i}")]);
    }
    for i in 0..10 {
        rare.push(vec![format!("c{i}"), format!("x{i}"), format!("d{i}")]);
    }
    (finish(b), rare)
}

/// Sense skew of the ambiguous words, `beta = 2^-alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityParams {
    pub alpha: f64,
    pub beta: f64,
}

impl AmbiguityParams {
    pub fn from_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            beta: (-alpha).exp2(),
        }
    }
}

/// `w_0..w_4` appear in c-d contexts with weight `beta/20` and in a-b
/// contexts with weight `(1-beta)/20`.
pub fn build_ambiguity_grammar(p: AmbiguityParams) -> Result<Pcfg, GrammarError> {
    let beta = p.beta;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(GrammarError::InvalidBeta(beta));
    }
    let mut b = PcfgBuilder::default();
    b.rule("S", ["A", "V1", "B"], ratio(10, 20))
        .rule("S", ["C", "W1", "D"], ratio(9, 20))
        .rule("S", ["C", "W2", "D"], Probability::Decimal(beta / 20.0))
        .rule(
            "S",
            ["A", "W2", "B"],
            Probability::Decimal((1.0 - beta) / 20.0),
        );
    for (nt, prefix) in [("A", "a"), ("B", "b"), ("C", "c"), ("D", "d")] {
        class_rules(&mut b, nt, prefix, 0..10, ratio(1, 10));
    }
    class_rules(&mut b, "V1", "v", 0..50, ratio(1, 50));
    class_rules(&mut b, "W1", "w", 5..50, ratio(1, 45));
    class_rules(&mut b, "W2", "w", 0..5, ratio(1, 5));
    Ok(finish(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Noun,
    Adjective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Feminine,
    Masculine,
}

impl Gender {
    /// The right-context marker terminal for this gender.
    pub fn marker(self) -> &'static str {
        match self {
            Gender::Feminine => "f",
            Gender::Masculine => "m",
        }
    }
}

/// Category-gender combination of a multifacet content word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContentClass {
    NounFem,
    AdjFem,
    NounMasc,
    AdjMasc,
}

impl ContentClass {
    pub const ALL: [ContentClass; 4] = [
        ContentClass::NounFem,
        ContentClass::AdjFem,
        ContentClass::NounMasc,
        ContentClass::AdjMasc,
    ];

    pub fn new(category: Category, gender: Gender) -> Self {
        match (category, gender) {
            (Category::Noun, Gender::Feminine) => ContentClass::NounFem,
            (Category::Adjective, Gender::Feminine) => ContentClass::AdjFem,
            (Category::Noun, Gender::Masculine) => ContentClass::NounMasc,
            (Category::Adjective, Gender::Masculine) => ContentClass::AdjMasc,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ContentClass::NounFem => "nf",
            ContentClass::AdjFem => "af",
            ContentClass::NounMasc => "nm",
            ContentClass::AdjMasc => "am",
        }
    }

    pub fn category(self) -> Category {
        match self {
            ContentClass::NounFem | ContentClass::NounMasc => Category::Noun,
            ContentClass::AdjFem | ContentClass::AdjMasc => Category::Adjective,
        }
    }

    pub fn gender(self) -> Gender {
        match self {
            ContentClass::NounFem | ContentClass::AdjFem => Gender::Feminine,
            ContentClass::NounMasc | ContentClass::AdjMasc => Gender::Masculine,
        }
    }

    /// Terminal for the `i`-th content word of this class, e.g. `x_nf_2`.
    pub fn word(self, i: usize) -> String {
        format!("x_{}_{i}", self.tag())
    }

    /// Paradigm nonterminal for the `i`-th content word, e.g. `U_nf_2`.
    pub fn paradigm_symbol(self, i: usize) -> String {
        format!("U_{}_{i}", self.tag())
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Parses a content word terminal back into its class and index.
    pub fn parse_word(token: &str) -> Option<(ContentClass, usize)> {
        let rest = token.strip_prefix("x_")?;
        let (tag, i) = rest.split_once('_')?;
        let class = ContentClass::ALL.into_iter().find(|c| c.tag() == tag)?;
        let i: usize = i.parse().ok()?;
        (i < 5).then_some((class, i))
    }
}

/// Paradigm marker terminals `u0..u4`.
pub const PARADIGM_MARKERS: [&str; 5] = ["u0", "u1", "u2", "u3", "u4"];

/// Fixed random assignment of each of the twenty paradigm nonterminals to
/// one of the five paradigm markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuMapping {
    assignment: [[u8; 5]; 4],
}

impl MuMapping {
    pub fn new(assignment: [[u8; 5]; 4]) -> Result<Self, GrammarError> {
        if let Some(v) = assignment.iter().flatten().find(|&&v| v >= 5) {
            return Err(GrammarError::InvalidMu(format!(
                "marker index {v} out of range"
            )));
        }
        Ok(Self { assignment })
    }

    /// Builds a mapping from `U_xx_i -> u_k` pairs; all twenty keys are required.
    pub fn from_map(map: &HashMap<String, String>) -> Result<Self, GrammarError> {
        let mut assignment = [[0u8; 5]; 4];
        let mut seen = 0;
        for class in ContentClass::ALL {
            for i in 0..5 {
                let key = class.paradigm_symbol(i);
                let value = map
                    .get(&key)
                    .ok_or_else(|| GrammarError::InvalidMu(format!("missing {key}")))?;
                let k = PARADIGM_MARKERS
                    .iter()
                    .position(|m| m == value)
                    .ok_or_else(|| {
                        GrammarError::InvalidMu(format!("{key} maps to unknown marker {value}"))
                    })?;
                assignment[class.index()][i] = k as u8;
                seen += 1;
            }
        }
        if map.len() != seen {
            return Err(GrammarError::InvalidMu(format!(
                "expected exactly 20 keys, got {}",
                map.len()
            )));
        }
        Ok(Self { assignment })
    }

    pub fn marker(&self, class: ContentClass, i: usize) -> &'static str {
        PARADIGM_MARKERS[self.assignment[class.index()][i] as usize]
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        for class in ContentClass::ALL {
            for i in 0..5 {
                m.insert(class.paradigm_symbol(i), self.marker(class, i).to_string());
            }
        }
        m
    }
}

/// Draws each paradigm marker uniformly with replacement (collisions allowed).
pub fn sample_mu<R: Rng + ?Sized>(rng: &mut R) -> MuMapping {
    let mut assignment = [[0u8; 5]; 4];
    for row in assignment.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.gen_range(0..5);
        }
    }
    MuMapping { assignment }
}

/// Nouns and adjectives of two genders, each followed by either its gender
/// marker or its paradigm marker with probability 1/2.
pub fn build_multifacet_grammar(mu: &MuMapping) -> Pcfg {
    let mut b = PcfgBuilder::default();
    b.rule("S", ["N", "F_n"], ratio(1, 4))
        .rule("S", ["A", "F_a"], ratio(1, 4))
        .rule("S", ["N", "M_n"], ratio(1, 4))
        // masculine adjectives
        .rule("S", ["A", "M_a"], ratio(1, 4));
    class_rules(&mut b, "N", "n", 0..5, ratio(1, 5));
    class_rules(&mut b, "A", "a", 0..5, ratio(1, 5));
    let branch = |c: ContentClass| match c {
        ContentClass::NounFem => "F_n",
        ContentClass::AdjFem => "F_a",
        ContentClass::NounMasc => "M_n",
        ContentClass::AdjMasc => "M_a",
    };
    for class in ContentClass::ALL {
        for i in 0..5 {
            let word = class.word(i);
            let u = class.paradigm_symbol(i);
            b.rule(branch(class), [word.as_str(), u.as_str()], ratio(1, 5));
        }
        for i in 0..5 {
            let u = class.paradigm_symbol(i);
            b.rule(&u, [class.gender().marker()], ratio(1, 2)).rule(
                &u,
                [mu.marker(class, i)],
                ratio(1, 2),
            );
        }
    }
    finish(b)
}
