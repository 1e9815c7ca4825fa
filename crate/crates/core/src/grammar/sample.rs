use rand::Rng;

use super::{GrammarError, Pcfg, SymbolId};

/// Precomputed cumulative rule tables for repeated sampling from one grammar.
///
/// Derivations expand the leftmost nonterminal first and draw exactly one
/// uniform `f64` per expansion, so the yield stream is a pure function of the
/// grammar and the generator state.
#[derive(Debug, Clone)]
pub struct SentenceSampler<'g> {
    grammar: &'g Pcfg,
    // per symbol: (cumulative probability, rule index); empty for terminals
    tables: Vec<Vec<(f64, usize)>>,
}

impl<'g> SentenceSampler<'g> {
    pub fn new(grammar: &'g Pcfg) -> Result<Self, GrammarError> {
        grammar.ensure_valid()?;
        let mut tables = vec![Vec::new(); grammar.num_symbols()];
        for (i, r) in grammar.rules().iter().enumerate() {
            let t = &mut tables[r.lhs.index()];
            let acc = t.last().map_or(0.0, |&(c, _)| c) + r.prob.value();
            t.push((acc, i));
        }
        Ok(Self { grammar, tables })
    }

    pub fn grammar(&self) -> &'g Pcfg {
        self.grammar
    }

    /// Appends the terminal yield of one derivation to `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<SymbolId>) {
        let mut stack = vec![self.grammar.start()];
        while let Some(sym) = stack.pop() {
            let table = &self.tables[sym.index()];
            if table.is_empty() {
                out.push(sym);
                continue;
            }
            let total = table.last().unwrap().0;
            let u: f64 = rng.gen::<f64>() * total;
            let pick = table
                .iter()
                .find(|&&(c, _)| u < c)
                .unwrap_or_else(|| table.last().unwrap())
                .1;
            let rhs = &self.grammar.rules()[pick].rhs;
            stack.extend(rhs.iter().rev());
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<&'g str> {
        let mut ids = Vec::with_capacity(4);
        self.sample_into(rng, &mut ids);
        ids.into_iter().map(|s| self.grammar.name(s)).collect()
    }
}

/// Samples one sentence. For many samples build a [`SentenceSampler`] once.
pub fn sample_sentence<R: Rng + ?Sized>(
    g: &Pcfg,
    rng: &mut R,
) -> Result<Vec<String>, GrammarError> {
    let s = SentenceSampler::new(g)?;
    Ok(s.sample(rng).into_iter().map(str::to_string).collect())
}
