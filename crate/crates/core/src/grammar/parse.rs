use std::fmt::Write as _;

use super::{GrammarError, Pcfg, PcfgBuilder, Probability};

/// Parses the line-oriented grammar format:
///
/// ```text
/// # comment
/// S -> a V b : 1/4
/// V -> v0 : 0.2
/// ```
///
/// The first rule's left-hand side is the start symbol. The result is
/// validated; violations are returned as [`GrammarError::Invalid`].
pub fn parse_grammar(text: &str) -> Result<Pcfg, GrammarError> {
    let mut b = PcfgBuilder::default();
    let mut any = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| GrammarError::Parse {
            line: line_no,
            message: message.to_string(),
        };
        let (rule, prob) = line
            .rsplit_once(':')
            .ok_or_else(|| err("expected `: PROB` after the right-hand side"))?;
        let (lhs, rhs) = rule
            .split_once("->")
            .ok_or_else(|| err("expected `LHS -> RHS`"))?;
        let lhs = lhs.trim();
        if lhs.is_empty() || lhs.contains(char::is_whitespace) {
            return Err(err("left-hand side must be a single symbol"));
        }
        let rhs: Vec<&str> = rhs.split_whitespace().collect();
        if rhs.is_empty() {
            return Err(err("empty right-hand side"));
        }
        if rhs.iter().any(|s| s.contains("->")) {
            return Err(err("unexpected `->` in right-hand side"));
        }
        let prob = parse_probability(prob.trim()).map_err(|m| err(&m))?;
        b.rule(lhs, rhs, prob);
        any = true;
    }
    if !any {
        return Err(GrammarError::NoRules);
    }
    let g = b.finish()?;
    g.ensure_valid()?;
    Ok(g)
}

fn parse_probability(s: &str) -> Result<Probability, String> {
    if let Some((n, d)) = s.split_once('/') {
        let num: u64 = n
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator `{}`", n.trim()))?;
        let den: u64 = d
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator `{}`", d.trim()))?;
        if den == 0 {
            return Err("zero denominator".into());
        }
        Ok(Probability::ratio(num, den))
    } else {
        let x: f64 = s.parse().map_err(|_| format!("bad probability `{s}`"))?;
        if !x.is_finite() {
            return Err(format!("bad probability `{s}`"));
        }
        Ok(Probability::Decimal(x))
    }
}

/// Writes a grammar in the format read by [`parse_grammar`], one rule per
/// line in rule order.
pub fn serialize_grammar(g: &Pcfg) -> String {
    let mut out = String::new();
    for r in g.rules() {
        let rhs: Vec<&str> = r.rhs.iter().map(|&s| g.name(s)).collect();
        let _ = writeln!(out, "{} -> {} : {}", g.name(r.lhs), rhs.join(" "), r.prob);
    }
    out
}
