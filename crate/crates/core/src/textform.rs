//! Canonical text and JSON forms of expressions.
//!
//! Text grammar: terms in descending monomial order joined by ` + `, each
//! term `coeff*var^e*...` with the coefficient always printed (`p` or `p/q`,
//! sign on the numerator) and `^1` omitted; the constant term is a bare
//! coefficient; the zero polynomial is `0`. The parser is an exact inverse
//! on everything the printer emits.

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::jet::{parse_var_name, JetError, MetricContext};
use crate::monomial::Monomial;
use crate::rational::{format_rat, parse_rat};

pub fn expr_to_text(ctx: &MetricContext, e: &Expr) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut parts = Vec::with_capacity(e.num_terms());
    for (m, c) in e.terms_desc() {
        let mut tokens = vec![format_rat(c)];
        for &(v, exp) in m.factors() {
            let name = ctx.jet(v).name();
            if exp == 1 {
                tokens.push(name);
            } else {
                tokens.push(format!("{}^{}", name, exp));
            }
        }
        parts.push(tokens.join("*"));
    }
    parts.join(" + ")
}

pub fn expr_from_text(ctx: &MetricContext, s: &str) -> Result<Expr, JetError> {
    let s = s.trim();
    if s == "0" {
        return Ok(Expr::zero());
    }
    let mut out = Expr::zero();
    for term in s.split(" + ") {
        let mut coeff = None;
        let mut factors = Vec::new();
        for (i, tok) in term.split('*').enumerate() {
            let tok = tok.trim();
            if i == 0 {
                if let Some(c) = parse_rat(tok) {
                    coeff = Some(c);
                    continue;
                }
                // tolerate an omitted leading coefficient
                coeff = Some(crate::rational::rat(1));
            }
            let (name, exp) = match tok.rsplit_once('^') {
                Some((n, e)) => {
                    let exp: u32 = e
                        .parse()
                        .map_err(|_| JetError::Parse(tok.to_string()))?;
                    (n, exp)
                }
                None => (tok, 1),
            };
            let var = parse_var_name(name)?;
            let id = ctx
                .try_var(&var)
                .ok_or_else(|| JetError::Unregistered(name.to_string()))?;
            factors.push((id, exp));
        }
        let coeff = coeff.ok_or_else(|| JetError::Parse(term.to_string()))?;
        out.add_term(Monomial::from_pairs(factors), coeff);
    }
    Ok(out)
}

/// One serialized term: variable names with exponents, and the exact
/// rational coefficient as a string.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonTerm {
    pub monomial: Vec<(String, u32)>,
    pub coeff: String,
}

pub fn expr_to_json(ctx: &MetricContext, e: &Expr) -> Vec<JsonTerm> {
    e.terms_desc()
        .map(|(m, c)| JsonTerm {
            monomial: m
                .factors()
                .iter()
                .map(|&(v, exp)| (ctx.jet(v).name(), exp))
                .collect(),
            coeff: format_rat(c),
        })
        .collect()
}

pub fn expr_from_json(ctx: &MetricContext, terms: &[JsonTerm]) -> Result<Expr, JetError> {
    let mut out = Expr::zero();
    for t in terms {
        let mut factors = Vec::new();
        for (name, exp) in &t.monomial {
            let var = parse_var_name(name)?;
            let id = ctx
                .try_var(&var)
                .ok_or_else(|| JetError::Unregistered(name.clone()))?;
            factors.push((id, *exp));
        }
        let coeff = parse_rat(&t.coeff).ok_or_else(|| JetError::Parse(t.coeff.clone()))?;
        out.add_term(Monomial::from_pairs(factors), coeff);
    }
    Ok(out)
}
