//! Canonical multivariate polynomials over exact rationals.
//!
//! An [`Expr`] is a finite map from [`Monomial`] to nonzero rational
//! coefficient, kept in the graded-lex order of the monomials. Two exprs are
//! algebraically equal iff their term maps are identical, so `==` is the
//! canonical-form equality check.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use crate::monomial::{Monomial, VarId};
use crate::rational::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Expr {
    terms: BTreeMap<Monomial, Rat>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Expr::constant(crate::rational::rat(1))
    }

    pub fn constant(c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Expr { terms }
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(crate::rational::rat(n))
    }

    pub fn var(v: VarId) -> Self {
        Expr::from_monomial(Monomial::var(v), crate::rational::rat(1))
    }

    pub fn from_monomial(m: Monomial, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Expr { terms }
    }

    pub fn from_terms(pairs: impl IntoIterator<Item = (Monomial, Rat)>) -> Self {
        let mut e = Expr::zero();
        for (m, c) in pairs {
            e.add_term(m, c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    /// Terms in descending monomial order (leading term first); this is the
    /// serialization order.
    pub fn terms_desc(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter().rev()
    }

    /// Constant-term coefficient.
    pub fn constant_part(&self) -> Rat {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(|| crate::rational::rat(0))
    }

    /// As a constant, if the expression has no variables.
    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(crate::rational::rat(0)),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &Expr) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &Expr) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }

    pub fn scale(&self, c: &Rat) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k.clone() * c))
                .collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rat) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.mul(m), v.clone() * c))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        // Multiply the smaller term list into the larger one.
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = Expr::zero();
        for (m, c) in &small.terms {
            for (n, d) in &large.terms {
                out.add_term(m.mul(n), c.clone() * d);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Expr {
        let mut acc = Expr::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Formal partial derivative with respect to a single registry variable;
    /// all other variables are treated as independent constants.
    pub fn formal_diff(&self, v: VarId) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let reduced = m.div_var(v).expect("exponent checked above");
            out.add_term(reduced, c * Rat::from_integer(e.into()));
        }
        out
    }

    /// Total degree of the polynomial; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn max_exponent(&self, v: VarId) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// Set of variables occurring with nonzero exponent.
    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            out.extend(m.vars());
        }
        out
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.terms.keys().any(|m| m.contains(v))
    }

    /// Simultaneous substitution of whole polynomials for variables.
    /// Variables absent from the map are kept.
    pub fn substitute(&self, map: &BTreeMap<VarId, Expr>) -> Expr {
        let mut power_cache: BTreeMap<(VarId, u32), Expr> = BTreeMap::new();
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let mut acc = Expr::constant(c.clone());
            for &(v, e) in m.factors() {
                match map.get(&v) {
                    None => acc = acc.mul_monomial(&Monomial::from_pairs([(v, e)]), &crate::rational::rat(1)),
                    Some(rep) => {
                        let p = power_cache
                            .entry((v, e))
                            .or_insert_with(|| rep.pow(e))
                            .clone();
                        acc = acc.mul(&p);
                    }
                }
            }
            out.add_assign(&acc);
        }
        out
    }

    /// Groups the polynomial by the part of each monomial supported on
    /// `selected`. The returned coefficients contain no selected variables,
    /// and reassembling `sum(key * value)` reproduces the input exactly.
    pub fn coefficient_of(&self, selected: &BTreeSet<VarId>) -> BTreeMap<Monomial, Expr> {
        let mut out: BTreeMap<Monomial, Expr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (inside, outside) = m.split(|v| selected.contains(&v));
            out.entry(inside)
                .or_insert_with(Expr::zero)
                .add_term(outside, c.clone());
        }
        out
    }

    /// Coefficient of a single selected-monomial key, over the given
    /// selected-variable set.
    pub fn coefficient_of_monomial(&self, selected: &BTreeSet<VarId>, key: &Monomial) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let (inside, outside) = m.split(|v| selected.contains(&v));
            if &inside == key {
                out.add_term(outside, c.clone());
            }
        }
        out
    }

    /// Exact evaluation at a full point assignment. Panics if a variable is
    /// unassigned (callers sample complete points).
    pub fn eval(&self, point: &BTreeMap<VarId, Rat>) -> Rat {
        let mut acc = crate::rational::rat(0);
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for &(v, e) in m.factors() {
                let x = point
                    .get(&v)
                    .unwrap_or_else(|| panic!("unassigned variable {:?}", v));
                for _ in 0..e {
                    term *= x;
                }
            }
            acc += term;
        }
        acc
    }
}

impl Add<&Expr> for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub<&Expr> for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        let mut out = self.clone();
        out.sub_assign(rhs);
        out
    }
}

impl Mul<&Expr> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        self.mul(rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(&crate::rational::rat(-1))
    }
}

pub fn sum(parts: impl IntoIterator<Item = Expr>) -> Expr {
    let mut out = Expr::zero();
    for p in parts {
        out.add_assign(&p);
    }
    out
}
