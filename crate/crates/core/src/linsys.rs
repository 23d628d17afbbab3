//! Exact linear algebra over unknown atoms.
//!
//! Determining-equation deductions are linear facts: each constraint is a
//! polynomial whose monomials carry exactly one unknown atom, with
//! coefficients in the remaining variables. Grouping by the non-unknown
//! monomial turns one constraint into several rows with rational entries.
//! Reduction is exact Gauss elimination; certification asks whether target
//! combinations lie in the row span.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::expr::Expr;
use crate::monomial::VarId;
use crate::rational::Rat;

/// Sparse rational row over unknown atoms.
pub type Row = BTreeMap<VarId, Rat>;

#[derive(Debug, Default)]
pub struct LinearSystem {
    /// Reduced rows, keyed by pivot variable.
    pivots: BTreeMap<VarId, Row>,
    rows_seen: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinSysError {
    #[error("constraint has a term with no unknown atom: inhomogeneous system")]
    Inhomogeneous,
    #[error("constraint has a term with more than one unknown factor: not linear")]
    NotLinear,
}

impl LinearSystem {
    pub fn new() -> LinearSystem {
        LinearSystem::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Reduces a row by the current pivots; returns the remainder.
    fn reduce(&self, mut row: Row) -> Row {
        loop {
            let Some((&lead, _)) = row.iter().next() else {
                return row;
            };
            match self.pivots.get(&lead) {
                None => return row,
                Some(p) => {
                    let factor = row[&lead].clone();
                    for (v, c) in p {
                        let entry = row.entry(*v).or_insert_with(Rat::zero);
                        *entry -= factor.clone() * c;
                        if entry.is_zero() {
                            row.remove(v);
                        }
                    }
                }
            }
        }
    }

    pub fn add_row(&mut self, row: Row) {
        self.rows_seen += 1;
        let mut row = self.reduce(row);
        let Some((&lead, _)) = row.iter().next() else {
            return;
        };
        let inv = row[&lead].recip();
        for c in row.values_mut() {
            *c *= inv.clone();
        }
        self.pivots.insert(lead, row);
    }

    /// Splits a constraint polynomial into rows over `unknowns` and adds
    /// them. Every monomial must contain exactly one unknown, to power one.
    pub fn add_constraint(
        &mut self,
        constraint: &Expr,
        unknowns: &BTreeSet<VarId>,
    ) -> Result<(), LinSysError> {
        let mut groups: BTreeMap<crate::monomial::Monomial, Row> = BTreeMap::new();
        for (m, c) in constraint.terms() {
            let (inside, outside) = m.split(|v| unknowns.contains(&v));
            let mut it = inside.factors().iter();
            let (u, e) = match it.next() {
                None => return Err(LinSysError::Inhomogeneous),
                Some(&(u, e)) => (u, e),
            };
            if e != 1 || it.next().is_some() {
                return Err(LinSysError::NotLinear);
            }
            let entry = groups
                .entry(outside)
                .or_default()
                .entry(u)
                .or_insert_with(Rat::zero);
            *entry += c.clone();
        }
        for (_, mut row) in groups {
            row.retain(|_, c| !c.is_zero());
            self.add_row(row);
        }
        Ok(())
    }

    /// True iff the single unknown is forced to zero.
    pub fn forces_zero(&self, v: VarId) -> bool {
        let mut row = Row::new();
        row.insert(v, crate::rational::rat(1));
        self.reduce(row).is_empty()
    }

    /// True iff the rational combination of unknowns lies in the row span
    /// (equivalently, the combination is forced to vanish).
    pub fn forces_combination(&self, combo: &[(VarId, Rat)]) -> bool {
        let mut row = Row::new();
        for (v, c) in combo {
            if !c.is_zero() {
                row.insert(*v, c.clone());
            }
        }
        self.reduce(row).is_empty()
    }

    /// True iff every listed unknown is forced to zero.
    pub fn forces_all_zero(&self, unknowns: &BTreeSet<VarId>) -> bool {
        unknowns.iter().all(|&v| self.forces_zero(v))
    }

    /// Unknowns among `unknowns` that are not forced to zero.
    pub fn free_unknowns(&self, unknowns: &BTreeSet<VarId>) -> Vec<VarId> {
        unknowns
            .iter()
            .copied()
            .filter(|&v| !self.forces_zero(v))
            .collect()
    }
}
