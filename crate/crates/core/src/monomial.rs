//! Monomials over registry variables.

use std::cmp::Ordering;

/// Index of a variable in the context registry. The numeric order of ids is
/// the canonical variable order used by the monomial ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

/// Product of registry variables: sorted `(var, exponent)` pairs with
/// strictly increasing ids and exponents >= 1. The empty product is `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    factors: Vec<(VarId, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { factors: Vec::new() }
    }

    pub fn var(v: VarId) -> Self {
        Monomial { factors: vec![(v, 1)] }
    }

    /// Builds from arbitrary pairs, merging duplicates and dropping zero
    /// exponents.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, u32)>) -> Self {
        let mut factors: Vec<(VarId, u32)> = Vec::new();
        for (v, e) in pairs {
            if e == 0 {
                continue;
            }
            factors.push((v, e));
        }
        factors.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(VarId, u32)> = Vec::with_capacity(factors.len());
        for (v, e) in factors {
            match merged.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => merged.push((v, e)),
            }
        }
        Monomial { factors: merged }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.factors
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn factors(&self) -> &[(VarId, u32)] {
        &self.factors
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.factors.iter().map(|&(v, _)| v)
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.exponent(v) > 0
    }

    /// Merge product of two monomials.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, ae) = self.factors[i];
            let (b, be) = other.factors[j];
            match a.cmp(&b) {
                Ordering::Less => {
                    out.push((a, ae));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b, be));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a, ae + be));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Monomial { factors: out }
    }

    /// Removes one power of `v`; `None` if `v` does not divide the monomial.
    pub fn div_var(&self, v: VarId) -> Option<Monomial> {
        let idx = self.factors.binary_search_by_key(&v, |&(w, _)| w).ok()?;
        let mut factors = self.factors.clone();
        if factors[idx].1 == 1 {
            factors.remove(idx);
        } else {
            factors[idx].1 -= 1;
        }
        Some(Monomial { factors })
    }

    /// Splits into the part supported on `sel` and the rest.
    pub fn split(&self, mut sel: impl FnMut(VarId) -> bool) -> (Monomial, Monomial) {
        let mut inside = Vec::new();
        let mut outside = Vec::new();
        for &(v, e) in &self.factors {
            if sel(v) {
                inside.push((v, e));
            } else {
                outside.push((v, e));
            }
        }
        (Monomial { factors: inside }, Monomial { factors: outside })
    }
}

/// Graded lexicographic order: total degree first, then lexicographic with
/// lower `VarId` more significant. Canonical forms and all serialized term
/// orders derive from this.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, ae) = self.factors[i];
            let (b, be) = other.factors[j];
            match a.cmp(&b) {
                // Earlier variable present only on one side: that side has
                // positive exponent on a more significant variable.
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => match ae.cmp(&be) {
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                    }
                    ord => return ord,
                },
            }
        }
        // Equal degree and one list exhausted: both exhausted.
        debug_assert!(i == self.factors.len() && j == other.factors.len());
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
