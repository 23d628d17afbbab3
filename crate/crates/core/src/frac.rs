//! Fractions with determinant-power denominators.
//!
//! The only denominators the formal inverse metric introduces are powers of
//! `det(g)`, so a fraction is stored as a numerator polynomial and the
//! denominator exponent. Equality is decided after cross-multiplication.

use std::collections::BTreeMap;

use crate::expr::Expr;
use crate::monomial::VarId;
use crate::rational::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FracExpr {
    pub num: Expr,
    pub den_power: u32,
}

impl FracExpr {
    pub fn from_expr(e: Expr) -> FracExpr {
        FracExpr { num: e, den_power: 0 }
    }

    pub fn zero() -> FracExpr {
        FracExpr::from_expr(Expr::zero())
    }

    pub fn over_det(num: Expr, den_power: u32) -> FracExpr {
        let mut f = FracExpr { num, den_power };
        if f.num.is_zero() {
            f.den_power = 0;
        }
        f
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &FracExpr, det: &Expr) -> FracExpr {
        let k = self.den_power.max(other.den_power);
        let a = self.num.mul(&det.pow(k - self.den_power));
        let b = other.num.mul(&det.pow(k - other.den_power));
        FracExpr::over_det(&a + &b, k)
    }

    pub fn sub(&self, other: &FracExpr, det: &Expr) -> FracExpr {
        self.add(&other.neg(), det)
    }

    pub fn neg(&self) -> FracExpr {
        FracExpr { num: -&self.num, den_power: self.den_power }
    }

    pub fn mul(&self, other: &FracExpr) -> FracExpr {
        FracExpr::over_det(self.num.mul(&other.num), self.den_power + other.den_power)
    }

    pub fn mul_expr(&self, e: &Expr) -> FracExpr {
        FracExpr::over_det(self.num.mul(e), self.den_power)
    }

    pub fn scale(&self, c: &Rat) -> FracExpr {
        FracExpr::over_det(self.num.scale(c), self.den_power)
    }

    pub fn pow(&self, e: u32) -> FracExpr {
        let mut acc = FracExpr::from_expr(Expr::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Cross-multiplied equality: `a/det^p == b/det^q` iff
    /// `a det^q == b det^p`.
    pub fn eq_cross(&self, other: &FracExpr, det: &Expr) -> bool {
        self.num.mul(&det.pow(other.den_power)) == other.num.mul(&det.pow(self.den_power))
    }
}

/// Simultaneous substitution of fractions for variables; the result carries
/// the maximal determinant power that appears.
pub fn substitute_frac(p: &Expr, map: &BTreeMap<VarId, FracExpr>, det: &Expr) -> FracExpr {
    let mut power_cache: BTreeMap<(VarId, u32), FracExpr> = BTreeMap::new();
    let mut acc = FracExpr::zero();
    for (m, c) in p.terms() {
        let mut term = FracExpr::from_expr(Expr::constant(c.clone()));
        for &(v, e) in m.factors() {
            match map.get(&v) {
                None => {
                    let mono = crate::monomial::Monomial::from_pairs([(v, e)]);
                    term = FracExpr::over_det(
                        term.num.mul_monomial(&mono, &crate::rational::rat(1)),
                        term.den_power,
                    );
                }
                Some(rep) => {
                    let p = power_cache
                        .entry((v, e))
                        .or_insert_with(|| rep.pow(e))
                        .clone();
                    term = term.mul(&p);
                }
            }
        }
        acc = acc.add(&term, det);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn v(i: u32) -> Expr {
        Expr::var(VarId(i))
    }

    #[test]
    fn cross_multiplied_equality() {
        // det = x, compare 1/x with x/x^2
        let det = v(0);
        let a = FracExpr::over_det(Expr::one(), 1);
        let b = FracExpr::over_det(v(0), 2);
        assert!(a.eq_cross(&b, &det));
        let c = FracExpr::over_det(v(1), 1);
        assert!(!a.eq_cross(&c, &det));
    }

    #[test]
    fn substitute_with_det_denominator() {
        // u -> y/det in u*det yields y exactly (efter cross-multiplication)
        let u = VarId(2);
        let det = v(0);
        let p = Expr::var(u).mul(&det);
        let mut map = BTreeMap::new();
        map.insert(u, FracExpr::over_det(v(1), 1));
        let out = substitute_frac(&p, &map, &det);
        assert!(out.eq_cross(&FracExpr::from_expr(v(1)), &det));
        // empty substitution is the identity
        let out = substitute_frac(&p, &BTreeMap::new(), &det);
        assert_eq!(out, FracExpr::from_expr(p));
    }

    #[test]
    fn zero_has_zero_power() {
        let det = v(0);
        let a = FracExpr::over_det(v(1), 2);
        let b = a.sub(&a, &det);
        assert!(b.is_zero());
        assert_eq!(b.den_power, 0);
        assert_eq!(FracExpr::over_det(Expr::zero(), 5).den_power, 0);
        let _ = rat(0);
    }
}
