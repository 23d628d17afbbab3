//! Derivative operators on jet-space expressions.
//!
//! Three derivations, all lifted atom-wise through the product rule:
//!
//! * explicit-x derivative: moves only the explicit coordinate dependence
//!   (function atoms gain an x-slot, coordinates differentiate, every jet
//!   atom is held fixed);
//! * metric-slot derivative: the dependent-variable derivative of a
//!   function on jet space, chaining through the formal inverse metric and
//!   through function atoms' metric arguments;
//! * total derivative: shifts every jet atom one derivative order up and
//!   adds the explicit and metric-slot transport terms.
//!
//! [`DerivRules`] records structural facts already established about the
//! unknown functions (whether the horizontal components still depend on the
//! metric, and whether the shifted vertical components depend only on their
//! own metric component); the metric-slot derivative honors them.

use crate::expr::Expr;
use crate::jet::{FuncKind, Idx, JetError, JetVar, MetricContext, Pair};

#[derive(Debug, Clone, Copy)]
pub struct DerivRules {
    /// Horizontal generator components may depend on metric components.
    pub h_depends_on_g: bool,
    /// Shifted vertical components depend only on their own metric
    /// component (the structure certified by the determining analysis).
    pub phi_tilde_same_pair_only: bool,
}

impl DerivRules {
    /// Fully generic unknowns.
    pub fn generic() -> DerivRules {
        DerivRules { h_depends_on_g: true, phi_tilde_same_pair_only: false }
    }

    /// After the horizontal components are known to be functions of x only.
    pub fn h_x_only() -> DerivRules {
        DerivRules { h_depends_on_g: false, phi_tilde_same_pair_only: false }
    }

    /// After the shifted vertical structure is established as well.
    pub fn tilde_structured() -> DerivRules {
        DerivRules { h_depends_on_g: false, phi_tilde_same_pair_only: true }
    }
}

pub struct Deriv<'a> {
    pub ctx: &'a MetricContext,
    pub rules: DerivRules,
}

impl<'a> Deriv<'a> {
    pub fn new(ctx: &'a MetricContext, rules: DerivRules) -> Deriv<'a> {
        Deriv { ctx, rules }
    }

    /// Lifts an atom-level derivative to expressions via the product rule.
    fn derive_with(
        &self,
        e: &Expr,
        mut datom: impl FnMut(&JetVar) -> Result<Expr, JetError>,
    ) -> Result<Expr, JetError> {
        let mut out = Expr::zero();
        for v in e.vars() {
            let dv = datom(self.ctx.jet(v))?;
            if dv.is_zero() {
                continue;
            }
            out.add_assign(&e.formal_diff(v).mul(&dv));
        }
        Ok(out)
    }

    /// Explicit-x partial derivative.
    pub fn x_diff(&self, e: &Expr, al: Idx) -> Result<Expr, JetError> {
        self.ctx.check_idx(al)?;
        self.derive_with(e, |atom| self.x_diff_atom(atom, al))
    }

    fn x_diff_atom(&self, atom: &JetVar, al: Idx) -> Result<Expr, JetError> {
        Ok(match atom {
            JetVar::Coord(i) => {
                if *i == al {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            JetVar::Func(f) => self.ctx.func(f.diff_x(al)?),
            _ => Expr::zero(),
        })
    }

    /// Metric-slot derivative with respect to the dependent variable `p`.
    pub fn g_diff(&self, e: &Expr, p: Pair) -> Result<Expr, JetError> {
        self.ctx.check_idx(p.1)?;
        self.derive_with(e, |atom| self.g_diff_atom(atom, p))
    }

    fn g_diff_atom(&self, atom: &JetVar, p: Pair) -> Result<Expr, JetError> {
        Ok(match atom {
            JetVar::Metric(q) => {
                if *q == p {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            // The inverse metric varies with the metric: its derivative is
            // minus the product form on the formal inverse atoms.
            JetVar::InvMetric(q) => -&self.ctx.x_symbol_upper(q.0, q.1, p.0, p.1),
            JetVar::Func(f) => match f.kind {
                FuncKind::H(_) if !self.rules.h_depends_on_g => Expr::zero(),
                FuncKind::PhiTilde(own)
                    if self.rules.phi_tilde_same_pair_only && own != p =>
                {
                    Expr::zero()
                }
                FuncKind::F(_) | FuncKind::AFun | FuncKind::BFun(_) => Expr::zero(),
                _ => self.ctx.func(f.diff_g(p)?),
            },
            _ => Expr::zero(),
        })
    }

    /// Total derivative: explicit part plus transport of every jet atom one
    /// order up. Inputs may contain jet atoms of order <= 2; the result may
    /// contain third-order atoms.
    pub fn total_diff(&self, e: &Expr, al: Idx) -> Result<Expr, JetError> {
        self.ctx.check_idx(al)?;
        self.derive_with(e, |atom| {
            Ok(match atom {
                JetVar::Metric(p) => self.ctx.expr(&JetVar::D1(al, *p)),
                JetVar::D1(k, p) => self.ctx.expr(&JetVar::d2(al, *k, p.0, p.1)),
                JetVar::D2(d, p) => self.ctx.expr(&JetVar::d3(al, d.0, d.1, p.0, p.1)),
                JetVar::D3(_, _) => {
                    return Err(JetError::DerivativeCap("third metric partial".into()))
                }
                JetVar::InvMetric(q) => {
                    let mut out = Expr::zero();
                    for p in self.ctx.pairs() {
                        let dgi = -&self.ctx.x_symbol_upper(q.0, q.1, p.0, p.1);
                        out.add_assign(&dgi.mul(&self.ctx.expr(&JetVar::D1(al, p))));
                    }
                    out
                }
                JetVar::Func(f) => {
                    let mut out = self.ctx.func(f.diff_x(al)?);
                    for p in self.ctx.pairs() {
                        let df = self.g_diff_atom(&JetVar::Func(f.clone()), p)?;
                        if df.is_zero() {
                            continue;
                        }
                        out.add_assign(&df.mul(&self.ctx.expr(&JetVar::D1(al, p))));
                    }
                    out
                }
                JetVar::Coord(i) => {
                    if *i == al {
                        Expr::one()
                    } else {
                        Expr::zero()
                    }
                }
                JetVar::Lambda | JetVar::Param(_) => Expr::zero(),
            })
        })
    }

    /// Derivative of a target with respect to the metric component `p`,
    /// treating the target as a function on jet space (identical to
    /// [`Deriv::g_diff`]; named for call sites reading as a chain rule).
    pub fn dg_full(&self, e: &Expr, p: Pair) -> Result<Expr, JetError> {
        self.g_diff(e, p)
    }
}

/// Convenience: scale helper used by several formulas.
pub fn half() -> crate::rational::Rat {
    crate::rational::ratio(1, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::FuncAtom;
    use crate::rational::rat;

    #[test]
    fn total_derivative_of_metric_atom() {
        let ctx = MetricContext::new(2).unwrap();
        let d = Deriv::new(&ctx, DerivRules::generic());
        // D_a g_mn = d[a]g[m,n]
        let g = ctx.metric(1, 2);
        assert_eq!(d.total_diff(&g, 1).unwrap(), ctx.d1(1, 1, 2));
        // D_a c = 0
        assert!(d.total_diff(&Expr::int(3), 1).unwrap().is_zero());
    }

    #[test]
    fn total_derivative_of_h_atom() {
        let ctx = MetricContext::new(2).unwrap();
        let d = Deriv::new(&ctx, DerivRules::generic());
        let h = FuncAtom::base(FuncKind::H(1));
        let dh = d.total_diff(&ctx.func(h.clone()), 1).unwrap();
        // dH[1;x1] + sum over pairs d[1]g[m,n] dH[1;g[m,n]]
        let mut expect = ctx.func(h.diff_x(1).unwrap());
        for p in ctx.pairs() {
            expect.add_assign(
                &ctx.expr(&JetVar::D1(1, p))
                    .mul(&ctx.func(h.diff_g(p).unwrap())),
            );
        }
        assert_eq!(dh, expect);
        // with the x-only rule the transport terms disappear
        let d = Deriv::new(&ctx, DerivRules::h_x_only());
        let dh = d.total_diff(&ctx.func(h.clone()), 1).unwrap();
        assert_eq!(dh, ctx.func(h.diff_x(1).unwrap()));
    }

    #[test]
    fn g_diff_chains_through_inverse() {
        let ctx = MetricContext::new(2).unwrap();
        let d = Deriv::new(&ctx, DerivRules::generic());
        let gi = ctx.inv_metric(1, 1);
        // d gi[1,1] / d g[1,2] = -(gi[1,1] gi[1,2] + gi[1,2] gi[1,1])
        let got = d.g_diff(&gi, Pair(1, 2)).unwrap();
        let expect = -&ctx
            .inv_metric(1, 1)
            .mul(&ctx.inv_metric(1, 2))
            .scale(&rat(2));
        assert_eq!(got, expect);
    }

    #[test]
    fn x_diff_moves_only_explicit_dependence() {
        let ctx = MetricContext::new(2).unwrap();
        let d = Deriv::new(&ctx, DerivRules::generic());
        let phi = FuncAtom::base(FuncKind::Phi(Pair(1, 1)));
        let e = ctx.func(phi.clone()).mul(&ctx.metric(1, 2));
        let got = d.x_diff(&e, 2).unwrap();
        let expect = ctx.func(phi.diff_x(2).unwrap()).mul(&ctx.metric(1, 2));
        assert_eq!(got, expect);
        // coordinates differentiate to 1
        assert_eq!(d.x_diff(&ctx.coord(2), 2).unwrap(), Expr::one());
        assert!(d.x_diff(&ctx.coord(1), 2).unwrap().is_zero());
    }

    #[test]
    fn tilde_structure_rule_restricts_g_dependence() {
        let ctx = MetricContext::new(2).unwrap();
        let phit = FuncAtom::base(FuncKind::PhiTilde(Pair(1, 1)));
        let e = ctx.func(phit.clone());
        let generic = Deriv::new(&ctx, DerivRules::generic());
        assert!(!generic.g_diff(&e, Pair(1, 2)).unwrap().is_zero());
        let structured = Deriv::new(&ctx, DerivRules::tilde_structured());
        assert!(structured.g_diff(&e, Pair(1, 2)).unwrap().is_zero());
        assert!(!structured.g_diff(&e, Pair(1, 1)).unwrap().is_zero());
    }
}
