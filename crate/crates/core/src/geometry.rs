//! Metric geometry over jet atoms: Christoffel combinations, the Ricci
//! tensor, the Einstein system with cosmological term, the exact
//! adjugate/determinant inverse, and the closed-form partials of the Ricci
//! tensor with respect to jet variables.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::deriv::half;
use crate::expr::{sum, Expr};
use crate::frac::FracExpr;
use crate::jet::{Idx, JetVar, MetricContext, Pair};
use crate::monomial::VarId;

/// First-kind Christoffel combination of first metric partials.
pub fn christoffel(ctx: &MetricContext, tau: Idx, ga: Idx, al: Idx) -> Expr {
    let t = &(&ctx.d1(al, tau, ga) + &ctx.d1(ga, tau, al)) - &ctx.d1(tau, ga, al);
    t.scale(&half())
}

/// Ricci tensor component over formal inverse atoms and metric partials.
pub fn ricci(ctx: &MetricContext, al: Idx, be: Idx) -> Expr {
    let mut out = Expr::zero();
    for ga in ctx.indices() {
        for de in ctx.indices() {
            let bracket = sum([
                -&ctx.d2(ga, de, al, be),
                -&ctx.d2(al, be, ga, de),
                ctx.d2(be, de, al, ga),
                ctx.d2(al, ga, de, be),
            ]);
            out.add_assign(&ctx.inv_metric(ga, de).mul(&bracket).scale(&half()));
        }
    }
    for ga in ctx.indices() {
        for de in ctx.indices() {
            for tau in ctx.indices() {
                for rho in ctx.indices() {
                    let gg = ctx.inv_metric(ga, de).mul(&ctx.inv_metric(tau, rho));
                    let quad = &christoffel(ctx, tau, ga, al).mul(&christoffel(ctx, rho, de, be))
                        - &christoffel(ctx, tau, ga, de).mul(&christoffel(ctx, rho, al, be));
                    out.add_assign(&gg.mul(&quad));
                }
            }
        }
    }
    out
}

/// Left-hand side of the field equations: `R_ab - lam g_ab`.
pub fn einstein_delta(ctx: &MetricContext, al: Idx, be: Idx) -> Expr {
    &ricci(ctx, al, be) - &ctx.lambda().mul(&ctx.metric(al, be))
}

/// All components of the Einstein system, indexed by canonical pair slot.
#[derive(Debug, Clone)]
pub struct EinsteinSystem {
    pub delta: Vec<Expr>,
}

impl EinsteinSystem {
    pub fn new(ctx: &MetricContext) -> EinsteinSystem {
        let pairs = ctx.pairs();
        let delta: Vec<Expr> = pairs
            .par_iter()
            .map(|p| einstein_delta(ctx, p.0, p.1))
            .collect();
        let sys = EinsteinSystem { delta };
        debug_assert!(sys.delta.iter().all(|e| {
            e.vars()
                .iter()
                .all(|&v| !matches!(ctx.jet(v), JetVar::D3(_, _)))
        }));
        sys
    }

    pub fn component(&self, ctx: &MetricContext, a: Idx, b: Idx) -> &Expr {
        &self.delta[ctx.pair_slot(Pair::new(a, b))]
    }
}

/// Determinant of the symmetric metric matrix, by cofactor expansion.
pub fn metric_det(ctx: &MetricContext) -> Expr {
    let n = ctx.dim() as usize;
    let entry = |i: usize, j: usize| ctx.metric(i as Idx + 1, j as Idx + 1);
    let all: Vec<usize> = (0..n).collect();
    det_recursive(&entry, &all, &all)
}

fn det_recursive(entry: &impl Fn(usize, usize) -> Expr, rows: &[usize], cols: &[usize]) -> Expr {
    if rows.len() == 1 {
        return entry(rows[0], cols[0]);
    }
    let mut out = Expr::zero();
    let r = rows[0];
    for (k, &c) in cols.iter().enumerate() {
        let rest_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = det_recursive(entry, &rows[1..], &rest_cols);
        let signed = if k % 2 == 0 { minor } else { -&minor };
        out.add_assign(&entry(r, c).mul(&signed));
    }
    out
}

/// Adjugate matrix of the metric: `adj * g = det * identity` exactly.
pub fn metric_adjugate(ctx: &MetricContext) -> Vec<Vec<Expr>> {
    let n = ctx.dim() as usize;
    let entry = |i: usize, j: usize| ctx.metric(i as Idx + 1, j as Idx + 1);
    let mut adj = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if n == 1 {
                adj[i][j] = Expr::one();
                continue;
            }
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let minor = det_recursive(&entry, &rows, &cols);
            adj[i][j] = if (i + j) % 2 == 0 { minor } else { -&minor };
        }
    }
    adj
}

/// Exact inverse metric as adjugate over determinant.
pub fn exact_inverse(ctx: &MetricContext) -> Vec<Vec<FracExpr>> {
    metric_adjugate(ctx)
        .into_iter()
        .map(|row| row.into_iter().map(|e| FracExpr::over_det(e, 1)).collect())
        .collect()
}

/// Substitution map sending every formal inverse atom to its exact value.
pub fn inverse_substitution(ctx: &MetricContext) -> BTreeMap<VarId, FracExpr> {
    let adj = metric_adjugate(ctx);
    let mut map = BTreeMap::new();
    for p in ctx.pairs() {
        let e = adj[p.0 as usize - 1][p.1 as usize - 1].clone();
        map.insert(ctx.var(&JetVar::InvMetric(p)), FracExpr::over_det(e, 1));
    }
    map
}

/// True iff the expression vanishes identically once the formal inverse is
/// replaced by the exact inverse and denominators are cleared. Groups terms
/// by their inverse-metric monomial so each group is scaled once.
pub fn certify_zero_mod_inverse(ctx: &MetricContext, e: &Expr) -> bool {
    if e.is_zero() {
        return true;
    }
    let det = metric_det(ctx);
    let adj = metric_adjugate(ctx);
    let inv_ids: std::collections::BTreeSet<VarId> = ctx
        .pairs()
        .into_iter()
        .map(|p| ctx.var(&JetVar::InvMetric(p)))
        .collect();
    let groups = e.coefficient_of(&inv_ids);
    let max_deg = groups.keys().map(|m| m.degree()).max().unwrap_or(0);
    let mut total = Expr::zero();
    for (inv_mono, coeff) in groups {
        // replace each inverse factor by its adjugate entry and clear the
        // common determinant power
        let mut scale = det.pow(max_deg - inv_mono.degree());
        for &(v, exp) in inv_mono.factors() {
            let JetVar::InvMetric(p) = ctx.jet(v) else {
                unreachable!("selection is inverse atoms");
            };
            let entry = &adj[p.0 as usize - 1][p.1 as usize - 1];
            scale = scale.mul(&entry.pow(exp));
        }
        total.add_assign(&coeff.mul(&scale));
    }
    total.is_zero()
}

/// Identity check honoring the context's inverse mode: formal atoms are
/// independent variables, or the exact inverse is substituted first.
pub fn certify_zero(ctx: &MetricContext, e: &Expr) -> bool {
    match ctx.mode() {
        crate::jet::InverseMode::Formal => e.is_zero(),
        crate::jet::InverseMode::Exact => certify_zero_mod_inverse(ctx, e),
    }
}

// -- closed-form Ricci partials ---------------------------------------------

/// Partial of the Ricci component with respect to a second metric partial.
pub fn dricci_d2(
    ctx: &MetricContext,
    al: Idx,
    be: Idx,
    ka: Idx,
    la: Idx,
    mu: Idx,
    nu: Idx,
) -> Expr {
    let mut out = Expr::zero();
    for ga in ctx.indices() {
        for de in ctx.indices() {
            let x = |a: Idx, b: Idx| ctx.x_symbol_mixed(a, b, ka, la);
            let y = |a: Idx, b: Idx| ctx.x_symbol_mixed(a, b, mu, nu);
            let bracket = sum([
                -&x(ga, de).mul(&y(al, be)),
                -&x(al, be).mul(&y(ga, de)),
                x(de, be).mul(&y(ga, al)),
                x(ga, al).mul(&y(de, be)),
            ]);
            out.add_assign(&ctx.inv_metric(ga, de).mul(&bracket).scale(&half()));
        }
    }
    out
}

/// Partial of the Ricci component with respect to a first metric partial.
pub fn dricci_d1(ctx: &MetricContext, al: Idx, be: Idx, ka: Idx, mu: Idx, nu: Idx) -> Expr {
    let x = |a: Idx, b: Idx| ctx.x_symbol_mixed(a, b, mu, nu);
    let delta = |a: Idx, b: Idx| if a == b { Expr::one() } else { Expr::zero() };
    let mut out = Expr::zero();
    for ga in ctx.indices() {
        for de in ctx.indices() {
            for tau in ctx.indices() {
                for rho in ctx.indices() {
                    let gg = ctx.inv_metric(ga, de).mul(&ctx.inv_metric(tau, rho));
                    let b1 = sum([
                        delta(al, ka).mul(&x(tau, ga)),
                        delta(ga, ka).mul(&x(tau, al)),
                        -&delta(tau, ka).mul(&x(ga, al)),
                    ])
                    .mul(&christoffel(ctx, rho, de, be));
                    let b2 = sum([
                        delta(be, ka).mul(&x(rho, de)),
                        delta(de, ka).mul(&x(rho, be)),
                        -&delta(rho, ka).mul(&x(de, be)),
                    ])
                    .mul(&christoffel(ctx, tau, ga, al));
                    let b3 = sum([
                        delta(de, ka).mul(&x(tau, ga)),
                        delta(ga, ka).mul(&x(tau, de)),
                        -&delta(tau, ka).mul(&x(ga, de)),
                    ])
                    .mul(&christoffel(ctx, rho, al, be));
                    let b4 = sum([
                        delta(be, ka).mul(&x(rho, al)),
                        delta(al, ka).mul(&x(rho, be)),
                        -&delta(rho, ka).mul(&x(al, be)),
                    ])
                    .mul(&christoffel(ctx, tau, ga, de));
                    let bracket = &(&b1 + &b2) - &(&b3 + &b4);
                    out.add_assign(&gg.mul(&bracket).scale(&half()));
                }
            }
        }
    }
    out
}

/// Partial of the Ricci component with respect to a metric component,
/// carried by the inverse-metric dependence.
pub fn dricci_d0(ctx: &MetricContext, al: Idx, be: Idx, mu: Idx, nu: Idx) -> Expr {
    let mut out = Expr::zero();
    for ga in ctx.indices() {
        for de in ctx.indices() {
            let bracket = sum([
                ctx.d2(ga, de, al, be),
                ctx.d2(al, be, ga, de),
                -&ctx.d2(de, be, ga, al),
                -&ctx.d2(ga, al, de, be),
            ]);
            out.add_assign(
                &bracket
                    .mul(&ctx.x_symbol_upper(ga, de, mu, nu))
                    .scale(&half()),
            );
        }
    }
    for ga in ctx.indices() {
        for de in ctx.indices() {
            for tau in ctx.indices() {
                for rho in ctx.indices() {
                    let quad = &christoffel(ctx, tau, ga, al).mul(&christoffel(ctx, rho, de, be))
                        - &christoffel(ctx, tau, ga, de).mul(&christoffel(ctx, rho, al, be));
                    let weight = &ctx
                        .inv_metric(ga, de)
                        .mul(&ctx.x_symbol_upper(tau, rho, mu, nu))
                        + &ctx
                            .inv_metric(tau, rho)
                            .mul(&ctx.x_symbol_upper(ga, de, mu, nu));
                    out.sub_assign(&quad.mul(&weight));
                }
            }
        }
    }
    out
}

// -- absent second derivatives ------------------------------------------------

/// The two families of second-order atoms that never occur in the Einstein
/// system: repeated derivative index matching a component index, and
/// repeated component index matching a derivative index.
pub fn absent_d2_atoms(ctx: &MetricContext) -> Vec<JetVar> {
    let mut atoms = Vec::new();
    for s in ctx.indices() {
        for r in ctx.indices() {
            atoms.push(JetVar::d2(s, s, r, s));
            atoms.push(JetVar::d2(r, s, s, s));
        }
    }
    atoms.sort();
    atoms.dedup();
    atoms
}

#[derive(Debug, Clone)]
pub struct AbsentReport {
    /// Distinct canonical atoms checked.
    pub atoms: Vec<JetVar>,
    /// Number of (shape, index) instances the families generate, counted
    /// with the off-diagonal multiplicity `2 N (N-1)`.
    pub instances: usize,
    /// `(alpha, beta, atom)` triples where an atom unexpectedly occurs.
    pub violations: Vec<(Idx, Idx, JetVar)>,
}

impl AbsentReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Confirms that neither absent family occurs in any component of the
/// Einstein system. A violation signals a kernel bug.
pub fn check_absent_derivatives(ctx: &MetricContext, sys: &EinsteinSystem) -> AbsentReport {
    let atoms = absent_d2_atoms(ctx);
    let n = ctx.dim() as usize;
    let instances = 2 * n * (n - 1);
    let mut violations = Vec::new();
    for (slot, p) in ctx.pairs().into_iter().enumerate() {
        let comp = &sys.delta[slot];
        for atom in &atoms {
            let id = ctx.var(atom);
            if comp.contains_var(id) {
                violations.push((p.0, p.1, atom.clone()));
            }
        }
    }
    AbsentReport { atoms, instances, violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac::substitute_frac;

    #[test]
    fn christoffel_examples() {
        let ctx = MetricContext::new(2).unwrap();
        // diagonal case reduces to half a single partial
        assert_eq!(
            christoffel(&ctx, 1, 1, 1),
            ctx.d1(1, 1, 1).scale(&half())
        );
        // all first partials zero kills every component
        let zero_d1: BTreeMap<VarId, Expr> = ctx
            .enumerate_vars(1)
            .into_iter()
            .map(|v| (ctx.var(&v), Expr::zero()))
            .collect();
        for t in ctx.indices() {
            for g in ctx.indices() {
                for a in ctx.indices() {
                    assert!(christoffel(&ctx, t, g, a).substitute(&zero_d1).is_zero());
                }
            }
        }
    }

    #[test]
    fn christoffel_pair_sum_identity() {
        // the symmetrized combination returns the bare first partial
        for dim in 2..=4u8 {
            let ctx = MetricContext::new(dim).unwrap();
            for t in ctx.indices() {
                for g in ctx.indices() {
                    for a in ctx.indices() {
                        let s = &christoffel(&ctx, t, g, a) + &christoffel(&ctx, g, t, a);
                        assert_eq!(s, ctx.d1(a, t, g));
                    }
                }
            }
        }
    }

    #[test]
    fn ricci_is_symmetric_and_flat_for_constant_metric() {
        for dim in 2..=3u8 {
            let ctx = MetricContext::new(dim).unwrap();
            let mut kill: BTreeMap<VarId, Expr> = BTreeMap::new();
            for v in ctx.enumerate_vars(1) {
                kill.insert(ctx.var(&v), Expr::zero());
            }
            for v in ctx.enumerate_vars(2) {
                kill.insert(ctx.var(&v), Expr::zero());
            }
            for a in ctx.indices() {
                for b in ctx.indices() {
                    let r = ricci(&ctx, a, b);
                    assert_eq!(r, ricci(&ctx, b, a));
                    assert!(r.substitute(&kill).is_zero());
                }
            }
        }
    }

    #[test]
    fn delta_reduces_to_ricci_without_lambda() {
        let ctx = MetricContext::new(2).unwrap();
        let mut no_lambda = BTreeMap::new();
        no_lambda.insert(ctx.var(&JetVar::Lambda), Expr::zero());
        let d = einstein_delta(&ctx, 1, 2);
        assert_eq!(d.substitute(&no_lambda), ricci(&ctx, 1, 2));
        // constant metric with symbolic lambda leaves only the cosmological part
        let mut kill: BTreeMap<VarId, Expr> = BTreeMap::new();
        for v in ctx.enumerate_vars(1).into_iter().chain(ctx.enumerate_vars(2)) {
            kill.insert(ctx.var(&v), Expr::zero());
        }
        assert_eq!(
            d.substitute(&kill),
            -&ctx.lambda().mul(&ctx.metric(1, 2))
        );
    }

    #[test]
    fn exact_inverse_is_kronecker() {
        for dim in 2..=3u8 {
            let ctx = MetricContext::new(dim).unwrap();
            let det = metric_det(&ctx);
            let adj = metric_adjugate(&ctx);
            for m in ctx.indices() {
                for l in ctx.indices() {
                    // sum_k adj[m][k] g[k,l] = delta_ml * det
                    let mut s = Expr::zero();
                    for k in ctx.indices() {
                        s.add_assign(
                            &adj[m as usize - 1][k as usize - 1].mul(&ctx.metric(k, l)),
                        );
                    }
                    let expect = if m == l { det.clone() } else { Expr::zero() };
                    assert_eq!(s, expect);
                }
            }
        }
    }

    #[test]
    fn two_by_two_inverse_closed_form() {
        let ctx = MetricContext::new(2).unwrap();
        let det = metric_det(&ctx);
        assert_eq!(
            det,
            &ctx.metric(1, 1).mul(&ctx.metric(2, 2)) - &ctx.metric(1, 2).pow(2)
        );
        let adj = metric_adjugate(&ctx);
        assert_eq!(adj[0][0], ctx.metric(2, 2));
        assert_eq!(adj[1][1], ctx.metric(1, 1));
        assert_eq!(adj[0][1], -&ctx.metric(1, 2));
    }

    #[test]
    fn certify_zero_respects_the_inverse_mode() {
        use crate::jet::InverseMode;
        // sum_k gi[1,k] g[k,2]: nonzero formally, zero exactly
        let formal = MetricContext::new(2).unwrap();
        let mut e = Expr::zero();
        for k in formal.indices() {
            e.add_assign(&formal.inv_metric(1, k).mul(&formal.metric(k, 2)));
        }
        assert!(!certify_zero(&formal, &e));
        let exact = MetricContext::with_mode(2, InverseMode::Exact).unwrap();
        assert!(certify_zero(&exact, &e));
    }

    #[test]
    fn einstein_tensor_vanishes_identically_in_two_dims() {
        // R_ab - (1/2) g_ab gi^cd R_cd = 0 after exact-inverse substitution
        let ctx = MetricContext::new(2).unwrap();
        let det = metric_det(&ctx);
        let map = inverse_substitution(&ctx);
        let mut scal = Expr::zero();
        for c in ctx.indices() {
            for d in ctx.indices() {
                scal.add_assign(&ctx.inv_metric(c, d).mul(&ricci(&ctx, c, d)));
            }
        }
        for a in ctx.indices() {
            for b in ctx.indices() {
                let e = &ricci(&ctx, a, b)
                    - &ctx.metric(a, b).mul(&scal).scale(&half());
                let f = substitute_frac(&e, &map, &det);
                assert!(f.is_zero(), "Einstein tensor component ({},{})", a, b);
            }
        }
    }

    #[test]
    fn absent_families_hold_from_two_to_four_dims() {
        for dim in 2..=4u8 {
            let ctx = MetricContext::new(dim).unwrap();
            let sys = EinsteinSystem::new(&ctx);
            let report = check_absent_derivatives(&ctx, &sys);
            assert!(report.ok(), "violations: {:?}", report.violations);
            let n = dim as usize;
            assert_eq!(report.instances, 2 * n * (n - 1));
        }
    }

    #[test]
    fn specific_absent_atoms_at_two_dims() {
        let ctx = MetricContext::new(2).unwrap();
        let atoms = absent_d2_atoms(&ctx);
        assert!(atoms.contains(&JetVar::d2(2, 2, 1, 2)));
        assert!(atoms.contains(&JetVar::d2(1, 2, 1, 1)));
        assert!(atoms.contains(&JetVar::d2(1, 1, 1, 1)));
        // and the complement really does appear: a present atom as contrast
        let sys = EinsteinSystem::new(&ctx);
        let present = ctx.var(&JetVar::d2(1, 1, 2, 2));
        assert!(sys.component(&ctx, 1, 1).contains_var(present));
        // the mixed-mixed atom dd[1,2]g[1,2] occurs as well (it is not in
        // either absent family)
        let mixed = ctx.var(&JetVar::d2(1, 2, 1, 2));
        assert!(!atoms.contains(&JetVar::d2(1, 2, 1, 2)));
        assert!(sys.component(&ctx, 1, 1).contains_var(mixed));
    }

    #[test]
    fn dricci_d2_matches_formal_differentiation() {
        for dim in 2..=2u8 {
            let ctx = MetricContext::new(dim).unwrap();
            for a in ctx.indices() {
                for b in ctx.indices() {
                    let r = ricci(&ctx, a, b);
                    for dp in ctx.pairs() {
                        for cp in ctx.pairs() {
                            let atom = ctx.var(&JetVar::D2(dp, cp));
                            let direct = r.formal_diff(atom);
                            let closed = dricci_d2(&ctx, a, b, dp.0, dp.1, cp.0, cp.1);
                            assert_eq!(direct, closed, "d2 partial at {:?} {:?}", dp, cp);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dricci_d1_matches_formal_differentiation() {
        let ctx = MetricContext::new(2).unwrap();
        for a in ctx.indices() {
            for b in ctx.indices() {
                let r = ricci(&ctx, a, b);
                for k in ctx.indices() {
                    for cp in ctx.pairs() {
                        let atom = ctx.var(&JetVar::D1(k, cp));
                        let direct = r.formal_diff(atom);
                        let closed = dricci_d1(&ctx, a, b, k, cp.0, cp.1);
                        assert_eq!(direct, closed, "d1 partial at {} {:?}", k, cp);
                    }
                }
            }
        }
    }

    #[test]
    fn dricci_d1_vanishes_without_first_partials() {
        // every term carries a Christoffel factor
        let ctx = MetricContext::new(3).unwrap();
        let zero_d1: BTreeMap<VarId, Expr> = ctx
            .enumerate_vars(1)
            .into_iter()
            .map(|v| (ctx.var(&v), Expr::zero()))
            .collect();
        for k in ctx.indices() {
            for cp in ctx.pairs() {
                let e = dricci_d1(&ctx, 1, 2, k, cp.0, cp.1);
                assert!(e.substitute(&zero_d1).is_zero());
            }
        }
    }

    #[test]
    fn dricci_d0_matches_chain_rule() {
        let ctx = MetricContext::new(2).unwrap();
        for a in ctx.indices() {
            for b in ctx.indices() {
                let r = ricci(&ctx, a, b);
                for cp in ctx.pairs() {
                    // chain rule through the formal inverse atoms
                    let mut expect = Expr::zero();
                    for q in ctx.pairs() {
                        let dgi = -&ctx.x_symbol_upper(q.0, q.1, cp.0, cp.1);
                        expect.add_assign(
                            &r.formal_diff(ctx.var(&JetVar::InvMetric(q))).mul(&dgi),
                        );
                    }
                    // plus the direct metric-atom dependence (none in ricci)
                    expect.add_assign(&r.formal_diff(ctx.var(&JetVar::Metric(cp))));
                    let closed = dricci_d0(&ctx, a, b, cp.0, cp.1);
                    assert_eq!(expect, closed, "d0 partial at {:?}", cp);
                }
            }
        }
    }
}
