//! Determining equations: classification of the prolonged action by
//! derivative-monomial pattern, coefficient extraction for the absent
//! second-derivative families, and mechanical verification of every
//! deduction those coefficients support.
//!
//! The determining constraints come only from derivative monomials that
//! never occur in the Einstein system itself, so their coefficients must
//! vanish identically; no substitution of the field equations is needed.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::deriv::DerivRules;
use crate::expr::Expr;
use crate::jet::{FuncAtom, FuncKind, Idx, JetError, JetVar, MetricContext, Pair};
use crate::linsys::LinearSystem;
use crate::monomial::{Monomial, VarId};
use crate::prolong::{ProlongedAction, Prolonger, VectorField};
use crate::rational::{rat, Rat};
use crate::report::{ProofReport, Stage};

/// Degree pattern of a monomial in first/second metric partials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TermClass {
    /// no first or second partials
    None,
    /// one first partial
    Dg,
    /// two first partials
    DgDg,
    /// three first partials
    DgDgDg,
    /// one second partial
    Ddg,
    /// one first and one second partial
    DgDdg,
}

impl TermClass {
    pub fn name(&self) -> &'static str {
        match self {
            TermClass::None => "none",
            TermClass::Dg => "dg",
            TermClass::DgDg => "dg-dg",
            TermClass::DgDgDg => "dg-dg-dg",
            TermClass::Ddg => "ddg",
            TermClass::DgDdg => "dg-ddg",
        }
    }
}

/// Classifies one monomial by its derivative-degree pattern.
pub fn classify_monomial(ctx: &MetricContext, m: &Monomial) -> Result<TermClass, JetError> {
    let mut d1 = 0u32;
    let mut d2 = 0u32;
    for &(v, e) in m.factors() {
        match ctx.jet(v) {
            JetVar::D1(_, _) => d1 += e,
            JetVar::D2(_, _) => d2 += e,
            JetVar::D3(_, _) => {
                return Err(JetError::DerivativeCap(
                    "third metric partial in classified expression".into(),
                ))
            }
            _ => {}
        }
    }
    match (d1, d2) {
        (0, 0) => Ok(TermClass::None),
        (1, 0) => Ok(TermClass::Dg),
        (2, 0) => Ok(TermClass::DgDg),
        (3, 0) => Ok(TermClass::DgDgDg),
        (0, 1) => Ok(TermClass::Ddg),
        (1, 1) => Ok(TermClass::DgDdg),
        _ => Err(JetError::Parse(format!(
            "monomial with derivative pattern ({}, {}) matches no class",
            d1, d2
        ))),
    }
}

/// Exact partition of an expression by term class; the parts sum back to
/// the input.
pub fn classify(
    ctx: &MetricContext,
    p: &Expr,
) -> Result<BTreeMap<TermClass, Expr>, JetError> {
    let mut out: BTreeMap<TermClass, Expr> = BTreeMap::new();
    for (m, c) in p.terms() {
        let class = classify_monomial(ctx, m)?;
        out.entry(class)
            .or_insert_with(Expr::zero)
            .add_term(m.clone(), c.clone());
    }
    Ok(out)
}

fn class_part(ctx: &MetricContext, p: &Expr, class: TermClass) -> Result<Expr, JetError> {
    Ok(classify(ctx, p)?.remove(&class).unwrap_or_else(Expr::zero))
}

// -- constraint containers ----------------------------------------------------

/// Index instantiation a constraint came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConstraintKey {
    /// coefficient of `d[gamma]g[mu,nu] * dd[sigma,sigma]g[rho,sigma]`
    MixedDgDdg { d1_dir: Idx, d1_pair: Pair, rho: Idx, sigma: Idx },
    /// coefficient of `dd[sigma,eta]g[sigma,sigma]`
    DiagComponent { eta: Idx, sigma: Idx },
    /// coefficient of `dd[sigma,sigma]g[rho,sigma]`, `rho != sigma`
    DiagDerivative { rho: Idx, sigma: Idx },
    /// coefficient of the Christoffel basis symbol `Gamma[lambda; mu,nu]`
    Gamma { lambda: Idx, pair: Pair },
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub class: TermClass,
    pub component: Pair,
    pub key: ConstraintKey,
    pub expr: Expr,
}

#[derive(Debug, Clone, Default)]
pub struct DeterminingSystem {
    pub constraints: Vec<Constraint>,
}

impl DeterminingSystem {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    fn sort(&mut self) {
        self.constraints
            .sort_by(|a, b| (a.class, a.component, &a.key).cmp(&(b.class, b.component, &b.key)));
    }

    pub fn lookup(&self, component: Pair, key: &ConstraintKey) -> Option<&Expr> {
        self.constraints
            .iter()
            .find(|c| c.component == component && &c.key == key)
            .map(|c| &c.expr)
    }
}

// -- generic actions -----------------------------------------------------------

/// Prolonged action of the fully generic field on the Einstein system.
pub fn generic_action(ctx: &MetricContext) -> Result<ProlongedAction, JetError> {
    let pro = Prolonger::new(ctx, DerivRules::generic());
    pro.prolong_einstein(&VectorField::generic(ctx))
}

/// Prolonged action of the shifted generic field (x-only horizontal part,
/// structured vertical part).
pub fn shifted_action(ctx: &MetricContext) -> Result<ProlongedAction, JetError> {
    let pro = Prolonger::new(ctx, DerivRules::tilde_structured());
    pro.prolong_einstein(&VectorField::generic_shifted(ctx))
}

// -- variable-set helpers -------------------------------------------------------

fn derivative_var_ids(ctx: &MetricContext) -> BTreeSet<VarId> {
    ctx.all_vars()
        .iter()
        .filter(|v| matches!(v, JetVar::D1(_, _) | JetVar::D2(_, _)))
        .map(|v| ctx.var(v))
        .collect()
}

/// Map zeroing every metric derivative of the horizontal components.
pub fn h_metric_independence_map(ctx: &MetricContext) -> BTreeMap<VarId, Expr> {
    let mut map = BTreeMap::new();
    for v in ctx.all_vars() {
        if let JetVar::Func(f) = v {
            if matches!(f.kind, FuncKind::H(_)) && !f.g_derivs.is_empty() {
                map.insert(ctx.var(v), Expr::zero());
            }
        }
    }
    map
}

/// Unknown atoms `dH[gamma; g[pair]]`.
pub fn h_gradient_atoms(ctx: &MetricContext) -> BTreeSet<VarId> {
    ctx.all_vars()
        .iter()
        .filter(|v| {
            matches!(v, JetVar::Func(f)
                if matches!(f.kind, FuncKind::H(_)) && f.x_derivs.is_empty() && f.g_derivs.len() == 1)
        })
        .map(|v| ctx.var(v))
        .collect()
}

fn h_grad_id(ctx: &MetricContext, gamma: Idx, pair: Pair) -> VarId {
    ctx.var(&JetVar::Func(
        FuncAtom::base(FuncKind::H(gamma)).diff_g(pair).unwrap(),
    ))
}

fn h_x_id(ctx: &MetricContext, gamma: Idx, dir: Idx) -> VarId {
    ctx.var(&JetVar::Func(
        FuncAtom::base(FuncKind::H(gamma)).diff_x(dir).unwrap(),
    ))
}

fn phi_g_id(ctx: &MetricContext, pair: Pair, gpair: Pair) -> VarId {
    ctx.var(&JetVar::Func(
        FuncAtom::base(FuncKind::Phi(pair)).diff_g(gpair).unwrap(),
    ))
}

// -- mixed-class extraction -----------------------------------------------------

/// Coefficient of one mixed first/second-derivative monomial in one
/// component of the prolonged action.
pub fn mixed_coefficient(
    ctx: &MetricContext,
    action: &ProlongedAction,
    component: Pair,
    d1_dir: Idx,
    d1_pair: Pair,
    rho: Idx,
    sigma: Idx,
) -> Result<Expr, JetError> {
    let comp = action.component(ctx, component.0, component.1);
    let part = class_part(ctx, comp, TermClass::DgDdg)?;
    let d1 = ctx.var(&JetVar::D1(d1_dir, d1_pair));
    let d2 = ctx.var(&JetVar::d2(sigma, sigma, rho, sigma));
    let key = Monomial::from_pairs([(d1, 1), (d2, 1)]);
    let sel = derivative_var_ids(ctx);
    Ok(part.coefficient_of_monomial(&sel, &key))
}

/// Every nonzero mixed-class constraint: coefficients of
/// `d[gamma]g[mu,nu] * dd[sigma,sigma]g[rho,sigma]` over all components and
/// index instantiations.
pub fn extract_dg_ddg(
    ctx: &MetricContext,
    action: &ProlongedAction,
) -> Result<DeterminingSystem, JetError> {
    let sel = derivative_var_ids(ctx);
    let mut sys = DeterminingSystem::default();
    for component in ctx.pairs() {
        let comp = action.component(ctx, component.0, component.1);
        let part = class_part(ctx, comp, TermClass::DgDdg)?;
        let groups = part.coefficient_of(&sel);
        for (key, expr) in groups {
            if expr.is_zero() {
                continue;
            }
            let mut d1_info = None;
            let mut d2_info = None;
            for &(v, _) in key.factors() {
                match ctx.jet(v) {
                    JetVar::D1(k, p) => d1_info = Some((*k, *p)),
                    JetVar::D2(d, p) => d2_info = Some((*d, *p)),
                    _ => unreachable!("selection is derivative atoms only"),
                }
            }
            let (d1_dir, d1_pair) = d1_info.expect("mixed class monomial");
            let (d, p) = d2_info.expect("mixed class monomial");
            // keep only the repeated-derivative absent family
            if !d.is_diagonal() {
                continue;
            }
            let sigma = d.0;
            let Some(rho) = p.other(sigma) else {
                continue;
            };
            sys.constraints.push(Constraint {
                class: TermClass::DgDdg,
                component,
                key: ConstraintKey::MixedDgDdg { d1_dir, d1_pair, rho, sigma },
                expr,
            });
        }
    }
    sys.sort();
    Ok(sys)
}

/// Closed-form right-hand side for the reduced mixed-class constraint when
/// the component indices avoid the instantiated ones: a single
/// inverse-metric-weighted gradient atom.
pub fn reduced_mixed_expectation(
    ctx: &MetricContext,
    alpha: Idx,
    beta: Idx,
    mu: Idx,
    nu: Idx,
    gamma: Idx,
    rho: Idx,
    sigma: Idx,
) -> Expr {
    let x = ctx.x_symbol_mixed(alpha, beta, mu, nu);
    ctx.inv_metric(sigma, sigma)
        .mul(&x)
        .mul(&Expr::var(h_grad_id(ctx, gamma, Pair::new(rho, sigma))))
}

// -- horizontal-gradient elimination ---------------------------------------------

/// Certifies that every metric gradient of the horizontal components
/// vanishes, following the generic route in three or more dimensions and
/// the special instantiation path in two.
pub fn deduce_h_independence(
    ctx: &MetricContext,
    action: &ProlongedAction,
) -> Result<ProofReport, JetError> {
    let sys = extract_dg_ddg(ctx, action)?;
    let unknowns = h_gradient_atoms(ctx);
    let mut stages = Vec::new();

    if ctx.dim() >= 3 {
        // generic path: for each gradient atom pick a component avoiding the
        // instantiated indices; the constraint reduces to a single
        // inverse-weighted atom.
        let mut reduced_ok = true;
        let mut eliminated = Vec::new();
        let mut used = 0usize;
        for gamma in ctx.indices() {
            for q in ctx.pairs() {
                // roles: sigma is the repeated derivative index
                let sigma = q.1;
                let rho = q.0;
                let a = ctx
                    .indices()
                    .find(|&a| a != gamma && a != sigma)
                    .expect("three or more dimensions");
                let key = ConstraintKey::MixedDgDdg {
                    d1_dir: gamma,
                    d1_pair: Pair(a, a),
                    rho,
                    sigma,
                };
                let got = sys
                    .lookup(Pair(a, a), &key)
                    .cloned()
                    .unwrap_or_else(Expr::zero);
                let expect = reduced_mixed_expectation(ctx, a, a, a, a, gamma, rho, sigma);
                let k = proportionality(&got, &expect);
                match k {
                    Some(k) if !k.is_zero() => {
                        eliminated.push(ctx.jet(h_grad_id(ctx, gamma, q)).name());
                        used += 1;
                    }
                    _ => reduced_ok = false,
                }
            }
        }
        stages.push(Stage {
            name: "reduced-instances-single-atom".into(),
            constraints_used: used,
            atoms_eliminated: eliminated,
            residual_ok: reduced_ok,
            detail: Some("component indices chosen away from the instantiated ones".into()),
        });
    } else {
        // two-dimensional path
        let mut sys33 = LinearSystem::new();
        let mut used33 = 0usize;
        for c in &sys.constraints {
            let ConstraintKey::MixedDgDdg { d1_dir, sigma, .. } = &c.key else {
                continue;
            };
            if c.component.is_diagonal() && c.component.0 != *d1_dir && d1_dir == sigma {
                sys33
                    .add_constraint(&c.expr, &unknowns)
                    .map_err(|e| JetError::Parse(e.to_string()))?;
                used33 += 1;
            }
        }
        let targets33: Vec<VarId> = ctx
            .pairs()
            .into_iter()
            .map(|q| h_grad_id(ctx, q.1, q))
            .collect();
        let ok33 = targets33.iter().all(|&v| sys33.forces_zero(v));
        stages.push(Stage {
            name: "diagonal-component-matching-direction".into(),
            constraints_used: used33,
            atoms_eliminated: targets33.iter().map(|&v| ctx.jet(v).name()).collect(),
            residual_ok: ok33,
            detail: None,
        });

        let mut sys35 = LinearSystem::new();
        let mut used35 = 0usize;
        for c in &sys.constraints {
            let ConstraintKey::MixedDgDdg { rho, sigma, .. } = &c.key else {
                continue;
            };
            if c.component.is_diagonal() && rho == sigma && c.component.0 != *sigma {
                sys35
                    .add_constraint(&c.expr, &unknowns)
                    .map_err(|e| JetError::Parse(e.to_string()))?;
                used35 += 1;
            }
        }
        let mut targets35 = Vec::new();
        for gamma in ctx.indices() {
            for s in ctx.indices() {
                targets35.push(h_grad_id(ctx, gamma, Pair(s, s)));
            }
        }
        let ok35 = targets35.iter().all(|&v| sys35.forces_zero(v));
        stages.push(Stage {
            name: "diagonal-gradient-components".into(),
            constraints_used: used35,
            atoms_eliminated: targets35.iter().map(|&v| ctx.jet(v).name()).collect(),
            residual_ok: ok35,
            detail: None,
        });

        // the remaining mixed gradient: one explicit instantiation closes it
        let mut sys_rem = LinearSystem::new();
        for &v in targets33.iter().chain(&targets35) {
            let mut row = crate::linsys::Row::new();
            row.insert(v, rat(1));
            sys_rem.add_row(row);
        }
        let mut used_rem = 0usize;
        let mut rem_targets = Vec::new();
        for gamma in ctx.indices() {
            let sigma = ctx.indices().find(|&s| s != gamma).unwrap();
            let key = ConstraintKey::MixedDgDdg {
                d1_dir: gamma,
                d1_pair: Pair(gamma, gamma),
                rho: gamma,
                sigma,
            };
            if let Some(e) = sys.lookup(Pair(gamma, gamma), &key) {
                sys_rem
                    .add_constraint(e, &unknowns)
                    .map_err(|e| JetError::Parse(e.to_string()))?;
                used_rem += 1;
            }
            rem_targets.push(h_grad_id(ctx, gamma, Pair::new(gamma, sigma)));
        }
        let ok_rem = rem_targets.iter().all(|&v| sys_rem.forces_zero(v));
        stages.push(Stage {
            name: "remaining-mixed-gradient".into(),
            constraints_used: used_rem,
            atoms_eliminated: rem_targets.iter().map(|&v| ctx.jet(v).name()).collect(),
            residual_ok: ok_rem,
            detail: Some("diagonal instantiation with matching first-derivative pair".into()),
        });
    }

    // full-system cross-check: the complete mixed family forces every
    // gradient atom, whatever the path
    let mut full = LinearSystem::new();
    for c in &sys.constraints {
        full.add_constraint(&c.expr, &unknowns)
            .map_err(|e| JetError::Parse(e.to_string()))?;
    }
    let all_ok = full.forces_all_zero(&unknowns);
    stages.push(Stage {
        name: "full-system-rank".into(),
        constraints_used: sys.len(),
        atoms_eliminated: unknowns.iter().map(|&v| ctx.jet(v).name()).collect(),
        residual_ok: all_ok,
        detail: Some(format!(
            "{} unknowns, {} rows reduced",
            unknowns.len(),
            full.rows_seen()
        )),
    });

    Ok(ProofReport::new(ctx.dim(), "h-independence", stages))
}

// -- second-derivative class extraction -------------------------------------------

/// Constraints from the absent second-derivative atoms after the horizontal
/// gradients are substituted away.
pub fn extract_ddg(
    ctx: &MetricContext,
    action: &ProlongedAction,
) -> Result<DeterminingSystem, JetError> {
    let zero_h = h_metric_independence_map(ctx);
    let sel = derivative_var_ids(ctx);
    let mut sys = DeterminingSystem::default();
    for component in ctx.pairs() {
        let comp = action
            .component(ctx, component.0, component.1)
            .substitute(&zero_h);
        let part = class_part(ctx, &comp, TermClass::Ddg)?;
        let groups = part.coefficient_of(&sel);
        for (key, expr) in groups {
            if expr.is_zero() {
                continue;
            }
            let factors = key.factors();
            debug_assert_eq!(factors.len(), 1);
            let JetVar::D2(d, p) = ctx.jet(factors[0].0).clone() else {
                unreachable!("second-derivative class");
            };
            let key = if p.is_diagonal() && d.contains(p.0) {
                // component diagonal: dd[sigma,eta]g[sigma,sigma]
                let sigma = p.0;
                let eta = d.other(sigma).unwrap_or(sigma);
                Some(ConstraintKey::DiagComponent { eta, sigma })
            } else if d.is_diagonal() && p.contains(d.0) && !p.is_diagonal() {
                // derivative diagonal: dd[sigma,sigma]g[rho,sigma]
                let sigma = d.0;
                let rho = p.other(sigma).unwrap();
                Some(ConstraintKey::DiagDerivative { rho, sigma })
            } else {
                None
            };
            if let Some(key) = key {
                sys.constraints.push(Constraint {
                    class: TermClass::Ddg,
                    component,
                    key,
                    expr,
                });
            }
        }
    }
    sys.sort();
    Ok(sys)
}

// -- vertical-structure deduction ---------------------------------------------

/// Unknowns of the second-derivative deduction: single metric gradients of
/// the vertical components and single coordinate gradients of the
/// horizontal ones.
fn ddg_unknowns(ctx: &MetricContext) -> BTreeSet<VarId> {
    ctx.all_vars()
        .iter()
        .filter(|v| match v {
            JetVar::Func(f) => match f.kind {
                FuncKind::Phi(_) => f.x_derivs.is_empty() && f.g_derivs.len() == 1,
                FuncKind::H(_) => f.x_derivs.len() == 1 && f.g_derivs.is_empty(),
                _ => false,
            },
            _ => false,
        })
        .map(|v| ctx.var(v))
        .collect()
}

/// Certifies the vertical-component structure facts implied by the
/// second-derivative families: cross-component metric gradients vanish and
/// the surviving diagonal/off-diagonal gradients pair with horizontal
/// coordinate gradients.
pub fn deduce_phi_structure(
    ctx: &MetricContext,
    ddg: &DeterminingSystem,
) -> Result<ProofReport, JetError> {
    let unknowns = ddg_unknowns(ctx);
    let mut diag = LinearSystem::new();
    let mut offd = LinearSystem::new();
    let mut n_diag = 0usize;
    let mut n_offd = 0usize;
    for c in &ddg.constraints {
        match c.key {
            ConstraintKey::DiagComponent { .. } => {
                diag.add_constraint(&c.expr, &unknowns)
                    .map_err(|e| JetError::Parse(e.to_string()))?;
                n_diag += 1;
            }
            ConstraintKey::DiagDerivative { .. } => {
                offd.add_constraint(&c.expr, &unknowns)
                    .map_err(|e| JetError::Parse(e.to_string()))?;
                n_offd += 1;
            }
            _ => {}
        }
    }
    let mut stages = Vec::new();

    // cross-component gradients with a diagonal metric argument vanish
    {
        let mut ok = true;
        let mut atoms = Vec::new();
        for p in ctx.pairs() {
            for s in ctx.indices() {
                if p.contains(s) {
                    continue;
                }
                let v = phi_g_id(ctx, p, Pair(s, s));
                atoms.push(ctx.jet(v).name());
                ok &= diag.forces_zero(v);
            }
        }
        stages.push(Stage {
            name: "diagonal-gradient-cross-component-vanishes".into(),
            constraints_used: n_diag,
            atoms_eliminated: atoms,
            residual_ok: ok,
            detail: None,
        });
    }

    // overlapping diagonal gradient pairs with a horizontal gradient
    {
        let mut ok = true;
        let mut atoms = Vec::new();
        for s in ctx.indices() {
            for a in ctx.indices() {
                if a == s {
                    continue;
                }
                let combo = [
                    (h_x_id(ctx, s, a), rat(1)),
                    (phi_g_id(ctx, Pair::new(s, a), Pair(s, s)), rat(1)),
                ];
                atoms.push(ctx.jet(combo[1].0).name());
                ok &= diag.forces_combination(&combo);
            }
        }
        // guard: neither half is forced alone
        ok &= !diag.forces_zero(phi_g_id(ctx, Pair(1, 2), Pair(2, 2)));
        ok &= !diag.forces_zero(h_x_id(ctx, 2, 1));
        stages.push(Stage {
            name: "diagonal-gradient-pairs-with-horizontal".into(),
            constraints_used: n_diag,
            atoms_eliminated: atoms,
            residual_ok: ok,
            detail: Some("combination forced, neither atom alone".into()),
        });
    }

    if ctx.dim() >= 3 {
        // off-diagonal arguments sharing one index with the component
        let mut ok = true;
        let mut atoms = Vec::new();
        for r in ctx.indices() {
            for s in ctx.indices() {
                if r == s {
                    continue;
                }
                for a in ctx.indices() {
                    if a == r || a == s {
                        continue;
                    }
                    let combo = [
                        (h_x_id(ctx, s, a), rat(1)),
                        (phi_g_id(ctx, Pair::new(a, r), Pair::new(r, s)), rat(1)),
                    ];
                    atoms.push(ctx.jet(combo[1].0).name());
                    ok &= offd.forces_combination(&combo);
                }
            }
        }
        stages.push(Stage {
            name: "offdiagonal-gradient-pairs-with-horizontal".into(),
            constraints_used: n_offd,
            atoms_eliminated: atoms,
            residual_ok: ok,
            detail: None,
        });
    }

    // the doubled diagonal-component pair
    {
        let mut ok = true;
        let mut atoms = Vec::new();
        for r in ctx.indices() {
            for s in ctx.indices() {
                if r == s {
                    continue;
                }
                let combo = [
                    (h_x_id(ctx, s, r), rat(2)),
                    (phi_g_id(ctx, Pair(r, r), Pair::new(r, s)), rat(1)),
                ];
                atoms.push(ctx.jet(combo[1].0).name());
                ok &= offd.forces_combination(&combo);
            }
        }
        stages.push(Stage {
            name: "diagonal-component-offdiagonal-argument".into(),
            constraints_used: n_offd,
            atoms_eliminated: atoms,
            residual_ok: ok,
            detail: None,
        });
    }

    if ctx.dim() >= 3 {
        // fully disjoint off-diagonal gradients vanish
        let mut ok = true;
        let mut atoms = Vec::new();
        for p in ctx.pairs() {
            for q in ctx.pairs() {
                if q.is_diagonal() || q == p {
                    continue;
                }
                if p.contains(q.0) || p.contains(q.1) {
                    continue;
                }
                let v = phi_g_id(ctx, p, q);
                atoms.push(ctx.jet(v).name());
                ok &= offd.forces_zero(v);
            }
        }
        stages.push(Stage {
            name: "offdiagonal-gradient-disjoint-vanishes".into(),
            constraints_used: n_offd,
            atoms_eliminated: atoms,
            residual_ok: ok,
            detail: None,
        });
    }

    Ok(ProofReport::new(ctx.dim(), "phi-structure", stages))
}

// -- rewrite maps ----------------------------------------------------------------

/// Rewrite rules established by the diagonal-argument family: metric
/// gradients with a diagonal argument either vanish or pair with a
/// horizontal gradient.
pub fn diag_argument_rewrites(ctx: &MetricContext) -> BTreeMap<VarId, Expr> {
    let mut map = BTreeMap::new();
    for p in ctx.pairs() {
        for s in ctx.indices() {
            let target = phi_g_id(ctx, p, Pair(s, s));
            if !p.contains(s) {
                map.insert(target, Expr::zero());
            } else if let Some(o) = p.other(s) {
                if o != s {
                    map.insert(target, -&Expr::var(h_x_id(ctx, s, o)));
                }
                // p == (s,s): the surviving own-component dependence
            }
        }
    }
    map
}

/// Rewrite rules established by the off-diagonal-argument family.
pub fn offdiag_argument_rewrites(ctx: &MetricContext) -> BTreeMap<VarId, Expr> {
    let mut map = BTreeMap::new();
    for p in ctx.pairs() {
        for q in ctx.pairs() {
            if q.is_diagonal() || q == p {
                continue;
            }
            let target = phi_g_id(ctx, p, q);
            let mut common: Vec<Idx> = [q.0, q.1]
                .into_iter()
                .filter(|&i| p.contains(i))
                .collect();
            common.dedup();
            match common.as_slice() {
                [] => {
                    map.insert(target, Expr::zero());
                }
                [c] => {
                    let c = *c;
                    let s_other = q.other(c).unwrap();
                    if p.is_diagonal() {
                        map.insert(
                            target,
                            Expr::var(h_x_id(ctx, s_other, c)).scale(&rat(-2)),
                        );
                    } else {
                        let o = p.other(c).unwrap();
                        map.insert(target, -&Expr::var(h_x_id(ctx, s_other, o)));
                    }
                }
                _ => {}
            }
        }
    }
    map
}

/// All established vertical-structure rewrites plus horizontal metric
/// independence.
pub fn structure_rewrites(ctx: &MetricContext) -> BTreeMap<VarId, Expr> {
    let mut map = h_metric_independence_map(ctx);
    map.extend(diag_argument_rewrites(ctx));
    map.extend(offdiag_argument_rewrites(ctx));
    map
}

// -- sufficiency ------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SufficiencyTarget {
    /// the mixed first/second family together with the triple-first family
    MixedFamily,
    /// diagonal-component second-derivative family
    DiagComponentFamily,
    /// diagonal-derivative second-derivative family
    DiagDerivativeFamily,
}

impl SufficiencyTarget {
    pub fn name(&self) -> &'static str {
        match self {
            SufficiencyTarget::MixedFamily => "mixed-family",
            SufficiencyTarget::DiagComponentFamily => "diag-component-family",
            SufficiencyTarget::DiagDerivativeFamily => "diag-derivative-family",
        }
    }
}

/// Verifies that substituting the established relations makes an entire
/// constraint family vanish identically, case by index case.
pub fn verify_sufficiency(
    ctx: &MetricContext,
    action: &ProlongedAction,
    target: SufficiencyTarget,
) -> Result<ProofReport, JetError> {
    let mut stages = Vec::new();
    match target {
        SufficiencyTarget::MixedFamily => {
            let zero_h = h_metric_independence_map(ctx);
            let mut ok = true;
            let mut count = 0usize;
            for p in ctx.pairs() {
                let comp = action.component(ctx, p.0, p.1).substitute(&zero_h);
                let classes = classify(ctx, &comp)?;
                count += 1;
                if let Some(e) = classes.get(&TermClass::DgDdg) {
                    ok &= e.is_zero();
                }
                if let Some(e) = classes.get(&TermClass::DgDgDg) {
                    ok &= e.is_zero();
                }
            }
            stages.push(Stage {
                name: "mixed-and-triple-classes-vanish".into(),
                constraints_used: count,
                atoms_eliminated: vec!["dH[*;g[*,*]]".into()],
                residual_ok: ok,
                detail: Some("after horizontal metric independence".into()),
            });
        }
        SufficiencyTarget::DiagComponentFamily | SufficiencyTarget::DiagDerivativeFamily => {
            let ddg = extract_ddg(ctx, action)?;
            let rewrites = structure_rewrites(ctx);
            let mut cases: BTreeMap<String, (usize, bool)> = BTreeMap::new();
            for c in &ddg.constraints {
                let (is_diag_comp, sigma, other) = match c.key {
                    ConstraintKey::DiagComponent { eta, sigma } => (true, sigma, eta),
                    ConstraintKey::DiagDerivative { rho, sigma } => (false, sigma, rho),
                    _ => continue,
                };
                if is_diag_comp != matches!(target, SufficiencyTarget::DiagComponentFamily) {
                    continue;
                }
                let resid = c.expr.substitute(&rewrites);
                let label = case_label(c.component, sigma, other);
                let entry = cases.entry(label).or_insert((0, true));
                entry.0 += 1;
                entry.1 &= resid.is_zero();
            }
            for (label, (count, ok)) in cases {
                stages.push(Stage {
                    name: label,
                    constraints_used: count,
                    atoms_eliminated: vec![],
                    residual_ok: ok,
                    detail: None,
                });
            }
        }
    }
    Ok(ProofReport::new(
        ctx.dim(),
        &format!("sufficiency-{}", target.name()),
        stages,
    ))
}

fn case_label(component: Pair, sigma: Idx, other: Idx) -> String {
    let (a, b) = (component.0, component.1);
    let mut parts = Vec::new();
    parts.push(if a == sigma { "a=s" } else { "a!=s" });
    parts.push(if b == sigma { "b=s" } else { "b!=s" });
    parts.push(if a == other { "a=e" } else { "a!=e" });
    parts.push(if b == other { "b=e" } else { "b!=e" });
    parts.push(if sigma == other { "s=e" } else { "s!=e" });
    format!("case[{}]", parts.join(","))
}

// -- shifted vertical components ----------------------------------------------------

/// Shifted vertical components of a field: the vertical part plus the
/// metric-weighted horizontal gradients.
pub fn tilde_phi(ctx: &MetricContext, vf: &VectorField) -> Result<Vec<Expr>, JetError> {
    let d = crate::deriv::Deriv::new(ctx, DerivRules::generic());
    let mut out = Vec::new();
    for p in ctx.pairs() {
        let mut e = vf.phi(ctx, p.0, p.1).clone();
        for ga in ctx.indices() {
            e.add_assign(&ctx.metric(p.0, ga).mul(&d.x_diff(vf.h(ga), p.1)?));
            e.add_assign(&ctx.metric(ga, p.1).mul(&d.x_diff(vf.h(ga), p.0)?));
        }
        out.push(e);
    }
    Ok(out)
}

/// Certifies that after every established relation the shifted vertical
/// components depend only on their own metric component: every cross
/// metric gradient vanishes identically.
pub fn tilde_structure_report(ctx: &MetricContext) -> Result<ProofReport, JetError> {
    let vf = VectorField::generic(ctx);
    let tilde = tilde_phi(ctx, &vf)?;
    let d = crate::deriv::Deriv::new(ctx, DerivRules::h_x_only());
    let rewrites = structure_rewrites(ctx);
    let mut cases: BTreeMap<String, (usize, bool)> = BTreeMap::new();
    let pairs = ctx.pairs();
    for (slot, p) in pairs.iter().enumerate() {
        for q in &pairs {
            if q == p {
                // the surviving own-component dependence: not required zero
                continue;
            }
            let grad = d.g_diff(&tilde[slot], *q)?;
            let resid = grad.substitute(&rewrites);
            let label = tilde_case_label(*p, *q);
            let entry = cases.entry(label).or_insert((0, true));
            entry.0 += 1;
            entry.1 &= resid.is_zero();
        }
    }
    let stages = cases
        .into_iter()
        .map(|(label, (count, ok))| Stage {
            name: label,
            constraints_used: count,
            atoms_eliminated: vec![],
            residual_ok: ok,
            detail: None,
        })
        .collect();
    Ok(ProofReport::new(ctx.dim(), "tilde-structure", stages))
}

fn tilde_case_label(p: Pair, q: Pair) -> String {
    let overlap = usize::from(p.contains(q.0)) + usize::from(q.0 != q.1 && p.contains(q.1));
    let qd = if q.is_diagonal() { "diag-arg" } else { "offdiag-arg" };
    let pd = if p.is_diagonal() { "diag-comp" } else { "offdiag-comp" };
    format!("structure[{},{},overlap{}]", pd, qd, overlap)
}

// -- first-derivative class in the Christoffel basis ---------------------------------

/// First-derivative-class constraints of the shifted structured field, in
/// the invertible Christoffel basis, keyed by the symbol's lowered index
/// and symmetrized pair.
pub fn extract_dg(
    ctx: &MetricContext,
    shifted: &ProlongedAction,
) -> Result<DeterminingSystem, JetError> {
    let sel = derivative_var_ids(ctx);
    let mut sys = DeterminingSystem::default();
    for component in ctx.pairs() {
        let comp = shifted.component(ctx, component.0, component.1);
        let part = class_part(ctx, comp, TermClass::Dg)?;
        let groups = part.coefficient_of(&sel);
        let mut gamma_coeffs: BTreeMap<(Idx, Pair), Expr> = BTreeMap::new();
        for (key, expr) in groups {
            if expr.is_zero() {
                continue;
            }
            let factors = key.factors();
            debug_assert_eq!(factors.len(), 1);
            let JetVar::D1(al, p) = ctx.jet(factors[0].0).clone() else {
                unreachable!("first-derivative class");
            };
            // d[al]g[t,c] expands to Gamma[t;(c,al)] + Gamma[c;(t,al)]
            for (lead, rest) in [(p.0, Pair::new(p.1, al)), (p.1, Pair::new(p.0, al))] {
                gamma_coeffs
                    .entry((lead, rest))
                    .or_insert_with(Expr::zero)
                    .add_assign(&expr);
            }
        }
        for ((lambda, pair), expr) in gamma_coeffs {
            if expr.is_zero() {
                continue;
            }
            sys.constraints.push(Constraint {
                class: TermClass::Dg,
                component,
                key: ConstraintKey::Gamma { lambda, pair },
                expr,
            });
        }
    }
    sys.sort();
    Ok(sys)
}

/// Map sending every coordinate gradient of a shifted vertical atom to
/// zero (used to confirm the first-derivative family then vanishes).
pub fn tilde_x_gradients_zero(ctx: &MetricContext) -> BTreeMap<VarId, Expr> {
    let mut map = BTreeMap::new();
    for v in ctx.all_vars() {
        if let JetVar::Func(f) = v {
            if matches!(f.kind, FuncKind::PhiTilde(_)) && !f.x_derivs.is_empty() {
                map.insert(ctx.var(v), Expr::zero());
            }
        }
    }
    map
}

/// Expected reduced form of the first-derivative constraint when every
/// hatted index avoids the component: the inverse-metric-weighted cyclic
/// coordinate-gradient combination.
pub fn reduced_dg_expectation(ctx: &MetricContext, alpha: Idx, beta: Idx, lambda: Idx) -> Expr {
    let dphit = |p: Pair, dir: Idx| {
        ctx.func(
            FuncAtom::base(FuncKind::PhiTilde(p))
                .diff_x(dir)
                .expect("first derivative"),
        )
    };
    let mut out = Expr::zero();
    for rho in ctx.indices() {
        let inner = &(&dphit(Pair::new(rho, alpha), beta) + &dphit(Pair::new(rho, beta), alpha))
            - &dphit(Pair::new(alpha, beta), rho);
        out.add_assign(&ctx.inv_metric(lambda, rho).mul(&inner));
    }
    out
}

/// Proof report for the first-derivative family: the family is nonempty,
/// reduces to the inverse-weighted cyclic gradient form on fully hatted
/// instances (three or more dimensions), and clears entirely once the
/// coordinate gradients of the shifted components are zeroed.
pub fn dg_family_report(ctx: &MetricContext) -> Result<ProofReport, JetError> {
    let shifted = shifted_action(ctx)?;
    let sys = extract_dg(ctx, &shifted)?;
    let mut stages = Vec::new();
    stages.push(Stage {
        name: "family-extracted".into(),
        constraints_used: sys.len(),
        atoms_eliminated: vec![],
        residual_ok: !sys.is_empty(),
        detail: Some("Christoffel-basis coefficients of the shifted action".into()),
    });
    if ctx.dim() >= 3 {
        let mut ok = true;
        let mut count = 0usize;
        for al in ctx.indices() {
            for be in ctx.indices() {
                let Some(la) = ctx.indices().find(|&l| l != al && l != be) else {
                    continue;
                };
                // a hatted pair away from the component
                let Some(m) = ctx.indices().find(|&m| m != al && m != be) else {
                    continue;
                };
                let key = ConstraintKey::Gamma { lambda: la, pair: Pair::new(m, m) };
                let got = sys
                    .lookup(Pair::new(al, be), &key)
                    .cloned()
                    .unwrap_or_else(Expr::zero);
                let k = dg_instance_cyclic_multiple(ctx, &got, al, be, la, Pair::new(m, m));
                ok &= matches!(k, Some(k) if !k.is_zero());
                count += 1;
            }
        }
        stages.push(Stage {
            name: "hatted-instances-reduce-to-cyclic-form".into(),
            constraints_used: count,
            atoms_eliminated: vec![],
            residual_ok: ok,
            detail: None,
        });
    }
    {
        let zero_x = tilde_x_gradients_zero(ctx);
        let ok = sys.constraints.iter().all(|c| {
            crate::geometry::certify_zero_mod_inverse(ctx, &c.expr.substitute(&zero_x))
        });
        stages.push(Stage {
            name: "family-clears-under-zero-coordinate-gradients".into(),
            constraints_used: sys.len(),
            atoms_eliminated: vec!["dPhit[*;x*]".into()],
            residual_ok: ok,
            detail: Some("after exact-inverse substitution".into()),
        });
    }
    Ok(ProofReport::new(ctx.dim(), "dg-family", stages))
}

/// The rational multiple relating one extracted first-derivative constraint
/// to the inverse-weighted cyclic form, modulo the exact inverse relation.
pub fn dg_instance_cyclic_multiple(
    ctx: &MetricContext,
    got: &Expr,
    alpha: Idx,
    beta: Idx,
    lambda: Idx,
    weight: Pair,
) -> Option<Rat> {
    let base = reduced_dg_expectation(ctx, alpha, beta, lambda).mul(&ctx.inv_metric(weight.0, weight.1));
    for c in [
        rat(1),
        rat(-1),
        rat(2),
        rat(-2),
        crate::rational::ratio(1, 2),
        crate::rational::ratio(-1, 2),
        rat(4),
        rat(-4),
    ] {
        let diff = got - &base.scale(&c);
        if crate::geometry::certify_zero_mod_inverse(ctx, &diff) {
            return Some(c);
        }
    }
    None
}

/// The rational multiple relating one extracted constraint to a reference
/// expression, when the two are exactly proportional.
pub fn proportionality(got: &Expr, reference: &Expr) -> Option<Rat> {
    if reference.is_zero() {
        return got.is_zero().then(|| rat(0));
    }
    if got.is_zero() {
        return Some(rat(0));
    }
    let (m, c) = reference.terms().next()?;
    let got_c = got
        .terms()
        .find(|(gm, _)| *gm == m)
        .map(|(_, gc)| gc.clone())?;
    let k = got_c / c.clone();
    (got == &reference.scale(&k)).then_some(k)
}
