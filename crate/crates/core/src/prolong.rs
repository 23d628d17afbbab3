//! Generator vector fields and their second prolongation.
//!
//! A vector field carries horizontal components `H[mu]` and symmetric
//! vertical components `Phi[mu,nu]`, either as unexpanded function atoms
//! (the generic field of the determining analysis) or as concrete
//! expressions (coordinate-change and rescaling generators). The first and
//! second prolongation coefficients are built from the explicit-x and
//! metric-slot derivatives; the action on the Einstein system is assembled
//! two independent ways, which must agree componentwise:
//!
//! * the expanded form contracted against the closed-form Ricci partials;
//! * the direct form, differentiating the target expression atom by atom.

use rayon::prelude::*;

use crate::deriv::{half, Deriv, DerivRules};
use crate::expr::{sum, Expr};
use crate::geometry::christoffel;
use crate::jet::{FuncAtom, FuncKind, Idx, JetError, JetVar, MetricContext, Pair};

/// Generator coefficients: `h[mu-1]` and `phi[pair slot]`.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub h: Vec<Expr>,
    pub phi: Vec<Expr>,
}

impl VectorField {
    pub fn zero(ctx: &MetricContext) -> VectorField {
        VectorField {
            h: vec![Expr::zero(); ctx.dim() as usize],
            phi: vec![Expr::zero(); ctx.n_pairs()],
        }
    }

    /// Fully generic field: every coefficient an unexpanded function atom
    /// of the coordinates and metric components.
    pub fn generic(ctx: &MetricContext) -> VectorField {
        VectorField {
            h: ctx
                .indices()
                .map(|i| ctx.func(FuncAtom::base(FuncKind::H(i))))
                .collect(),
            phi: ctx
                .pairs()
                .into_iter()
                .map(|p| ctx.func(FuncAtom::base(FuncKind::Phi(p))))
                .collect(),
        }
    }

    /// Generic field in shifted form: the vertical part is expressed through
    /// `Phit` atoms, `Phi = Phit - g dH - g dH`, with `H` a function of the
    /// coordinates alone.
    pub fn generic_shifted(ctx: &MetricContext) -> VectorField {
        let h: Vec<Expr> = ctx
            .indices()
            .map(|i| ctx.func(FuncAtom::base(FuncKind::H(i))))
            .collect();
        let dh = |ga: Idx, al: Idx| {
            ctx.func(FuncAtom::base(FuncKind::H(ga)).diff_x(al).expect("first derivative"))
        };
        let phi = ctx
            .pairs()
            .into_iter()
            .map(|p| {
                let mut e = ctx.func(FuncAtom::base(FuncKind::PhiTilde(p)));
                for ga in ctx.indices() {
                    e.sub_assign(&ctx.metric(p.0, ga).mul(&dh(ga, p.1)));
                    e.sub_assign(&ctx.metric(ga, p.1).mul(&dh(ga, p.0)));
                }
                e
            })
            .collect();
        VectorField { h, phi }
    }

    /// Purely vertical field with unexpanded `Phit` atoms.
    pub fn vertical_shifted(ctx: &MetricContext) -> VectorField {
        VectorField {
            h: vec![Expr::zero(); ctx.dim() as usize],
            phi: ctx
                .pairs()
                .into_iter()
                .map(|p| ctx.func(FuncAtom::base(FuncKind::PhiTilde(p))))
                .collect(),
        }
    }

    /// Purely vertical field with given components (canonical pair order).
    pub fn vertical(ctx: &MetricContext, phi: Vec<Expr>) -> VectorField {
        assert_eq!(phi.len(), ctx.n_pairs());
        VectorField { h: vec![Expr::zero(); ctx.dim() as usize], phi }
    }

    pub fn h(&self, mu: Idx) -> &Expr {
        &self.h[mu as usize - 1]
    }

    pub fn phi(&self, ctx: &MetricContext, a: Idx, b: Idx) -> &Expr {
        &self.phi[ctx.pair_slot(Pair::new(a, b))]
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            h: self.h.iter().zip(&other.h).map(|(a, b)| a + b).collect(),
            phi: self.phi.iter().zip(&other.phi).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn neg(&self) -> VectorField {
        VectorField {
            h: self.h.iter().map(|a| -a).collect(),
            phi: self.phi.iter().map(|a| -a).collect(),
        }
    }
}

/// Second-prolongation engine for one field under fixed derivative rules.
pub struct Prolonger<'a> {
    pub ctx: &'a MetricContext,
    pub deriv: Deriv<'a>,
}

impl<'a> Prolonger<'a> {
    pub fn new(ctx: &'a MetricContext, rules: DerivRules) -> Prolonger<'a> {
        Prolonger { ctx, deriv: Deriv::new(ctx, rules) }
    }

    /// First prolongation coefficient for the component pair `p` and
    /// derivative direction `al`.
    pub fn phi_first(&self, vf: &VectorField, p: Pair, al: Idx) -> Result<Expr, JetError> {
        let ctx = self.ctx;
        let phi = vf.phi(ctx, p.0, p.1);
        let mut out = self.deriv.x_diff(phi, al)?;
        for eta in ctx.indices() {
            let dh = self.deriv.x_diff(vf.h(eta), al)?;
            out.sub_assign(&ctx.expr(&JetVar::D1(eta, p)).mul(&dh));
        }
        for q in ctx.pairs() {
            let d1 = ctx.expr(&JetVar::D1(al, q));
            let dphi = self.deriv.g_diff(phi, q)?;
            out.add_assign(&d1.mul(&dphi));
            for eta in ctx.indices() {
                let dh = self.deriv.g_diff(vf.h(eta), q)?;
                if dh.is_zero() {
                    continue;
                }
                out.sub_assign(&d1.mul(&ctx.expr(&JetVar::D1(eta, p))).mul(&dh));
            }
        }
        Ok(out)
    }

    /// First prolongation via the total-derivative route; agrees with
    /// [`Prolonger::phi_first`] exactly.
    pub fn phi_first_via_total(
        &self,
        vf: &VectorField,
        p: Pair,
        al: Idx,
    ) -> Result<Expr, JetError> {
        let ctx = self.ctx;
        let mut inner = vf.phi(ctx, p.0, p.1).clone();
        for eta in ctx.indices() {
            inner.sub_assign(&vf.h(eta).mul(&ctx.expr(&JetVar::D1(eta, p))));
        }
        let mut out = self.deriv.total_diff(&inner, al)?;
        for eta in ctx.indices() {
            out.add_assign(&vf.h(eta).mul(&ctx.expr(&JetVar::d2(al, eta, p.0, p.1))));
        }
        Ok(out)
    }

    /// Second prolongation coefficient for the component pair `p` and the
    /// derivative directions `ga, de`. Contains no third-order atoms.
    pub fn phi_second(
        &self,
        vf: &VectorField,
        p: Pair,
        ga: Idx,
        de: Idx,
    ) -> Result<Expr, JetError> {
        let ctx = self.ctx;
        let phi = vf.phi(ctx, p.0, p.1);
        let d1 = |k: Idx, q: Pair| ctx.expr(&JetVar::D1(k, q));
        let d2 = |k: Idx, l: Idx, q: Pair| ctx.expr(&JetVar::d2(k, l, q.0, q.1));

        // pure explicit part of Phi
        let mut out = self.deriv.x_diff(&self.deriv.x_diff(phi, de)?, ga)?;
        for eta in ctx.indices() {
            // - [d_eta g_p] d_ga d_de H^eta
            let ddh = self.deriv.x_diff(&self.deriv.x_diff(vf.h(eta), de)?, ga)?;
            out.sub_assign(&d1(eta, p).mul(&ddh));
            // - [d_de d_eta g_p] d_ga H^eta - [d_ga d_eta g_p] d_de H^eta
            out.sub_assign(&d2(de, eta, p).mul(&self.deriv.x_diff(vf.h(eta), ga)?));
            out.sub_assign(&d2(ga, eta, p).mul(&self.deriv.x_diff(vf.h(eta), de)?));
        }
        for q in ctx.pairs() {
            let dphi_q = self.deriv.g_diff(phi, q)?;
            // + d_de g_q * d_ga(dPhi/dg_q) + d_ga g_q * d_de(dPhi/dg_q)
            out.add_assign(&d1(de, q).mul(&self.deriv.x_diff(&dphi_q, ga)?));
            out.add_assign(&d1(ga, q).mul(&self.deriv.x_diff(&dphi_q, de)?));
            // + d_ga d_de g_q * dPhi/dg_q
            out.add_assign(&d2(ga, de, q).mul(&dphi_q));
            for eta in ctx.indices() {
                let dh_q = self.deriv.g_diff(vf.h(eta), q)?;
                if !dh_q.is_zero() {
                    // - [d_ga g_q] d_eta g_p d_de(dH/dg_q)
                    out.sub_assign(
                        &d1(ga, q)
                            .mul(&d1(eta, p))
                            .mul(&self.deriv.x_diff(&dh_q, de)?),
                    );
                    out.sub_assign(
                        &d1(de, q)
                            .mul(&d1(eta, p))
                            .mul(&self.deriv.x_diff(&dh_q, ga)?),
                    );
                    // - [d_ga g_q] d_de d_eta g_p dH/dg_q   (and ga<->de)
                    out.sub_assign(&d1(ga, q).mul(&d2(de, eta, p)).mul(&dh_q));
                    out.sub_assign(&d1(de, q).mul(&d2(ga, eta, p)).mul(&dh_q));
                    // - [d_eta g_p] d_de d_ga g_q dH/dg_q
                    out.sub_assign(&d1(eta, p).mul(&d2(ga, de, q)).mul(&dh_q));
                }
            }
            for r in ctx.pairs() {
                // + [d_ga g_q][d_de g_r] d^2 Phi / dg_q dg_r
                let ddphi = self.deriv.g_diff(&dphi_q, r)?;
                if !ddphi.is_zero() {
                    out.add_assign(&d1(ga, q).mul(&d1(de, r)).mul(&ddphi));
                }
                for eta in ctx.indices() {
                    let dh_q = self.deriv.g_diff(vf.h(eta), q)?;
                    if dh_q.is_zero() {
                        continue;
                    }
                    let ddh = self.deriv.g_diff(&dh_q, r)?;
                    if ddh.is_zero() {
                        continue;
                    }
                    // - [d_ga g_q][d_de g_r] d_eta g_p d^2 H / dg_q dg_r
                    out.sub_assign(
                        &d1(ga, q).mul(&d1(de, r)).mul(&d1(eta, p)).mul(&ddh),
                    );
                }
            }
        }
        Ok(out)
    }

    /// Second prolongation via the iterated total derivative; the
    /// third-order atoms introduced by the inner derivatives cancel against
    /// the explicit transport term.
    pub fn phi_second_via_total(
        &self,
        vf: &VectorField,
        p: Pair,
        ga: Idx,
        de: Idx,
    ) -> Result<Expr, JetError> {
        let ctx = self.ctx;
        let mut inner = vf.phi(ctx, p.0, p.1).clone();
        for eta in ctx.indices() {
            inner.sub_assign(&vf.h(eta).mul(&ctx.expr(&JetVar::D1(eta, p))));
        }
        let once = self.deriv.total_diff(&inner, de)?;
        let mut out = self.deriv.total_diff(&once, ga)?;
        for eta in ctx.indices() {
            out.add_assign(
                &vf.h(eta)
                    .mul(&ctx.expr(&JetVar::d3(ga, de, eta, p.0, p.1))),
            );
        }
        Ok(out)
    }

    /// Raised vertical component `Phi^{ga de} = gi gi Phi`.
    fn phi_upper(&self, vf: &VectorField, ga: Idx, de: Idx) -> Expr {
        let ctx = self.ctx;
        let mut out = Expr::zero();
        for ka in ctx.indices() {
            for la in ctx.indices() {
                out.add_assign(
                    &ctx.inv_metric(ga, ka)
                        .mul(&ctx.inv_metric(de, la))
                        .mul(vf.phi(ctx, ka, la)),
                );
            }
        }
        out
    }

    /// Assembled action of the second prolongation on one component of the
    /// Einstein system.
    pub fn action_component(&self, vf: &VectorField, al: Idx, be: Idx) -> Result<Expr, JetError> {
        let ctx = self.ctx;
        let d2 = |k: Idx, l: Idx, a: Idx, b: Idx| ctx.d2(k, l, a, b);

        // cosmological part
        let mut out = -&ctx.lambda().mul(vf.phi(ctx, al, be));

        // second-derivative block contracted with the raised vertical part
        for ga in ctx.indices() {
            for de in ctx.indices() {
                let bracket = sum([
                    d2(ga, de, al, be),
                    d2(al, be, ga, de),
                    -&d2(de, be, ga, al),
                    -&d2(ga, al, de, be),
                ]);
                out.add_assign(&self.phi_upper(vf, ga, de).mul(&bracket).scale(&half()));
            }
        }

        // Christoffel-squared block
        for ga in ctx.indices() {
            for de in ctx.indices() {
                for tau in ctx.indices() {
                    for rho in ctx.indices() {
                        let quad = &christoffel(ctx, tau, ga, al)
                            .mul(&christoffel(ctx, rho, de, be))
                            - &christoffel(ctx, tau, ga, de)
                                .mul(&christoffel(ctx, rho, al, be));
                        let weight = &ctx
                            .inv_metric(ga, de)
                            .mul(&self.phi_upper(vf, tau, rho))
                            + &ctx
                                .inv_metric(tau, rho)
                                .mul(&self.phi_upper(vf, ga, de));
                        out.sub_assign(&quad.mul(&weight));
                    }
                }
            }
        }

        // first-prolongation block
        let pf = |t: Idx, g: Idx, a: Idx| self.phi_first(vf, Pair::new(t, g), a);
        for ga in ctx.indices() {
            for de in ctx.indices() {
                for tau in ctx.indices() {
                    for rho in ctx.indices() {
                        let gg = ctx.inv_metric(ga, de).mul(&ctx.inv_metric(tau, rho));
                        let b1 = sum([pf(tau, ga, al)?, pf(tau, al, ga)?, -&pf(ga, al, tau)?])
                            .mul(&christoffel(ctx, rho, de, be));
                        let b2 = sum([pf(rho, de, be)?, pf(rho, be, de)?, -&pf(de, be, rho)?])
                            .mul(&christoffel(ctx, tau, ga, al));
                        let b3 = sum([pf(tau, ga, de)?, pf(tau, de, ga)?, -&pf(ga, de, tau)?])
                            .mul(&christoffel(ctx, rho, al, be));
                        let b4 = sum([pf(rho, al, be)?, pf(rho, be, al)?, -&pf(al, be, rho)?])
                            .mul(&christoffel(ctx, tau, ga, de));
                        let bracket = &(&b1 + &b2) - &(&b3 + &b4);
                        out.add_assign(&gg.mul(&bracket).scale(&half()));
                    }
                }
            }
        }

        // second-prolongation block
        for ga in ctx.indices() {
            for de in ctx.indices() {
                let ps = |a: Idx, b: Idx, g: Idx, d: Idx| self.phi_second(vf, Pair::new(a, b), g, d);
                let bracket = sum([
                    -&ps(al, be, ga, de)?,
                    -&ps(ga, de, al, be)?,
                    ps(ga, al, de, be)?,
                    ps(de, be, ga, al)?,
                ]);
                out.add_assign(&ctx.inv_metric(ga, de).mul(&bracket).scale(&half()));
            }
        }
        Ok(out)
    }

    /// Assembled action on every component.
    pub fn prolong_einstein(&self, vf: &VectorField) -> Result<ProlongedAction, JetError> {
        let pairs = self.ctx.pairs();
        let components: Result<Vec<Expr>, JetError> = pairs
            .par_iter()
            .map(|p| self.action_component(vf, p.0, p.1))
            .collect();
        Ok(ProlongedAction { components: components? })
    }

    /// Direct prolongation: differentiates the target expression atom by
    /// atom and contracts with the prolongation coefficients.
    pub fn prolong_direct(&self, vf: &VectorField, target: &Expr) -> Result<Expr, JetError> {
        let ctx = self.ctx;
        let mut out = Expr::zero();
        for mu in ctx.indices() {
            let dx = self.deriv.x_diff(target, mu)?;
            if !dx.is_zero() {
                out.add_assign(&vf.h(mu).mul(&dx));
            }
        }
        for q in ctx.pairs() {
            let dg = self.deriv.g_diff(target, q)?;
            if !dg.is_zero() {
                out.add_assign(&vf.phi(ctx, q.0, q.1).mul(&dg));
            }
        }
        // jet-coordinate slots: iterate atoms actually present
        for v in target.vars() {
            match ctx.jet(v).clone() {
                JetVar::D1(k, p) => {
                    let coeff = self.phi_first(vf, p, k)?;
                    out.add_assign(&coeff.mul(&target.formal_diff(v)));
                }
                JetVar::D2(d, p) => {
                    let coeff = self.phi_second(vf, p, d.0, d.1)?;
                    out.add_assign(&coeff.mul(&target.formal_diff(v)));
                }
                JetVar::D3(_, _) => {
                    return Err(JetError::DerivativeCap("third metric partial in target".into()))
                }
                _ => {}
            }
        }
        Ok(out)
    }
}

/// Componentwise action of a prolonged field on the Einstein system.
#[derive(Debug, Clone)]
pub struct ProlongedAction {
    pub components: Vec<Expr>,
}

impl ProlongedAction {
    pub fn component(&self, ctx: &MetricContext, a: Idx, b: Idx) -> &Expr {
        &self.components[ctx.pair_slot(Pair::new(a, b))]
    }
}
