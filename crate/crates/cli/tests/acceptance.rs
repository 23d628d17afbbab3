//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Every check is exact (zero tolerance); runtime budgets are
//! asserted where stated. Run with `--nocapture` to see the lines.

use std::time::Instant;

use einsym::deriv::DerivRules;
use einsym::determining::{self, ConstraintKey, SufficiencyTarget};
use einsym::expr::Expr;
use einsym::geometry::{
    check_absent_derivatives, christoffel, dricci_d0, dricci_d1, dricci_d2, ricci,
    EinsteinSystem,
};
use einsym::jet::{JetVar, MetricContext, Pair, Param};
use einsym::liealg::{
    self, ansatz_collapse, final_classification, two_dim_branch, verify_gct_symmetry,
    verify_scaling, LambdaMode,
};
use einsym::oracle::{eval, sample, SampleSpec};
use einsym::prolong::{Prolonger, VectorField};
use einsym::rational::rat;

fn conclude(criterion: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} - {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_geometry_kernel() {
    let t0 = Instant::now();
    let mut ok = true;
    for dim in 2..=4u8 {
        let ctx = MetricContext::new(dim).unwrap();
        // symmetrized Christoffel pairs rebuild the bare first partial
        for t in ctx.indices() {
            for g in ctx.indices() {
                for a in ctx.indices() {
                    let s = &christoffel(&ctx, t, g, a) + &christoffel(&ctx, g, t, a);
                    ok &= s == ctx.d1(a, t, g);
                }
            }
        }
        // restricted-sum collapse against the mixed symbol, for an
        // arbitrary symmetric array (squared metric components)
        for c in ctx.indices() {
            for d in ctx.indices() {
                let mut sum = Expr::zero();
                for p in ctx.pairs() {
                    let a_mn = ctx.metric(p.0, p.1).pow(2);
                    sum.add_assign(&a_mn.mul(&ctx.x_symbol_mixed(c, d, p.0, p.1)));
                }
                ok &= sum == ctx.metric(c, d).pow(2);
            }
        }
        // both absent families, every component
        let sys = EinsteinSystem::new(&ctx);
        let report = check_absent_derivatives(&ctx, &sys);
        ok &= report.ok();
        ok &= report.instances == 2 * dim as usize * (dim as usize - 1);
    }
    let within_budget = t0.elapsed().as_secs_f64() < 5.0;
    conclude(
        1,
        ok && within_budget,
        &format!(
            "geometry kernel identities and absent families, dims 2-4, {:.2}s (< 5s)",
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_ricci_partials() {
    let t0 = Instant::now();
    let mut ok = true;
    for dim in 2..=3u8 {
        let ctx = MetricContext::new(dim).unwrap();
        for comp in ctx.pairs() {
            let r = ricci(&ctx, comp.0, comp.1);
            for dp in ctx.pairs() {
                for cp in ctx.pairs() {
                    let direct = r.formal_diff(ctx.var(&JetVar::D2(dp, cp)));
                    ok &= direct == dricci_d2(&ctx, comp.0, comp.1, dp.0, dp.1, cp.0, cp.1);
                }
            }
            for k in ctx.indices() {
                for cp in ctx.pairs() {
                    let direct = r.formal_diff(ctx.var(&JetVar::D1(k, cp)));
                    ok &= direct == dricci_d1(&ctx, comp.0, comp.1, k, cp.0, cp.1);
                }
            }
            for cp in ctx.pairs() {
                let mut chain = r.formal_diff(ctx.var(&JetVar::Metric(cp)));
                for q in ctx.pairs() {
                    let dgi = -&ctx.x_symbol_upper(q.0, q.1, cp.0, cp.1);
                    chain.add_assign(&r.formal_diff(ctx.var(&JetVar::InvMetric(q))).mul(&dgi));
                }
                ok &= chain == dricci_d0(&ctx, comp.0, comp.1, cp.0, cp.1);
            }
        }
    }
    // numeric oracle on 100 seeds: the closed forms and the formal
    // derivatives agree pointwise, exactly
    let ctx = MetricContext::new(2).unwrap();
    let spec = SampleSpec::default();
    let r = ricci(&ctx, 1, 2);
    for seed in 0..100u64 {
        let pt = sample(&ctx, seed, &spec).unwrap();
        for dp in ctx.pairs() {
            for cp in ctx.pairs() {
                let a = r.formal_diff(ctx.var(&JetVar::D2(dp, cp))).eval(&pt.values);
                let b = dricci_d2(&ctx, 1, 2, dp.0, dp.1, cp.0, cp.1).eval(&pt.values);
                ok &= a == b;
            }
        }
        for cp in ctx.pairs() {
            let closed = dricci_d0(&ctx, 1, 2, cp.0, cp.1);
            let mut chain = Expr::zero();
            for q in ctx.pairs() {
                let dgi = -&ctx.x_symbol_upper(q.0, q.1, cp.0, cp.1);
                chain.add_assign(&r.formal_diff(ctx.var(&JetVar::InvMetric(q))).mul(&dgi));
            }
            ok &= (&closed - &chain).eval(&pt.values) == rat(0);
        }
    }
    let within_budget = t0.elapsed().as_secs_f64() < 60.0;
    conclude(
        2,
        ok && within_budget,
        &format!(
            "closed-form partials match the differentiation oracle, dims 2-3, 100 seeds, {:.2}s (< 60s)",
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_3_prolongation_consistency() {
    // two dimensions, every component
    let t2 = Instant::now();
    let mut ok = true;
    {
        let ctx = MetricContext::new(2).unwrap();
        let pro = Prolonger::new(&ctx, DerivRules::generic());
        let vf = VectorField::generic(&ctx);
        let sys = EinsteinSystem::new(&ctx);
        let assembled = pro.prolong_einstein(&vf).unwrap();
        for p in ctx.pairs() {
            let direct = pro
                .prolong_direct(&vf, sys.component(&ctx, p.0, p.1))
                .unwrap();
            ok &= direct == *assembled.component(&ctx, p.0, p.1);
        }
        // iterated-total-derivative route: identical coefficients and every
        // third-order atom cancels
        for p in ctx.pairs() {
            for ga in ctx.indices() {
                for de in ctx.indices() {
                    let a = pro.phi_second(&vf, p, ga, de).unwrap();
                    let b = pro.phi_second_via_total(&vf, p, ga, de).unwrap();
                    ok &= a == b;
                    ok &= a
                        .vars()
                        .iter()
                        .all(|&v| !matches!(ctx.jet(v), JetVar::D3(_, _)));
                }
            }
        }
    }
    let two_dim_time = t2.elapsed().as_secs_f64();
    ok &= two_dim_time < 30.0;

    // three dimensions, three components
    let t3 = Instant::now();
    {
        let ctx = MetricContext::new(3).unwrap();
        let pro = Prolonger::new(&ctx, DerivRules::generic());
        let vf = VectorField::generic(&ctx);
        let sys = EinsteinSystem::new(&ctx);
        for p in [Pair(1, 1), Pair(1, 2), Pair(2, 3)] {
            let direct = pro
                .prolong_direct(&vf, sys.component(&ctx, p.0, p.1))
                .unwrap();
            let assembled = pro.action_component(&vf, p.0, p.1).unwrap();
            ok &= direct == assembled;
        }
    }
    let three_dim_time = t3.elapsed().as_secs_f64();
    ok &= three_dim_time < 600.0;
    conclude(
        3,
        ok,
        &format!(
            "direct and assembled routes agree; third-order atoms cancel; {:.2}s at dim 2 (< 30s), {:.2}s at dim 3 (< 600s)",
            two_dim_time, three_dim_time
        ),
    );
}

#[test]
fn criterion_4_determining_equations() {
    let mut ok = true;
    // reduced mixed-family instances, three dimensions
    {
        let ctx = MetricContext::new(3).unwrap();
        let action = determining::generic_action(&ctx).unwrap();
        let got =
            determining::mixed_coefficient(&ctx, &action, Pair(1, 1), 2, Pair(1, 1), 2, 3)
                .unwrap();
        let expect = determining::reduced_mixed_expectation(&ctx, 1, 1, 1, 1, 2, 2, 3);
        let k = determining::proportionality(&got, &expect);
        ok &= matches!(k, Some(k) if !einsym::rational::is_zero(&k));
        let report = determining::deduce_h_independence(&ctx, &action).unwrap();
        ok &= report.ok();
    }
    // two-dimensional path, including the remaining-gradient instantiation
    {
        let ctx = MetricContext::new(2).unwrap();
        let action = determining::generic_action(&ctx).unwrap();
        let report = determining::deduce_h_independence(&ctx, &action).unwrap();
        ok &= report.ok();
        ok &= report.stages.len() == 4;
        // the gap instantiation couples exactly the two remaining atoms
        let got =
            determining::mixed_coefficient(&ctx, &action, Pair(1, 1), 1, Pair(1, 1), 1, 2)
                .unwrap();
        ok &= !got.is_zero();
    }
    // vertical-structure deductions and sufficiency case analyses
    for dim in 2..=3u8 {
        let ctx = MetricContext::new(dim).unwrap();
        let action = determining::generic_action(&ctx).unwrap();
        let ddg = determining::extract_ddg(&ctx, &action).unwrap();
        ok &= determining::deduce_phi_structure(&ctx, &ddg).unwrap().ok();
        for target in [
            SufficiencyTarget::MixedFamily,
            SufficiencyTarget::DiagComponentFamily,
            SufficiencyTarget::DiagDerivativeFamily,
        ] {
            ok &= determining::verify_sufficiency(&ctx, &action, target)
                .unwrap()
                .ok();
        }
        ok &= determining::tilde_structure_report(&ctx).unwrap().ok();
        ok &= determining::dg_family_report(&ctx).unwrap().ok();
    }
    // the first-derivative family reduces to the cyclic gradient form
    {
        let ctx = MetricContext::new(3).unwrap();
        let shifted = determining::shifted_action(&ctx).unwrap();
        let sys = determining::extract_dg(&ctx, &shifted).unwrap();
        let got = sys
            .lookup(Pair(1, 2), &ConstraintKey::Gamma { lambda: 3, pair: Pair(3, 3) })
            .cloned()
            .unwrap_or_else(Expr::zero);
        let k = determining::dg_instance_cyclic_multiple(&ctx, &got, 1, 2, 3, Pair(3, 3));
        ok &= matches!(k, Some(k) if !einsym::rational::is_zero(&k));
    }
    conclude(
        4,
        ok,
        "mixed-family instances, gradient eliminations, sufficiency cases, and the shifted structure all certify",
    );
}

#[test]
fn criterion_5_classification_certificates() {
    let mut ok = true;
    // coordinate-change symmetry: full at dim 2, spot at dim 3, with a
    // unique vanishing combination
    {
        let ctx = MetricContext::new(2).unwrap();
        let report = verify_gct_symmetry(&ctx, &ctx.pairs()).unwrap();
        ok &= report.ok() && report.found == vec![(1, 1)];
        let ctx = MetricContext::new(3).unwrap();
        let report = verify_gct_symmetry(&ctx, &[Pair(1, 1)]).unwrap();
        ok &= report.ok() && report.found == vec![(1, 1)];
    }
    // rescaling action
    for dim in 2..=3u8 {
        let ctx = MetricContext::new(dim).unwrap();
        ok &= verify_scaling(&ctx).unwrap().ok();
    }
    // collapse of the shifted components at dim 3 (amplitude constant,
    // shift constant, then zero), and the closed-form branch at dim 2
    {
        let ctx = MetricContext::new(3).unwrap();
        let report = ansatz_collapse(&ctx).unwrap();
        ok &= report.ok();
        ok &= report.stages.iter().any(|s| s.name == "constant-shift-eliminated");
        let ctx = MetricContext::new(2).unwrap();
        ok &= ansatz_collapse(&ctx).unwrap().ok();
        ok &= two_dim_branch(&ctx).unwrap().ok();
    }
    // final certificates in both modes agree in content across dimensions
    {
        let mut conclusions = Vec::new();
        for dim in 2..=3u8 {
            let ctx = MetricContext::new(dim).unwrap();
            for mode in [LambdaMode::Symbolic, LambdaMode::Zero] {
                let cert = final_classification(&ctx, mode).unwrap();
                ok &= cert.ok();
                conclusions.push((mode.name(), cert.conclusion));
            }
        }
        ok &= conclusions
            .iter()
            .filter(|(m, _)| *m == "symbolic")
            .map(|(_, c)| c)
            .collect::<std::collections::BTreeSet<_>>()
            .len()
            == 1;
        ok &= conclusions
            .iter()
            .filter(|(m, _)| *m == "zero")
            .map(|(_, c)| c)
            .collect::<std::collections::BTreeSet<_>>()
            .len()
            == 1;
    }
    conclude(
        5,
        ok,
        "coordinate-change and rescaling certificates, the collapse chain, and both final certificates",
    );
}

#[test]
fn criterion_6_oracle_cross_check() {
    let ctx = MetricContext::new(2).unwrap();
    let spec = SampleSpec::default();
    // a representative set of certified zeros, each evaluated at 100 points
    let mut identities: Vec<(String, Expr)> = Vec::new();
    // inverse consistency
    for m in ctx.indices() {
        for l in ctx.indices() {
            let mut e = Expr::zero();
            for k in ctx.indices() {
                e.add_assign(&ctx.inv_metric(m, k).mul(&ctx.metric(k, l)));
            }
            if m == l {
                e.sub_assign(&Expr::one());
            }
            identities.push((format!("inverse-delta[{m},{l}]"), e));
        }
    }
    // trace-reversed curvature in two dimensions
    {
        let mut scal = Expr::zero();
        for c in ctx.indices() {
            for d in ctx.indices() {
                scal.add_assign(&ctx.inv_metric(c, d).mul(&ricci(&ctx, c, d)));
            }
        }
        for p in ctx.pairs() {
            let e = &ricci(&ctx, p.0, p.1)
                - &ctx
                    .metric(p.0, p.1)
                    .mul(&scal)
                    .scale(&einsym::rational::ratio(1, 2));
            identities.push((format!("trace-reversed[{},{}]", p.0, p.1), e));
        }
    }
    // the coordinate-change combination and the rescaling residual
    {
        let sys = EinsteinSystem::new(&ctx);
        let gct = liealg::gct_generator(&ctx);
        let pro = Prolonger::new(&ctx, DerivRules::generic());
        let f_x = |ga: u8, dir: u8| {
            ctx.func(
                einsym::jet::FuncAtom::base(einsym::jet::FuncKind::F(ga))
                    .diff_x(dir)
                    .unwrap(),
            )
        };
        for p in ctx.pairs() {
            let mut c = pro.action_component(&gct, p.0, p.1).unwrap();
            for ga in ctx.indices() {
                c.add_assign(&f_x(ga, p.0).mul(sys.component(&ctx, ga, p.1)));
                c.add_assign(&f_x(ga, p.1).mul(sys.component(&ctx, p.0, ga)));
            }
            identities.push((format!("gct-combination[{},{}]", p.0, p.1), c));
        }
        let scaling = liealg::scaling_generator(&ctx);
        let a = ctx.param(Param::ConstA);
        for p in ctx.pairs() {
            let got = pro.action_component(&scaling, p.0, p.1).unwrap();
            let expected = -&ctx.lambda().mul(&a).mul(&ctx.metric(p.0, p.1));
            identities.push((format!("scaling-residual[{},{}]", p.0, p.1), &got - &expected));
        }
        // route difference on one component
        let vf = VectorField::generic(&ctx);
        let direct = pro.prolong_direct(&vf, sys.component(&ctx, 1, 1)).unwrap();
        let assembled = pro.action_component(&vf, 1, 1).unwrap();
        identities.push(("route-difference[1,1]".into(), &direct - &assembled));
    }
    let mut ok = true;
    let mut checked = 0usize;
    for seed in 0..100u64 {
        let pt = sample(&ctx, seed, &spec).unwrap();
        for (name, e) in &identities {
            let v = eval(e, &pt);
            if v != rat(0) {
                println!("oracle failure: {name} at seed {seed}");
                ok = false;
            }
            checked += 1;
        }
    }
    conclude(
        6,
        ok,
        &format!(
            "{} identities x 100 seeds = {} exact-zero evaluations",
            identities.len(),
            checked
        ),
    );
}

#[test]
fn criterion_7_determinism() {
    use std::process::Command;
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| -> Vec<u8> {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_einsym"))
            .args([
                "--jobs", jobs, "certify", "--dim", "2", "--lambda", "0", "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&path).unwrap()
    };
    let a = run("a.json", "2");
    let b = run("b.json", "2");
    let c = run("c.json", "3");
    let ok = a == b && a == c && !a.is_empty();
    conclude(
        7,
        ok,
        "repeated certification runs produce byte-identical artifacts regardless of worker count",
    );
}
