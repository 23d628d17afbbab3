//! Subcommand implementations. Every command returns whether its checks
//! passed; construction commands always pass once they produce output.



use anyhow::{bail, Context};
use serde::Serialize;

use einsym::deriv::DerivRules;
use einsym::determining;
use einsym::expr::Expr;
use einsym::geometry::{check_absent_derivatives, ricci as ricci_component, EinsteinSystem};
use einsym::jet::{Idx, JetVar, MetricContext, Pair, Param};
use einsym::liealg;
use einsym::oracle::{sample, SampleSpec};
use einsym::prolong::{Prolonger, VectorField};
use einsym::report::{ProofReport, Status, SCHEMA_VERSION};
use einsym::textform::{expr_to_json, expr_to_text, JsonTerm};

use crate::artifacts::{emit, to_json_pretty};
use crate::{ConstraintClass, DeduceStep, FieldKind, Format, LambdaFlag, OracleTarget, OutArgs};

/// Full symbolic runs stay at or below this dimension.
const FULL_SYMBOLIC_CAP: u8 = 4;

fn make_ctx(dim: u8) -> anyhow::Result<MetricContext> {
    MetricContext::new(dim).with_context(|| format!("dimension {dim} is not supported"))
}

fn require_full_symbolic(dim: u8) -> anyhow::Result<()> {
    if dim > FULL_SYMBOLIC_CAP {
        bail!("full symbolic runs are capped at dimension {FULL_SYMBOLIC_CAP} (got {dim})");
    }
    Ok(())
}

fn component_list(
    ctx: &MetricContext,
    alpha: Option<u8>,
    beta: Option<u8>,
) -> anyhow::Result<Vec<Pair>> {
    match (alpha, beta) {
        (None, None) => Ok(ctx.pairs()),
        (Some(a), Some(b)) => {
            ctx.check_idx(a)?;
            ctx.check_idx(b)?;
            Ok(vec![Pair::new(a, b)])
        }
        _ => bail!("--alpha and --beta must be given together"),
    }
}

#[derive(Serialize)]
struct ComponentOut {
    alpha: u8,
    beta: u8,
    terms: Vec<JsonTerm>,
}

#[derive(Serialize)]
struct ComponentsArtifact {
    schema: u32,
    kind: String,
    dim: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
    components: Vec<ComponentOut>,
}

fn emit_components(
    ctx: &MetricContext,
    kind: &str,
    field: Option<&str>,
    label: &str,
    comps: &[(Pair, Expr)],
    format: Format,
    out: &OutArgs,
) -> anyhow::Result<bool> {
    let content = match format {
        Format::Text => {
            let mut lines = Vec::new();
            for (p, e) in comps {
                lines.push(format!("{label}[{},{}] = {}", p.0, p.1, expr_to_text(ctx, e)));
            }
            lines.join("\n") + "\n"
        }
        Format::Json => to_json_pretty(&ComponentsArtifact {
            schema: SCHEMA_VERSION,
            kind: kind.to_string(),
            dim: ctx.dim(),
            field: field.map(|s| s.to_string()),
            components: comps
                .iter()
                .map(|(p, e)| ComponentOut {
                    alpha: p.0,
                    beta: p.1,
                    terms: expr_to_json(ctx, e),
                })
                .collect(),
        })?,
    };
    emit(out.out.as_deref(), &content)?;
    Ok(true)
}

pub fn ricci(
    dim: u8,
    alpha: Option<u8>,
    beta: Option<u8>,
    format: Format,
    out: OutArgs,
) -> anyhow::Result<bool> {
    let ctx = make_ctx(dim)?;
    let comps: Vec<(Pair, Expr)> = component_list(&ctx, alpha, beta)?
        .into_iter()
        .map(|p| (p, ricci_component(&ctx, p.0, p.1)))
        .collect();
    emit_components(&ctx, "ricci", None, "R", &comps, format, &out)
}

#[derive(Serialize)]
struct AbsentArtifact {
    schema: u32,
    kind: String,
    dim: u8,
    atoms: Vec<String>,
    instances: usize,
    ok: bool,
    violations: Vec<(u8, u8, String)>,
}

pub fn check_absent(dim: u8, format: Format, out: OutArgs) -> anyhow::Result<bool> {
    let ctx = make_ctx(dim)?;
    let sys = EinsteinSystem::new(&ctx);
    let report = check_absent_derivatives(&ctx, &sys);
    let ok = report.ok();
    let artifact = AbsentArtifact {
        schema: SCHEMA_VERSION,
        kind: "absent-check".into(),
        dim,
        atoms: report.atoms.iter().map(|a| a.name()).collect(),
        instances: report.instances,
        ok,
        violations: report
            .violations
            .iter()
            .map(|(a, b, v)| (*a, *b, v.name()))
            .collect(),
    };
    let content = match format {
        Format::Text => {
            let mut s = format!(
                "absent-derivative check: dim {} | {} atoms ({} instances) | {}\n",
                dim,
                artifact.atoms.len(),
                artifact.instances,
                if ok { "pass" } else { "FAIL" }
            );
            for (a, b, v) in &artifact.violations {
                s.push_str(&format!("  violation: component ({a},{b}) contains {v}\n"));
            }
            s
        }
        Format::Json => to_json_pretty(&artifact)?,
    };
    emit(out.out.as_deref(), &content)?;
    Ok(ok)
}

pub fn prolong(
    dim: u8,
    field: FieldKind,
    alpha: Option<u8>,
    beta: Option<u8>,
    format: Format,
    out: OutArgs,
) -> anyhow::Result<bool> {
    if matches!(field, FieldKind::Generic) {
        require_full_symbolic(dim)?;
    }
    let ctx = make_ctx(dim)?;
    let (vf, name) = match field {
        FieldKind::Generic => {
            if !ctx.has_func_atoms() {
                bail!("generic fields need the full atom registry (dimension too large)");
            }
            (VectorField::generic(&ctx), "generic")
        }
        FieldKind::Gct => {
            if !ctx.has_func_atoms() {
                bail!("coordinate-change fields need the full atom registry");
            }
            (liealg::gct_generator(&ctx), "gct")
        }
        FieldKind::Scaling => (liealg::scaling_generator(&ctx), "scaling"),
    };
    let pro = Prolonger::new(&ctx, DerivRules::generic());
    let mut comps = Vec::new();
    for p in component_list(&ctx, alpha, beta)? {
        let e = pro.action_component(&vf, p.0, p.1)?;
        comps.push((p, e));
    }
    emit_components(&ctx, "prolonged-action", Some(name), "prDelta", &comps, format, &out)
}

#[derive(Serialize)]
struct ConstraintOut {
    component: (u8, u8),
    key: serde_json::Value,
    terms: Vec<JsonTerm>,
}

#[derive(Serialize)]
struct DeterminingArtifact {
    schema: u32,
    kind: String,
    dim: u8,
    class: String,
    count: usize,
    constraints: Vec<ConstraintOut>,
}

fn key_json(key: &determining::ConstraintKey) -> serde_json::Value {
    use determining::ConstraintKey as K;
    match key {
        K::MixedDgDdg { d1_dir, d1_pair, rho, sigma } => serde_json::json!({
            "kind": "mixed",
            "d1_dir": d1_dir,
            "d1_pair": [d1_pair.0, d1_pair.1],
            "rho": rho,
            "sigma": sigma,
        }),
        K::DiagComponent { eta, sigma } => serde_json::json!({
            "kind": "diag-component", "eta": eta, "sigma": sigma,
        }),
        K::DiagDerivative { rho, sigma } => serde_json::json!({
            "kind": "diag-derivative", "rho": rho, "sigma": sigma,
        }),
        K::Gamma { lambda, pair } => serde_json::json!({
            "kind": "gamma", "lambda": lambda, "pair": [pair.0, pair.1],
        }),
    }
}

pub fn determining(
    dim: u8,
    class: ConstraintClass,
    format: Format,
    out: OutArgs,
) -> anyhow::Result<bool> {
    require_full_symbolic(dim)?;
    let ctx = make_ctx(dim)?;
    let (sys, class_name) = match class {
        ConstraintClass::Dgddg => {
            let action = determining::generic_action(&ctx)?;
            (determining::extract_dg_ddg(&ctx, &action)?, "dgddg")
        }
        ConstraintClass::Ddg => {
            let action = determining::generic_action(&ctx)?;
            (determining::extract_ddg(&ctx, &action)?, "ddg")
        }
        ConstraintClass::Dg => {
            let action = determining::shifted_action(&ctx)?;
            (determining::extract_dg(&ctx, &action)?, "dg")
        }
    };
    let artifact = DeterminingArtifact {
        schema: SCHEMA_VERSION,
        kind: "determining".into(),
        dim,
        class: class_name.into(),
        count: sys.len(),
        constraints: sys
            .constraints
            .iter()
            .map(|c| ConstraintOut {
                component: (c.component.0, c.component.1),
                key: key_json(&c.key),
                terms: expr_to_json(&ctx, &c.expr),
            })
            .collect(),
    };
    let content = match format {
        Format::Json => to_json_pretty(&artifact)?,
        Format::Text => {
            let mut s = format!(
                "determining constraints: dim {dim} class {class_name} count {}\n",
                sys.len()
            );
            for c in &sys.constraints {
                s.push_str(&format!(
                    "({},{}) {:?}: {}\n",
                    c.component.0,
                    c.component.1,
                    c.key,
                    expr_to_text(&ctx, &c.expr)
                ));
            }
            s
        }
    };
    emit(out.out.as_deref(), &content)?;
    Ok(true)
}

pub fn deduce(dim: u8, step: DeduceStep, out: OutArgs) -> anyhow::Result<bool> {
    require_full_symbolic(dim)?;
    let ctx = make_ctx(dim)?;
    let report: ProofReport = match step {
        DeduceStep::HIndep => {
            let action = determining::generic_action(&ctx)?;
            determining::deduce_h_independence(&ctx, &action)?
        }
        DeduceStep::PhiStructure => {
            let action = determining::generic_action(&ctx)?;
            let ddg = determining::extract_ddg(&ctx, &action)?;
            determining::deduce_phi_structure(&ctx, &ddg)?
        }
        DeduceStep::Dg => determining::dg_family_report(&ctx)?,
    };
    let ok = report.ok();
    emit(out.out.as_deref(), &to_json_pretty(&report)?)?;
    Ok(ok)
}

#[derive(Serialize)]
struct GctVerifyArtifact {
    schema: u32,
    kind: String,
    target: String,
    dim: u8,
    components: Vec<(u8, u8)>,
    found: Vec<(i64, i64)>,
    translations_trivial: bool,
    status: Status,
    residual_hash: String,
}

pub fn verify_gct(dim: u8, out: OutArgs) -> anyhow::Result<bool> {
    require_full_symbolic(dim)?;
    let ctx = make_ctx(dim)?;
    let components: Vec<Pair> = if dim == 2 { ctx.pairs() } else { vec![Pair(1, 1)] };
    let report = liealg::verify_gct_symmetry(&ctx, &components)?;
    let ok = report.ok();
    let artifact = GctVerifyArtifact {
        schema: SCHEMA_VERSION,
        kind: "verify".into(),
        target: "gct".into(),
        dim,
        components: report.components.iter().map(|p| (p.0, p.1)).collect(),
        found: report.found.clone(),
        translations_trivial: report.translations_trivial,
        status: Status::from_bool(ok),
        residual_hash: report.residual_hash.clone(),
    };
    emit(out.out.as_deref(), &to_json_pretty(&artifact)?)?;
    Ok(ok)
}

#[derive(Serialize)]
struct ScalingVerifyArtifact {
    schema: u32,
    kind: String,
    target: String,
    dim: u8,
    lambda: String,
    ricci_action_zero: bool,
    delta_action_matches: bool,
    zero_lambda_action_zero: bool,
    status: Status,
    residual_hash: String,
}

pub fn verify_scaling(dim: u8, lambda: LambdaFlag, out: OutArgs) -> anyhow::Result<bool> {
    require_full_symbolic(dim)?;
    let ctx = make_ctx(dim)?;
    let report = liealg::verify_scaling(&ctx)?;
    let ok = report.ok();
    let artifact = ScalingVerifyArtifact {
        schema: SCHEMA_VERSION,
        kind: "verify".into(),
        target: "scaling".into(),
        dim,
        lambda: match lambda {
            LambdaFlag::Sym => "symbolic".into(),
            LambdaFlag::Zero => "zero".into(),
        },
        ricci_action_zero: report.ricci_action_zero,
        delta_action_matches: report.delta_action_matches,
        zero_lambda_action_zero: report.zero_lambda_action_zero,
        status: Status::from_bool(ok),
        residual_hash: report.residual_hash.clone(),
    };
    emit(out.out.as_deref(), &to_json_pretty(&artifact)?)?;
    Ok(ok)
}

pub fn verify_ansatz(dim: u8, out: OutArgs) -> anyhow::Result<bool> {
    require_full_symbolic(dim)?;
    let ctx = make_ctx(dim)?;
    let report = liealg::ansatz_collapse(&ctx)?;
    let ok = report.ok();
    emit(out.out.as_deref(), &to_json_pretty(&report)?)?;
    Ok(ok)
}

pub fn verify_two_dim(out: OutArgs) -> anyhow::Result<bool> {
    let ctx = make_ctx(2)?;
    let report = liealg::two_dim_branch(&ctx)?;
    let ok = report.ok();
    emit(out.out.as_deref(), &to_json_pretty(&report)?)?;
    Ok(ok)
}

pub fn certify(dim: u8, lambda: LambdaFlag, out: OutArgs) -> anyhow::Result<bool> {
    require_full_symbolic(dim)?;
    let ctx = make_ctx(dim)?;
    let mode = match lambda {
        LambdaFlag::Sym => liealg::LambdaMode::Symbolic,
        LambdaFlag::Zero => liealg::LambdaMode::Zero,
    };
    let cert = liealg::final_classification(&ctx, mode)?;
    let ok = cert.ok();
    emit(out.out.as_deref(), &to_json_pretty(&cert)?)?;
    Ok(ok)
}

#[derive(Serialize)]
struct OracleFailure {
    identity: String,
    seed: u64,
}

#[derive(Serialize)]
struct OracleArtifact {
    schema: u32,
    kind: String,
    dim: u8,
    target: String,
    samples: u64,
    seed: u64,
    identities: usize,
    status: Status,
    failures: Vec<OracleFailure>,
}

/// Residual expressions that certified identities say are zero; each is
/// evaluated exactly at sampled points.
fn oracle_identities(
    ctx: &MetricContext,
    target: OracleTarget,
) -> anyhow::Result<Vec<(String, Expr)>> {
    let mut out: Vec<(String, Expr)> = Vec::new();
    match target {
        OracleTarget::Ricci => {
            // exact-inverse consistency at the sampled point
            for m in ctx.indices() {
                for l in ctx.indices() {
                    let mut e = Expr::zero();
                    for k in ctx.indices() {
                        e.add_assign(&ctx.inv_metric(m, k).mul(&ctx.metric(k, l)));
                    }
                    if m == l {
                        e.sub_assign(&Expr::one());
                    }
                    out.push((format!("inverse-delta[{m},{l}]"), e));
                }
            }
            if ctx.dim() == 2 {
                // the trace-reversed curvature vanishes identically
                let mut scal = Expr::zero();
                for c in ctx.indices() {
                    for d in ctx.indices() {
                        scal.add_assign(&ctx.inv_metric(c, d).mul(&ricci_component(ctx, c, d)));
                    }
                }
                for p in ctx.pairs() {
                    let e = &ricci_component(ctx, p.0, p.1)
                        - &ctx
                            .metric(p.0, p.1)
                            .mul(&scal)
                            .scale(&einsym::rational::ratio(1, 2));
                    out.push((format!("trace-reversed-curvature[{},{}]", p.0, p.1), e));
                }
            }
        }
        OracleTarget::Dricci => {
            for p in ctx.pairs() {
                let r = ricci_component(ctx, p.0, p.1);
                for dp in ctx.pairs() {
                    for cp in ctx.pairs() {
                        let direct = r.formal_diff(ctx.var(&JetVar::D2(dp, cp)));
                        let closed = einsym::geometry::dricci_d2(
                            ctx, p.0, p.1, dp.0, dp.1, cp.0, cp.1,
                        );
                        out.push((
                            format!("d2-partial[{},{};{:?};{:?}]", p.0, p.1, dp, cp),
                            &direct - &closed,
                        ));
                    }
                }
                for k in ctx.indices() {
                    for cp in ctx.pairs() {
                        let direct = r.formal_diff(ctx.var(&JetVar::D1(k, cp)));
                        let closed =
                            einsym::geometry::dricci_d1(ctx, p.0, p.1, k, cp.0, cp.1);
                        out.push((
                            format!("d1-partial[{},{};{k};{:?}]", p.0, p.1, cp),
                            &direct - &closed,
                        ));
                    }
                }
                for cp in ctx.pairs() {
                    let mut chain = r.formal_diff(ctx.var(&JetVar::Metric(cp)));
                    for q in ctx.pairs() {
                        let dgi = -&ctx.x_symbol_upper(q.0, q.1, cp.0, cp.1);
                        chain.add_assign(
                            &r.formal_diff(ctx.var(&JetVar::InvMetric(q))).mul(&dgi),
                        );
                    }
                    let closed = einsym::geometry::dricci_d0(ctx, p.0, p.1, cp.0, cp.1);
                    out.push((
                        format!("d0-partial[{},{};{:?}]", p.0, p.1, cp),
                        &chain - &closed,
                    ));
                }
            }
        }
        OracleTarget::ProlongGct => {
            if !ctx.has_func_atoms() {
                bail!("coordinate-change fields need the full atom registry");
            }
            let vf = liealg::gct_generator(ctx);
            let pro = Prolonger::new(ctx, DerivRules::generic());
            let sys = EinsteinSystem::new(ctx);
            let f_x = |ga: Idx, dir: Idx| {
                ctx.func(
                    einsym::jet::FuncAtom::base(einsym::jet::FuncKind::F(ga))
                        .diff_x(dir)
                        .unwrap(),
                )
            };
            let comps: Vec<Pair> = if ctx.dim() == 2 { ctx.pairs() } else { vec![Pair(1, 1)] };
            for p in comps {
                let mut c = pro.action_component(&vf, p.0, p.1)?;
                for ga in ctx.indices() {
                    c.add_assign(&f_x(ga, p.0).mul(sys.component(ctx, ga, p.1)));
                    c.add_assign(&f_x(ga, p.1).mul(sys.component(ctx, p.0, ga)));
                }
                out.push((format!("gct-combination[{},{}]", p.0, p.1), c));
            }
        }
        OracleTarget::ProlongScaling => {
            let vf = liealg::scaling_generator(ctx);
            let pro = Prolonger::new(ctx, DerivRules::generic());
            let a = ctx.param(Param::ConstA);
            for p in ctx.pairs() {
                let got = pro.action_component(&vf, p.0, p.1)?;
                let expected = -&ctx.lambda().mul(&a).mul(&ctx.metric(p.0, p.1));
                out.push((format!("scaling-residual[{},{}]", p.0, p.1), &got - &expected));
            }
        }
    }
    Ok(out)
}

pub fn oracle(
    dim: u8,
    target: OracleTarget,
    samples: u64,
    seed: u64,
    out: OutArgs,
) -> anyhow::Result<bool> {
    require_full_symbolic(dim)?;
    let ctx = make_ctx(dim)?;
    let identities = oracle_identities(&ctx, target)?;
    let spec = SampleSpec::default();
    let mut failures = Vec::new();
    use rayon::prelude::*;
    let seeds: Vec<u64> = (seed..seed + samples).collect();
    let results: Vec<Vec<OracleFailure>> = seeds
        .par_iter()
        .map(|&s| {
            let pt = sample(&ctx, s, &spec).expect("sampling succeeds");
            identities
                .iter()
                .filter(|(_, e)| !einsym::oracle::eval(e, &pt).eq(&einsym::rational::rat(0)))
                .map(|(name, _)| OracleFailure { identity: name.clone(), seed: s })
                .collect()
        })
        .collect();
    for mut r in results {
        failures.append(&mut r);
    }
    let ok = failures.is_empty();
    let artifact = OracleArtifact {
        schema: SCHEMA_VERSION,
        kind: "oracle".into(),
        dim,
        target: match target {
            OracleTarget::Ricci => "ricci",
            OracleTarget::ProlongGct => "prolong-gct",
            OracleTarget::ProlongScaling => "prolong-scaling",
            OracleTarget::Dricci => "dricci",
        }
        .into(),
        samples,
        seed,
        identities: identities.len(),
        status: Status::from_bool(ok),
        failures,
    };
    emit(out.out.as_deref(), &to_json_pretty(&artifact)?)?;
    Ok(ok)
}

