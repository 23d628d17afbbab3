//! Exact random-point evaluation.
//!
//! Samples assign small exact rationals to every atom, keep the metric block
//! away from degeneracy, and force inverse-metric atoms to the exact matrix
//! inverse of the sampled metric. Every identity certified symbolically
//! elsewhere must evaluate to exactly zero here; there are no tolerances.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::frac::FracExpr;
use crate::jet::{JetError, JetVar, MetricContext, Pair};
use crate::monomial::VarId;
use crate::rational::{rat, ratio, Rat};

/// Assignment of exact rationals to registry variables.
#[derive(Debug, Clone)]
pub struct PointAssignment {
    pub values: BTreeMap<VarId, Rat>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SampleSpec {
    /// Minimum absolute metric determinant; resample below it.
    pub det_min: Rat,
    /// Attempt budget for rejection sampling.
    pub max_attempts: u32,
}

impl Default for SampleSpec {
    fn default() -> SampleSpec {
        SampleSpec { det_min: ratio(1, 100), max_attempts: 1000 }
    }
}

fn small_rational(rng: &mut ChaCha8Rng) -> Rat {
    // numerators and denominators bounded by 20 keep evaluation fast
    let num = rng.gen_range(-20i64..=20);
    let den = rng.gen_range(1i64..=20);
    ratio(num, den)
}

fn rational_matrix_inverse(g: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let n = g.len();
    let mut a: Vec<Vec<Rat>> = g.to_vec();
    let mut inv: Vec<Vec<Rat>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { rat(1) } else { rat(0) }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] /= p.clone();
            inv[col][j] /= p.clone();
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                let t = a[col][j].clone() * f.clone();
                a[r][j] -= t;
                let t = inv[col][j].clone() * f.clone();
                inv[r][j] -= t;
            }
        }
    }
    Some(inv)
}

fn det_rational(g: &[Vec<Rat>]) -> Rat {
    // small n: cofactor expansion
    let n = g.len();
    if n == 1 {
        return g[0][0].clone();
    }
    let mut out = rat(0);
    for c in 0..n {
        let minor: Vec<Vec<Rat>> = (1..n)
            .map(|r| {
                (0..n)
                    .filter(|&x| x != c)
                    .map(|x| g[r][x].clone())
                    .collect()
            })
            .collect();
        let term = g[0][c].clone() * det_rational(&minor);
        if c % 2 == 0 {
            out += term;
        } else {
            out -= term;
        }
    }
    out
}

/// Draws a deterministic assignment covering every registry variable.
/// Inverse-metric atoms receive the exact inverse of the sampled metric
/// block; the determinant is kept at or above the bound.
pub fn sample(
    ctx: &MetricContext,
    seed: u64,
    spec: &SampleSpec,
) -> Result<PointAssignment, JetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ctx.dim() as usize;
    for _ in 0..spec.max_attempts {
        let mut gmat: Vec<Vec<Rat>> = vec![vec![rat(0); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = small_rational(&mut rng);
                gmat[i][j] = v.clone();
                gmat[j][i] = v;
            }
        }
        let det = det_rational(&gmat);
        if det.abs() < spec.det_min {
            continue;
        }
        let inv = rational_matrix_inverse(&gmat).expect("nonzero determinant");
        let mut values = BTreeMap::new();
        for var in ctx.all_vars() {
            let id = ctx.var(var);
            let val = match var {
                JetVar::Metric(Pair(a, b)) => gmat[*a as usize - 1][*b as usize - 1].clone(),
                JetVar::InvMetric(Pair(a, b)) => inv[*a as usize - 1][*b as usize - 1].clone(),
                _ => small_rational(&mut rng),
            };
            values.insert(id, val);
        }
        return Ok(PointAssignment { values, seed });
    }
    Err(JetError::Parse(format!(
        "rejection budget exceeded sampling seed {}",
        seed
    )))
}

/// Exact evaluation of a fraction at a point; the determinant bound rules
/// out division by zero.
pub fn eval_frac(ctx: &MetricContext, f: &FracExpr, pt: &PointAssignment) -> Rat {
    let num = f.num.eval(&pt.values);
    if f.den_power == 0 {
        return num;
    }
    let det = crate::geometry::metric_det(ctx).eval(&pt.values);
    let mut den = rat(1);
    for _ in 0..f.den_power {
        den *= det.clone();
    }
    num / den
}

pub fn eval(e: &Expr, pt: &PointAssignment) -> Rat {
    e.eval(&pt.values)
}

/// Checks that an expression evaluates to exactly zero on `samples`
/// consecutive seeds starting at `seed0`; returns the failing seeds.
pub fn zero_on_seeds(
    ctx: &MetricContext,
    e: &Expr,
    seed0: u64,
    samples: u64,
) -> Result<Vec<u64>, JetError> {
    let spec = SampleSpec::default();
    let mut failures = Vec::new();
    for s in seed0..seed0 + samples {
        let pt = sample(ctx, s, &spec)?;
        if !eval(e, &pt).is_zero() {
            failures.push(s);
        }
    }
    Ok(failures)
}

/// Compares a built expression's formal derivative against a closed form at
/// one sampled point; exact equality, no finite differences.
pub fn diff_oracle(
    built: &Expr,
    var: VarId,
    closed_form: &Expr,
    pt: &PointAssignment,
) -> Result<(), (Rat, Rat)> {
    let lhs = built.formal_diff(var).eval(&pt.values);
    let rhs = closed_form.eval(&pt.values);
    if lhs == rhs {
        Ok(())
    } else {
        Err((lhs, rhs))
    }
}

/// Exactness helper used in tests: `p/q` with bounded height.
pub fn bounded_height(r: &Rat, bound: i64) -> bool {
    r.numer().abs() <= BigInt::from(bound) && r.denom().abs() <= BigInt::from(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{metric_det, ricci};

    #[test]
    fn sampling_is_deterministic() {
        let ctx = MetricContext::new(2).unwrap();
        let spec = SampleSpec::default();
        let a = sample(&ctx, 7, &spec).unwrap();
        let b = sample(&ctx, 7, &spec).unwrap();
        assert_eq!(a.values, b.values);
        let c = sample(&ctx, 8, &spec).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn sampled_inverse_is_exact_and_det_bounded() {
        let ctx = MetricContext::new(3).unwrap();
        let spec = SampleSpec::default();
        for seed in 0..20 {
            let pt = sample(&ctx, seed, &spec).unwrap();
            let det = metric_det(&ctx).eval(&pt.values);
            assert!(det.abs() >= spec.det_min);
            // sum_k gi[1,k] g[k,2] = 0 exactly, and = 1 for matching index
            for m in ctx.indices() {
                for l in ctx.indices() {
                    let mut s = rat(0);
                    for k in ctx.indices() {
                        s += ctx.inv_metric(m, k).eval(&pt.values)
                            * ctx.metric(k, l).eval(&pt.values);
                    }
                    assert_eq!(s, if m == l { rat(1) } else { rat(0) });
                }
            }
        }
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism() {
        let ctx = MetricContext::new(2).unwrap();
        let spec = SampleSpec::default();
        let pt = sample(&ctx, 3, &spec).unwrap();
        let p = ricci(&ctx, 1, 1);
        let q = ctx.metric(1, 2).mul(&ctx.lambda());
        assert_eq!(eval(&(&p + &q), &pt), eval(&p, &pt) + eval(&q, &pt));
        assert_eq!(eval(&p.mul(&q), &pt), eval(&p, &pt) * eval(&q, &pt));
        assert_eq!(eval(&Expr::zero(), &pt), rat(0));
        assert_eq!(eval(&ctx.metric(1, 1), &pt), pt.values[&ctx.var(&JetVar::metric(1, 1))]);
    }

    #[test]
    fn diff_oracle_matches_closed_forms_pointwise() {
        let ctx = MetricContext::new(2).unwrap();
        let spec = SampleSpec::default();
        let r = ricci(&ctx, 1, 1);
        for seed in 0..10u64 {
            let pt = sample(&ctx, seed, &spec).unwrap();
            for dp in ctx.pairs() {
                for cp in ctx.pairs() {
                    let var = ctx.var(&JetVar::D2(dp, cp));
                    let closed =
                        crate::geometry::dricci_d2(&ctx, 1, 1, dp.0, dp.1, cp.0, cp.1);
                    diff_oracle(&r, var, &closed, &pt)
                        .unwrap_or_else(|(l, r)| panic!("mismatch {l} vs {r}"));
                }
            }
            // first-derivative slots with every first partial zeroed give
            // zero (each term carries a Christoffel factor)
            let mut pt0 = pt.clone();
            for v in ctx.enumerate_vars(1) {
                pt0.values.insert(ctx.var(&v), rat(0));
            }
            for k in ctx.indices() {
                for cp in ctx.pairs() {
                    let closed = crate::geometry::dricci_d1(&ctx, 1, 1, k, cp.0, cp.1);
                    assert_eq!(eval(&closed, &pt0), rat(0));
                }
            }
        }
    }

    #[test]
    fn bounded_samples() {
        // every directly sampled atom stays in the small-height pool; only
        // the exact inverse entries may grow
        let ctx = MetricContext::new(2).unwrap();
        let pt = sample(&ctx, 1, &SampleSpec::default()).unwrap();
        for var in ctx.all_vars() {
            if matches!(var, JetVar::InvMetric(_)) {
                continue;
            }
            let v = &pt.values[&ctx.var(var)];
            assert!(bounded_height(v, 20), "value too tall for {}: {}", var.name(), v);
        }
    }
}
