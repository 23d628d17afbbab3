//! Jet-space variables for metric component analysis in dimension N.
//!
//! All atomic symbols live here: metric components `g[a,b]`, formal inverse
//! components `gi[a,b]`, metric partials up to order 3, the cosmological
//! parameter `lam`, coordinates, true constants, and unexpanded derivative
//! atoms of unknown generator functions. A [`MetricContext`] enumerates every
//! admissible variable once, in a fixed canonical order; [`VarId`]s are
//! positions in that order and the monomial order is derived from it.

use std::collections::HashMap;

use crate::expr::Expr;
use crate::monomial::VarId;
use crate::rational::rat;

pub type Idx = u8;

/// Canonically ordered index pair `a <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair(pub Idx, pub Idx);

impl Pair {
    pub fn new(a: Idx, b: Idx) -> Pair {
        if a <= b {
            Pair(a, b)
        } else {
            Pair(b, a)
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.0 == self.1
    }

    pub fn contains(&self, i: Idx) -> bool {
        self.0 == i || self.1 == i
    }

    /// The other index of the pair when `i` is one of them.
    pub fn other(&self, i: Idx) -> Option<Idx> {
        if self.0 == i {
            Some(self.1)
        } else if self.1 == i {
            Some(self.0)
        } else {
            None
        }
    }
}

/// Sorted derivative-index triple for third-order metric partials.
pub fn triple(a: Idx, b: Idx, c: Idx) -> [Idx; 3] {
    let mut t = [a, b, c];
    t.sort_unstable();
    t
}

/// Unknown generator functions whose derivatives stay unexpanded atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FuncKind {
    /// Horizontal generator component `H[mu](x, g)`.
    H(Idx),
    /// Vertical generator component `Phi[mu,nu](x, g)`.
    Phi(Pair),
    /// Shifted vertical component `Phit[mu,nu]`.
    PhiTilde(Pair),
    /// Coordinate-change component `f[mu](x)`.
    F(Idx),
    /// Scalar function of x used by the linear-form analysis, `Ax`.
    AFun,
    /// Matrix function of x used by the linear-form analysis, `Bx[mu,nu]`.
    BFun(Pair),
}

impl FuncKind {
    /// (max x-order, max g-order, max total order)
    pub fn caps(&self) -> (u32, u32, u32) {
        match self {
            // the shifted-field second prolongation reaches third
            // coordinate derivatives of the horizontal components
            FuncKind::H(_) => (3, 2, 3),
            FuncKind::Phi(_) | FuncKind::PhiTilde(_) => (2, 2, 2),
            FuncKind::F(_) => (3, 0, 3),
            FuncKind::AFun | FuncKind::BFun(_) => (2, 0, 2),
        }
    }

    fn base_name(&self) -> String {
        match self {
            FuncKind::H(i) => format!("H[{}]", i),
            FuncKind::Phi(p) => format!("Phi[{},{}]", p.0, p.1),
            FuncKind::PhiTilde(p) => format!("Phit[{},{}]", p.0, p.1),
            FuncKind::F(i) => format!("f[{}]", i),
            FuncKind::AFun => "Ax".to_string(),
            FuncKind::BFun(p) => format!("Bx[{},{}]", p.0, p.1),
        }
    }
}

/// A derivative atom of an unknown function: the function kind plus the
/// multisets of x-indices and metric pairs it has been differentiated by.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncAtom {
    pub kind: FuncKind,
    pub x_derivs: Vec<Idx>,
    pub g_derivs: Vec<Pair>,
}

impl FuncAtom {
    pub fn base(kind: FuncKind) -> FuncAtom {
        FuncAtom { kind, x_derivs: Vec::new(), g_derivs: Vec::new() }
    }

    pub fn order(&self) -> u32 {
        (self.x_derivs.len() + self.g_derivs.len()) as u32
    }

    fn within_caps(&self) -> bool {
        let (mx, mg, mt) = self.kind.caps();
        self.x_derivs.len() as u32 <= mx
            && self.g_derivs.len() as u32 <= mg
            && self.order() <= mt
    }

    /// One more explicit-x derivative, if the cap allows it.
    pub fn diff_x(&self, i: Idx) -> Result<FuncAtom, JetError> {
        let mut out = self.clone();
        out.x_derivs.push(i);
        out.x_derivs.sort_unstable();
        if out.within_caps() {
            Ok(out)
        } else {
            Err(JetError::DerivativeCap(self.kind.base_name()))
        }
    }

    /// One more metric derivative, if the cap allows it.
    pub fn diff_g(&self, p: Pair) -> Result<FuncAtom, JetError> {
        let mut out = self.clone();
        out.g_derivs.push(p);
        out.g_derivs.sort_unstable();
        if out.within_caps() {
            Ok(out)
        } else {
            Err(JetError::DerivativeCap(self.kind.base_name()))
        }
    }
}

/// True constants: atoms every derivative operator kills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    /// Uniform rescaling amplitude `A`.
    ConstA,
    /// Constant shift matrix `B[mu,nu]`.
    ConstB(Pair),
    /// Two-dimensional closed-form coefficients `ca..cg`.
    TwoDim(TwoDimConst),
    /// Fresh scaling variable for homogeneity checks.
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TwoDimConst {
    A,
    B,
    C,
    D,
    F,
    G,
}

impl TwoDimConst {
    pub const ALL: [TwoDimConst; 6] = [
        TwoDimConst::A,
        TwoDimConst::B,
        TwoDimConst::C,
        TwoDimConst::D,
        TwoDimConst::F,
        TwoDimConst::G,
    ];

    fn name(&self) -> &'static str {
        match self {
            TwoDimConst::A => "ca",
            TwoDimConst::B => "cb",
            TwoDimConst::C => "cc",
            TwoDimConst::D => "cd",
            TwoDimConst::F => "cf",
            TwoDimConst::G => "cg",
        }
    }
}

/// An atomic jet-space variable. The derived `Ord` fixes the canonical
/// global variable order (and with it the monomial order).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JetVar {
    Lambda,
    Param(Param),
    Coord(Idx),
    Metric(Pair),
    InvMetric(Pair),
    D1(Idx, Pair),
    D2(Pair, Pair),
    D3([Idx; 3], Pair),
    Func(FuncAtom),
}

impl JetVar {
    pub fn metric(a: Idx, b: Idx) -> JetVar {
        JetVar::Metric(Pair::new(a, b))
    }

    pub fn inv(a: Idx, b: Idx) -> JetVar {
        JetVar::InvMetric(Pair::new(a, b))
    }

    pub fn d1(k: Idx, a: Idx, b: Idx) -> JetVar {
        JetVar::D1(k, Pair::new(a, b))
    }

    pub fn d2(k: Idx, l: Idx, a: Idx, b: Idx) -> JetVar {
        JetVar::D2(Pair::new(k, l), Pair::new(a, b))
    }

    pub fn d3(k: Idx, l: Idx, e: Idx, a: Idx, b: Idx) -> JetVar {
        JetVar::D3(triple(k, l, e), Pair::new(a, b))
    }

    pub fn max_index(&self) -> Idx {
        fn pmax(p: &Pair) -> Idx {
            p.1
        }
        match self {
            JetVar::Lambda => 0,
            JetVar::Param(Param::ConstB(p)) => pmax(p),
            JetVar::Param(_) => 0,
            JetVar::Coord(i) => *i,
            JetVar::Metric(p) | JetVar::InvMetric(p) => pmax(p),
            JetVar::D1(k, p) => (*k).max(pmax(p)),
            JetVar::D2(d, p) => pmax(d).max(pmax(p)),
            JetVar::D3(t, p) => t[2].max(pmax(p)),
            JetVar::Func(f) => {
                let mut m = match &f.kind {
                    FuncKind::H(i) | FuncKind::F(i) => *i,
                    FuncKind::Phi(p) | FuncKind::PhiTilde(p) | FuncKind::BFun(p) => pmax(p),
                    FuncKind::AFun => 0,
                };
                for &i in &f.x_derivs {
                    m = m.max(i);
                }
                for p in &f.g_derivs {
                    m = m.max(pmax(p));
                }
                m
            }
        }
    }

    /// Stable serialization name; see the grammar notes in the crate docs.
    pub fn name(&self) -> String {
        match self {
            JetVar::Lambda => "lam".to_string(),
            JetVar::Param(Param::ConstA) => "A".to_string(),
            JetVar::Param(Param::ConstB(p)) => format!("B[{},{}]", p.0, p.1),
            JetVar::Param(Param::TwoDim(c)) => c.name().to_string(),
            JetVar::Param(Param::Scale) => "scl".to_string(),
            JetVar::Coord(i) => format!("x{}", i),
            JetVar::Metric(p) => format!("g[{},{}]", p.0, p.1),
            JetVar::InvMetric(p) => format!("gi[{},{}]", p.0, p.1),
            JetVar::D1(k, p) => format!("d[{}]g[{},{}]", k, p.0, p.1),
            JetVar::D2(d, p) => format!("dd[{},{}]g[{},{}]", d.0, d.1, p.0, p.1),
            JetVar::D3(t, p) => format!("ddd[{},{},{}]g[{},{}]", t[0], t[1], t[2], p.0, p.1),
            JetVar::Func(f) => {
                let base = f.kind.base_name();
                if f.order() == 0 {
                    return base;
                }
                let prefix = "d".repeat(f.order() as usize);
                let mut args: Vec<String> = f.x_derivs.iter().map(|i| format!("x{}", i)).collect();
                args.extend(f.g_derivs.iter().map(|p| format!("g[{},{}]", p.0, p.1)));
                let args = args.join(",");
                match base.split_once('[') {
                    Some((head, tail)) => {
                        // tail is "indices]"
                        let indices = &tail[..tail.len() - 1];
                        format!("{}{}[{};{}]", prefix, head, indices, args)
                    }
                    None => format!("{}{}[;{}]", prefix, base, args),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JetError {
    #[error("index {0} out of range 1..={1}")]
    IndexOutOfRange(Idx, Idx),
    #[error("derivative order cap exceeded on {0}")]
    DerivativeCap(String),
    #[error("variable {0} is not registered in this context")]
    Unregistered(String),
    #[error("dimension {0} out of supported range")]
    Dimension(Idx),
    #[error("generator function atoms need a full registry (dim <= {0})")]
    ConstructionOnly(Idx),
    #[error("cannot parse variable name `{0}`")]
    Parse(String),
}

/// How identity checks treat the inverse metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseMode {
    /// `gi[a,b]` atoms are formally independent variables.
    Formal,
    /// Identities are certified after substituting the adjugate/determinant
    /// inverse and cross-multiplying.
    Exact,
}

/// Largest dimension for which generator-function atoms are enumerated.
pub const FUNC_ATOM_DIM_CAP: Idx = 6;

/// Dimension plus the immutable variable registry.
#[derive(Debug)]
pub struct MetricContext {
    dim: Idx,
    mode: InverseMode,
    vars: Vec<JetVar>,
    index: HashMap<JetVar, VarId>,
    has_func_atoms: bool,
}

impl MetricContext {
    pub fn new(dim: Idx) -> Result<MetricContext, JetError> {
        MetricContext::with_mode(dim, InverseMode::Formal)
    }

    pub fn with_mode(dim: Idx, mode: InverseMode) -> Result<MetricContext, JetError> {
        if dim < 2 {
            return Err(JetError::Dimension(dim));
        }
        let has_func_atoms = dim <= FUNC_ATOM_DIM_CAP;
        let mut vars = enumerate_registry(dim, has_func_atoms);
        vars.sort();
        vars.dedup();
        let index = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), VarId(i as u32)))
            .collect();
        Ok(MetricContext { dim, mode, vars, index, has_func_atoms })
    }

    pub fn dim(&self) -> Idx {
        self.dim
    }

    pub fn mode(&self) -> InverseMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: InverseMode) {
        self.mode = mode;
    }

    pub fn has_func_atoms(&self) -> bool {
        self.has_func_atoms
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn indices(&self) -> impl Iterator<Item = Idx> + Clone {
        1..=self.dim
    }

    pub fn check_idx(&self, i: Idx) -> Result<(), JetError> {
        if i >= 1 && i <= self.dim {
            Ok(())
        } else {
            Err(JetError::IndexOutOfRange(i, self.dim))
        }
    }

    /// Canonical metric pairs `(a <= b)` in lexicographic order.
    pub fn pairs(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        for a in self.indices() {
            for b in a..=self.dim {
                out.push(Pair(a, b));
            }
        }
        out
    }

    pub fn n_pairs(&self) -> usize {
        (self.dim as usize * (self.dim as usize + 1)) / 2
    }

    /// Position of a canonical pair in `pairs()` order.
    pub fn pair_slot(&self, p: Pair) -> usize {
        let n = self.dim as usize;
        let a = p.0 as usize - 1;
        let b = p.1 as usize - 1;
        // row offset: sum over earlier rows of their lengths (n - k)
        let row_offset: usize = (0..a).map(|k| n - k).sum();
        row_offset + (b - a)
    }

    pub fn var(&self, v: &JetVar) -> VarId {
        self.try_var(v)
            .unwrap_or_else(|| panic!("variable {} not in registry (dim {})", v.name(), self.dim))
    }

    pub fn try_var(&self, v: &JetVar) -> Option<VarId> {
        self.index.get(v).copied()
    }

    pub fn jet(&self, id: VarId) -> &JetVar {
        &self.vars[id.0 as usize]
    }

    pub fn all_vars(&self) -> &[JetVar] {
        &self.vars
    }

    // -- expression builders ------------------------------------------------

    pub fn expr(&self, v: &JetVar) -> Expr {
        Expr::var(self.var(v))
    }

    pub fn lambda(&self) -> Expr {
        self.expr(&JetVar::Lambda)
    }

    pub fn coord(&self, i: Idx) -> Expr {
        self.expr(&JetVar::Coord(i))
    }

    pub fn param(&self, p: Param) -> Expr {
        self.expr(&JetVar::Param(p))
    }

    pub fn metric(&self, a: Idx, b: Idx) -> Expr {
        self.expr(&JetVar::metric(a, b))
    }

    pub fn inv_metric(&self, a: Idx, b: Idx) -> Expr {
        self.expr(&JetVar::inv(a, b))
    }

    pub fn d1(&self, k: Idx, a: Idx, b: Idx) -> Expr {
        self.expr(&JetVar::d1(k, a, b))
    }

    pub fn d2(&self, k: Idx, l: Idx, a: Idx, b: Idx) -> Expr {
        self.expr(&JetVar::d2(k, l, a, b))
    }

    pub fn func(&self, atom: FuncAtom) -> Expr {
        self.expr(&JetVar::Func(atom))
    }

    // -- canonicalization ---------------------------------------------------

    /// Validates index ranges and returns the canonical representative.
    /// Idempotent: feeding a canonical variable back returns it unchanged.
    pub fn canon(&self, v: JetVar) -> Result<JetVar, JetError> {
        let canon = match v {
            JetVar::Metric(Pair(a, b)) => JetVar::metric(a, b),
            JetVar::InvMetric(Pair(a, b)) => JetVar::inv(a, b),
            JetVar::D1(k, Pair(a, b)) => JetVar::d1(k, a, b),
            JetVar::D2(Pair(k, l), Pair(a, b)) => JetVar::d2(k, l, a, b),
            JetVar::D3(t, Pair(a, b)) => JetVar::d3(t[0], t[1], t[2], a, b),
            JetVar::Func(f) => {
                let mut f = f;
                f.x_derivs.sort_unstable();
                f.g_derivs.sort_unstable();
                let f = FuncAtom {
                    kind: match f.kind {
                        FuncKind::Phi(Pair(a, b)) => FuncKind::Phi(Pair::new(a, b)),
                        FuncKind::PhiTilde(Pair(a, b)) => FuncKind::PhiTilde(Pair::new(a, b)),
                        FuncKind::BFun(Pair(a, b)) => FuncKind::BFun(Pair::new(a, b)),
                        k => k,
                    },
                    x_derivs: f.x_derivs,
                    g_derivs: f.g_derivs.into_iter().map(|Pair(a, b)| Pair::new(a, b)).collect(),
                };
                JetVar::Func(f)
            }
            other => other,
        };
        for i in collect_indices(&canon) {
            self.check_idx(i)?;
        }
        Ok(canon)
    }

    /// All canonical jet variables of a given derivative order, in registry
    /// order: order 0 are metric components, 1..3 their partials.
    pub fn enumerate_vars(&self, order: u8) -> Vec<JetVar> {
        let mut out: Vec<JetVar> = Vec::new();
        match order {
            0 => {
                for p in self.pairs() {
                    out.push(JetVar::Metric(p));
                }
            }
            1 => {
                for k in self.indices() {
                    for p in self.pairs() {
                        out.push(JetVar::D1(k, p));
                    }
                }
            }
            2 => {
                for d in self.pairs() {
                    for p in self.pairs() {
                        out.push(JetVar::D2(d, p));
                    }
                }
            }
            3 => {
                for a in self.indices() {
                    for b in a..=self.dim {
                        for c in b..=self.dim {
                            for p in self.pairs() {
                                out.push(JetVar::D3([a, b, c], p));
                            }
                        }
                    }
                }
            }
            _ => panic!("derivative order {} out of range 0..=3", order),
        }
        out.sort();
        out
    }

    // -- index symbols ------------------------------------------------------

    /// All-upper derivative symbol of the inverse metric: products of
    /// inverse-metric atoms, with the diagonal/off-diagonal split on the
    /// last index pair.
    pub fn x_symbol_upper(&self, mu: Idx, nu: Idx, ka: Idx, la: Idx) -> Expr {
        let t1 = self.inv_metric(mu, ka).mul(&self.inv_metric(nu, la));
        if ka != la {
            let t2 = self.inv_metric(mu, la).mul(&self.inv_metric(nu, ka));
            &t1 + &t2
        } else {
            t1
        }
    }

    /// Mixed symbol: the rational constant giving the derivative of a
    /// written-out metric partial with respect to a canonical atom.
    pub fn x_symbol_mixed(&self, mu: Idx, nu: Idx, ka: Idx, la: Idx) -> Expr {
        let hit = |a: Idx, b: Idx, c: Idx, d: Idx| -> i64 { (a == c && b == d) as i64 };
        let val = if ka != la {
            hit(mu, nu, ka, la) + hit(mu, nu, la, ka)
        } else {
            hit(mu, nu, ka, la)
        };
        Expr::constant(rat(val))
    }

    /// One lowered index: `delta * gi + delta * gi` with the branch on the
    /// trailing pair.
    pub fn x_symbol_one_low(&self, al: Idx, ga: Idx, rho: Idx, si: Idx) -> Expr {
        let mut out = Expr::zero();
        if al == rho {
            out.add_assign(&self.inv_metric(ga, si));
        }
        if rho != si && al == si {
            out.add_assign(&self.inv_metric(ga, rho));
        }
        out
    }

    /// Restricted-sum weight symbol: `gi` on the diagonal, `2 gi` off it.
    pub fn g_cap_symbol(&self, rho: Idx, si: Idx) -> Expr {
        let g = self.inv_metric(rho, si);
        if rho == si {
            g
        } else {
            g.scale(&rat(2))
        }
    }
}

fn collect_indices(v: &JetVar) -> Vec<Idx> {
    let mut out = Vec::new();
    match v {
        JetVar::Lambda | JetVar::Param(Param::ConstA) | JetVar::Param(Param::TwoDim(_)) | JetVar::Param(Param::Scale) => {}
        JetVar::Param(Param::ConstB(p)) => out.extend([p.0, p.1]),
        JetVar::Coord(i) => out.push(*i),
        JetVar::Metric(p) | JetVar::InvMetric(p) => out.extend([p.0, p.1]),
        JetVar::D1(k, p) => out.extend([*k, p.0, p.1]),
        JetVar::D2(d, p) => out.extend([d.0, d.1, p.0, p.1]),
        JetVar::D3(t, p) => out.extend([t[0], t[1], t[2], p.0, p.1]),
        JetVar::Func(f) => {
            match &f.kind {
                FuncKind::H(i) | FuncKind::F(i) => out.push(*i),
                FuncKind::Phi(p) | FuncKind::PhiTilde(p) | FuncKind::BFun(p) => out.extend([p.0, p.1]),
                FuncKind::AFun => {}
            }
            out.extend(f.x_derivs.iter().copied());
            for p in &f.g_derivs {
                out.extend([p.0, p.1]);
            }
        }
    }
    out
}

fn enumerate_registry(dim: Idx, with_func_atoms: bool) -> Vec<JetVar> {
    let mut vars: Vec<JetVar> = vec![JetVar::Lambda, JetVar::Param(Param::ConstA), JetVar::Param(Param::Scale)];
    let pairs: Vec<Pair> = {
        let mut v = Vec::new();
        for a in 1..=dim {
            for b in a..=dim {
                v.push(Pair(a, b));
            }
        }
        v
    };
    for c in TwoDimConst::ALL {
        vars.push(JetVar::Param(Param::TwoDim(c)));
    }
    for &p in &pairs {
        vars.push(JetVar::Param(Param::ConstB(p)));
    }
    for i in 1..=dim {
        vars.push(JetVar::Coord(i));
    }
    for &p in &pairs {
        vars.push(JetVar::Metric(p));
        vars.push(JetVar::InvMetric(p));
    }
    for k in 1..=dim {
        for &p in &pairs {
            vars.push(JetVar::D1(k, p));
        }
    }
    for &d in &pairs {
        for &p in &pairs {
            vars.push(JetVar::D2(d, p));
        }
    }
    for a in 1..=dim {
        for b in a..=dim {
            for c in b..=dim {
                for &p in &pairs {
                    vars.push(JetVar::D3([a, b, c], p));
                }
            }
        }
    }
    if with_func_atoms {
        let mut kinds: Vec<FuncKind> = Vec::new();
        for i in 1..=dim {
            kinds.push(FuncKind::H(i));
            kinds.push(FuncKind::F(i));
        }
        for &p in &pairs {
            kinds.push(FuncKind::Phi(p));
            kinds.push(FuncKind::PhiTilde(p));
            kinds.push(FuncKind::BFun(p));
        }
        kinds.push(FuncKind::AFun);
        for kind in kinds {
            let (mx, mg, mt) = kind.caps();
            let x_multisets = multisets_upto(dim, mx);
            let g_multisets = pair_multisets_upto(&pairs, mg);
            for xs in &x_multisets {
                for gs in &g_multisets {
                    if (xs.len() + gs.len()) as u32 > mt {
                        continue;
                    }
                    vars.push(JetVar::Func(FuncAtom {
                        kind,
                        x_derivs: xs.clone(),
                        g_derivs: gs.clone(),
                    }));
                }
            }
        }
    }
    vars
}

fn multisets_upto(dim: Idx, max_len: u32) -> Vec<Vec<Idx>> {
    let mut out: Vec<Vec<Idx>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<Idx>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for base in &frontier {
            let start = base.last().copied().unwrap_or(1);
            for i in start..=dim {
                let mut s = base.clone();
                s.push(i);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn pair_multisets_upto(pairs: &[Pair], max_len: u32) -> Vec<Vec<Pair>> {
    let mut out: Vec<Vec<Pair>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<Pair>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for base in &frontier {
            let start = base.last().map(|p| pairs.iter().position(|q| q == p).unwrap()).unwrap_or(0);
            for (_i, &p) in pairs.iter().enumerate().skip(start) {
                let mut s = base.clone();
                s.push(p);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

// -- name parsing -----------------------------------------------------------

/// Parses the stable variable naming grammar back into a [`JetVar`].
pub fn parse_var_name(s: &str) -> Result<JetVar, JetError> {
    let err = || JetError::Parse(s.to_string());
    // the grammar is pure ASCII; rejecting everything else keeps the byte
    // slicing below safe
    if !s.is_ascii() || s.is_empty() {
        return Err(err());
    }
    match s {
        "lam" => return Ok(JetVar::Lambda),
        "A" => return Ok(JetVar::Param(Param::ConstA)),
        "scl" => return Ok(JetVar::Param(Param::Scale)),
        "Ax" => return Ok(JetVar::Func(FuncAtom::base(FuncKind::AFun))),
        _ => {}
    }
    for c in TwoDimConst::ALL {
        if s == c.name() {
            return Ok(JetVar::Param(Param::TwoDim(c)));
        }
    }
    if let Some(rest) = s.strip_prefix('x') {
        if let Ok(i) = rest.parse::<Idx>() {
            return Ok(JetVar::Coord(i));
        }
    }
    if let Some(rest) = s.strip_prefix("B[") {
        let inner = rest.strip_suffix(']').ok_or_else(err)?;
        let (a, b) = parse_two(inner).ok_or_else(err)?;
        return Ok(JetVar::Param(Param::ConstB(Pair::new(a, b))));
    }
    if let Some(rest) = s.strip_prefix("g[") {
        let inner = rest.strip_suffix(']').ok_or_else(err)?;
        let (a, b) = parse_two(inner).ok_or_else(err)?;
        return Ok(JetVar::metric(a, b));
    }
    if let Some(rest) = s.strip_prefix("gi[") {
        let inner = rest.strip_suffix(']').ok_or_else(err)?;
        let (a, b) = parse_two(inner).ok_or_else(err)?;
        return Ok(JetVar::inv(a, b));
    }
    // Jet derivative forms d[..]g[..], dd[..]g[..], ddd[..]g[..]
    let d_run = s.chars().take_while(|&c| c == 'd').count();
    if d_run >= 1 && s[d_run..].starts_with('[') {
        let rest = &s[d_run..];
        let close = rest.find(']').ok_or_else(err)?;
        let deriv_part = &rest[1..close];
        let comp = rest[close + 1..].strip_prefix("g[").ok_or_else(err)?;
        let comp = comp.strip_suffix(']').ok_or_else(err)?;
        let (a, b) = parse_two(comp).ok_or_else(err)?;
        let idxs: Vec<Idx> = deriv_part
            .split(',')
            .map(|t| t.trim().parse::<Idx>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        return match (d_run, idxs.as_slice()) {
            (1, [k]) => Ok(JetVar::d1(*k, a, b)),
            (2, [k, l]) => Ok(JetVar::d2(*k, *l, a, b)),
            (3, [k, l, e]) => Ok(JetVar::d3(*k, *l, *e, a, b)),
            _ => Err(err()),
        };
    }
    // Function atoms: optional d-prefix run, then base name, then optional
    // bracket with `indices;args`.
    let base_start = d_run;
    let rest = &s[base_start..];
    let (head, bracket) = match rest.find('[') {
        Some(i) => (&rest[..i], Some(&rest[i + 1..rest.len() - 1])),
        None => (rest, None),
    };
    if bracket.is_none() && d_run == 0 {
        return Err(err());
    }
    if let Some(b) = bracket {
        if !rest.ends_with(']') {
            return Err(err());
        }
        let (idx_part, arg_part) = match b.split_once(';') {
            Some((i, a)) => (i, Some(a)),
            None => (b, None),
        };
        let kind = match head {
            "H" => FuncKind::H(idx_part.parse::<Idx>().map_err(|_| err())?),
            "f" => FuncKind::F(idx_part.parse::<Idx>().map_err(|_| err())?),
            "Phi" => {
                let (a, c) = parse_two(idx_part).ok_or_else(err)?;
                FuncKind::Phi(Pair::new(a, c))
            }
            "Phit" => {
                let (a, c) = parse_two(idx_part).ok_or_else(err)?;
                FuncKind::PhiTilde(Pair::new(a, c))
            }
            "Bx" => {
                let (a, c) = parse_two(idx_part).ok_or_else(err)?;
                FuncKind::BFun(Pair::new(a, c))
            }
            "Ax" => {
                if !idx_part.is_empty() {
                    return Err(err());
                }
                FuncKind::AFun
            }
            _ => return Err(err()),
        };
        let mut atom = FuncAtom::base(kind);
        if let Some(args) = arg_part {
            for tok in split_top_level(args) {
                let tok = tok.trim();
                if let Some(xi) = tok.strip_prefix('x') {
                    atom.x_derivs.push(xi.parse::<Idx>().map_err(|_| err())?);
                } else if let Some(gp) = tok.strip_prefix("g[") {
                    let gp = gp.strip_suffix(']').ok_or_else(err)?;
                    let (a, c) = parse_two(gp).ok_or_else(err)?;
                    atom.g_derivs.push(Pair::new(a, c));
                } else {
                    return Err(err());
                }
            }
        }
        atom.x_derivs.sort_unstable();
        atom.g_derivs.sort_unstable();
        if atom.order() as usize != d_run || !atom.within_caps() {
            return Err(err());
        }
        return Ok(JetVar::Func(atom));
    }
    Err(err())
}

fn parse_two(s: &str) -> Option<(Idx, Idx)> {
    let (a, b) = s.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Splits on commas that sit outside any bracket nesting.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canon_sorts_symmetric_indices() {
        let ctx = MetricContext::new(3).unwrap();
        assert_eq!(
            ctx.canon(JetVar::Metric(Pair(2, 1))).unwrap(),
            JetVar::metric(1, 2)
        );
        assert_eq!(
            ctx.canon(JetVar::D2(Pair(3, 1), Pair(2, 2))).unwrap(),
            JetVar::d2(1, 3, 2, 2)
        );
        // fixed point
        assert_eq!(
            ctx.canon(JetVar::metric(1, 1)).unwrap(),
            JetVar::metric(1, 1)
        );
        // idempotence
        let v = ctx.canon(JetVar::D3([3, 1, 2], Pair(2, 1))).unwrap();
        assert_eq!(ctx.canon(v.clone()).unwrap(), v);
        // range check
        assert!(ctx.canon(JetVar::metric(1, 4)).is_err());
    }

    #[test]
    fn enumerate_counts_match_combinatorics() {
        for dim in 2..=4u8 {
            let ctx = MetricContext::new(dim).unwrap();
            let n = dim as usize;
            let p = n * (n + 1) / 2;
            assert_eq!(ctx.enumerate_vars(0).len(), p);
            assert_eq!(ctx.enumerate_vars(1).len(), n * p);
            assert_eq!(ctx.enumerate_vars(2).len(), p * p);
            let t = n * (n + 1) * (n + 2) / 6;
            assert_eq!(ctx.enumerate_vars(3).len(), t * p);
        }
        let ctx = MetricContext::new(2).unwrap();
        assert_eq!(ctx.enumerate_vars(0).len(), 3);
        assert_eq!(ctx.enumerate_vars(1).len(), 6);
        assert_eq!(ctx.enumerate_vars(2).len(), 9);
    }

    #[test]
    fn registry_is_ordered_and_complete() {
        let ctx = MetricContext::new(2).unwrap();
        let vars = ctx.all_vars();
        for w in vars.windows(2) {
            assert!(w[0] < w[1], "registry must be strictly increasing");
        }
        // spot-check round trip
        for v in vars.iter().take(200) {
            assert_eq!(ctx.jet(ctx.var(v)), v);
        }
    }

    #[test]
    fn x_symbol_examples() {
        let ctx = MetricContext::new(2).unwrap();
        // diagonal fixed point of the mixed symbol
        assert_eq!(ctx.x_symbol_mixed(1, 1, 1, 1), Expr::one());
        // off-diagonal mixed: exactly one delta product fires
        assert_eq!(ctx.x_symbol_mixed(1, 2, 1, 2), Expr::one());
        assert_eq!(ctx.x_symbol_mixed(2, 1, 1, 2), Expr::one());
        assert!(ctx.x_symbol_mixed(1, 1, 1, 2).is_zero());
        // upper symbol with repeated derivative pair
        let expect = ctx.inv_metric(1, 1).mul(&ctx.inv_metric(2, 1));
        assert_eq!(ctx.x_symbol_upper(1, 2, 1, 1), expect);
    }

    #[test]
    fn restricted_sum_collapse() {
        // sum over canonical pairs of A_(mn) X_{cd}^{mn} = A_cd, for
        // arbitrary symmetric Expr arrays (here: metric atoms and squares).
        for dim in 2..=3u8 {
            let ctx = MetricContext::new(dim).unwrap();
            for c in ctx.indices() {
                for d in ctx.indices() {
                    let mut sum = Expr::zero();
                    for p in ctx.pairs() {
                        let a_mn = ctx.metric(p.0, p.1).pow(2);
                        sum.add_assign(&a_mn.mul(&ctx.x_symbol_mixed(c, d, p.0, p.1)));
                    }
                    assert_eq!(sum, ctx.metric(c, d).pow(2));
                }
            }
        }
    }

    #[test]
    fn g_cap_symbol_weights() {
        let ctx = MetricContext::new(2).unwrap();
        assert_eq!(ctx.g_cap_symbol(1, 1), ctx.inv_metric(1, 1));
        assert_eq!(ctx.g_cap_symbol(1, 2), ctx.inv_metric(1, 2).scale(&rat(2)));
        assert_eq!(ctx.g_cap_symbol(1, 2), ctx.g_cap_symbol(2, 1));
    }

    #[test]
    fn naming_round_trip() {
        let ctx = MetricContext::new(3).unwrap();
        for v in ctx.all_vars() {
            let name = v.name();
            let parsed = parse_var_name(&name)
                .unwrap_or_else(|e| panic!("cannot parse {}: {}", name, e));
            assert_eq!(&parsed, v, "round trip failed for {}", name);
        }
    }

    #[test]
    fn naming_examples() {
        assert_eq!(JetVar::metric(2, 1).name(), "g[1,2]");
        assert_eq!(JetVar::d1(3, 1, 2).name(), "d[3]g[1,2]");
        assert_eq!(JetVar::d2(3, 1, 2, 2).name(), "dd[1,3]g[2,2]");
        let h = FuncAtom::base(FuncKind::H(2)).diff_x(1).unwrap();
        assert_eq!(JetVar::Func(h).name(), "dH[2;x1]");
        let phi = FuncAtom::base(FuncKind::Phi(Pair(1, 2)))
            .diff_g(Pair(1, 1))
            .unwrap();
        assert_eq!(JetVar::Func(phi).name(), "dPhi[1,2;g[1,1]]");
        let f = FuncAtom::base(FuncKind::F(1))
            .diff_x(2)
            .unwrap()
            .diff_x(1)
            .unwrap()
            .diff_x(2)
            .unwrap();
        assert_eq!(JetVar::Func(f).name(), "dddf[1;x1,x2,x2]");
        let a = FuncAtom::base(FuncKind::AFun).diff_x(1).unwrap();
        assert_eq!(JetVar::Func(a).name(), "dAx[;x1]");
    }

    #[test]
    fn derivative_caps_enforced() {
        let h = FuncAtom::base(FuncKind::H(1));
        let h3 = h.diff_x(1).unwrap().diff_x(1).unwrap().diff_x(2).unwrap();
        assert!(h3.diff_x(1).is_err());
        assert!(h3.diff_g(Pair(1, 1)).is_err());
        let phi = FuncAtom::base(FuncKind::Phi(Pair(1, 2)));
        let phi2 = phi.diff_x(1).unwrap().diff_g(Pair(1, 1)).unwrap();
        assert!(phi2.diff_x(1).is_err());
        let f = FuncAtom::base(FuncKind::F(1));
        assert!(f.diff_g(Pair(1, 1)).is_err());
        let f3 = f.diff_x(1).unwrap().diff_x(1).unwrap().diff_x(1).unwrap();
        assert!(f3.diff_x(2).is_err());
    }

    #[test]
    fn parser_rejects_malformed_names() {
        for bad in [
            "", "q", "g[1,2", "g[1]", "gi[0,1]x", "d[]g[1,1]", "dd[1]g[1,1]",
            "dH[2]", "ddH[2;x1]", "H[2;x1]", "f[1;g[1,1]]", "Phi[1,2;q3]",
            "dAx[x1]", "x", "xx1", "B[1]", "g[\u{e9},1]", "dddd f",
            // cap violations parse structurally but name no registered atom
            "df[1;g[1,1]]", "ddddf[1;x1,x1,x1,x1]", "dddPhi[1,1;x1,x1,x1]",
        ] {
            assert!(parse_var_name(bad).is_err(), "accepted {:?}", bad);
        }
    }

    #[test]
    fn large_dim_registry_is_construction_only() {
        let ctx = MetricContext::new(7).unwrap();
        assert!(!ctx.has_func_atoms());
        assert!(ctx
            .try_var(&JetVar::Func(FuncAtom::base(FuncKind::H(1))))
            .is_none());
        // jet atoms still present
        assert!(ctx.try_var(&JetVar::metric(7, 7)).is_some());
    }
}
