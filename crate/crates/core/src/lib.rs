//! Exact symbolic machinery for the point-symmetry analysis of the vacuum
//! Einstein equations in N dimensions with a cosmological term.
//!
//! The crate builds the Einstein system over jet-space atoms, prolongs
//! generator vector fields to second order, extracts the determining
//! equations whose coefficients must vanish identically, and certifies the
//! resulting classification: general coordinate transformations always
//! generate symmetries, and uniform metric rescalings do exactly when the
//! cosmological term vanishes. Everything is exact rational arithmetic; a
//! random-point evaluation oracle independently cross-checks every identity.
//!
//! # Variable naming
//!
//! Serialized expressions use a stable grammar, round-trippable through
//! [`textform`]:
//!
//! | form | meaning |
//! |------|---------|
//! | `lam` | cosmological parameter |
//! | `x2` | coordinate |
//! | `g[1,2]`, `gi[1,2]` | metric and formal inverse components |
//! | `d[3]g[1,2]` | first metric partial |
//! | `dd[1,3]g[2,2]`, `ddd[1,2,3]g[1,1]` | higher metric partials |
//! | `H[2]`, `Phi[1,2]`, `Phit[1,2]`, `f[1]`, `Ax`, `Bx[1,2]` | generator functions |
//! | `dH[2;x1]`, `ddPhi[1,2;x1,g[1,1]]`, `dddf[1;x1,x2,x2]` | their derivative atoms |
//! | `A`, `B[1,2]`, `ca`..`cg`, `scl` | true constants |
//!
//! Derivative atoms carry one `d` per derivative; bracket arguments list the
//! x-slots then the g-slots, each sorted.

pub mod deriv;
pub mod determining;
pub mod expr;
pub mod frac;
pub mod geometry;
pub mod jet;
pub mod liealg;
pub mod linsys;
pub mod monomial;
pub mod oracle;
pub mod prolong;
pub mod rational;
pub mod report;
pub mod textform;

pub use expr::Expr;
pub use frac::FracExpr;
pub use jet::{FuncAtom, FuncKind, Idx, JetError, JetVar, MetricContext, Pair, Param};
pub use monomial::{Monomial, VarId};
pub use rational::Rat;
