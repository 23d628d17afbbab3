//! Machine-readable reports and certificates.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::expr::Expr;
use crate::jet::MetricContext;
use crate::textform::expr_to_text;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Status::Pass)
    }
}

/// One verified stage inside a proof report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    /// What was used: number of constraint expressions consumed.
    pub constraints_used: usize,
    /// Atoms this stage eliminates (forced to zero or rewritten), by name.
    pub atoms_eliminated: Vec<String>,
    /// Exact residual check outcome.
    pub residual_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofReport {
    pub schema: u32,
    pub kind: String,
    pub dim: u8,
    pub step: String,
    pub status: Status,
    pub stages: Vec<Stage>,
}

impl ProofReport {
    pub fn new(dim: u8, step: &str, stages: Vec<Stage>) -> ProofReport {
        let status = Status::from_bool(stages.iter().all(|s| s.residual_ok));
        ProofReport {
            schema: SCHEMA_VERSION,
            kind: "deduction".to_string(),
            dim,
            step: step.to_string(),
            status,
            stages,
        }
    }

    pub fn ok(&self) -> bool {
        self.status.is_pass()
    }
}

/// One step of the final classification certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertStep {
    pub name: String,
    /// Identifier of the mathematical statement the step certifies.
    pub rule: String,
    pub status: Status,
    /// Hash of the canonical text of the residual expressions.
    pub residual_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: u32,
    pub kind: String,
    pub dim: u8,
    pub lambda: String,
    pub steps: Vec<CertStep>,
    pub conclusion: String,
}

impl Certificate {
    pub fn ok(&self) -> bool {
        self.steps.iter().all(|s| s.status.is_pass())
    }
}

/// Deterministic hash of a residual list in canonical text form.
pub fn residual_hash(ctx: &MetricContext, residuals: &[Expr]) -> String {
    let mut hasher = Sha256::new();
    for r in residuals {
        hasher.update(expr_to_text(ctx, r).as_bytes());
        hasher.update(b"\n");
    }
    format!("sha256:{:x}", hasher.finalize())
}
