//! Detecting samples that cannot come from independent draws.
//!
//! If no histogram at all satisfies the Good-Turing bands and the mass rows, the
//! frequency-of-frequencies vector is implausible for an IID sample, for example
//! because accounts were duplicated.

use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyEncoding;
use crate::scalar::Scalar;

use super::mesh::{LpParams, Mesh};
use super::problem::{LpContext, LpProblem};
use super::solver::{LpSolver, LpStatus};
use super::MeshLpError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IidReport {
    pub lower_feasible: bool,
    pub upper_feasible: bool,
    /// Rows whose removal alone restores feasibility, prefixed by `lower:` or `upper:`.
    pub implicated_rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum IidVerdict {
    Consistent,
    Inconsistent(IidReport),
}

fn feasible(pb: &LpProblem, solver: &dyn LpSolver, what: &str) -> Result<bool, MeshLpError> {
    match solver.solve(pb).status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        LpStatus::NumericalFailure => {
            Err(MeshLpError::Domain(format!("LP solver failed numerically on the {what} consistency rows")))
        }
    }
}

/// Rows whose individual removal makes `pb` feasible.
fn implicated(pb: &LpProblem, solver: &dyn LpSolver, prefix: &str) -> Result<Vec<String>, MeshLpError> {
    let mut out = Vec::new();
    for k in 0..pb.rows.len() {
        let mut relaxed = pb.clone();
        let row = relaxed.rows.remove(k);
        if feasible(&relaxed, solver, prefix)? {
            out.push(format!("{prefix}:{}", row.label));
        }
    }
    Ok(out)
}

/// Feasibility of the band and mass rows of both rounded programs.
pub fn check_iid_consistency<F: Scalar>(
    enc: &FrequencyEncoding,
    mesh: &Mesh<F>,
    params: &LpParams<F>,
    solver: &dyn LpSolver,
) -> Result<IidVerdict, MeshLpError> {
    if enc.is_empty() {
        return Err(MeshLpError::EmptyCorpus);
    }
    let ctx = LpContext::new(mesh, enc, params)?;
    let lower = ctx.feasibility(false);
    let upper = ctx.feasibility(true);
    let lower_feasible = feasible(&lower, solver, "lower")?;
    let upper_feasible = feasible(&upper, solver, "upper")?;
    if lower_feasible && upper_feasible {
        return Ok(IidVerdict::Consistent);
    }
    let mut implicated_rows = Vec::new();
    if !lower_feasible {
        implicated_rows.extend(implicated(&lower, solver, "lower")?);
    }
    if !upper_feasible {
        implicated_rows.extend(implicated(&upper, solver, "upper")?);
    }
    Ok(IidVerdict::Inconsistent(IidReport { lower_feasible, upper_feasible, implicated_rows }))
}
