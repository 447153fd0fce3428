//! Solver contract and the `microlp` adapter.
//!
//! A solver receives an [`LpProblem`] and reports one of three statuses. An
//! optimal report is only trusted after its assignment has been checked against
//! every row. When that check or the solve itself fails, the problem is solved
//! again with every row widened by a growing amount. A widened problem that is
//! infeasible proves the original infeasible; a widened solution is accepted if
//! it satisfies the original rows to within the widening plus the tolerance.
//!
//! `microlp` occasionally stops at a vertex that violates a row by a few percent on
//! the band rows, whatever the row encoding, most often on nearly infeasible
//! instances. Before widening, such instances go to the `clarabel` interior-point
//! solver: its solution passes the same row check, and its infeasibility
//! certificate is taken as final.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT, ZeroConeT,
};
use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome, Variable};
use serde::{Deserialize, Serialize};

use super::problem::{LpProblem, LpRow, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Objective in the problem's own units, when optimal.
    pub value: Option<f64>,
    /// Variable values in the problem's own units, when optimal.
    pub solution: Option<Vec<f64>>,
    /// True when a fallback or widened solve produced the verdict.
    pub retried: bool,
}

impl LpOutcome {
    pub fn infeasible(retried: bool) -> Self {
        Self { status: LpStatus::Infeasible, value: None, solution: None, retried }
    }

    pub fn failure(retried: bool) -> Self {
        Self { status: LpStatus::NumericalFailure, value: None, solution: None, retried }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Anything that can solve an [`LpProblem`]. Implementations must allow concurrent calls.
pub trait LpSolver: Sync {
    fn solve(&self, problem: &LpProblem) -> LpOutcome;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Largest accepted row or bound violation, in scaled units.
    pub feasibility_tol: f64,
    /// Widening of the first retry, in scaled units.
    pub retry_widen: f64,
    /// Number of retries; each widens ten times more than the previous one.
    pub retries: u32,
}

impl Default for SolverOptions {
    /// `microlp` works to an absolute row tolerance of `1e-7`, so tighter acceptance
    /// thresholds reject correct solutions.
    fn default() -> Self {
        Self { feasibility_tol: 1e-7, retry_widen: 1e-8, retries: 3 }
    }
}

/// Dual-simplex solver from the `microlp` crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct MicroLpSolver {
    pub options: SolverOptions,
}

/// How a row with two finite sides reaches the solver.
#[derive(Clone, Copy)]
enum Ranged {
    /// Equality against a bounded slack variable.
    Slack,
    /// A `>=` and a `<=` row. Takes a different pivot path, which rescues
    /// instances where the slack form returns a point that violates a row.
    Split,
}

enum Attempt {
    Solved(Vec<f64>),
    Infeasible,
    Failed,
}

impl MicroLpSolver {
    pub fn new(options: SolverOptions) -> Self {
        Self { options }
    }

    fn attempt(&self, pb: &LpProblem, widen: f64, ranged: Ranged) -> Attempt {
        let direction = match pb.sense {
            Sense::Minimize => OptimizationDirection::Minimize,
            Sense::Maximize => OptimizationDirection::Maximize,
        };
        let mut lp = Problem::new(direction);
        let vars: Vec<Variable> = pb
            .variables
            .iter()
            .zip(&pb.objective)
            .map(|(v, &c)| lp.add_var(c / v.scale, (v.lower * v.scale, v.upper * v.scale)))
            .collect();
        for row in &pb.rows {
            let expr: Vec<(Variable, f64)> =
                row.coeffs.iter().map(|&(j, c)| (vars[j], c * row.scale / pb.variables[j].scale)).collect();
            let lo = row.lower * row.scale - widen;
            let hi = row.upper * row.scale + widen;
            match (lo.is_finite(), hi.is_finite()) {
                _ if lo == hi => lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, lo),
                // Two parallel inequalities make the basis degenerate; a bounded slack does not.
                (true, true) if matches!(ranged, Ranged::Split) => {
                    lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, lo);
                    lp.add_constraint(expr.as_slice(), ComparisonOp::Le, hi);
                }
                (true, true) => {
                    let slack = lp.add_var(0.0, (lo, hi));
                    let mut with_slack = expr;
                    with_slack.push((slack, -1.0));
                    lp.add_constraint(with_slack.as_slice(), ComparisonOp::Eq, 0.0);
                }
                (true, false) => lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, lo),
                (false, true) => lp.add_constraint(expr.as_slice(), ComparisonOp::Le, hi),
                (false, false) => {}
            }
        }
        match lp.solve() {
            Ok(SolveOutcome::Solution(sol)) => Attempt::Solved(
                vars.iter().zip(&pb.variables).map(|(&v, meta)| sol.var_value(v) / meta.scale).collect(),
            ),
            Ok(SolveOutcome::Interrupted(_)) => Attempt::Failed,
            Err(microlp::Error::Infeasible) => Attempt::Infeasible,
            Err(_) => Attempt::Failed,
        }
    }
}

/// Scaled coefficients below this are dropped before the interior-point solve.
/// Scaled masses sum to about one, so a row moves by about this much at most,
/// while subnormal binomial tails otherwise end the solve in a numerical error.
const IP_PRUNE: f64 = 1e-16;

/// Solves the scaled problem with `clarabel`. Only a clean `Solved` status counts.
fn interior_point(pb: &LpProblem) -> Attempt {
    let n = pb.variables.len();
    let sign = match pb.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let q: Vec<f64> = pb.objective.iter().zip(&pb.variables).map(|(&c, v)| sign * c / v.scale).collect();
    // Rows of A·x + s = b with s = 0 for the equalities and s >= 0 for the rest.
    let scaled = |r: &LpRow, s: f64| -> Vec<(usize, f64)> {
        r.coeffs.iter().map(|&(j, c)| (j, s * c * r.scale / pb.variables[j].scale)).collect()
    };
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for r in pb.rows.iter().filter(|r| r.lower == r.upper) {
        rows.push((scaled(r, 1.0), r.upper * r.scale));
    }
    let n_eq = rows.len();
    for r in pb.rows.iter().filter(|r| r.lower != r.upper) {
        if r.upper.is_finite() {
            rows.push((scaled(r, 1.0), r.upper * r.scale));
        }
        if r.lower.is_finite() {
            rows.push((scaled(r, -1.0), -r.lower * r.scale));
        }
    }
    for (j, v) in pb.variables.iter().enumerate() {
        if v.upper.is_finite() {
            rows.push((vec![(j, 1.0)], v.upper * v.scale));
        }
        if v.lower.is_finite() {
            rows.push((vec![(j, -1.0)], -v.lower * v.scale));
        }
    }
    let (mut ri, mut ci, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    for (i, (coeffs, _)) in rows.iter().enumerate() {
        for &(j, c) in coeffs.iter().filter(|&&(_, c)| c.abs() >= IP_PRUNE) {
            ri.push(i);
            ci.push(j);
            vals.push(c);
        }
    }
    let b: Vec<f64> = rows.iter().map(|(_, rhs)| *rhs).collect();
    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, n, ri, ci, vals);
    let p = CscMatrix::zeros((n, n));
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    if n_eq > 0 {
        cones.push(ZeroConeT(n_eq));
    }
    if m > n_eq {
        cones.push(NonnegativeConeT(m - n_eq));
    }
    let Ok(settings) = DefaultSettingsBuilder::default().verbose(false).build() else {
        return Attempt::Failed;
    };
    let Ok(mut solver) = DefaultSolver::new(&p, &q, &a, &b, &cones, settings) else {
        return Attempt::Failed;
    };
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved => {
            Attempt::Solved(solver.solution.x.iter().zip(&pb.variables).map(|(&x, v)| x / v.scale).collect())
        }
        SolverStatus::PrimalInfeasible => Attempt::Infeasible,
        _ => Attempt::Failed,
    }
}

impl LpSolver for MicroLpSolver {
    fn solve(&self, pb: &LpProblem) -> LpOutcome {
        if pb.validate().is_err() {
            return LpOutcome::failure(false);
        }
        let tol = self.options.feasibility_tol;
        let optimal = |x: Vec<f64>, retried| LpOutcome {
            status: LpStatus::Optimal,
            value: Some(pb.objective_value(&x)),
            solution: Some(x),
            retried,
        };
        // A plain infeasibility report goes straight to the widening ladder; the
        // other solves only run when microlp claimed a point that fails the check.
        let mut suspect = false;
        for ranged in [Ranged::Slack, Ranged::Split] {
            match self.attempt(pb, 0.0, ranged) {
                Attempt::Solved(x) if pb.max_violation(&x) <= tol => return optimal(x, suspect),
                Attempt::Infeasible if !suspect => break,
                _ => suspect = true,
            }
        }
        if suspect {
            // microlp's answer is already known to be wrong here, so an infeasibility
            // certificate from the interior-point solver settles the instance.
            match interior_point(pb) {
                Attempt::Solved(x) if pb.max_violation(&x) <= tol => return optimal(x, true),
                Attempt::Infeasible => return LpOutcome::infeasible(true),
                _ => {}
            }
        }
        let mut widen = self.options.retry_widen;
        for _ in 0..self.options.retries {
            for ranged in [Ranged::Slack, Ranged::Split] {
                match self.attempt(pb, widen, ranged) {
                    Attempt::Solved(x) if pb.max_violation(&x) <= widen + tol => return optimal(x, true),
                    Attempt::Infeasible => return LpOutcome::infeasible(true),
                    Attempt::Solved(_) | Attempt::Failed => {}
                }
            }
            widen *= 10.0;
        }
        LpOutcome::failure(true)
    }
}
