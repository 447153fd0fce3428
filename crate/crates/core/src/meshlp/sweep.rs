//! The idx sweep: one LP per guess of the block that the G-th guess falls in.
//!
//! The instances are independent and solved in parallel. Results are gathered in
//! idx order, so the reported optimum and its idx do not depend on scheduling.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::bounds::{BoundPoint, Kind, Method, Target};
use crate::corpus::FrequencyEncoding;
use crate::scalar::Scalar;

use super::dump::dump_to_dir;
use super::mesh::{LpParams, Mesh};
use super::problem::{LpContext, LpProblem, TaskKind};
use super::solver::{LpOutcome, LpSolver, LpStatus};
use super::MeshLpError;

/// Whether to evaluate every idx or a coarse subset refined around the best ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pruning {
    #[default]
    Off,
    /// Solve every `stride`-th idx, then every idx within `stride` of the three best.
    /// Heuristic: may miss the true optimum, and therefore the bound's guarantee.
    Coarse { stride: usize },
}

/// Optimum of one sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    /// Bound on λ_G (objective already sign-corrected for `b = −1`).
    pub value: f64,
    /// idx attaining `value`; the smallest one on ties.
    pub idx: usize,
    pub feasible: usize,
    pub evaluated: usize,
    pub retried: usize,
}

/// LP bounds for one sample at any number of guessing budgets.
#[derive(Debug, Clone)]
pub struct LpBounder<F> {
    ctx: LpContext,
    delta: F,
    q: F,
    pruning: Pruning,
    dump_dir: Option<PathBuf>,
}

impl<F: Scalar> LpBounder<F> {
    pub fn new(mesh: &Mesh<F>, enc: &FrequencyEncoding, params: &LpParams<F>) -> Result<Self, MeshLpError> {
        Ok(Self {
            ctx: LpContext::new(mesh, enc, params)?,
            delta: params.delta(),
            q: mesh.q(),
            pruning: Pruning::Off,
            dump_dir: None,
        })
    }

    pub fn with_pruning(mut self, pruning: Pruning) -> Self {
        self.pruning = pruning;
        self
    }

    /// Writes every generated instance to `dir` in LP format.
    pub fn with_dump_dir(mut self, dir: Option<PathBuf>) -> Self {
        self.dump_dir = dir;
        self
    }

    pub fn context(&self) -> &LpContext {
        &self.ctx
    }

    fn build(&self, task: TaskKind, g: u64, b: i8, idx: usize) -> Result<LpProblem, MeshLpError> {
        match task {
            TaskKind::Lp1 => self.ctx.lp1(g, b, idx),
            TaskKind::Lp1a => self.ctx.lp1a(g, b, idx),
            TaskKind::Lower => self.ctx.lower(g, idx),
            TaskKind::Upper => self.ctx.upper(g, idx),
            TaskKind::Feasibility => Err(MeshLpError::Domain("feasibility problems have no idx sweep".into())),
        }
    }

    fn solve_idx(
        &self,
        task: TaskKind,
        g: u64,
        b: i8,
        idx: usize,
        solver: &dyn LpSolver,
    ) -> Result<LpOutcome, MeshLpError> {
        let pb = self.build(task, g, b, idx)?;
        if let Some(dir) = &self.dump_dir {
            dump_to_dir(&pb, dir)?;
        }
        let mut out = solver.solve(&pb);
        if let Some(v) = out.value.as_mut() {
            *v *= b as f64;
        }
        Ok(out)
    }

    fn solve_many(
        &self,
        task: TaskKind,
        g: u64,
        b: i8,
        idxs: &[usize],
        solver: &dyn LpSolver,
    ) -> Result<Vec<(usize, LpOutcome)>, MeshLpError> {
        idxs.par_iter().map(|&idx| self.solve_idx(task, g, b, idx, solver).map(|o| (idx, o))).collect()
    }

    /// Sweeps idx for one task. Lower-bound tasks (`Lower`, or `b = 1`) take the minimum,
    /// upper-bound tasks the maximum.
    pub fn sweep(&self, task: TaskKind, g: u64, b: i8, solver: &dyn LpSolver) -> Result<SweepResult, MeshLpError> {
        let last = match task {
            TaskKind::Lp1 => self.ctx.l(),
            _ => self.ctx.l() + 1,
        };
        let upper = task == TaskKind::Upper || b < 0;
        let all: Vec<usize> = (1..=last).collect();
        let results = match self.pruning {
            Pruning::Off => self.solve_many(task, g, b, &all, solver)?,
            Pruning::Coarse { stride } => {
                let stride = stride.max(1);
                let mut coarse: Vec<usize> = all.iter().copied().step_by(stride).collect();
                if coarse.last() != Some(&last) {
                    coarse.push(last);
                }
                let mut res = self.solve_many(task, g, b, &coarse, solver)?;
                let mut ranked: Vec<&(usize, LpOutcome)> = res.iter().filter(|(_, o)| o.is_optimal()).collect();
                ranked.sort_by(|a, b| {
                    let (va, vb) = (a.1.value.unwrap(), b.1.value.unwrap());
                    if upper {
                        vb.total_cmp(&va)
                    } else {
                        va.total_cmp(&vb)
                    }
                });
                let mut extra: Vec<usize> = ranked
                    .iter()
                    .take(3)
                    .flat_map(|&&(idx, _)| idx.saturating_sub(stride).max(1)..=(idx + stride).min(last))
                    .filter(|i| !coarse.contains(i))
                    .collect();
                extra.sort_unstable();
                extra.dedup();
                res.extend(self.solve_many(task, g, b, &extra, solver)?);
                res.sort_by_key(|(idx, _)| *idx);
                res
            }
        };
        summarize(g, upper, &results)
    }

    fn point(&self, g: u64, kind: Kind, method: Method, res: Option<SweepResult>) -> BoundPoint<F> {
        let (raw, idx, feasible, evaluated) = match res {
            Some(r) => (F::lit(r.value), r.idx, r.feasible, r.evaluated),
            None => (F::zero(), 0, 0, 0),
        };
        BoundPoint::new(g, raw, kind, method, self.delta, Target::DistributionLambda)
            .with("idx", idx as f64)
            .with("feasible", feasible as f64)
            .with("evaluated", evaluated as f64)
            .with("l", self.ctx.l() as f64)
            .with("q", self.q.to_f64_lossy())
    }

    /// Minimum of the rounded-down program over idx.
    pub fn lower(&self, g: u64, solver: &dyn LpSolver) -> Result<BoundPoint<F>, MeshLpError> {
        if g == 0 {
            return Ok(self.point(0, Kind::Lower, Method::LpLb, None));
        }
        let r = self.sweep(TaskKind::Lower, g, 1, solver)?;
        Ok(self.point(g, Kind::Lower, Method::LpLb, Some(r)))
    }

    /// Maximum of the rounded-up program over idx.
    pub fn upper(&self, g: u64, solver: &dyn LpSolver) -> Result<BoundPoint<F>, MeshLpError> {
        if g == 0 {
            return Ok(self.point(0, Kind::Upper, Method::LpUb, None));
        }
        let r = self.sweep(TaskKind::Upper, g, 1, solver)?;
        Ok(self.point(g, Kind::Upper, Method::LpUb, Some(r)))
    }

    /// Lower and upper sweeps of the exact-mesh program.
    pub fn lp1(&self, g: u64, solver: &dyn LpSolver) -> Result<(SweepResult, SweepResult), MeshLpError> {
        Ok((self.sweep(TaskKind::Lp1, g, 1, solver)?, self.sweep(TaskKind::Lp1, g, -1, solver)?))
    }

    /// Lower and upper sweeps of the exact-mesh program with tail mass.
    pub fn lp1a(&self, g: u64, solver: &dyn LpSolver) -> Result<(SweepResult, SweepResult), MeshLpError> {
        Ok((self.sweep(TaskKind::Lp1a, g, 1, solver)?, self.sweep(TaskKind::Lp1a, g, -1, solver)?))
    }
}

fn summarize(g: u64, upper: bool, results: &[(usize, LpOutcome)]) -> Result<SweepResult, MeshLpError> {
    let failed: Vec<usize> =
        results.iter().filter(|(_, o)| o.status == LpStatus::NumericalFailure).map(|(idx, _)| *idx).collect();
    if !failed.is_empty() {
        return Err(MeshLpError::NumericalFailure { g, idx: failed });
    }
    let mut best: Option<(usize, f64)> = None;
    let mut feasible = 0;
    for (idx, out) in results {
        let Some(v) = out.value.filter(|_| out.is_optimal()) else { continue };
        feasible += 1;
        let better = match best {
            None => true,
            Some((_, b)) if upper => v > b,
            Some((_, b)) => v < b,
        };
        if better {
            best = Some((*idx, v));
        }
    }
    let (idx, value) = best.ok_or(MeshLpError::AllInfeasible { g })?;
    Ok(SweepResult {
        value,
        idx,
        feasible,
        evaluated: results.len(),
        retried: results.iter().filter(|(_, o)| o.retried).count(),
    })
}

/// Lower bound on λ_G from the rounded-down program.
pub fn lp_lower_bound<F: Scalar>(
    g: u64,
    mesh: &Mesh<F>,
    enc: &FrequencyEncoding,
    params: &LpParams<F>,
    solver: &dyn LpSolver,
) -> Result<BoundPoint<F>, MeshLpError> {
    LpBounder::new(mesh, enc, params)?.lower(g, solver)
}

/// Upper bound on λ_G from the rounded-up program.
pub fn lp_upper_bound<F: Scalar>(
    g: u64,
    mesh: &Mesh<F>,
    enc: &FrequencyEncoding,
    params: &LpParams<F>,
    solver: &dyn LpSolver,
) -> Result<BoundPoint<F>, MeshLpError> {
    LpBounder::new(mesh, enc, params)?.upper(g, solver)
}

/// `(lower, upper)` from the exact-mesh program; only valid for mesh-aligned distributions.
pub fn lp1_bounds<F: Scalar>(
    g: u64,
    mesh: &Mesh<F>,
    enc: &FrequencyEncoding,
    params: &LpParams<F>,
    solver: &dyn LpSolver,
) -> Result<(f64, f64), MeshLpError> {
    let (lo, hi) = LpBounder::new(mesh, enc, params)?.lp1(g, solver)?;
    Ok((lo.value, hi.value))
}
