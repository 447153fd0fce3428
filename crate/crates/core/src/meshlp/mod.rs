//! Histogram-recovery linear programs over a geometric probability mesh.
//!
//! The unknown distribution is described by a histogram `h_j` (number of passwords
//! with probability `x_j`) plus a tail mass `p` below the mesh floor. Frequency-of-
//! frequency counts constrain the histogram through Good-Turing bands, and the
//! extreme values of λ_G over all consistent histograms give the bounds.

pub mod binomial;
pub mod dump;
pub mod iid;
pub mod mesh;
pub mod problem;
pub mod solver;
pub mod sweep;

use thiserror::Error;

pub use binomial::{bpdf, ln_bpdf, ln_choose, ln_gamma};
pub use dump::{dump_to_dir, to_lp_format};
pub use iid::{check_iid_consistency, IidReport, IidVerdict};
pub use mesh::{band_delta, build_mesh, derive_eps3, eps2_for_delta, LpParams, Mesh};
pub use problem::{
    build_lp1, build_lp1a, build_lp_lower, build_lp_upper, LpContext, LpMeta, LpProblem, LpRow, LpVariable, Sense,
    TaskKind,
};
pub use solver::{LpOutcome, LpSolver, LpStatus, MicroLpSolver, SolverOptions};
pub use sweep::{lp1_bounds, lp_lower_bound, lp_upper_bound, LpBounder, Pruning, SweepResult};

#[derive(Debug, Error)]
pub enum MeshLpError {
    #[error("{0}")]
    Domain(String),
    #[error("x̂ = {xhat:e} gives ε₃ = {eps3} for band {i}; pick an x̂ with ε₃ in (0, 1)")]
    Eps3OutOfRange { i: usize, xhat: f64, eps3: f64 },
    #[error("parameters were built for N = {expected}, sample has N = {found}")]
    SizeMismatch { expected: u64, found: u64 },
    #[error("no idx instance is feasible at G = {g}; the sample is inconsistent with independent draws")]
    AllInfeasible { g: u64 },
    #[error("LP solver failed numerically at G = {g} for idx {idx:?}")]
    NumericalFailure { g: u64, idx: Vec<usize> },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
