//! CPLEX LP-format export for offline inspection of single instances.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::problem::{LpProblem, Sense, TaskKind};
use super::MeshLpError;

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:e}")
    }
}

fn expr(pb: &LpProblem, terms: impl Iterator<Item = (usize, f64)>) -> String {
    let mut out = String::new();
    for (j, c) in terms.filter(|&(_, c)| c != 0.0) {
        let sign = if c < 0.0 { "-" } else { "+" };
        let _ = write!(out, " {sign} {} {}", fmt_num(c.abs()), pb.variables[j].name);
    }
    if out.is_empty() {
        out.push_str(" 0");
    }
    out
}

/// Renders the problem in its unscaled form.
pub fn to_lp_format(pb: &LpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ task {:?} g={} idx={} b={}", pb.meta.task, pb.meta.g, pb.meta.idx, pb.meta.b);
    out.push_str(match pb.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    let _ = writeln!(out, " obj:{}", expr(pb, pb.objective.iter().copied().enumerate()));
    out.push_str("Subject To\n");
    for row in &pb.rows {
        let lhs = expr(pb, row.coeffs.iter().copied());
        if row.lower == row.upper {
            let _ = writeln!(out, " {}:{lhs} = {}", row.label, fmt_num(row.lower));
            continue;
        }
        if row.lower.is_finite() {
            let _ = writeln!(out, " {}_ge:{lhs} >= {}", row.label, fmt_num(row.lower));
        }
        if row.upper.is_finite() {
            let _ = writeln!(out, " {}_le:{lhs} <= {}", row.label, fmt_num(row.upper));
        }
    }
    out.push_str("Bounds\n");
    for v in &pb.variables {
        let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
    }
    out.push_str("End\n");
    out
}

/// Writes `<task>_g<G>_idx<idx>.lp` into `dir` and returns its path.
pub fn dump_to_dir(pb: &LpProblem, dir: &Path) -> Result<PathBuf, MeshLpError> {
    let tag = match pb.meta.task {
        TaskKind::Lp1 => "lp1",
        TaskKind::Lp1a => "lp1a",
        TaskKind::Lower => "lower",
        TaskKind::Upper => "upper",
        TaskKind::Feasibility => "feasibility",
    };
    let name = format!("{tag}_b{}_g{}_idx{}.lp", pb.meta.b, pb.meta.g, pb.meta.idx);
    let path = dir.join(name);
    let io = |source| MeshLpError::Io { path: path.display().to_string(), source };
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(&path, to_lp_format(pb)).map_err(io)?;
    Ok(path)
}
