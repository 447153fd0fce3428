//! LP instances for the histogram-recovery tasks.
//!
//! Rows are stored in the natural units of the tasks: histogram counts `h_j`, the
//! partial count `c` and the tail mass `p`. Each row and variable also records a
//! scale which the solver adapter applies before handing the problem over:
//! `h_j` is solved for as the mass `x_j·h_j`, so band and mass rows have
//! coefficients in `[0, 1]`, and the budget row is divided by `G`.

use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyEncoding;
use crate::scalar::Scalar;

use super::binomial::bpdf_unchecked;
use super::mesh::{LpParams, Mesh};
use super::MeshLpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Exact-mesh program.
    Lp1,
    /// Exact-mesh program with tail mass below the floor.
    Lp1a,
    /// Rounded-down program for lower bounds.
    Lower,
    /// Rounded-up program for upper bounds.
    Upper,
    /// Band and mass rows only, no objective.
    Feasibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpVariable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// The solver works with `value · scale`.
    pub scale: f64,
}

/// `lower ≤ Σ coeff·var ≤ upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub label: String,
    pub coeffs: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
    /// The solver sees the row multiplied by this factor.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpMeta {
    pub g: u64,
    pub idx: usize,
    pub task: TaskKind,
    /// Objective sign for the exact-mesh programs; 1 otherwise.
    pub b: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub variables: Vec<LpVariable>,
    pub rows: Vec<LpRow>,
    pub meta: LpMeta,
}

impl LpProblem {
    /// Checks dimensions, bound ordering and finiteness.
    pub fn validate(&self) -> Result<(), String> {
        let nv = self.variables.len();
        if self.objective.len() != nv {
            return Err(format!("objective has {} entries for {nv} variables", self.objective.len()));
        }
        for v in &self.variables {
            if !(v.lower <= v.upper) || v.lower.is_nan() || !(v.scale > 0.0 && v.scale.is_finite()) {
                return Err(format!("variable {} has bounds [{}, {}] scale {}", v.name, v.lower, v.upper, v.scale));
            }
        }
        for r in &self.rows {
            if !(r.lower <= r.upper) || r.lower == f64::INFINITY || r.upper == f64::NEG_INFINITY {
                return Err(format!("row {} has bounds [{}, {}]", r.label, r.lower, r.upper));
            }
            if !(r.scale > 0.0 && r.scale.is_finite()) {
                return Err(format!("row {} has scale {}", r.label, r.scale));
            }
            if let Some(&(j, c)) = r.coeffs.iter().find(|(j, c)| *j >= nv || !c.is_finite()) {
                return Err(format!("row {} has coefficient {c} on variable {j}", r.label));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, row: &LpRow, x: &[f64]) -> f64 {
        row.coeffs.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Largest row or bound violation of `x`, measured in the solver's scaled units.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for r in &self.rows {
            let act = self.row_activity(r, x);
            let v = (r.lower - act).max(act - r.upper).max(0.0) * r.scale;
            worst = worst.max(v);
        }
        for (v, &val) in self.variables.iter().zip(x) {
            let viol = (v.lower - val).max(val - v.upper).max(0.0) * v.scale;
            worst = worst.max(viol);
        }
        worst
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn row_index(&self, label: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.label == label)
    }
}

/// Per-sample constants shared by every LP instance: mesh values, binomial weights
/// and the Good-Turing targets. Building it once amortises the `l·(i′+1)` binomial
/// evaluations over the whole idx sweep.
#[derive(Debug, Clone)]
pub struct LpContext {
    n: u64,
    q: f64,
    x: Vec<f64>,
    /// `weights[i][j] = x_j · bpdf(i, N, x_j)`.
    weights: Vec<Vec<f64>>,
    /// `(i+1)·F_{i+1}/(N−i)`.
    gt: Vec<f64>,
    /// `(i+1)/(N−i)`.
    gt_slack: Vec<f64>,
    eps2: Vec<f64>,
    eps3: Vec<f64>,
    b_xl: Vec<f64>,
    b_qxl: Vec<f64>,
    b_xhat: Vec<f64>,
    b_qxhat: Vec<f64>,
}

/// Lower and upper bound of one band, each with its coefficient on `p`.
struct Band {
    lo: f64,
    p_lo: f64,
    hi: f64,
    p_hi: f64,
}

impl LpContext {
    pub fn new<F: Scalar>(mesh: &Mesh<F>, enc: &FrequencyEncoding, params: &LpParams<F>) -> Result<Self, MeshLpError> {
        let n = enc.n();
        if n == 0 {
            return Err(MeshLpError::EmptyCorpus);
        }
        if params.n() != n {
            return Err(MeshLpError::SizeMismatch { expected: params.n(), found: n });
        }
        if mesh.n_ref() != n {
            return Err(MeshLpError::SizeMismatch { expected: mesh.n_ref(), found: n });
        }
        if mesh.q() != params.q() {
            return Err(MeshLpError::Domain(format!(
                "mesh ratio {} differs from the ratio {} used for ε₃",
                mesh.q(),
                params.q()
            )));
        }
        let x: Vec<f64> = mesh.values().iter().map(|v| v.to_f64_lossy()).collect();
        let q = mesh.q().to_f64_lossy();
        let x_l = *x.last().expect("mesh is never empty");
        let bands = params.i_max() + 1;
        let mut weights = Vec::with_capacity(bands);
        let (mut gt, mut gt_slack) = (Vec::new(), Vec::new());
        let (mut b_xl, mut b_qxl, mut b_xhat, mut b_qxhat) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let nf = n as f64;
        for i in 0..bands {
            let iu = i as u64;
            weights.push(x.iter().map(|&xj| xj * bpdf_unchecked(iu, n, xj)).collect());
            gt.push((i + 1) as f64 * enc.f(iu + 1) as f64 / (nf - i as f64));
            gt_slack.push((i + 1) as f64 / (nf - i as f64));
            b_xl.push(bpdf_unchecked(iu, n, x_l));
            b_qxl.push(bpdf_unchecked(iu, n, (q * x_l).min(1.0)));
            let xh = params.xhat3()[i].to_f64_lossy();
            b_xhat.push(bpdf_unchecked(iu, n, xh));
            b_qxhat.push(bpdf_unchecked(iu, n, (q * xh).min(1.0)));
        }
        Ok(Self {
            n,
            q,
            x,
            weights,
            gt,
            gt_slack,
            eps2: params.eps2().iter().map(|v| v.to_f64_lossy()).collect(),
            eps3: params.eps3().iter().map(|v| v.to_f64_lossy()).collect(),
            b_xl,
            b_qxl,
            b_xhat,
            b_qxhat,
        })
    }

    pub fn l(&self) -> usize {
        self.x.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mesh_values(&self) -> &[f64] {
        &self.x
    }

    pub fn bands(&self) -> usize {
        self.gt.len()
    }

    fn check_idx(&self, idx: usize, allow_tail: bool) -> Result<(), MeshLpError> {
        let hi = if allow_tail { self.l() + 1 } else { self.l() };
        if idx == 0 || idx > hi {
            return Err(MeshLpError::Domain(format!("idx must lie in 1..={hi}, got {idx}")));
        }
        Ok(())
    }

    /// Exact-mesh program; `b = 1` for the lower bound, `b = −1` for the upper.
    pub fn lp1(&self, g: u64, b: i8, idx: usize) -> Result<LpProblem, MeshLpError> {
        self.check_idx(idx, false)?;
        let mut pb = self.skeleton(g, idx, self.x[idx - 1], false, b, TaskKind::Lp1);
        for i in 0..self.bands() {
            let (a, e, s) = (self.gt[i], self.eps2[i], self.gt_slack[i]);
            pb.rows.push(self.band_row(format!("band{i}"), i, a - e - s, a + e, None));
        }
        pb.rows.push(self.mass_row("mass", None, 1.0, 1.0));
        Ok(pb)
    }

    /// Exact-mesh program with tail mass `p`.
    pub fn lp1a(&self, g: u64, b: i8, idx: usize) -> Result<LpProblem, MeshLpError> {
        self.check_idx(idx, true)?;
        let x_c = self.tail_x(idx, b < 0);
        let mut pb = self.skeleton(g, idx, x_c, true, b, TaskKind::Lp1a);
        let bands: Vec<Band> = (0..self.bands())
            .map(|i| {
                let (a, e, s) = (self.gt[i], self.eps2[i], self.gt_slack[i]);
                let bxl = self.b_xl[i];
                if i == 0 {
                    Band { lo: a - e - s, p_lo: 1.0, hi: a + e, p_hi: bxl }
                } else {
                    Band { lo: a - e - s, p_lo: bxl, hi: a + e, p_hi: 0.0 }
                }
            })
            .collect();
        self.push_bands(&mut pb, &bands);
        let p = self.l() + 1;
        pb.rows.push(self.mass_row("mass", Some((p, 1.0)), 1.0, 1.0));
        Ok(pb)
    }

    /// Program minimised for the lower bound.
    pub fn lower(&self, g: u64, idx: usize) -> Result<LpProblem, MeshLpError> {
        self.check_idx(idx, true)?;
        let x_c = self.tail_x(idx, false);
        let mut pb = self.skeleton(g, idx, x_c, true, 1, TaskKind::Lower);
        self.push_bands(&mut pb, &self.lower_bands());
        self.push_lower_mass(&mut pb, self.l() + 1);
        Ok(pb)
    }

    /// Program maximised for the upper bound.
    pub fn upper(&self, g: u64, idx: usize) -> Result<LpProblem, MeshLpError> {
        self.check_idx(idx, true)?;
        let x_c = self.tail_x(idx, true);
        let mut pb = self.skeleton(g, idx, x_c, true, 1, TaskKind::Upper);
        pb.sense = Sense::Maximize;
        self.push_bands(&mut pb, &self.upper_bands());
        self.push_upper_mass(&mut pb, self.l() + 1);
        Ok(pb)
    }

    /// Band and mass rows of the lower (`upper = false`) or upper program, over `h` and `p` only.
    pub fn feasibility(&self, upper: bool) -> LpProblem {
        let l = self.l();
        let mut variables: Vec<LpVariable> = self.h_variables();
        variables.push(LpVariable { name: "p".into(), lower: 0.0, upper: 1.0, scale: 1.0 });
        let mut pb = LpProblem {
            sense: Sense::Minimize,
            objective: vec![0.0; l + 1],
            variables,
            rows: Vec::new(),
            meta: LpMeta { g: 0, idx: 0, task: TaskKind::Feasibility, b: 1 },
        };
        if upper {
            self.push_bands(&mut pb, &self.upper_bands());
            self.push_upper_mass(&mut pb, l);
        } else {
            self.push_bands(&mut pb, &self.lower_bands());
            self.push_lower_mass(&mut pb, l);
        }
        pb
    }

    fn lower_bands(&self) -> Vec<Band> {
        (0..self.bands())
            .map(|i| {
                let (a, e, s, e3) = (self.gt[i], self.eps2[i], self.gt_slack[i], self.eps3[i]);
                let qi = self.q.powi(i as i32 + 1);
                let hi = (1.0 + e3) * (a + e) + self.b_xhat[i];
                if i == 0 {
                    Band { lo: (a - e - s) / qi, p_lo: 1.0 / qi, hi, p_hi: (1.0 + e3) * self.b_qxl[i] }
                } else {
                    Band { lo: (a - e - s) / qi, p_lo: self.b_qxl[i] / qi, hi, p_hi: 0.0 }
                }
            })
            .collect()
    }

    fn upper_bands(&self) -> Vec<Band> {
        (0..self.bands())
            .map(|i| {
                let (a, e, s, e3) = (self.gt[i], self.eps2[i], self.gt_slack[i], self.eps3[i]);
                let qi = self.q.powi(i as i32 + 1);
                let lo = (a - e - s - self.b_qxhat[i]) / (1.0 + e3);
                if i == 0 {
                    Band { lo, p_lo: 1.0 / (1.0 + e3), hi: qi * (a + e), p_hi: qi * self.b_xl[i] }
                } else {
                    Band { lo, p_lo: self.b_xl[i] / (1.0 + e3), hi: qi * (a + e), p_hi: 0.0 }
                }
            })
            .collect()
    }

    fn push_lower_mass(&self, pb: &mut LpProblem, p: usize) {
        pb.rows.push(self.mass_row("mass_lo", Some((p, 1.0 / self.q)), 1.0 / self.q, f64::INFINITY));
        pb.rows.push(self.mass_row("mass_hi", Some((p, 1.0)), f64::NEG_INFINITY, 1.0));
    }

    fn push_upper_mass(&self, pb: &mut LpProblem, p: usize) {
        pb.rows.push(self.mass_row("mass_lo", Some((p, 1.0)), 1.0, f64::INFINITY));
        pb.rows.push(self.mass_row("mass_hi", Some((p, self.q)), f64::NEG_INFINITY, self.q));
    }

    /// Probability assigned to the partial block `c`.
    fn tail_x(&self, idx: usize, upper: bool) -> f64 {
        if idx <= self.l() {
            self.x[idx - 1]
        } else if upper {
            self.x[self.l() - 1]
        } else {
            0.0
        }
    }

    fn h_variables(&self) -> Vec<LpVariable> {
        self.x
            .iter()
            .enumerate()
            .map(|(j, &xj)| LpVariable { name: format!("h{}", j + 1), lower: 0.0, upper: f64::INFINITY, scale: xj })
            .collect()
    }

    /// Variables, objective, budget row and link row shared by all guess-budget tasks.
    fn skeleton(&self, g: u64, idx: usize, x_c: f64, with_p: bool, b: i8, task: TaskKind) -> LpProblem {
        let l = self.l();
        let gf = g as f64;
        let budget_scale = 1.0 / gf.max(1.0);
        let mut variables = self.h_variables();
        let c_upper = if idx > l { gf } else { f64::INFINITY };
        // Mass units while the block can hold more than one unit of mass, else G-relative count units.
        let c_scale = x_c.max(budget_scale);
        variables.push(LpVariable { name: "c".into(), lower: 0.0, upper: c_upper, scale: c_scale });
        if with_p {
            variables.push(LpVariable { name: "p".into(), lower: 0.0, upper: 1.0, scale: 1.0 });
        }
        let sign = b as f64;
        let mut objective = vec![0.0; variables.len()];
        for (o, &x) in objective.iter_mut().zip(&self.x).take((idx - 1).min(l)) {
            *o = sign * x;
        }
        objective[l] = sign * x_c;
        let mut budget: Vec<(usize, f64)> = (0..(idx - 1).min(l)).map(|j| (j, 1.0)).collect();
        budget.push((l, 1.0));
        let mut rows =
            vec![LpRow { label: "budget".into(), coeffs: budget, lower: gf, upper: gf, scale: budget_scale }];
        if idx <= l {
            rows.push(LpRow {
                label: "link".into(),
                coeffs: vec![(l, 1.0), (idx - 1, -1.0)],
                lower: f64::NEG_INFINITY,
                upper: 0.0,
                scale: self.x[idx - 1],
            });
        }
        LpProblem { sense: Sense::Minimize, objective, variables, rows, meta: LpMeta { g, idx, task, b } }
    }

    fn band_row(&self, label: String, i: usize, lower: f64, upper: f64, p: Option<(usize, f64)>) -> LpRow {
        let mut coeffs: Vec<(usize, f64)> =
            self.weights[i].iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(j, &w)| (j, w)).collect();
        if let Some((pi, pc)) = p.filter(|&(_, pc)| pc != 0.0) {
            coeffs.push((pi, pc));
        }
        LpRow { label, coeffs, lower, upper, scale: 1.0 }
    }

    fn push_bands(&self, pb: &mut LpProblem, bands: &[Band]) {
        let p = pb.var_index("p").expect("band rows with tail mass need p");
        for (i, band) in bands.iter().enumerate() {
            pb.rows.push(self.band_row(format!("band{i}_lo"), i, band.lo, f64::INFINITY, Some((p, band.p_lo))));
            pb.rows.push(self.band_row(format!("band{i}_hi"), i, f64::NEG_INFINITY, band.hi, Some((p, band.p_hi))));
        }
    }

    fn mass_row(&self, label: &str, p: Option<(usize, f64)>, lower: f64, upper: f64) -> LpRow {
        let mut coeffs: Vec<(usize, f64)> = self.x.iter().enumerate().map(|(j, &xj)| (j, xj)).collect();
        if let Some(pc) = p {
            coeffs.push(pc);
        }
        LpRow { label: label.into(), coeffs, lower, upper, scale: 1.0 }
    }
}

/// Exact-mesh program for one `(G, b, idx)`.
pub fn build_lp1<F: Scalar>(
    g: u64,
    b: i8,
    mesh: &Mesh<F>,
    enc: &FrequencyEncoding,
    idx: usize,
    params: &LpParams<F>,
) -> Result<LpProblem, MeshLpError> {
    LpContext::new(mesh, enc, params)?.lp1(g, b, idx)
}

/// Exact-mesh program with tail mass for one `(G, b, idx)`.
pub fn build_lp1a<F: Scalar>(
    g: u64,
    b: i8,
    mesh: &Mesh<F>,
    enc: &FrequencyEncoding,
    idx: usize,
    params: &LpParams<F>,
) -> Result<LpProblem, MeshLpError> {
    LpContext::new(mesh, enc, params)?.lp1a(g, b, idx)
}

/// Lower-bound program for one `(G, idx)`.
pub fn build_lp_lower<F: Scalar>(
    g: u64,
    mesh: &Mesh<F>,
    enc: &FrequencyEncoding,
    idx: usize,
    params: &LpParams<F>,
) -> Result<LpProblem, MeshLpError> {
    LpContext::new(mesh, enc, params)?.lower(g, idx)
}

/// Upper-bound program for one `(G, idx)`.
pub fn build_lp_upper<F: Scalar>(
    g: u64,
    mesh: &Mesh<F>,
    enc: &FrequencyEncoding,
    idx: usize,
    params: &LpParams<F>,
) -> Result<LpProblem, MeshLpError> {
    LpContext::new(mesh, enc, params)?.upper(g, idx)
}
