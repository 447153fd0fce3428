//! Default parameter schedule and the error-probability budget of each bound.
//!
//! Every bound reported with the defaults holds with probability at least 0.99.
//! [`Schedule::audit`] recomputes each composed δ so that overrides cannot
//! silently exceed that budget.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{mcdiarmid_epsilon, BoundsError, Method, SplitBoundParams, TPolicy, Target};
use crate::meshlp::{build_mesh, LpParams, Mesh, MeshLpError};
use crate::scalar::Scalar;

/// Slack allowed when comparing a composed δ against the budget.
const AUDIT_FLOAT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("{method} ({target}) fails with probability {delta}, above the budget {budget}")]
    OverBudget { method: Method, target: Target, delta: f64, budget: f64 },
    #[error("schedule lists {delta4} band error probabilities and {xhat} x̂ multipliers for i′ = {i_max}")]
    BandLength { i_max: usize, delta4: usize, xhat: usize },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Lp(#[from] MeshLpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    /// δ of the bounded-differences shift between λ_G and λ(S,G).
    pub delta1: f64,
    /// Size of the held-out half D₂.
    pub d: u64,
    /// δ of the split bounds.
    pub delta3: f64,
    /// Mesh ratio.
    pub q: f64,
    /// Largest Good-Turing band index i′.
    pub i_max: usize,
    /// Per-band one-sided error probabilities.
    pub delta4: Vec<f64>,
    /// `x̂ᵢ·N` for the rounding slack of each band.
    pub xhat3_multipliers: Vec<f64>,
    /// Inclusive range of `j` for the prior bound.
    pub prior_j_range: (u64, u64),
    pub target_confidence: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            delta1: 0.00009,
            d: 25_000,
            delta3: 0.01 - 0.00009,
            q: 1.002,
            i_max: 4,
            delta4: vec![0.00009, 0.000165, 0.00175, 0.00175, 0.0012],
            xhat3_multipliers: vec![7.0, 11.0, 14.0, 16.3, 18.5],
            prior_j_range: (2, 1000),
            target_confidence: 0.99,
        }
    }
}

/// Total error probability of one method and target under a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub method: Method,
    pub target: Target,
    pub delta: f64,
}

/// Schedule constants evaluated for one sample size.
#[derive(Debug, Clone)]
pub struct DerivedSchedule<F> {
    pub n: u64,
    pub eps1: F,
    pub split: SplitBoundParams<F>,
    pub prior_policy: TPolicy<F>,
    pub lp: LpParams<F>,
    pub mesh: Mesh<F>,
    pub audit: Vec<AuditEntry>,
}

impl Schedule {
    /// `1 − target_confidence`.
    pub fn budget(&self) -> f64 {
        1.0 - self.target_confidence
    }

    /// δ of the prior bound's slack; the rest of the budget after δ₁.
    pub fn prior_delta(&self) -> f64 {
        self.budget() - self.delta1
    }

    /// `2·Σ δ₄,ᵢ`.
    pub fn lp_delta(&self) -> f64 {
        2.0 * self.delta4.iter().sum::<f64>()
    }

    /// Composed δ of every method for both targets.
    pub fn audit(&self) -> Vec<AuditEntry> {
        use Method::*;
        use Target::*;
        let d1 = self.delta1;
        let entry = |method, target, delta| AuditEntry { method, target, delta };
        vec![
            entry(FrequencyUb, DistributionLambda, d1),
            entry(FrequencyUb, SampleLambda, 0.0),
            entry(SamplingLb, DistributionLambda, self.delta3),
            entry(SamplingLb, SampleLambda, self.delta3 + d1),
            entry(ExtendedLb, DistributionLambda, self.delta3),
            entry(ExtendedLb, SampleLambda, self.delta3 + d1),
            entry(PriorLb, DistributionLambda, self.prior_delta() + d1),
            entry(PriorLb, SampleLambda, self.prior_delta()),
            entry(LpLb, DistributionLambda, self.lp_delta()),
            entry(LpLb, SampleLambda, self.lp_delta() + d1),
            entry(LpUb, DistributionLambda, self.lp_delta()),
            entry(LpUb, SampleLambda, self.lp_delta() + d1),
        ]
    }

    /// Checks shapes, ranges and that every composed δ fits the budget.
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.delta4.len() != self.i_max + 1 || self.xhat3_multipliers.len() != self.i_max + 1 {
            return Err(ScheduleError::BandLength {
                i_max: self.i_max,
                delta4: self.delta4.len(),
                xhat: self.xhat3_multipliers.len(),
            });
        }
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(ScheduleError::Invalid(format!("{name} = {v} must lie in (0, 1)")))
            }
        };
        unit("delta1", self.delta1)?;
        unit("delta3", self.delta3)?;
        unit("target_confidence", self.target_confidence)?;
        unit("prior slack delta", self.prior_delta())?;
        for (i, &d) in self.delta4.iter().enumerate() {
            unit(&format!("delta4[{i}]"), d)?;
        }
        if !(self.q > 1.0) || !self.q.is_finite() {
            return Err(ScheduleError::Invalid(format!("q = {} must exceed 1", self.q)));
        }
        if self.d == 0 {
            return Err(ScheduleError::Invalid("d must be positive".into()));
        }
        let (lo, hi) = self.prior_j_range;
        if lo < 2 || hi < lo {
            return Err(ScheduleError::Invalid(format!("prior j range {lo}..={hi} must start at 2 or above")));
        }
        let budget = self.budget();
        for e in self.audit() {
            if e.delta > budget + AUDIT_FLOAT_TOL {
                return Err(ScheduleError::OverBudget { method: e.method, target: e.target, delta: e.delta, budget });
            }
        }
        Ok(())
    }

    /// Split size actually used for a sample of size `n`: `d`, capped at `n/4` for small samples.
    pub fn effective_d(&self, n: u64) -> u64 {
        self.d.min(n / 4).max(1)
    }

    pub fn eps1<F: Scalar>(&self, n: u64) -> Result<F, ScheduleError> {
        Ok(mcdiarmid_epsilon(n, F::lit(self.delta1))?)
    }

    pub fn split_params<F: Scalar>(&self, n: u64) -> Result<SplitBoundParams<F>, ScheduleError> {
        Ok(SplitBoundParams::from_delta(self.effective_d(n), F::lit(self.delta3))?)
    }

    pub fn prior_policy<F: Scalar>(&self) -> TPolicy<F> {
        TPolicy::FixedDelta(F::lit(self.prior_delta()))
    }

    pub fn mesh<F: Scalar>(&self, n: u64) -> Result<Mesh<F>, ScheduleError> {
        Ok(build_mesh(n, F::lit(self.q))?)
    }

    pub fn lp_params<F: Scalar>(&self, n: u64) -> Result<LpParams<F>, ScheduleError> {
        let d4: Vec<F> = self.delta4.iter().map(|&d| F::lit(d)).collect();
        let xm: Vec<F> = self.xhat3_multipliers.iter().map(|&m| F::lit(m)).collect();
        Ok(LpParams::from_deltas(n, F::lit(self.q), &d4, &xm)?)
    }

    /// Evaluates every derived constant for a sample of size `n`.
    pub fn derive<F: Scalar>(&self, n: u64) -> Result<DerivedSchedule<F>, ScheduleError> {
        if n < 2 {
            return Err(ScheduleError::Invalid(format!("sample size {n} is too small; need at least 2")));
        }
        self.validate()?;
        Ok(DerivedSchedule {
            n,
            eps1: self.eps1(n)?,
            split: self.split_params(n)?,
            prior_policy: self.prior_policy(),
            lp: self.lp_params(n)?,
            mesh: self.mesh(n)?,
            audit: self.audit(),
        })
    }
}

/// The default schedule evaluated at sample size `n`.
pub fn default_schedule<F: Scalar>(n: u64) -> Result<(Schedule, DerivedSchedule<F>), ScheduleError> {
    let s = Schedule::default();
    let derived = s.derive(n)?;
    Ok((s, derived))
}
