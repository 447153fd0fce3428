//! Geometric probability mesh and the slack parameters of the LP bands.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::binomial::bpdf_unchecked;
use super::MeshLpError;

/// Mesh floor relative to `1/N`.
pub const MESH_FLOOR_FACTOR: f64 = 1e4;

/// Candidate probabilities `x_1 > x_2 > … > x_l` with `x_i = q·x_{i+1}` and `x_l = 1/(10⁴N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Mesh<F> {
    values: Vec<F>,
    q: F,
    n_ref: u64,
}

impl<F: Scalar> Mesh<F> {
    /// `x_1 … x_l`, largest first.
    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// `x_j` for `1 ≤ j ≤ l`.
    pub fn x(&self, j: usize) -> F {
        self.values[j - 1]
    }

    pub fn l(&self) -> usize {
        self.values.len()
    }

    pub fn q(&self) -> F {
        self.q
    }

    pub fn n_ref(&self) -> u64 {
        self.n_ref
    }

    /// The floor `x_l`.
    pub fn x_min(&self) -> F {
        *self.values.last().expect("mesh is never empty")
    }

    /// Index of the largest mesh value `≤ p`, or `None` when `p < x_l`.
    pub fn floor_index(&self, p: F) -> Option<usize> {
        // values are decreasing; find the first j with x_j <= p.
        let pos = self.values.partition_point(|&x| x > p);
        (pos < self.values.len()).then_some(pos + 1)
    }
}

/// Builds the mesh for a sample of size `n` with ratio `q`.
pub fn build_mesh<F: Scalar>(n: u64, q: F) -> Result<Mesh<F>, MeshLpError> {
    if n == 0 {
        return Err(MeshLpError::Domain("mesh needs a sample size of at least 1".into()));
    }
    if !(q > F::one()) || !q.is_finite() {
        return Err(MeshLpError::Domain(format!("mesh ratio q must exceed 1, got {q}")));
    }
    let x_l = F::one() / (F::lit(MESH_FLOOR_FACTOR) * F::count(n));
    let ln_q = q.ln();
    let ln_xl = x_l.ln();
    let mut l = ((-ln_xl) / ln_q).floor().to_u64().unwrap_or(0) + 1;
    // Only correct the floor when it is off by more than rounding, so that
    // q^{l−1}·x_l ≤ 1 < q^l·x_l holds; exact powers such as q = 10 keep x_1 = 1.
    let tol = F::lit(64.0) * F::epsilon() * ln_xl.abs();
    while l > 1 && F::count(l - 1) * ln_q + ln_xl > tol {
        l -= 1;
    }
    while F::count(l) * ln_q + ln_xl <= tol {
        l += 1;
    }
    let values = (1..=l)
        .map(|i| {
            let k = l - i;
            if k == 0 {
                x_l
            } else {
                (F::count(k) * ln_q).exp() * x_l
            }
        })
        .collect();
    Ok(Mesh { values, q, n_ref: n })
}

/// `ε₃ = q^{−(i+1)}·((1−x̂)/(1−q·x̂))^{N−i} − 1`, evaluated in log space.
pub fn derive_eps3<F: Scalar>(q: F, xhat: F, n: u64, i: usize) -> Result<F, MeshLpError> {
    let i_u = i as u64;
    if !(q > F::one()) {
        return Err(MeshLpError::Domain(format!("q must exceed 1, got {q}")));
    }
    if i_u >= n {
        return Err(MeshLpError::Domain(format!("band index {i} needs N > {i}, got N = {n}")));
    }
    let floor = F::count(i_u + 1) / F::count(n + 1);
    if !(xhat >= floor) || !(q * xhat < F::one()) {
        return Err(MeshLpError::Domain(format!("x̂ = {xhat} for band {i} must satisfy {floor} ≤ x̂ < 1/q")));
    }
    let log = -F::count(i_u + 1) * q.ln() + F::count(n - i_u) * ((-xhat).ln_1p() - (-(q * xhat)).ln_1p());
    let eps3 = log.exp_m1();
    if !(eps3 > F::zero() && eps3 < F::one()) {
        return Err(MeshLpError::Eps3OutOfRange { i, xhat: xhat.to_f64_lossy(), eps3: eps3.to_f64_lossy() });
    }
    Ok(eps3)
}

/// Band half-width `ε₂` whose two-sided failure probability is `2δ`.
pub fn eps2_for_delta<F: Scalar>(n: u64, i: usize, delta: F) -> Result<F, MeshLpError> {
    let i_u = i as u64;
    if i_u >= n {
        return Err(MeshLpError::Domain(format!("band index {i} needs N > {i}, got N = {n}")));
    }
    if !(delta > F::zero() && delta < F::one()) {
        return Err(MeshLpError::Domain(format!("band error probability must lie in (0, 1), got {delta}")));
    }
    let nf = F::count(n);
    let ip1 = F::count(i_u + 1);
    let nmi = F::count(n - i_u);
    Ok((nf * ip1 * ip1 * -delta.ln() / (F::lit(2.0) * nmi * nmi)).sqrt())
}

/// One-sided failure probability of a band with half-width `eps2`.
pub fn band_delta<F: Scalar>(n: u64, i: usize, eps2: F) -> F {
    let nf = F::count(n);
    let ip1 = F::count(i as u64 + 1);
    let nmi = F::count(n - i as u64);
    (-F::lit(2.0) * nmi * nmi * eps2 * eps2 / (nf * ip1 * ip1)).exp()
}

/// Good-Turing band parameters shared by all LP tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct LpParams<F> {
    n: u64,
    q: F,
    eps2: Vec<F>,
    xhat3: Vec<F>,
    eps3: Vec<F>,
    delta: F,
}

impl<F: Scalar> LpParams<F> {
    /// Validates `ε₂ ∈ [0,1]` and derives `ε₃` from `x̂`; both vectors have length `i′+1`.
    pub fn new(n: u64, q: F, eps2: Vec<F>, xhat3: Vec<F>) -> Result<Self, MeshLpError> {
        if eps2.is_empty() || eps2.len() != xhat3.len() {
            return Err(MeshLpError::Domain(format!(
                "need matching non-empty ε₂ and x̂ vectors, got {} and {}",
                eps2.len(),
                xhat3.len()
            )));
        }
        if let Some((i, e)) = eps2.iter().enumerate().find(|(_, &e)| !(e >= F::zero() && e <= F::one())) {
            return Err(MeshLpError::Domain(format!(
                "ε₂[{i}] = {e} lies outside [0, 1]; the sample is too small for this band"
            )));
        }
        let eps3 = xhat3.iter().enumerate().map(|(i, &x)| derive_eps3(q, x, n, i)).collect::<Result<Vec<_>, _>>()?;
        let delta = F::lit(2.0) * eps2.iter().enumerate().map(|(i, &e)| band_delta(n, i, e)).sum::<F>();
        Ok(Self { n, q, eps2, xhat3, eps3, delta })
    }

    /// `ε₂,ᵢ` from per-band error probabilities and `x̂ᵢ = multiplierᵢ/N`.
    pub fn from_deltas(n: u64, q: F, band_deltas: &[F], xhat_multipliers: &[F]) -> Result<Self, MeshLpError> {
        let eps2 =
            band_deltas.iter().enumerate().map(|(i, &d)| eps2_for_delta(n, i, d)).collect::<Result<Vec<_>, _>>()?;
        let xhat = xhat_multipliers.iter().map(|&m| m / F::count(n)).collect();
        Self::new(n, q, eps2, xhat)
    }

    /// Largest band index `i′`.
    pub fn i_max(&self) -> usize {
        self.eps2.len() - 1
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn q(&self) -> F {
        self.q
    }

    pub fn eps2(&self) -> &[F] {
        &self.eps2
    }

    pub fn xhat3(&self) -> &[F] {
        &self.xhat3
    }

    pub fn eps3(&self) -> &[F] {
        &self.eps3
    }

    /// `2·Σᵢ exp(−2(N−i)²ε₂,ᵢ²/(N(i+1)²))`.
    pub fn delta(&self) -> F {
        self.delta
    }

    /// `bpdf(i, N, x̂ᵢ)`, the additive slack of the rounded-down bands.
    pub fn xhat_mass(&self, i: usize) -> F {
        bpdf_unchecked(i as u64, self.n, self.xhat3[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_mesh() {
        let m = build_mesh::<f64>(1, 10.0).unwrap();
        assert_eq!(m.l(), 5);
        let expect = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];
        for (x, e) in m.values().iter().zip(expect) {
            assert!((x - e).abs() <= 1e-12 * e);
        }
    }

    #[test]
    fn rejects_bad_ratio() {
        assert!(build_mesh::<f64>(10, 1.0).is_err());
        assert!(build_mesh::<f64>(10, 0.5).is_err());
        assert!(build_mesh::<f64>(0, 2.0).is_err());
    }

    #[test]
    fn floor_index_brackets() {
        let m = build_mesh::<f64>(1, 10.0).unwrap();
        assert_eq!(m.floor_index(0.5), Some(2));
        assert_eq!(m.floor_index(1.5), Some(1));
        assert_eq!(m.floor_index(1e-4), Some(5));
        assert_eq!(m.floor_index(1e-5), None);
    }

    #[test]
    fn eps3_requires_floor() {
        assert!(derive_eps3(1.002f64, 0.5 / 1e6, 1_000_000, 0).is_err());
        assert!(derive_eps3(1.002f64, 0.999, 1_000_000, 0).is_err());
        let e = derive_eps3(1.002f64, 7.0 / 1e6, 1_000_000, 0).unwrap();
        assert!(e > 0.0 && e < 1.0);
    }

    #[test]
    fn eps2_delta_roundtrip() {
        let n = 1_000_000;
        for (i, d) in [0.00009f64, 0.000165, 0.00175].into_iter().enumerate() {
            let e = eps2_for_delta(n, i, d).unwrap();
            assert!((band_delta(n, i, e) - d).abs() <= 1e-12 * d);
        }
    }
}
