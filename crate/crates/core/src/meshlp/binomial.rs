//! Log-space binomial probabilities.
//!
//! Corpora reach N ≈ 1.7·10⁸, so every quantity of the form `C(N,i) xⁱ (1−x)^(N−i)`
//! is evaluated as a logarithm and exponentiated once at the end.

use crate::scalar::Scalar;

use super::MeshLpError;

/// Log values below this are reported as an exact zero.
pub const LOG_UNDERFLOW: f64 = -700.0;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<F: Scalar>(x: F) -> F {
    let half = F::lit(0.5);
    if x < half {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = F::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(F::one() - x);
    }
    let x = x - F::one();
    let mut acc = F::lit(LANCZOS_COEF[0]);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc = acc + F::lit(c) / (x + F::count(k as u64));
    }
    let t = x + F::lit(LANCZOS_G) + half;
    F::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

/// `ln C(n, i)`.
///
/// When `min(i, n−i)` is small the coefficient is accumulated term by term, which
/// avoids the cancellation between three huge `ln Γ` values at corpus scale.
pub fn ln_choose<F: Scalar>(n: u64, i: u64) -> F {
    debug_assert!(i <= n);
    let k = i.min(n - i);
    if k == 0 {
        return F::zero();
    }
    if k <= 64 {
        let mut acc = F::zero();
        for m in 0..k {
            acc = acc + (F::count(n - m) / F::count(k - m)).ln();
        }
        return acc;
    }
    ln_gamma(F::count(n) + F::one()) - ln_gamma(F::count(i) + F::one()) - ln_gamma(F::count(n - i) + F::one())
}

/// Logarithm of `C(n,i) xⁱ (1−x)^(n−i)`; `-inf` where the probability is exactly zero.
pub fn ln_bpdf<F: Scalar>(i: u64, n: u64, x: F) -> F {
    if x == F::zero() {
        return if i == 0 { F::zero() } else { F::neg_infinity() };
    }
    if x == F::one() {
        return if i == n { F::zero() } else { F::neg_infinity() };
    }
    let head = if i == 0 { F::zero() } else { F::count(i) * x.ln() };
    let tail = if i == n { F::zero() } else { F::count(n - i) * (-x).ln_1p() };
    ln_choose::<F>(n, i) + head + tail
}

/// Binomial probability mass `C(n,i) xⁱ (1−x)^(n−i)`.
pub fn bpdf<F: Scalar>(i: u64, n: u64, x: F) -> Result<F, MeshLpError> {
    if i > n {
        return Err(MeshLpError::Domain(format!("bpdf: i = {i} exceeds n = {n}")));
    }
    if !(x >= F::zero() && x <= F::one()) {
        return Err(MeshLpError::Domain(format!("bpdf: probability {x} outside [0, 1]")));
    }
    Ok(bpdf_unchecked(i, n, x))
}

#[inline]
pub(crate) fn bpdf_unchecked<F: Scalar>(i: u64, n: u64, x: F) -> F {
    let lp = ln_bpdf(i, n, x);
    if lp < F::lit(LOG_UNDERFLOW) {
        F::zero()
    } else {
        lp.exp()
    }
}
