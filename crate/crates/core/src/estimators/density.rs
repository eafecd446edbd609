//! Probability densities used by the spatial estimators.

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Scalar;

/// Log of the isotropic 3D normal density with std-dev `sigma`.
pub fn gaussian3_log_pdf<T: Scalar>(x: Vec3<T>, mu: Vec3<T>, sigma: T) -> Result<T> {
    if !x.is_finite() || !mu.is_finite() || !sigma.is_finite() {
        return Err(Error::NonFinite("gaussian3 argument"));
    }
    if sigma <= T::zero() {
        return Err(Error::Config(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let var = sigma * sigma;
    let d2 = (x - mu).norm_squared();
    let half = T::lit(0.5);
    Ok(-T::lit(1.5) * (T::TAU() * var).ln() - half * d2 / var)
}

/// `(2πσ²)^(-3/2) · exp(-‖x-μ‖² / 2σ²)`.
pub fn gaussian3_pdf<T: Scalar>(x: Vec3<T>, mu: Vec3<T>, sigma: T) -> Result<T> {
    gaussian3_log_pdf(x, mu, sigma).map(T::exp)
}

/// Above this concentration the asymptotic expansion replaces the series.
const ASYMPTOTIC_FROM: f64 = 50.0;

/// Exponentially scaled modified Bessel function `I0(κ)·e^(-κ)`.
///
/// Power series `Σ (κ/2)^(2k) / (k!)²`, accumulated from the scaled first
/// term `e^(-κ)` so no intermediate overflows. Large κ uses the Hankel
/// asymptotic expansion, truncated at its smallest term.
pub fn bessel_i0e<T: Scalar>(kappa: T) -> T {
    let k = kappa.abs();
    if k.to_f64_lossy() > ASYMPTOTIC_FROM {
        let eight_k = T::lit(8.0) * k;
        let mut term = T::one();
        let mut sum = T::one();
        for n in 1..40 {
            let odd = T::lit((2 * n - 1) as f64);
            let next = term * odd * odd / (T::lit(n as f64) * eight_k);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() <= sum * T::epsilon() {
                break;
            }
        }
        return sum / (T::TAU() * k).sqrt();
    }
    let q = k * k / T::lit(4.0);
    let mut term = (-k).exp();
    let mut sum = term;
    let mut n = T::zero();
    loop {
        n += T::one();
        term *= q / (n * n);
        sum += term;
        if term <= sum * T::epsilon() * T::lit(0.5) {
            break;
        }
    }
    sum
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0<T: Scalar>(kappa: T) -> T {
    bessel_i0e(kappa) * kappa.abs().exp()
}

/// Log density of the von Mises distribution centered at zero.
pub fn von_mises_log_pdf<T: Scalar>(theta: T, kappa: T) -> Result<T> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("von Mises angle"));
    }
    if !kappa.is_finite() || kappa < T::zero() {
        return Err(Error::Config(format!(
            "von Mises kappa must be finite and >= 0, got {kappa}"
        )));
    }
    // κ·cosθ - ln(2π·I0(κ)) = κ(cosθ - 1) - ln(2π·I0e(κ))
    Ok(kappa * (theta.cos() - T::one()) - (T::TAU() * bessel_i0e(kappa)).ln())
}

/// `exp(κ·cosθ) / (2π·I0(κ))`.
pub fn von_mises_pdf<T: Scalar>(theta: T, kappa: T) -> Result<T> {
    von_mises_log_pdf(theta, kappa).map(T::exp)
}
