//! Gaussian special functions.
//!
//! `erf`/`erfc` come from `libm` (a port of the musl implementations, accurate
//! to about one ulp). The inverse error function is computed here.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use thiserror::Error;

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum DomainError {
    #[error("erfinv argument {0} is outside the open interval (-1, 1)")]
    Erfinv(f64),
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal density φ(x).
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function Φ(x).
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(x), computed without cancellation for large x.
#[inline]
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse error function on (−1, 1).
///
/// Starts from Giles' single-precision approximation in the transformed
/// variable w = −ln(1 − y²) and applies two Halley steps against `erf`
/// (against `erfc` in the tails, where `erf(z) − y` loses digits).
pub fn erfinv(y: f64) -> Result<f64, DomainError> {
    if !(y > -1.0 && y < 1.0) {
        return Err(DomainError::Erfinv(y));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut z = erfinv_initial(y);
    let tail = y.abs() > 0.5;
    for _ in 0..2 {
        // f(z) = erf(z) − y; f' = 2/√π e^{−z²}; f''/(2f') = −z
        let f = if tail {
            let s = y.signum();
            // erf(z) − y = (1 − y·s)·s − erfc(z·s)·s
            s * ((1.0 - s * y) - erfc(s * z))
        } else {
            erf(z) - y
        };
        let fp = 2.0 / PI.sqrt() * (-z * z).exp();
        if fp == 0.0 {
            break;
        }
        z -= f / (fp + z * f);
    }
    Ok(z)
}

fn erfinv_initial(x: f64) -> f64 {
    let mut w = -((1.0 - x) * (1.0 + x)).ln();
    let p = if w < 5.0 {
        w -= 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    p * x
}
