//! Error-function family on the real line.
//!
//! `erf` and `erfc` come from `libm` (the musl implementations, about 1 ulp).
//! `erfcx` switches to a continued fraction once `erfc` would underflow, and
//! `erf_inv` polishes the `statrs` seed with Halley steps.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Above this point `erfcx` uses the continued fraction.
const ERFCX_CF_SWITCH: f64 = 4.0;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `exp(x^2)` with the rounding error of `x*x` folded back in.
fn exp_sq(x: f64) -> f64 {
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    hi.exp() * (1.0 + lo)
}

/// Scaled complementary error function `exp(x^2) * erfc(x)`.
///
/// Overflows to `+inf` for `x < -26.6`, as `exp(x^2)` itself does.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 * exp_sq(x) - erfcx(-x);
    }
    if x < ERFCX_CF_SWITCH {
        return exp_sq(x) * erfc(x);
    }
    if x > 1e8 {
        return 1.0 / (x * PI.sqrt());
    }
    erfcx_cf(x)
}

/// Lentz evaluation of `erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`.
fn erfcx_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..200 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (f * PI.sqrt())
}

/// Inverse error function on `(-1, 1)`.
pub fn erf_inv(p: f64) -> Result<f64> {
    if !(p > -1.0 && p < 1.0) {
        return Err(Error::Domain(format!("erf_inv argument {p} outside (-1, 1)")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let mut y = statrs::function::erf::erf_inv(p);
    // Halley on erf(y) - p, with erf' = 2/sqrt(pi) e^{-y^2} and erf'' = -2y erf'.
    for _ in 0..3 {
        let r = if y.abs() < 0.5 {
            erf(y) - p
        } else {
            // Work in erfc near the tails to keep the residual precise.
            let s = y.signum();
            s * (1.0 - p * s) - s * erfc(y * s)
        };
        let d1 = FRAC_2_SQRT_PI * (-y * y).exp();
        if d1 == 0.0 {
            break;
        }
        let step = r / d1;
        let next = y - step / (1.0 + y * step);
        if (next - y).abs() <= 1e-16 * y.abs() {
            y = next;
            break;
        }
        y = next;
    }
    Ok(y)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal upper tail `P(h > x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}
