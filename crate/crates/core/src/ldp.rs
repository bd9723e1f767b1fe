//! Closed-form LDP solution: the `f1` functions, the fixed-point equation for `y2`,
//! the derived optimizer variables and the rate function.
//!
//! Both models are handled through the weights `(p, q, s)` of [`ModelParams::weights`].
//! Two printed identities are replaced by the forms the tabulated values satisfy:
//! `nu = sqrt(2) y1` and `gamma = c3/(2(1 - a0^2)) = sqrt(alpha)/(2 a0)`.

use serde::Serialize;

use crate::analytic_pt::{Model, ModelParams};
use crate::error::{Error, Result};
use crate::solve1d::{find_root, geomspace};
use crate::specfun::{erf_inv, erfc, erfcx};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// `|c3|` below this is classified as the transition point.
pub const TRANSITION_C3: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Upper,
    Lower,
    AtTransition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdpSolution {
    pub params: ModelParams,
    pub y1: f64,
    pub y2: f64,
    pub nu: f64,
    pub a0: f64,
    pub c3: f64,
    pub gamma: f64,
    pub gamma_g: f64,
    pub a_cone: f64,
    pub rate: f64,
    pub tail: Tail,
}

/// `f1` with group weight `w` and interior fraction `s`:
/// `2 w y e^{y^2} / (alpha (sqrt(pi) y e^{y^2} erfc(-y) + 1) - s) - y e^{y^2} erfc(y)`.
pub fn f1_weighted(y: f64, w: f64, alpha: f64, s: f64) -> Result<f64> {
    if !y.is_finite() || y.abs() > 25.0 {
        return Err(Error::Domain(format!("f1 argument {y} outside [-25, 25]")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let den = f1_denominator(y, alpha, s);
    if den.abs() < 1e-300 {
        return Err(Error::Pole(format!("f1 denominator vanishes at y={y}")));
    }
    Ok(2.0 * w * y * (y * y).exp() / den - y * erfcx(y))
}

fn f1_denominator(y: f64, alpha: f64, s: f64) -> f64 {
    alpha * (SQRT_PI * y * erfcx(-y) + 1.0) - s
}

/// Binary `f1(y; alpha, beta)`, weight `1 - beta`. The partner term is `f1_bin(-y, alpha, 1 - beta)`.
pub fn f1_bin(y: f64, alpha: f64, beta: f64) -> Result<f64> {
    f1_weighted(y, 1.0 - beta, alpha, 0.0)
}

/// Box `f1(y; alpha, beta, mu)`, weight `mu (1 - beta)`. The partner is `f1_box(-y, alpha, beta, 1 - mu)`.
pub fn f1_box(y: f64, alpha: f64, beta: f64, mu: f64) -> Result<f64> {
    f1_weighted(y, mu * (1.0 - beta), alpha, beta)
}

/// `(f1(y2), f1(-y2))` with the model's weights.
fn f1_pair(y2: f64, params: &ModelParams) -> Result<(f64, f64)> {
    let w = params.weights();
    Ok((
        f1_weighted(y2, w.p, params.alpha, w.s)?,
        f1_weighted(-y2, w.q, params.alpha, w.s)?,
    ))
}

/// `(y1, f1(y2) - f1(-y2))` where `y1 = erfinv(R)`.
fn y1_of(y2: f64, params: &ModelParams) -> Result<(f64, f64)> {
    let (a, b) = f1_pair(y2, params)?;
    let diff = a - b;
    let ratio = (a + b) / diff;
    if !ratio.is_finite() || ratio.abs() >= 1.0 {
        return Err(Error::Domain(format!("ratio {ratio} outside (-1, 1) at y2={y2}")));
    }
    Ok((erf_inv(ratio)?, diff))
}

/// The normalized sum/difference ratio `R`; `erf(y1) = R` at a solution.
pub fn f1_ratio(y2: f64, params: &ModelParams) -> Result<f64> {
    let (a, b) = f1_pair(y2, params)?;
    Ok((a + b) / (a - b))
}

/// `2 y1 e^{y1^2} / (f1(y2) - f1(-y2)) - 1`.
pub fn fixed_point_residual(y2: f64, params: &ModelParams) -> Result<f64> {
    if !(y2 > 0.0) {
        return Err(Error::Domain(format!("y2={y2} must be positive")));
    }
    let (y1, diff) = y1_of(y2, params)?;
    Ok(2.0 * y1 * (y1 * y1).exp() / diff - 1.0)
}

fn check_ldp_params(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.beta >= params.alpha {
        return Err(Error::Domain(format!(
            "beta={} must be below alpha={}",
            params.beta, params.alpha
        )));
    }
    let w = params.weights();
    if w.q <= 0.0 || w.p <= w.q {
        return Err(Error::Domain(format!("weights {w:?} need p > q > 0")));
    }
    Ok(())
}

/// `gamma_g` at the stationary point for a given `y_i`.
pub fn gamma_g_from_yi(params: &ModelParams, yi: f64) -> f64 {
    let w = params.weights();
    let a = params.alpha;
    let shift = w.p - (1.0 - a);
    0.5 * a * SQRT_PI * yi * erfcx(yi) * erfc(-yi) - 0.5 * shift * erfc(-yi) + 0.5 * w.q * erfc(yi)
}

/// Cone ratio `A = (p - (1 - alpha - g))/(1 - alpha - g) * g/(q - g)`.
pub fn a_cone(params: &ModelParams, gamma_g: f64) -> f64 {
    let w = params.weights();
    let rest = 1.0 - params.alpha - gamma_g;
    (w.p - rest) / rest * gamma_g / (w.q - gamma_g)
}

/// `y_e = erfinv((erfc(yi) - A erfc(-yi)) / (erfc(yi) + A erfc(-yi)))`.
pub fn ye_from_cone(yi: f64, a: f64) -> Result<f64> {
    let (u, v) = (erfc(yi), a * erfc(-yi));
    erf_inv((u - v) / (u + v))
}

/// Closed-form rate from `(y1, y2)`.
pub fn rate_from(params: &ModelParams, y1: f64, y2: f64) -> f64 {
    let w = params.weights();
    let a = params.alpha;
    let d_p = a * (SQRT_PI * y2 * erfcx(-y2) + 1.0) - w.s;
    let d_q = a * (1.0 - SQRT_PI * y2 * erfcx(y2)) - w.s;
    let term = |wt: f64, d: f64| if wt == 0.0 { 0.0 } else { wt * (wt / d).ln() };
    (a - 1.0) * (y1 / y2).ln() + term(w.p, d_p) + term(w.q, d_q) + y2 * y2 - y1 * y1
}

/// Solve the LDP fixed point and assemble every derived quantity.
pub fn solve_ldp(params: &ModelParams) -> Result<LdpSolution> {
    check_ldp_params(params)?;
    let grid = geomspace(1e-6, 10.0, 256);
    let y2 = find_root(|y| fixed_point_residual(y, params), &grid, 1e-15)
        .map_err(|e| Error::NoRoot(format!("LDP fixed point at {params:?}: {e}")))?;
    let (y1, _) = y1_of(y2, params)?;
    let a0 = y1 / y2;
    let sa = params.alpha.sqrt();
    let c3 = (1.0 - a0 * a0) * sa / a0;
    let gamma = sa / (2.0 * a0);
    let gamma_g = gamma_g_from_yi(params, y2);
    let a_cone = a_cone(params, gamma_g);
    let rate = rate_from(params, y1, y2);
    let tail = if c3.abs() <= TRANSITION_C3 {
        Tail::AtTransition
    } else if c3 > 0.0 {
        Tail::Upper
    } else {
        Tail::Lower
    };
    Ok(LdpSolution {
        params: *params,
        y1,
        y2,
        nu: std::f64::consts::SQRT_2 * y1,
        a0,
        c3,
        gamma,
        gamma_g,
        a_cone,
        rate,
        tail,
    })
}

pub fn rate_function(params: &ModelParams) -> Result<f64> {
    solve_ldp(params).map(|s| s.rate)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RateCurve {
    pub rows: Vec<LdpSolution>,
    pub failures: Vec<(f64, String)>,
}

/// One LDP solve per grid point; failures are recorded and the sweep continues.
pub fn rate_curve(beta: f64, mu: f64, model: Model, alpha_grid: &[f64]) -> RateCurve {
    let mut out = RateCurve::default();
    for &alpha in alpha_grid {
        match solve_ldp(&ModelParams::new(model, alpha, beta, mu)) {
            Ok(s) => out.rows.push(s),
            Err(e) => out.failures.push((alpha, e.to_string())),
        }
    }
    out
}
