//! Numeric oracles for the rate function. Neither calls into the closed form: the
//! probabilistic objective is optimized over `(c3, nu, a0)` and the geometric one over
//! `(gamma_g, y_e, y_i)`, each by nested one-dimensional searches.

use serde::Serialize;

use crate::analytic_pt::ModelParams;
use crate::error::{Error, Result};
use crate::solve1d::{maximize, minimize};
use crate::specfun::{erfc, erfcx, normal_cdf};

const XTOL: f64 = 1e-10;
const Y_MAX: f64 = 6.0;
const NU_MAX: f64 = 10.0;
const C3_MAX: f64 = 20.0;
const A0_MAX: f64 = 20.0;
const STARTS: usize = 5;

/// `H(x) = x log x + (1 - x) log(1 - x)` with `H(0) = H(1) = 0`.
pub fn entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("entropy argument {x} outside [0, 1]")));
    }
    let xlx = |t: f64| if t == 0.0 { 0.0 } else { t * t.ln() };
    Ok(xlx(x) + xlx(1.0 - x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaProbPoint {
    pub c3: f64,
    pub nu: f64,
    pub a0: f64,
    pub value: f64,
}

/// The part of the probabilistic objective that depends on `c3` (and `a0`):
/// `-c3^2/2 + I_sph(c3) + c3^2/(2(1 - a0^2))`.
fn zeta_c3_part(alpha: f64, c3: f64, a0: f64) -> Result<f64> {
    if c3 == 0.0 {
        return Ok(0.0);
    }
    if a0 == 1.0 {
        return Err(Error::Pole("a0 = 1 with c3 != 0".into()));
    }
    let g_hat = (c3 - (c3 * c3 + 4.0 * alpha).sqrt()) / 4.0;
    let i_sph = g_hat * c3 - 0.5 * alpha * (1.0 - c3 / (2.0 * g_hat)).ln();
    Ok(-0.5 * c3 * c3 + i_sph + c3 * c3 / (2.0 * (1.0 - a0 * a0)))
}

/// The part that depends on `(nu, a0)`: `p log w1 + q log w2 + s log w3`.
fn zeta_w_part(params: &ModelParams, nu: f64, a0: f64) -> f64 {
    let w = params.weights();
    let t = nu / (std::f64::consts::SQRT_2 * a0);
    let damp = (-0.5 * nu * nu).exp() / a0;
    // e^{(1-a0^2) nu^2/(2 a0^2)} erfc(t) / a0 = e^{-nu^2/2} erfcx(t) / a0
    let w1 = 0.5 * damp * erfcx(t) + normal_cdf(nu);
    let w2 = 0.5 * damp * erfcx(-t) + normal_cdf(-nu);
    let log_w3 = (1.0 - a0 * a0) * nu * nu / (2.0 * a0 * a0) - a0.ln();
    let mut v = w.p * w1.ln();
    if w.q > 0.0 {
        v += w.q * w2.ln();
    }
    if w.s > 0.0 {
        v += w.s * log_w3;
    }
    v
}

/// Probabilistic objective `zeta(c3, nu, a0)`. The same expression serves both tails.
pub fn zeta_prob(params: &ModelParams, c3: f64, nu: f64, a0: f64) -> Result<f64> {
    params.validate()?;
    if !(a0 > 0.0) || !(nu >= 0.0) || !c3.is_finite() {
        return Err(Error::Domain(format!("need a0 > 0 and nu >= 0 (a0={a0}, nu={nu})")));
    }
    if (c3 > 0.0 && a0 >= 1.0) || (c3 < 0.0 && a0 <= 1.0) {
        return Err(Error::Domain(format!("a0={a0} inconsistent with the tail of c3={c3}")));
    }
    Ok(zeta_c3_part(params.alpha, c3, a0)? + zeta_w_part(params, nu, a0))
}

/// Best of Brent runs on `STARTS` equal sub-intervals of `[a, b]`.
fn multistart<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, maximizing: bool) -> (f64, f64) {
    let h = (b - a) / STARTS as f64;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..STARTS {
        let (lo, hi) = (a + h * i as f64, a + h * (i + 1) as f64);
        let cand = if maximizing { maximize(&f, lo, hi, XTOL) } else { minimize(&f, lo, hi, XTOL) };
        let better = match best {
            None => true,
            Some((_, v)) => (maximizing && cand.1 > v) || (!maximizing && cand.1 < v),
        };
        if better && cand.1.is_finite() {
            best = Some(cand);
        }
    }
    best.unwrap_or((f64::NAN, f64::NAN))
}

/// Upper tail: `min over c3 >= 0, nu >= 0, a0 in (0, 1)`.
pub fn minimize_zeta_prob_upper(params: &ModelParams) -> ZetaProbPoint {
    let alpha = params.alpha;
    let inner = |a0: f64| {
        let (c3, g) = minimize(|c| zeta_c3_part(alpha, c, a0).unwrap_or(f64::INFINITY), 0.0, C3_MAX, XTOL);
        let (nu, h) = minimize(|n| zeta_w_part(params, n, a0), 0.0, NU_MAX, XTOL);
        (c3, nu, g + h)
    };
    let (a0, _) = multistart(|a| inner(a).2, 1e-3, 1.0 - 1e-12, false);
    let (c3, nu, value) = inner(a0);
    ZetaProbPoint { c3, nu, a0, value }
}

/// Lower tail: `min over c3 <= 0` of `max over nu >= 0, a0 > 1`.
pub fn minimize_zeta_prob_lower(params: &ModelParams) -> ZetaProbPoint {
    let alpha = params.alpha;
    let inner = |c3: f64| {
        let (a0, v) = maximize(
            |a0| {
                let (_, h) = maximize(|n| zeta_w_part(params, n, a0), 0.0, NU_MAX, XTOL);
                zeta_c3_part(alpha, c3, a0).unwrap_or(f64::NEG_INFINITY) + h
            },
            1.0 + 1e-12,
            A0_MAX,
            XTOL,
        );
        let (nu, _) = maximize(|n| zeta_w_part(params, n, a0), 0.0, NU_MAX, XTOL);
        (a0, nu, v)
    };
    let (c3, _) = multistart(|c| inner(c).2, -C3_MAX, 0.0, false);
    let (a0, nu, value) = inner(c3);
    ZetaProbPoint { c3, nu, a0, value }
}

/// Rate from the probabilistic objective. Each tail's problem is pinned at zero on the
/// wrong side of the transition, so the rate is the smaller of the two.
pub fn minimize_zeta_prob(params: &ModelParams) -> Result<ZetaProbPoint> {
    params.validate()?;
    let up = minimize_zeta_prob_upper(params);
    let lo = minimize_zeta_prob_lower(params);
    let best = if up.value <= lo.value { up } else { lo };
    if !best.value.is_finite() {
        return Err(Error::NonConvergence(format!("probabilistic oracle at {params:?}")));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryParts {
    pub gamma_g: f64,
    pub y_i: f64,
    pub y_e: f64,
    pub psi_com: f64,
    pub psi_int: f64,
    pub psi_ext: f64,
    pub psi_net: f64,
}

/// Open interval of admissible `gamma_g`: both entropy arguments must stay in `[0, 1]`.
pub fn gamma_g_interval(params: &ModelParams) -> (f64, f64) {
    let w = params.weights();
    let a = params.alpha;
    ((1.0 - a - w.p).max(0.0), (1.0 - a).min(w.q))
}

fn psi_com(params: &ModelParams, g: f64) -> Result<f64> {
    let w = params.weights();
    let a = params.alpha;
    Ok(-w.p * entropy((1.0 - a - g) / w.p)? - w.q * entropy((w.q - g) / w.q)?)
}

fn int_integrand(params: &ModelParams, g: f64, y: f64) -> f64 {
    let w = params.weights();
    let a = params.alpha;
    let ca = w.p - (1.0 - a - g);
    a * y * y + ca * erfc(y).ln() + (w.q - g) * erfc(-y).ln() - (a - w.s) * std::f64::consts::LN_2
}

fn ext_integrand(params: &ModelParams, g: f64, y: f64) -> f64 {
    let a = params.alpha;
    -a * y * y + (1.0 - a - g) * erfc(-y).ln() + g * erfc(y).ln() - (1.0 - a) * std::f64::consts::LN_2
}

/// Geometric objective at a given point, split into its three parts.
pub fn zeta_geom(params: &ModelParams, gamma_g: f64, y_e: f64, y_i: f64) -> Result<GeometryParts> {
    params.validate()?;
    let (lo, hi) = gamma_g_interval(params);
    if !(gamma_g > lo && gamma_g < hi) {
        return Err(Error::Domain(format!("gamma_g={gamma_g} outside ({lo}, {hi})")));
    }
    if !(y_e >= 0.0 && y_i >= 0.0) {
        return Err(Error::Domain("y_e and y_i must be nonnegative".into()));
    }
    let psi_com = psi_com(params, gamma_g)?;
    let psi_int = int_integrand(params, gamma_g, y_i);
    let psi_ext = ext_integrand(params, gamma_g, y_e);
    Ok(GeometryParts {
        gamma_g,
        y_i,
        y_e,
        psi_com,
        psi_int,
        psi_ext,
        psi_net: psi_com + psi_int + psi_ext,
    })
}

/// Geometric max-min with the external-angle part entering as `ext_sign * psi_ext`.
/// [`solve_geom`] uses `+1`; `-1` is the alternative lower-tail convention.
pub fn solve_geom_signed(params: &ModelParams, ext_sign: f64) -> Result<GeometryParts> {
    params.validate()?;
    let (lo, hi) = gamma_g_interval(params);
    if !(hi > lo) {
        return Err(Error::Domain(format!("empty gamma_g interval at {params:?}")));
    }
    let inner = |g: f64| {
        let (yi, vi) = minimize(|y| int_integrand(params, g, y), 0.0, Y_MAX, XTOL);
        let (ye, ve) = maximize(|y| ext_integrand(params, g, y), 0.0, Y_MAX, XTOL);
        let com = psi_com(params, g).unwrap_or(f64::NAN);
        (yi, ye, com, vi, ve)
    };
    let eps = 1e-12 * (hi - lo);
    let (g, _) = maximize(
        |g| {
            let (_, _, com, vi, ve) = inner(g);
            com + vi + ext_sign * ve
        },
        lo + eps,
        hi - eps,
        XTOL,
    );
    let (y_i, y_e, psi_com, psi_int, psi_ext) = inner(g);
    if !(psi_com + psi_int + psi_ext).is_finite() {
        return Err(Error::NonConvergence(format!("geometric oracle at {params:?}")));
    }
    Ok(GeometryParts {
        gamma_g: g,
        y_i,
        y_e,
        psi_com,
        psi_int,
        psi_ext,
        psi_net: psi_com + psi_int + ext_sign * psi_ext,
    })
}

/// Geometric oracle: `max over gamma_g` of `psi_com + min_{y_i} psi_int + max_{y_e} psi_ext`.
pub fn solve_geom(params: &ModelParams) -> Result<GeometryParts> {
    solve_geom_signed(params, 1.0)
}

/// Analytic partial derivatives `(d/d gamma_g, d/d y_i, d/d y_e)` of the geometric objective.
pub fn zeta_geom_gradient(params: &ModelParams, gamma_g: f64, y_e: f64, y_i: f64) -> [f64; 3] {
    let w = params.weights();
    let a = params.alpha;
    let g = gamma_g;
    let rest = 1.0 - a - g;
    let ca = w.p - rest;
    let cb = w.q - g;
    let mills = |y: f64| {
        // 2 e^{-y^2} / (sqrt(pi) erfc(y)) = 2 / (sqrt(pi) erfcx(y))
        2.0 / (std::f64::consts::PI.sqrt() * erfcx(y))
    };
    let d_g = (rest / ca).ln() + (cb / g).ln()
        + (erfc(y_i) * erfc(y_e) / (erfc(-y_i) * erfc(-y_e))).ln();
    let d_yi = 2.0 * a * y_i - ca * mills(y_i) + cb * mills(-y_i);
    let d_ye = -2.0 * a * y_e + rest * mills(-y_e) - g * mills(y_e);
    [d_g, d_yi, d_ye]
}
