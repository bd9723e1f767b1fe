//! Weak phase-transition characterizations and the expected-width PT oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solve1d::{brent_root, find_root, geomspace, linspace};
use crate::specfun::{erf_inv, normal_cdf, normal_pdf, normal_sf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Binary,
    Box,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "bin" => Ok(Model::Binary),
            "box" => Ok(Model::Box),
            other => Err(Error::Domain(format!("unknown model '{other}'"))),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Binary => "binary",
            Model::Box => "box",
        })
    }
}

/// Evaluation point `(alpha, beta, mu, model)`. `mu` is ignored for the binary model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub model: Model,
}

/// Fractions of the coordinates that sit at zero (`p`), at one (`q`) and strictly inside (`s`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl ModelParams {
    pub fn binary(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, mu: 1.0, model: Model::Binary }
    }

    pub fn boxed(alpha: f64, beta: f64, mu: f64) -> Self {
        Self { alpha, beta, mu, model: Model::Box }
    }

    pub fn new(model: Model, alpha: f64, beta: f64, mu: f64) -> Self {
        match model {
            Model::Binary => Self::binary(alpha, beta),
            Model::Box => Self::boxed(alpha, beta, mu),
        }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    pub fn weights(&self) -> Weights {
        match self.model {
            Model::Binary => Weights { p: 1.0 - self.beta, q: self.beta, s: 0.0 },
            Model::Box => Weights {
                p: self.mu * (1.0 - self.beta),
                q: (1.0 - self.mu) * (1.0 - self.beta),
                s: self.beta,
            },
        }
    }

    /// Basic range checks shared by every evaluator.
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0 && v < 1.0;
        if !ok(self.alpha) || !ok(self.beta) {
            return Err(Error::Domain(format!(
                "alpha={} and beta={} must lie in (0, 1)",
                self.alpha, self.beta
            )));
        }
        if self.model == Model::Box && !(self.mu > 0.5 && self.mu <= 1.0) {
            return Err(Error::Domain(format!("mu={} must lie in (1/2, 1]", self.mu)));
        }
        Ok(())
    }

    /// The erfinv argument of the PT characterization, `(p + q + 2s - 2 alpha)/(p - q)`.
    pub fn pt_argument(&self) -> f64 {
        let w = self.weights();
        (w.p + w.q + 2.0 * w.s - 2.0 * self.alpha) / (w.p - w.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtPoint {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
}

/// Reduced PT form `(p - q) e^{-y^2} / (2 sqrt(pi) alpha y)` at `y = erfinv(arg)`.
fn xi_reduced(params: &ModelParams, arg: f64) -> Result<f64> {
    let w = params.weights();
    let y = erf_inv(arg)?;
    Ok((w.p - w.q) * (-y * y).exp() / (2.0 * std::f64::consts::PI.sqrt() * params.alpha * y))
}

/// Binary PT function; 1 on the curve, above 1 on the success side.
pub fn xi_bin(alpha: f64, beta: f64) -> Result<f64> {
    let params = ModelParams::binary(alpha, beta);
    params.validate()?;
    let arg = params.pt_argument();
    if !(arg > 0.0 && arg < 1.0) {
        return Err(Error::Domain(format!(
            "(1-2a)/(1-2b) = {arg} outside (0, 1) at alpha={alpha}, beta={beta}"
        )));
    }
    xi_reduced(&params, arg)
}

/// Box PT function, extended by its limits outside the argument range `(0, 1)`: `+inf`
/// when the argument is nonpositive (success side) and `0` when it reaches one (failure side).
pub fn xi_box(alpha: f64, beta: f64, mu: f64) -> Result<f64> {
    let params = ModelParams::boxed(alpha, beta, mu);
    params.validate()?;
    let arg = params.pt_argument();
    if arg.is_nan() {
        return Err(Error::Domain(format!("box PT argument undefined at alpha={alpha}, beta={beta}, mu={mu}")));
    }
    if arg <= 0.0 {
        return Ok(f64::INFINITY);
    }
    if arg >= 1.0 {
        return Ok(0.0);
    }
    xi_reduced(&params, arg)
}

pub fn xi(params: &ModelParams) -> Result<f64> {
    match params.model {
        Model::Binary => xi_bin(params.alpha, params.beta),
        Model::Box => xi_box(params.alpha, params.beta, params.mu),
    }
}

fn pt_residual(params: &ModelParams) -> Result<f64> {
    xi(params).map(|v| v - 1.0)
}

/// Fractions of a search interval for the root scans: geometric near zero, linear elsewhere.
fn scan_fractions() -> Vec<f64> {
    let mut t = geomspace(1e-7, 1e-2, 24);
    t.extend(linspace(0.02, 1.0 - 1e-9, 50));
    t
}

/// The unique `beta` on the PT curve for a given `alpha`.
pub fn pt_beta(alpha: f64, model: Model, mu: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha={alpha} outside (0, 1)")));
    }
    if model == Model::Binary && alpha >= 0.5 {
        return Err(Error::Domain(format!("binary transition saturates at beta = 1/2 for alpha={alpha} >= 1/2")));
    }
    let cands: Vec<f64> = scan_fractions().iter().map(|t| alpha * t).collect();
    let f = |b: f64| pt_residual(&ModelParams::new(model, alpha, b, mu));
    let beta = find_root(f, &cands, 1e-15).map_err(|e| {
        let signs: Vec<bool> = cands.iter().filter_map(|&b| f(b).ok()).map(|v| v > 0.0).collect();
        match (signs.iter().all(|&s| s), signs.iter().all(|&s| !s), signs.is_empty()) {
            (_, _, true) => e,
            (true, _, _) => Error::Domain(format!("no transition at alpha={alpha}: every beta in (0, alpha) succeeds")),
            (_, true, _) => Error::Domain(format!("no transition at alpha={alpha}: every beta in (0, alpha) fails")),
            _ => e,
        }
    })?;
    check_on_curve(&ModelParams::new(model, alpha, beta, mu))?;
    Ok(beta)
}

/// The unique `alpha` on the PT curve for a given `beta`.
pub fn pt_alpha(beta: f64, model: Model, mu: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta={beta} outside (0, 1)")));
    }
    let top = match model {
        Model::Binary => 0.5,
        Model::Box => 1.0,
    };
    if beta >= top {
        return Err(Error::Domain(format!("beta={beta} leaves no room for alpha")));
    }
    let cands: Vec<f64> = scan_fractions().iter().map(|t| beta + (top - beta) * t).collect();
    let f = |a: f64| pt_residual(&ModelParams::new(model, a, beta, mu));
    let alpha = find_root(f, &cands, 1e-15)?;
    check_on_curve(&ModelParams::new(model, alpha, beta, mu))?;
    Ok(alpha)
}

fn check_on_curve(params: &ModelParams) -> Result<()> {
    let r = pt_residual(params)?;
    if r.abs() > 1e-10 {
        return Err(Error::NonConvergence(format!("PT residual {r:e} at {params:?}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub alpha: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PtCurve {
    pub points: Vec<PtPoint>,
    pub skipped: Vec<SkippedPoint>,
}

/// PT points for each `alpha` in the grid; points outside the model domain are skipped.
pub fn pt_curve(model: Model, mu: f64, alpha_grid: &[f64]) -> PtCurve {
    let mut curve = PtCurve::default();
    for &alpha in alpha_grid {
        match pt_beta(alpha, model, mu) {
            Ok(beta) => curve.points.push(PtPoint { alpha, beta, mu }),
            Err(e) => curve.skipped.push(SkippedPoint { alpha, reason: e.to_string() }),
        }
    }
    curve
}

/// `E[max(h - nu, 0)^2]` for standard normal `h`.
pub fn e_pos_sq_minus(nu: f64) -> f64 {
    (1.0 + nu * nu) * normal_sf(nu) - nu * normal_pdf(nu)
}

/// `E[max(h + nu, 0)^2]` for standard normal `h`.
pub fn e_pos_sq_plus(nu: f64) -> f64 {
    (1.0 + nu * nu) * normal_cdf(nu) + nu * normal_pdf(nu)
}

/// Normalized squared width `D(nu) = p E[(h-nu)_+^2] + q E[(h+nu)_+^2] + s E[(h+nu)^2]`.
pub fn width_objective(params: &ModelParams, nu: f64) -> f64 {
    let w = params.weights();
    w.p * e_pos_sq_minus(nu) + w.q * e_pos_sq_plus(nu) + w.s * (1.0 + nu * nu)
}

fn width_objective_slope(params: &ModelParams, nu: f64) -> f64 {
    let w = params.weights();
    let e_minus = normal_pdf(nu) - nu * normal_sf(nu);
    let e_plus = normal_pdf(nu) + nu * normal_cdf(nu);
    2.0 * (-w.p * e_minus + w.q * e_plus + w.s * nu)
}

/// Same objective as [`width_objective`], with the expectations taken by a Gauss-Hermite rule.
pub fn width_objective_quadrature(params: &ModelParams, nu: f64, rule: &GaussHermite) -> f64 {
    let w = params.weights();
    rule.expect(|h| {
        let a = (h - nu).max(0.0);
        let b = (h + nu).max(0.0);
        w.p * a * a + w.q * b * b + w.s * (h + nu) * (h + nu)
    })
}

/// Argmin over `nu >= 0` of the width objective.
pub fn width_argmin(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let g = |nu: f64| width_objective_slope(params, nu);
    if g(0.0) >= 0.0 {
        return Ok(0.0);
    }
    brent_root(g, 0.0, 40.0, 1e-15, 200)
}

/// `sqrt(min_nu D(nu)) - sqrt(alpha)`: zero on the PT curve, negative on the success side.
pub fn expected_width_gap(params: &ModelParams) -> Result<f64> {
    let nu = width_argmin(params)?;
    Ok(width_objective(params, nu).sqrt() - params.alpha.sqrt())
}

/// Gauss-Hermite rule for the weight `exp(-x^2)`, built by Golub-Welsch.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            let b = (i as f64 / 2.0).sqrt();
            jac[(i, i - 1)] = b;
            jac[(i - 1, i)] = b;
        }
        let eig = nalgebra::SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// `E[f(h)]` for standard normal `h`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(std::f64::consts::SQRT_2 * x))
            .sum();
        s / std::f64::consts::PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_examples() {
        assert!((xi_bin(0.40, 0.22933).unwrap() - 1.0).abs() < 5e-4);
        assert!(xi_bin(0.45, 0.22933).unwrap() > 1.0);
        assert!(xi_bin(0.30, 0.22933).unwrap() < 1.0);
        assert!((xi_box(0.50, 0.18469, 0.85).unwrap() - 1.0).abs() < 5e-4);
        assert!(xi_box(0.60, 0.18469, 0.85).unwrap() > 1.0);
        assert!(xi_box(0.40, 0.18469, 0.85).unwrap() < 1.0);
    }

    #[test]
    fn xi_domain_errors() {
        assert!(xi_bin(0.5, 0.2).is_err());
        assert!(xi_bin(0.6, 0.2).is_err());
        assert!(matches!(xi_box(0.5, 0.2, 0.5), Err(Error::Domain(_))));
        assert!(xi_box(0.5, 0.2, 1.2).is_err());
        assert_eq!(xi_box(0.2, 0.19, 0.85).unwrap(), 0.0);
        assert_eq!(xi_box(0.7, 0.1, 0.85).unwrap(), f64::INFINITY);
    }

    #[test]
    fn pt_inversions() {
        assert!((pt_beta(0.40, Model::Binary, 1.0).unwrap() - 0.22933).abs() < 1e-5);
        assert!((pt_beta(0.50, Model::Box, 0.85).unwrap() - 0.18469).abs() < 1e-5);
        let b = pt_beta(0.45, Model::Binary, 1.0).unwrap();
        assert!((xi_bin(0.45, b).unwrap() - 1.0).abs() < 1e-12);
        assert!((pt_alpha(0.22933, Model::Binary, 1.0).unwrap() - 0.40).abs() < 1e-4);
        assert!((pt_alpha(0.18469, Model::Box, 0.85).unwrap() - 0.50).abs() < 1e-4);
    }

    #[test]
    fn curve_contains_table_points() {
        let c = pt_curve(Model::Binary, 1.0, &[0.1, 0.4, 0.55]);
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.skipped.len(), 1);
        assert!((c.points[1].beta - 0.22933).abs() < 1e-5);
        assert!(pt_curve(Model::Box, 0.85, &[]).points.is_empty());
    }

    #[test]
    fn width_gap_examples() {
        let g = expected_width_gap(&ModelParams::boxed(0.50, 0.18469, 0.85)).unwrap();
        assert!(g.abs() < 1e-4);
        let g = expected_width_gap(&ModelParams::binary(0.40, 0.22933)).unwrap();
        assert!(g.abs() < 1e-4);
        assert!(expected_width_gap(&ModelParams::boxed(0.60, 0.18469, 0.85)).unwrap() < 0.0);
    }

    #[test]
    fn gauss_hermite_moments() {
        let gh = GaussHermite::new(40);
        assert!((gh.expect(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!((gh.expect(|h| h * h) - 1.0).abs() < 1e-12);
        assert!((gh.expect(|h| h.powi(4)) - 3.0).abs() < 1e-11);
    }
}
