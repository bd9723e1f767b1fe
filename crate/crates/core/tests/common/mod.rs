//! Invariant checks shared by the property tests and the acceptance run.
//!
//! Each check sweeps a deterministic grid and returns the first violation it finds.

#![allow(dead_code)]

use clap::Parser;
use l1pt::analytic_pt::{expected_width_gap, pt_alpha, pt_beta, xi};
use l1pt::cli::{
    cmd_ldp, cmd_pt, cmd_simulate, cmd_verify, verify_grid, verify_point, Cli, Command, TABLE1_BETA, TABLE3_BETA,
    TABLE3_MU,
};
use l1pt::linalg_lp::simplex::{self, LpProblem, SimplexOptions};
use l1pt::ldp::{f1_ratio, fixed_point_residual, solve_ldp, ye_from_cone, LdpSolution, Tail};
use l1pt::linalg_lp::{gen_instance, lp_failure, null_space_failure, InstanceDims, ProblemInstance};
use l1pt::montecarlo::{compare_methods, run_trials, simulate_cell, table2_cells, table4_cells, Method, TrialConfig, TRIAL_TOL};
use l1pt::oracles::{zeta_geom, zeta_geom_gradient, zeta_prob};
use l1pt::solve1d::linspace;
use l1pt::specfun::{erf, erf_inv, erfc, erfcx};
use l1pt::{Model, ModelParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Check = Result<(), String>;

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sqrt_pi() -> f64 {
    std::f64::consts::PI.sqrt()
}

/// Reference `(model, beta, mu)` slices used by the LDP and oracle sweeps.
pub fn reference_slices() -> [(Model, f64, f64); 4] {
    [
        (Model::Binary, TABLE1_BETA, 1.0),
        (Model::Binary, 0.12, 1.0),
        (Model::Box, TABLE3_BETA, TABLE3_MU),
        (Model::Box, 0.25, 0.95),
    ]
}

// ---------------------------------------------------------------- special functions

pub fn erf_complement() -> Check {
    for x in linspace(-6.0, 6.0, 2401) {
        let d = (erf(x) + erfc(x) - 1.0).abs();
        ensure(d <= 1e-14, || format!("erf + erfc - 1 = {d:e} at x={x}"))?;
    }
    Ok(())
}

pub fn erfcx_scaling() -> Check {
    for x in linspace(0.0, 6.0, 1201) {
        let lhs = erfcx(x) * (-x * x).exp();
        let rel = ((lhs - erfc(x)) / erfc(x)).abs();
        ensure(rel <= 1e-12, || format!("erfcx scaling off by {rel:e} at x={x}"))?;
    }
    Ok(())
}

/// `|erf_inv(erf(x)) - x| <= tol` for `x` on a grid over `[-lim, lim]`.
pub fn erf_inv_roundtrip(lim: f64, tol: f64) -> Check {
    for x in linspace(-lim, lim, 2001) {
        let back = erf_inv(erf(x)).map_err(|e| format!("erf_inv(erf({x})): {e}"))?;
        let d = (back - x).abs();
        ensure(d <= tol, || format!("erf_inv(erf(x)) - x = {d:e} at x={x}"))?;
    }
    Ok(())
}

/// Forward residual `erf(erf_inv(erf(x))) = erf(x)`, which stays meaningful where `erf` saturates.
pub fn erf_inv_forward(lim: f64) -> Check {
    for x in linspace(-lim, lim, 2001) {
        let p = erf(x);
        let d = (erf(erf_inv(p).map_err(|e| e.to_string())?) - p).abs();
        ensure(d <= 1e-13, || format!("erf(erf_inv(p)) - p = {d:e} at x={x}"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- phase transition

fn pt_alpha_grid(model: Model, mu: f64) -> Vec<f64> {
    match model {
        Model::Binary => linspace(0.05, 0.45, 9),
        Model::Box if mu < 0.9 => linspace(0.4, 0.9, 11),
        Model::Box => linspace(0.2, 0.9, 15),
    }
}

fn sign_changes(alpha: f64, model: Model, mu: f64) -> Result<usize, String> {
    let eps = 1e-4;
    let mut changes = 0;
    let mut last: Option<bool> = None;
    for beta in linspace(eps, alpha - eps, 400) {
        let v = xi(&ModelParams::new(model, alpha, beta, mu)).map_err(|e| e.to_string())?;
        if v.is_nan() {
            return Err(format!("xi is NaN at alpha={alpha}, beta={beta}"));
        }
        let above = v > 1.0;
        if last.is_some_and(|l| l != above) {
            changes += 1;
        }
        last = Some(above);
    }
    Ok(changes)
}

pub fn xi_single_crossing() -> Check {
    for (model, mu) in [(Model::Binary, 1.0), (Model::Box, TABLE3_MU), (Model::Box, 0.95)] {
        for alpha in pt_alpha_grid(model, mu) {
            let n = sign_changes(alpha, model, mu)?;
            ensure(n == 1, || format!("{model} mu={mu} alpha={alpha}: {n} sign changes of xi - 1"))?;
        }
    }
    Ok(())
}

pub fn pt_inverse_pair() -> Check {
    for (model, mu) in [(Model::Binary, 1.0), (Model::Box, TABLE3_MU), (Model::Box, 0.95)] {
        for alpha in pt_alpha_grid(model, mu) {
            let beta = pt_beta(alpha, model, mu).map_err(|e| e.to_string())?;
            let back = pt_alpha(beta, model, mu).map_err(|e| e.to_string())?;
            ensure((back - alpha).abs() <= 1e-8, || format!("{model} alpha={alpha}: round trip {back}"))?;
        }
    }
    Ok(())
}

/// On the curve both tests report a transition; a step of 0.01 in `beta` moves both off it.
pub fn width_gap_zero_set() -> Check {
    for (model, mu) in [(Model::Binary, 1.0), (Model::Box, TABLE3_MU), (Model::Box, 0.95)] {
        for alpha in pt_alpha_grid(model, mu) {
            let beta = pt_beta(alpha, model, mu).map_err(|e| e.to_string())?;
            for db in [-0.01, 0.0, 0.01] {
                let b = beta + db;
                if !(b > 0.0 && b < alpha) {
                    continue;
                }
                let p = ModelParams::new(model, alpha, b, mu);
                let gap = expected_width_gap(&p).map_err(|e| e.to_string())?;
                let x = xi(&p).map_err(|e| e.to_string())?;
                let on_gap = gap.abs() <= 1e-6;
                let on_xi = (x - 1.0).abs() <= 1e-4;
                ensure(on_gap == on_xi, || format!("{p:?}: gap {gap:e} vs xi - 1 = {:e}", x - 1.0))?;
                ensure(on_gap == (db == 0.0), || format!("{p:?}: gap {gap:e} at offset {db}"))?;
            }
        }
    }
    Ok(())
}

/// The box PT `beta` grows with `mu`, so `mu -> 1` beats `mu = 0.85`.
pub fn box_pt_monotone_in_mu() -> Check {
    let mus = linspace(0.6, 1.0, 9);
    for alpha in [0.5, 0.6, 0.7, 0.8] {
        let mut prev = 0.0;
        for &mu in &mus {
            let b = pt_beta(alpha, Model::Box, mu).map_err(|e| e.to_string())?;
            ensure(b > prev, || format!("alpha={alpha}: beta {b} at mu={mu} not above {prev}"))?;
            prev = b;
        }
        let b85 = pt_beta(alpha, Model::Box, 0.85).map_err(|e| e.to_string())?;
        ensure(prev > b85, || format!("alpha={alpha}: mu=1 gives {prev}, mu=0.85 gives {b85}"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- LDP closed form

/// LDP solutions on a grid straddling the transition of each reference slice.
pub fn ldp_grid() -> Result<Vec<(f64, LdpSolution)>, String> {
    let mut out = Vec::new();
    for (model, beta, mu) in reference_slices() {
        let a_w = pt_alpha(beta, model, mu).map_err(|e| e.to_string())?;
        for d in linspace(-0.1, 0.1, 21) {
            let alpha = a_w + d;
            if alpha <= beta + 0.02 || alpha >= 0.98 {
                continue;
            }
            let s = solve_ldp(&ModelParams::new(model, alpha, beta, mu)).map_err(|e| e.to_string())?;
            out.push((a_w, s));
        }
    }
    Ok(out)
}

pub fn ldp_fixed_point() -> Check {
    for (_, s) in ldp_grid()? {
        let r = fixed_point_residual(s.y2, &s.params).map_err(|e| e.to_string())?;
        ensure(r.abs() <= 1e-10, || format!("{:?}: residual {r:e}", s.params))?;
        let ratio = f1_ratio(s.y2, &s.params).map_err(|e| e.to_string())?;
        let d = (erf(s.y1) - ratio).abs();
        ensure(d <= 1e-10, || format!("{:?}: erf(y1) - R = {d:e}", s.params))?;
    }
    Ok(())
}

pub fn ldp_identities() -> Check {
    for (_, s) in ldp_grid()? {
        let sa = s.params.alpha.sqrt();
        let errs = [
            s.a0 * s.y2 - s.y1,
            s.nu - std::f64::consts::SQRT_2 * s.y1,
            s.c3 - (1.0 - s.a0 * s.a0) * sa / s.a0,
            s.gamma - sa / (2.0 * s.a0),
        ];
        let worst = errs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        ensure(worst <= 1e-12, || format!("{:?}: identity error {worst:e}", s.params))?;
    }
    Ok(())
}

pub fn tail_sign_law() -> Check {
    for (a_w, s) in ldp_grid()? {
        let d = s.params.alpha - a_w;
        let want = if d.abs() < 1e-9 {
            Tail::AtTransition
        } else if d > 0.0 {
            Tail::Upper
        } else {
            Tail::Lower
        };
        ensure(s.tail == want, || format!("{:?}: tail {:?}, c3 {}", s.params, s.tail, s.c3))?;
        ensure(s.c3.signum() == d.signum() || s.tail == Tail::AtTransition, || {
            format!("{:?}: sign(c3) disagrees with sign(alpha - alpha_w)", s.params)
        })?;
    }
    Ok(())
}

fn pt_betas(model: Model) -> Vec<f64> {
    match model {
        Model::Binary => linspace(0.04, 0.4, 10),
        Model::Box => linspace(0.04, 0.4, 10),
    }
}

pub fn pt_recovery() -> Check {
    for (model, mu) in [(Model::Binary, 1.0), (Model::Box, TABLE3_MU)] {
        for beta in pt_betas(model) {
            let alpha = pt_alpha(beta, model, mu).map_err(|e| e.to_string())?;
            let p = ModelParams::new(model, alpha, beta, mu);
            let s = solve_ldp(&p).map_err(|e| e.to_string())?;
            ensure((s.y1 - s.y2).abs() <= 1e-8, || format!("{p:?}: y1 - y2 = {:e}", s.y1 - s.y2))?;
            ensure(s.rate.abs() <= 1e-10, || format!("{p:?}: rate {:e}", s.rate))?;
            let y = s.y2;
            let lhs = sqrt_pi() * y * erfcx(-y);
            let rhs = match model {
                Model::Binary => (1.0 - beta) / alpha - 1.0,
                Model::Box => (mu * (1.0 - beta) + beta - alpha) / alpha,
            };
            ensure((lhs - rhs).abs() <= 1e-8, || format!("{p:?}: PT identity {lhs} vs {rhs}"))?;
        }
    }
    Ok(())
}

pub fn rate_shape() -> Check {
    for (model, beta, mu) in reference_slices() {
        let a_w = pt_alpha(beta, model, mu).map_err(|e| e.to_string())?;
        for side in [-1.0, 1.0] {
            let mut prev = 0.0;
            for d in linspace(0.01, 0.1, 10) {
                let alpha = a_w + side * d;
                if alpha <= beta + 0.02 || alpha >= 0.98 {
                    break;
                }
                let p = ModelParams::new(model, alpha, beta, mu);
                let r = solve_ldp(&p).map_err(|e| e.to_string())?.rate;
                ensure(r < prev, || format!("{p:?}: rate {r} not below {prev}"))?;
                prev = r;
            }
        }
    }
    Ok(())
}

/// The erfc pair inside `f1(y2) - f1(-y2)` collapses to `2 y2 e^{y2^2}` at PT points.
pub fn symmetry_bridge() -> Check {
    for (model, mu) in [(Model::Binary, 1.0), (Model::Box, TABLE3_MU)] {
        for beta in pt_betas(model) {
            let alpha = pt_alpha(beta, model, mu).map_err(|e| e.to_string())?;
            let p = ModelParams::new(model, alpha, beta, mu);
            let y = solve_ldp(&p).map_err(|e| e.to_string())?.y2;
            let ey = (y * y).exp();
            let direct = y * ey * erfc(-y) + y * ey * erfc(y);
            let bridge = 2.0 * y * ey;
            ensure(((direct - bridge) / bridge).abs() <= 1e-12, || format!("{p:?}: {direct} vs {bridge}"))?;
            let w = p.weights();
            let d_p = alpha * (sqrt_pi() * y * erfcx(-y) + 1.0) - w.s;
            let d_q = alpha * (1.0 - sqrt_pi() * y * erfcx(y)) - w.s;
            let f_p = l1pt::ldp::f1_weighted(y, w.p, alpha, w.s).map_err(|e| e.to_string())?;
            let f_q = l1pt::ldp::f1_weighted(-y, w.q, alpha, w.s).map_err(|e| e.to_string())?;
            let recovered = bridge * (w.p / d_p + w.q / d_q) - (f_p - f_q);
            ensure(((recovered - bridge) / bridge).abs() <= 1e-12, || {
                format!("{p:?}: f1 pair gives {recovered}, expected {bridge}")
            })?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- oracles

fn oracle_points() -> Vec<ModelParams> {
    let mut v = verify_grid(Model::Binary, 1.0);
    v.extend(verify_grid(Model::Box, TABLE3_MU));
    v
}

pub fn oracle_triple_agreement() -> Check {
    let pts = oracle_points();
    ensure(pts.len() >= 40, || format!("only {} oracle points", pts.len()))?;
    for p in pts {
        let row = verify_point(&p);
        let re = row.rate_err.ok_or_else(|| format!("{p:?}: {}", row.note))?;
        let ae = row.arg_err.ok_or_else(|| format!("{p:?}: {}", row.note))?;
        ensure(re <= 1e-6 && ae <= 1e-4, || format!("{p:?}: rate err {re:e}, argmin err {ae:e}"))?;
    }
    Ok(())
}

fn closed_geometry(p: &ModelParams) -> Result<(LdpSolution, f64), String> {
    let s = solve_ldp(p).map_err(|e| e.to_string())?;
    let ye = ye_from_cone(s.y2, s.a_cone).map_err(|e| e.to_string())?;
    Ok((s, ye))
}

pub fn curvature_certificates() -> Check {
    let h = 1e-3;
    for p in oracle_points() {
        let (s, ye) = closed_geometry(&p)?;
        let f = |g: f64, e: f64, i: f64| zeta_geom(&p, g, e, i).map(|z| z.psi_net).map_err(|e| e.to_string());
        let (g, e, i) = (s.gamma_g, ye, s.y2);
        let c = f(g, e, i)?;
        let d_g = f(g + h, e, i)? - 2.0 * c + f(g - h, e, i)?;
        let d_e = f(g, e + h, i)? - 2.0 * c + f(g, e - h, i)?;
        let d_i = f(g, e, i + h)? - 2.0 * c + f(g, e, i - h)?;
        ensure(d_g < 0.0 && d_e < 0.0 && d_i > 0.0, || {
            format!("{p:?}: second differences g {d_g:e}, y_e {d_e:e}, y_i {d_i:e}")
        })?;
    }
    Ok(())
}

pub fn first_order_conditions() -> Check {
    for p in oracle_points() {
        let (s, ye) = closed_geometry(&p)?;
        let grad = zeta_geom_gradient(&p, s.gamma_g, ye, s.y2);
        let worst = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure(worst <= 1e-7, || format!("{p:?}: gradient {grad:?}"))?;
    }
    Ok(())
}

pub fn prob_geom_identity() -> Check {
    for p in oracle_points() {
        let (s, ye) = closed_geometry(&p)?;
        let zp = zeta_prob(&p, s.c3, s.nu, s.a0).map_err(|e| e.to_string())?;
        let zg = zeta_geom(&p, s.gamma_g, ye, s.y2).map_err(|e| e.to_string())?.psi_net;
        ensure((zp - zg).abs() <= 1e-9, || format!("{p:?}: zeta_prob {zp} vs zeta_geom {zg}"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- LP and Monte Carlo

/// A feasible random LP: Gaussian `A`, `b = A x0` for `x0` inside the bounds, and costs
/// that are positive on unbounded columns so the optimum is finite.
pub fn random_lp(seed: u64) -> (LpProblem, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..10usize);
    let n = rng.random_range(m + 1..3 * m + 4);
    let a = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let upper: Vec<f64> = (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => f64::INFINITY,
            1 => 1.0,
            _ => rng.random_range(0.5..4.0),
        })
        .collect();
    let x0: Vec<f64> = upper.iter().map(|&u| rng.random_range(0.0..1.0) * if u.is_finite() { u } else { 3.0 }).collect();
    let c: Vec<f64> = upper
        .iter()
        .map(|&u| if u.is_finite() { rng.random_range(-1.0..1.0) } else { rng.random_range(0.1..1.0) })
        .collect();
    let b = (&a * DVector::from_column_slice(&x0)).as_slice().to_vec();
    (LpProblem { a, b, c, upper }, x0)
}

pub fn lp_certificate(seed: u64) -> Check {
    let (p, x0) = random_lp(seed);
    let sol = simplex::solve(&p, &SimplexOptions::default()).map_err(|e| format!("seed {seed}: {e}"))?;
    let cert = &sol.certificate;
    let bnorm = p.b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    ensure(cert.primal_residual <= 1e-9 * bnorm, || format!("seed {seed}: residual {:e}", cert.primal_residual))?;
    for (j, (&x, &u)) in sol.x.iter().zip(&p.upper).enumerate() {
        ensure(x >= -1e-9 && x <= u + 1e-9, || format!("seed {seed}: x[{j}] = {x} outside [0, {u}]"))?;
    }
    let scale = 1.0 + sol.objective.abs();
    ensure(cert.gap.abs() <= 1e-9 * scale, || format!("seed {seed}: duality gap {:e}", cert.gap))?;
    let planted: f64 = p.c.iter().zip(&x0).map(|(c, x)| c * x).sum();
    ensure(sol.objective <= planted + 1e-9 * scale, || format!("seed {seed}: objective {} above feasible {planted}", sol.objective))?;
    ensure(cert.lower_bound <= sol.objective + 1e-9 * scale, || format!("seed {seed}: bound above objective"))?;
    Ok(())
}

pub fn lp_certificates(count: u64) -> Check {
    (0..count).try_for_each(lp_certificate)
}

/// The same instance with columns reordered by `perm`.
pub fn permuted(inst: &ProblemInstance, perm: &[usize]) -> ProblemInstance {
    let mut out = inst.clone();
    for (new, &old) in perm.iter().enumerate() {
        out.a_matrix.set_column(new, &inst.a_matrix.column(old));
        out.x_true[new] = inst.x_true[old];
        out.pattern[new] = inst.pattern[old];
    }
    out
}

pub fn permutation_invariance() -> Check {
    for (model, m) in [(Model::Binary, 24), (Model::Binary, 36), (Model::Box, 30), (Model::Box, 42)] {
        let dims = InstanceDims::new(model, 60, m, 12, TABLE3_MU).map_err(|e| e.to_string())?;
        for seed in 0..4u64 {
            let inst = gen_instance(dims, model, seed);
            let perm: Vec<usize> = (0..dims.n).map(|j| (7 * j + 3) % dims.n).collect();
            let other = permuted(&inst, &perm);
            let a = lp_failure(&inst, TRIAL_TOL).map_err(|e| e.to_string())?;
            let b = lp_failure(&other, TRIAL_TOL).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{model} m={m} seed={seed}: failure {a} vs permuted {b}"))?;
            let a = null_space_failure(&inst, TRIAL_TOL).map_err(|e| e.to_string())?;
            let b = null_space_failure(&other, TRIAL_TOL).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{model} m={m} seed={seed}: null-space {a} vs permuted {b}"))?;
        }
    }
    Ok(())
}

pub fn method_disagreement(trials: usize) -> Check {
    for (model, m) in [(Model::Binary, 33), (Model::Box, 30)] {
        let dims = InstanceDims::new(model, 60, m, 12, TABLE3_MU).map_err(|e| e.to_string())?;
        let agree = compare_methods(dims, model, trials, 17);
        ensure(agree.solver_errors == 0, || format!("{model}: {} solver errors", agree.solver_errors))?;
        ensure(agree.rate() > 0.99, || format!("{model}: agreement {} ({:?})", agree.rate(), agree.disagreements))?;
    }
    Ok(())
}

pub fn mc_determinism() -> Check {
    for (model, method) in [(Model::Binary, Method::LpCompare), (Model::Box, Method::NullSpace)] {
        let dims = InstanceDims::new(model, 60, 30, 12, TABLE3_MU).map_err(|e| e.to_string())?;
        let cfg = TrialConfig::new(dims, model, TABLE3_MU, 40, 99, method);
        let a = run_trials(&cfg).map_err(|e| e.to_string())?;
        let b = run_trials(&cfg).map_err(|e| e.to_string())?;
        ensure((a.failures, a.successes, a.solver_errors) == (b.failures, b.successes, b.solver_errors), || {
            format!("{model} {method}: counts differ between identical runs")
        })?;
    }
    Ok(())
}

/// Both methods on every tabulated cell; the estimates must sit inside each other's intervals.
pub fn method_agreement_on_tables(trials: usize) -> Check {
    for cell in table2_cells().into_iter().chain(table4_cells()) {
        let lp = simulate_cell(&cell, trials, 5, Method::LpCompare).map_err(|e| e.to_string())?;
        let ns = simulate_cell(&cell, trials, 5, Method::NullSpace).map_err(|e| e.to_string())?;
        for r in [&lp, &ns] {
            ensure(r.solver_errors == 0, || format!("{} alpha={}: {:?}", r.method, cell.alpha, r.error_samples))?;
        }
        let p_lp = lp.failures as f64 / lp.completed() as f64;
        let p_ns = ns.failures as f64 / ns.completed() as f64;
        let (lo_a, hi_a) = l1pt::montecarlo::wilson_interval(lp.failures, lp.completed());
        let (lo_b, hi_b) = l1pt::montecarlo::wilson_interval(ns.failures, ns.completed());
        let half = (hi_a - lo_a) / 2.0 + (hi_b - lo_b) / 2.0;
        ensure((p_lp - p_ns).abs() <= half, || {
            format!("{} alpha={}: failure rates {p_lp} vs {p_ns}", cell.model, cell.alpha)
        })?;
    }
    Ok(())
}

/// Above the transition failures are rare; below it successes are.
pub fn sidedness(trials: usize) -> Check {
    let t2 = table2_cells();
    let t4 = table4_cells();
    for (cell, above) in [(t2[0], false), (t2[4], true), (t4[0], false), (t4[4], true)] {
        let r = simulate_cell(&cell, trials, 11, Method::LpCompare).map_err(|e| e.to_string())?;
        let done = r.completed() as f64;
        let (rare, common) = if above { (r.failures, r.successes) } else { (r.successes, r.failures) };
        ensure((rare as f64) < 0.05 * done && common > rare, || {
            format!("{} alpha={}: {} failures out of {}", cell.model, cell.alpha, r.failures, r.completed())
        })?;
        let (rare_rate, common_rate) = if above { (r.i_err_hat, r.i_cor_hat) } else { (r.i_cor_hat, r.i_err_hat) };
        ensure(common_rate.is_some_and(|v| v > -0.005), || format!("{} alpha={}: common side {common_rate:?}", cell.model, cell.alpha))?;
        ensure(rare_rate.is_none_or(|v| v < -0.005), || format!("{} alpha={}: rare side {rare_rate:?}", cell.model, cell.alpha))?;
    }
    Ok(())
}

/// Every command renders byte-identical output for an identical flag set.
pub fn cli_determinism() -> Check {
    let runs = [
        vec!["l1pt", "ldp", "--table3"],
        vec!["l1pt", "--format", "json", "pt", "--model", "box", "--points", "7"],
        vec!["l1pt", "verify", "--model", "binary", "--beta", "0.2", "--alphas", "0.3,0.4"],
        vec!["l1pt", "--seed", "4", "simulate", "--model", "box", "--n", "60", "--m", "30", "--k", "10", "--trials", "20"],
    ];
    for argv in runs {
        let render = || -> Result<String, String> {
            let cli = Cli::try_parse_from(&argv).map_err(|e| e.to_string())?;
            let r = match &cli.command {
                Command::Pt(a) => cmd_pt(a, cli.format),
                Command::Ldp(a) => cmd_ldp(a, cli.format),
                Command::Verify(a) => cmd_verify(a, cli.format),
                Command::Simulate(a) => cmd_simulate(a, cli.seed, cli.format),
            }
            .map_err(|e| e.to_string())?;
            Ok(format!("{}{}", r.body, r.manifest.unwrap_or_default()))
        };
        let (a, b) = (render()?, render()?);
        ensure(a == b, || format!("{argv:?}: output differs between runs"))?;
    }
    Ok(())
}

/// Every check with its label, at the sizes used by the acceptance summary.
pub fn all_invariants() -> Vec<(&'static str, Box<dyn Fn() -> Check>)> {
    vec![
        ("erf + erfc = 1", Box::new(erf_complement)),
        ("erfcx scaling", Box::new(erfcx_scaling)),
        ("erf_inv o erf on [-5, 5] to 1e-12", Box::new(|| erf_inv_roundtrip(5.0, 1e-12))),
        ("erf(erf_inv(p)) = p on [-5, 5]", Box::new(|| erf_inv_forward(5.0))),
        ("xi - 1 crosses zero once", Box::new(xi_single_crossing)),
        ("pt_beta / pt_alpha inverse", Box::new(pt_inverse_pair)),
        ("width gap and xi share the zero set", Box::new(width_gap_zero_set)),
        ("box PT monotone in mu", Box::new(box_pt_monotone_in_mu)),
        ("LDP fixed point", Box::new(ldp_fixed_point)),
        ("derived-variable identities", Box::new(ldp_identities)),
        ("tail sign law", Box::new(tail_sign_law)),
        ("PT recovery", Box::new(pt_recovery)),
        ("rate negative and decreasing", Box::new(rate_shape)),
        ("symmetry bridge", Box::new(symmetry_bridge)),
        ("oracle triple agreement", Box::new(oracle_triple_agreement)),
        ("curvature certificates", Box::new(curvature_certificates)),
        ("first-order conditions", Box::new(first_order_conditions)),
        ("zeta_prob = zeta_geom at closed form", Box::new(prob_geom_identity)),
        ("LP feasibility and duality-gap certificates", Box::new(|| lp_certificates(200))),
        ("permutation invariance", Box::new(permutation_invariance)),
        ("method disagreement < 1% at n = 60", Box::new(|| method_disagreement(200))),
        ("Monte Carlo determinism", Box::new(mc_determinism)),
        ("method agreement on tabulated cells", Box::new(|| method_agreement_on_tables(40))),
        ("sidedness", Box::new(|| sidedness(300))),
        ("CLI determinism", Box::new(cli_determinism)),
    ]
}
