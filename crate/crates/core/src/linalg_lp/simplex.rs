//! Dense bounded-variable revised simplex for `min c'x  s.t.  Ax = b, 0 <= x <= u`.
//!
//! The basis inverse is kept explicitly, updated by row operations and refactored
//! periodically. The main path is a dual simplex from a crashed basis; a two-phase primal
//! method with Dantzig pricing (Bland after degenerate runs) covers the remaining cases.
//! Every solve ends with a duality-gap certificate computed from the final basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LpProblem {
    /// Constraint matrix, `m x n`.
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Upper bounds; `f64::INFINITY` for none.
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    pub max_iter: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_every: 100,
            max_iter: 50_000,
            degenerate_limit: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    /// Row duals.
    pub y: Vec<f64>,
    /// Reduced costs `c - A'y`.
    pub reduced: Vec<f64>,
    /// `y'b + sum_j min(0, d_j) u_j`; a valid lower bound on the optimum.
    pub lower_bound: f64,
    /// `c'x - lower_bound`.
    pub gap: f64,
    /// `||Ax - b||_inf`.
    pub primal_residual: f64,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
}

/// Dot product with four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Gauss-Jordan inverse of the row-major `m x m` matrix `a` into `inv`; `a` is destroyed.
fn invert_in_place(a: &mut [f64], inv: &mut [f64], m: usize) -> Result<()> {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    inv.fill(0.0);
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for k in 0..m {
        let (mut p, mut best) = (k, 0.0);
        for i in k..m {
            let v = a[i * m + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > 1e-13 * scale) {
            return Err(Error::NonConvergence("singular basis at refactorization".into()));
        }
        if p != k {
            for c in 0..m {
                a.swap(p * m + c, k * m + c);
                inv.swap(p * m + c, k * m + c);
            }
        }
        let piv = a[k * m + k];
        let prow_a: Vec<f64> = a[k * m..(k + 1) * m].iter().map(|v| v / piv).collect();
        let prow_i: Vec<f64> = inv[k * m..(k + 1) * m].iter().map(|v| v / piv).collect();
        for i in 0..m {
            if i == k {
                continue;
            }
            let f = a[i * m + k];
            if f == 0.0 {
                continue;
            }
            for (x, y) in a[i * m + k..(i + 1) * m].iter_mut().zip(&prow_a[k..]) {
                *x -= f * y;
            }
            for (x, y) in inv[i * m..(i + 1) * m].iter_mut().zip(&prow_i) {
                *x -= f * y;
            }
        }
        a[k * m..(k + 1) * m].copy_from_slice(&prow_a);
        inv[k * m..(k + 1) * m].copy_from_slice(&prow_i);
    }
    Ok(())
}

struct Tableau<'a> {
    m: usize,
    n: usize,
    /// Structural columns, column-major, rows sign-flipped so that `b >= 0`.
    cols: Vec<f64>,
    b: Vec<f64>,
    upper: Vec<f64>,
    opts: &'a SimplexOptions,
    basis: Vec<usize>,
    status: Vec<Status>,
    x: Vec<f64>,
    /// Row-major `m x m` basis inverse.
    binv: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
}

impl<'a> Tableau<'a> {
    fn new(p: &LpProblem, opts: &'a SimplexOptions) -> Self {
        let (m, n) = p.a.shape();
        let mut cols = vec![0.0; m * n];
        let mut b = p.b.clone();
        let flip: Vec<f64> = p.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        for j in 0..n {
            for i in 0..m {
                cols[j * m + i] = flip[i] * p.a[(i, j)];
            }
        }
        for i in 0..m {
            b[i] *= flip[i];
        }
        let mut upper = p.upper.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut status = vec![Status::Lower; n + m];
        let mut x = vec![0.0; n + m];
        let basis: Vec<usize> = (n..n + m).collect();
        for (i, &j) in basis.iter().enumerate() {
            status[j] = Status::Basic;
            x[j] = b[i];
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Self { m, n, cols, b, upper, opts, basis, status, x, binv, since_refactor: 0, iterations: 0 }
    }

    /// Column `j` of `[A | I]` written into `out`.
    fn column(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            out.copy_from_slice(&self.cols[j * self.m..(j + 1) * self.m]);
        } else {
            out.fill(0.0);
            out[j - self.n] = 1.0;
        }
    }

    fn dot_col(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            dot(&self.cols[j * self.m..(j + 1) * self.m], v)
        } else {
            v[j - self.n]
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &j) in self.basis.iter().enumerate() {
            let cb = cost[j];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, r) in y.iter_mut().zip(row) {
                    *yk += cb * r;
                }
            }
        }
        y
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // Row-major copy of B, inverted in place by Gauss-Jordan with partial pivoting.
        let mut bmat = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for i in 0..m {
                bmat[i * m + k] = col[i];
            }
        }
        invert_in_place(&mut bmat, &mut self.binv, m)?;
        self.since_refactor = 0;
        self.recompute_basics();
        Ok(())
    }

    /// `x_B = B^{-1} (b - N x_N)` with the current inverse.
    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut col = vec![0.0; m];
        let mut rhs = self.b.clone();
        for j in 0..self.n + m {
            if self.status[j] != Status::Basic && self.x[j] != 0.0 {
                self.column(j, &mut col);
                for i in 0..m {
                    rhs[i] -= col[i] * self.x[j];
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.basis[i]] = dot(row, &rhs);
        }
    }

    /// Runs simplex iterations on `cost` until optimal.
    fn optimize(&mut self, cost: &[f64]) -> Result<()> {
        let m = self.m;
        let total = self.n + m;
        let mut w = vec![0.0; m];
        let mut col = vec![0.0; m];
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.opts.max_iter {
                return Err(Error::Stall(self.iterations));
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            let bland = degenerate_run >= self.opts.degenerate_limit;
            let y = self.duals(cost);

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..total {
                let st = self.status[j];
                if st == Status::Basic || self.upper[j] == 0.0 {
                    continue;
                }
                let d = cost[j] - self.dot_col(j, &y);
                let gain = match st {
                    Status::Lower if d < -self.opts.opt_tol => -d,
                    Status::Upper if d > self.opts.opt_tol => d,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if gain > best {
                    best = gain;
                    entering = Some((j, d));
                }
            }
            let Some((q, _)) = entering else {
                return Ok(());
            };
            let dir = if self.status[q] == Status::Lower { 1.0 } else { -1.0 };

            // w = B^{-1} a_q; basic values move by -dir * t * w.
            self.column(q, &mut col);
            for i in 0..m {
                let row = &self.binv[i * m..(i + 1) * m];
                w[i] = dot(row, &col);
            }

            // Harris two-pass ratio test.
            let tol = self.opts.feas_tol;
            let mut t_relaxed = f64::INFINITY;
            let mut t_exact = f64::INFINITY;
            for i in 0..m {
                let dw = dir * w[i];
                let xb = self.x[self.basis[i]];
                let ub = self.upper[self.basis[i]];
                if dw > self.opts.pivot_tol {
                    t_relaxed = t_relaxed.min((xb + tol) / dw);
                    t_exact = t_exact.min(xb / dw);
                } else if dw < -self.opts.pivot_tol && ub.is_finite() {
                    t_relaxed = t_relaxed.min((ub - xb + tol) / -dw);
                    t_exact = t_exact.min((ub - xb) / -dw);
                }
            }
            if bland {
                // Textbook minimum ratio, ties to the smallest index, keeps Bland's guarantee.
                t_relaxed = t_exact + 1e-12 * (1.0 + t_exact.abs());
            }
            let t_flip = self.upper[q];
            let mut leave: Option<(usize, f64, Status)> = None;
            let mut best_piv = 0.0;
            for i in 0..m {
                let dw = dir * w[i];
                let j = self.basis[i];
                let xb = self.x[j];
                let ub = self.upper[j];
                let (t_i, to) = if dw > self.opts.pivot_tol {
                    (xb / dw, Status::Lower)
                } else if dw < -self.opts.pivot_tol && ub.is_finite() {
                    ((ub - xb) / -dw, Status::Upper)
                } else {
                    continue;
                };
                if t_i > t_relaxed {
                    continue;
                }
                let take = match leave {
                    None => true,
                    Some((r, _, _)) if bland => j < self.basis[r],
                    Some(_) => dw.abs() > best_piv,
                };
                if take {
                    best_piv = dw.abs();
                    leave = Some((i, t_i.max(0.0), to));
                }
            }

            let t_leave = leave.map_or(f64::INFINITY, |l| l.1);
            if t_flip.is_infinite() && t_leave.is_infinite() {
                return Err(Error::Unbounded);
            }
            self.iterations += 1;

            if t_flip <= t_leave {
                // Bound flip, basis unchanged.
                let t = t_flip;
                for i in 0..m {
                    self.x[self.basis[i]] -= dir * t * w[i];
                }
                self.x[q] = if dir > 0.0 { self.upper[q] } else { 0.0 };
                self.status[q] = if dir > 0.0 { Status::Upper } else { Status::Lower };
                degenerate_run = 0;
                continue;
            }

            let (r, t, to) = leave.expect("finite leaving ratio");
            for i in 0..m {
                self.x[self.basis[i]] -= dir * t * w[i];
            }
            let old = self.basis[r];
            self.x[old] = if to == Status::Upper { self.upper[old] } else { 0.0 };
            self.status[old] = to;
            self.x[q] += dir * t;
            self.status[q] = Status::Basic;
            self.basis[r] = q;

            self.pivot_binv(r, &w);
            degenerate_run = if t <= tol { degenerate_run + 1 } else { 0 };
        }
    }

    /// Picks a basis by left-looking elimination, preferring columns without an upper
    /// bound, and fills rank-deficient rows with artificials fixed at zero. Nonbasic
    /// columns are placed at the bound matching the sign of their reduced cost. Returns
    /// whether the result is dual feasible.
    fn crash(&mut self, cost: &[f64]) -> Result<bool> {
        let (m, n) = (self.m, self.n);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| self.upper[j].is_finite());
        let mut pivoted = vec![false; m];
        let mut etas: Vec<(usize, Vec<f64>)> = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut c = vec![0.0; m];
        for &j in &order {
            if basis.len() == m {
                break;
            }
            if self.upper[j] == 0.0 {
                continue;
            }
            self.column(j, &mut c);
            let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if scale == 0.0 {
                continue;
            }
            for (r, l) in &etas {
                let cr = c[*r];
                if cr != 0.0 {
                    for (ci, li) in c.iter_mut().zip(l) {
                        *ci -= li * cr;
                    }
                }
            }
            let mut best = (usize::MAX, 0.0);
            for i in 0..m {
                if !pivoted[i] && c[i].abs() > best.1 {
                    best = (i, c[i].abs());
                }
            }
            if best.1 <= 1e-7 * scale {
                continue;
            }
            let r = best.0;
            let l: Vec<f64> = (0..m).map(|i| if pivoted[i] || i == r { 0.0 } else { c[i] / c[r] }).collect();
            pivoted[r] = true;
            etas.push((r, l));
            basis.push(j);
        }
        for i in 0..m {
            if !pivoted[i] {
                basis.push(n + i);
            }
        }
        for j in n..n + m {
            self.upper[j] = 0.0;
        }
        self.status.fill(Status::Lower);
        self.x.fill(0.0);
        for &j in &basis {
            self.status[j] = Status::Basic;
        }
        self.basis = basis;
        self.refactor()?;

        let y = self.duals(cost);
        for j in 0..n {
            if self.status[j] == Status::Basic || self.upper[j] == 0.0 {
                continue;
            }
            let d = cost[j] - self.dot_col(j, &y);
            if d < -self.opts.opt_tol {
                if self.upper[j].is_infinite() {
                    return Ok(false);
                }
                self.status[j] = Status::Upper;
                self.x[j] = self.upper[j];
            }
        }
        self.recompute_basics();
        Ok(true)
    }

    /// Bounded dual simplex from a dual feasible basis. Leaving rows are chosen by
    /// dual steepest edge with exact weights `||e_r' B^{-1}||^2`.
    fn dual_optimize(&mut self, cost: &[f64]) -> Result<()> {
        let m = self.m;
        let total = self.n + m;
        let tol = self.opts.feas_tol;
        let mut d = vec![0.0; total];
        let mut alpha_row = vec![0.0; total];
        let mut w = vec![0.0; m];
        let mut col = vec![0.0; m];
        let mut fresh = true;
        loop {
            if self.iterations >= self.opts.max_iter {
                return Err(Error::Stall(self.iterations));
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
                fresh = true;
            }
            if fresh {
                let y = self.duals(cost);
                for j in 0..total {
                    d[j] = if self.status[j] == Status::Basic { 0.0 } else { cost[j] - self.dot_col(j, &y) };
                }
                fresh = false;
            }

            // Leaving row.
            let mut leave: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for i in 0..m {
                let j = self.basis[i];
                let xb = self.x[j];
                let ub = self.upper[j];
                let viol = if xb < -tol {
                    xb
                } else if xb > ub + tol {
                    xb - ub
                } else {
                    continue;
                };
                let row = &self.binv[i * m..(i + 1) * m];
                let weight = dot(row, row);
                let score = viol * viol / weight;
                if score > best {
                    best = score;
                    leave = Some((i, viol));
                }
            }
            let Some((r, delta)) = leave else {
                return Ok(());
            };
            let to_upper = delta > 0.0;

            // Pivot row of B^{-1} N.
            let rho = self.binv[r * m..(r + 1) * m].to_vec();
            for j in 0..total {
                alpha_row[j] = if self.status[j] == Status::Basic || self.upper[j] == 0.0 {
                    0.0
                } else {
                    self.dot_col(j, &rho)
                };
            }

            // Bound-flipping ratio test: breakpoints of boxed columns are passed while the
            // dual slope stays positive, then the entering column is chosen Harris-style.
            let eligible = |a: f64, st: Status| -> bool {
                if a.abs() <= self.opts.pivot_tol {
                    return false;
                }
                // Moving x_r up needs a < 0 at lower or a > 0 at upper; down is the mirror.
                let s = if to_upper { -a } else { a };
                match st {
                    Status::Lower => s < 0.0,
                    Status::Upper => s > 0.0,
                    Status::Basic => false,
                }
            };
            let mut cand: Vec<(f64, usize)> = (0..total)
                .filter(|&j| eligible(alpha_row[j], self.status[j]))
                .map(|j| (d[j].abs() / alpha_row[j].abs(), j))
                .collect();
            if cand.is_empty() {
                return Err(Error::Infeasible);
            }
            cand.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut slope = delta.abs();
            let mut start = 0;
            while start + 1 < cand.len() {
                let j = cand[start].1;
                let drop = alpha_row[j].abs() * self.upper[j];
                if !(slope - drop > 0.0) {
                    break;
                }
                slope -= drop;
                start += 1;
            }
            let dtol = self.opts.opt_tol;
            let theta_max = cand[start..]
                .iter()
                .map(|&(_, j)| (d[j].abs() + dtol) / alpha_row[j].abs())
                .fold(f64::INFINITY, f64::min);
            let mut q = cand[start].1;
            let mut best_a = 0.0;
            for &(t, j) in &cand[start..] {
                if t > theta_max {
                    break;
                }
                if alpha_row[j].abs() > best_a {
                    best_a = alpha_row[j].abs();
                    q = j;
                }
            }
            let a_rq = alpha_row[q];
            let theta_d = d[q] / a_rq;

            self.column(q, &mut col);
            for i in 0..m {
                let row = &self.binv[i * m..(i + 1) * m];
                w[i] = dot(row, &col);
            }
            if (w[r] - a_rq).abs() > 1e-6 * (1.0 + a_rq.abs()) && self.since_refactor > 0 {
                self.refactor()?;
                fresh = true;
                continue;
            }
            self.iterations += 1;

            // Flip the passed columns and move x_B accordingly.
            if start > 0 {
                let mut shift = vec![0.0; m];
                for &(_, j) in &cand[..start] {
                    let step = if self.status[j] == Status::Lower {
                        self.status[j] = Status::Upper;
                        self.upper[j]
                    } else {
                        self.status[j] = Status::Lower;
                        -self.upper[j]
                    };
                    self.x[j] += step;
                    self.column(j, &mut col);
                    for (s, c) in shift.iter_mut().zip(&col) {
                        *s += c * step;
                    }
                }
                for i in 0..m {
                    let row = &self.binv[i * m..(i + 1) * m];
                    self.x[self.basis[i]] -= dot(row, &shift);
                }
            }

            // Primal step: x_r lands on the violated bound.
            let xr = self.x[self.basis[r]];
            let delta = if to_upper { xr - self.upper[self.basis[r]] } else { xr };
            let theta_p = delta / w[r];
            for i in 0..m {
                self.x[self.basis[i]] -= theta_p * w[i];
            }
            let old = self.basis[r];
            self.x[old] = if to_upper { self.upper[old] } else { 0.0 };
            self.status[old] = if to_upper { Status::Upper } else { Status::Lower };
            self.x[q] += theta_p;
            self.status[q] = Status::Basic;
            self.basis[r] = q;

            for j in 0..total {
                if alpha_row[j] != 0.0 {
                    d[j] -= theta_d * alpha_row[j];
                }
            }
            d[q] = 0.0;
            d[old] = -theta_d;

            self.pivot_binv(r, &w);
        }
    }

    /// Replaces basis row `r` given `w = B^{-1} a_q`.
    fn pivot_binv(&mut self, r: usize, w: &[f64]) {
        let m = self.m;
        let piv = w[r];
        let (head, rest) = self.binv.split_at_mut(r * m);
        let (prow, tail) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for (i, row) in head.chunks_exact_mut(m).enumerate() {
            let f = w[i];
            if f != 0.0 {
                for (a, p) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * p;
                }
            }
        }
        for (k, row) in tail.chunks_exact_mut(m).enumerate() {
            let f = w[r + 1 + k];
            if f != 0.0 {
                for (a, p) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * p;
                }
            }
        }
        self.since_refactor += 1;
    }
}

/// Solve `min c'x  s.t.  Ax = b, 0 <= x <= upper`.
///
/// Runs the dual simplex from a crashed basis when that basis is dual feasible, which
/// holds whenever every column without an upper bound can be made basic or priced out.
/// Otherwise falls back to the two-phase primal method.
pub fn solve(p: &LpProblem, opts: &SimplexOptions) -> Result<LpSolution> {
    let (m, n) = p.a.shape();
    if p.b.len() != m || p.c.len() != n || p.upper.len() != n {
        return Err(Error::Dimension(format!(
            "A is {m}x{n}, b has {}, c has {}, upper has {}",
            p.b.len(),
            p.c.len(),
            p.upper.len()
        )));
    }
    if p.upper.iter().any(|&u| !(u >= 0.0)) {
        return Err(Error::Domain("upper bounds must be nonnegative".into()));
    }
    let mut cost = p.c.clone();
    cost.extend(std::iter::repeat_n(0.0, m));

    let mut tab = Tableau::new(p, opts);
    if tab.crash(&cost)? {
        tab.dual_optimize(&cost)?;
        // Clean up any reduced-cost drift with primal pivots from the feasible basis.
        tab.optimize(&cost)?;
    } else {
        let mut tab1 = Tableau::new(p, opts);
        primal_two_phase(&mut tab1, p, &cost)?;
        tab = tab1;
    }
    if tab.since_refactor > 0 {
        tab.refactor()?;
    }

    let mut x: Vec<f64> = tab.x[..n].to_vec();
    for (v, &u) in x.iter_mut().zip(&p.upper) {
        *v = v.clamp(0.0, u);
    }
    let certificate = certify(p, &x, &tab, &cost);
    let objective = p.c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution { x, objective, iterations: tab.iterations, certificate })
}

fn primal_two_phase(tab: &mut Tableau<'_>, p: &LpProblem, cost: &[f64]) -> Result<()> {
    let (m, n) = (tab.m, tab.n);
    // Phase 1: minimize the sum of artificials.
    let mut cost1 = vec![0.0; n + m];
    for v in cost1[n..].iter_mut() {
        *v = 1.0;
    }
    tab.optimize(&cost1)?;
    tab.refactor()?;
    let infeas: f64 = tab.x[n..].iter().sum();
    let bnorm = p.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if infeas > tab.opts.feas_tol * (1.0 + bnorm) * m as f64 {
        return Err(Error::Infeasible);
    }
    // Artificials are pinned at zero from here on.
    for j in n..n + m {
        tab.upper[j] = 0.0;
        if tab.status[j] != Status::Basic {
            tab.x[j] = 0.0;
            tab.status[j] = Status::Lower;
        }
    }
    tab.optimize(cost)
}

fn certify(p: &LpProblem, x: &[f64], tab: &Tableau<'_>, cost: &[f64]) -> Certificate {
    let (m, n) = p.a.shape();
    // Duals of the sign-flipped system, mapped back to the original rows.
    let yf = tab.duals(cost);
    let y: Vec<f64> = (0..m).map(|i| if p.b[i] < 0.0 { -yf[i] } else { yf[i] }).collect();
    let mut reduced = vec![0.0; n];
    let mut lower_bound: f64 = y.iter().zip(&p.b).map(|(a, b)| a * b).sum();
    for j in 0..n {
        let aty: f64 = (0..m).map(|i| p.a[(i, j)] * y[i]).sum();
        let d = p.c[j] - aty;
        reduced[j] = d;
        // Round-off below the optimality tolerance is not charged against unbounded columns.
        if d < 0.0 && (p.upper[j].is_finite() || d < -tab.opts.opt_tol) {
            lower_bound += d * p.upper[j];
        }
    }
    let objective: f64 = p.c.iter().zip(x).map(|(a, b)| a * b).sum();
    let primal_residual = (0..m)
        .map(|i| ((0..n).map(|j| p.a[(i, j)] * x[j]).sum::<f64>() - p.b[i]).abs())
        .fold(0.0, f64::max);
    Certificate { y, reduced, lower_bound, gap: objective - lower_bound, primal_residual }
}
