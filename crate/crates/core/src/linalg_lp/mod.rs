//! Random planted instances, the box-constrained `l1` program and the null-space
//! failure test.

pub mod simplex;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analytic_pt::Model;
use crate::error::{Error, Result};
use simplex::{LpProblem, SimplexOptions};

/// Sup-norm distance below which the LP solution counts as exact recovery.
pub const RECOVERY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDims {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub n_zero: usize,
    pub n_one: usize,
}

impl InstanceDims {
    /// `n - k` zeros and `k` ones.
    pub fn binary(n: usize, m: usize, k: usize) -> Result<Self> {
        Self { n, m, k, n_zero: n.saturating_sub(k), n_one: k }.checked(Model::Binary)
    }

    /// `round(mu (n - k))` zeros, the rest of the off-support block at one, `k` interior.
    pub fn boxed(n: usize, m: usize, k: usize, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::Dimension(format!("mu={mu} outside [0, 1]")));
        }
        let off = n.saturating_sub(k);
        let n_zero = (mu * off as f64).round() as usize;
        Self { n, m, k, n_zero, n_one: off - n_zero.min(off) }.checked(Model::Box)
    }

    pub fn new(model: Model, n: usize, m: usize, k: usize, mu: f64) -> Result<Self> {
        match model {
            Model::Binary => Self::binary(n, m, k),
            Model::Box => Self::boxed(n, m, k, mu),
        }
    }

    fn checked(self, model: Model) -> Result<Self> {
        let Self { n, m, k, n_zero, n_one } = self;
        if n == 0 || m == 0 || k > m || m > n {
            return Err(Error::Dimension(format!("need k <= m <= n, n > 0 (n={n}, m={m}, k={k})")));
        }
        let ok = match model {
            Model::Binary => n_zero == n - k && n_one == k,
            Model::Box => n_zero + n_one == n - k,
        };
        if !ok {
            return Err(Error::Dimension(format!("inconsistent counts {self:?}")));
        }
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    pub fn beta(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Entry {
    Zero,
    One,
    Interior(f64),
}

impl Entry {
    pub fn value(&self) -> f64 {
        match *self {
            Entry::Zero => 0.0,
            Entry::One => 1.0,
            Entry::Interior(v) => v,
        }
    }
}

/// How box instances fill their `k` interior coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteriorValues {
    Uniform,
    Constant(f64),
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub dims: InstanceDims,
    pub model: Model,
    pub seed: u64,
    pub stream: u64,
    pub a_matrix: DMatrix<f64>,
    pub x_true: Vec<f64>,
    pub y_vec: Vec<f64>,
    pub pattern: Vec<Entry>,
}

/// Generator for trial `stream` under master `seed`: ChaCha8 keyed by the pair.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

pub fn gen_instance(dims: InstanceDims, model: Model, seed: u64) -> ProblemInstance {
    gen_instance_with(dims, model, seed, 0, InteriorValues::Uniform)
}

/// Draw order: pattern permutation, interior values (box only), then `A` column by column.
pub fn gen_instance_with(
    dims: InstanceDims,
    model: Model,
    seed: u64,
    stream: u64,
    interior: InteriorValues,
) -> ProblemInstance {
    let mut rng = trial_rng(seed, stream);
    let mut pattern: Vec<Entry> = Vec::with_capacity(dims.n);
    pattern.extend(std::iter::repeat_n(Entry::Zero, dims.n_zero));
    pattern.extend(std::iter::repeat_n(Entry::One, dims.n_one));
    let interior_slot = match model {
        Model::Binary => Entry::One,
        Model::Box => Entry::Interior(0.5),
    };
    pattern.extend(std::iter::repeat_n(interior_slot, dims.n - dims.n_zero - dims.n_one));
    pattern.shuffle(&mut rng);
    for e in pattern.iter_mut() {
        if let Entry::Interior(v) = e {
            *v = match interior {
                InteriorValues::Uniform => loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                },
                InteriorValues::Constant(c) => c,
            };
        }
    }
    let (m, n) = (dims.m, dims.n);
    let a_matrix = DMatrix::from_iterator(m, n, (0..m * n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let x_true: Vec<f64> = pattern.iter().map(Entry::value).collect();
    let y_vec = (&a_matrix * nalgebra::DVector::from_column_slice(&x_true)).as_slice().to_vec();
    ProblemInstance { dims, model, seed, stream, a_matrix, x_true, y_vec, pattern }
}

/// `min sum(x)  s.t.  Ax = y, 0 <= x <= 1`, with the post-conditions checked.
pub fn solve_box_l1(inst: &ProblemInstance, tol: f64) -> Result<Vec<f64>> {
    let n = inst.dims.n;
    let problem = LpProblem {
        a: inst.a_matrix.clone(),
        b: inst.y_vec.clone(),
        c: vec![1.0; n],
        upper: vec![1.0; n],
    };
    let sol = simplex::solve(&problem, &SimplexOptions::default())?;
    let ynorm = inst.y_vec.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let true_obj: f64 = inst.x_true.iter().sum();
    let cert = &sol.certificate;
    if cert.primal_residual > tol * (1.0 + ynorm) * n as f64
        || sol.objective > true_obj + tol * n as f64
        || cert.gap > 1e-9 * (1.0 + sol.objective.abs())
    {
        return Err(Error::NonConvergence(format!(
            "box-l1 certificate failed: residual {:e}, objective {} vs planted {}, gap {:e}",
            cert.primal_residual, sol.objective, true_obj, cert.gap
        )));
    }
    Ok(sol.x)
}

/// True when the LP solution differs from the planted vector.
pub fn lp_failure(inst: &ProblemInstance, tol: f64) -> Result<bool> {
    let x = solve_box_l1(inst, tol)?;
    let dev = x.iter().zip(&inst.x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(dev > RECOVERY_TOL)
}

/// Optimal value of the null-space cone program, or `None` when the cone is empty.
///
/// Variables are `w >= 0` on zero coordinates, `-w >= 0` on one coordinates and a split
/// pair on interior coordinates. The program minimizes `sum(w)` over `Aw = 0` with the
/// edge coordinates normalized to unit mass. Interior coordinates are left out of the
/// normalization: including them admits `w+ = w-`, which reaches objective zero with
/// `w = 0`.
pub fn null_space_value(inst: &ProblemInstance) -> Result<Option<f64>> {
    let m = inst.dims.m;
    let mut cols: Vec<(usize, f64, f64)> = Vec::new(); // (column of A, sign in A w, cost)
    for (j, e) in inst.pattern.iter().enumerate() {
        match e {
            Entry::Zero => cols.push((j, 1.0, 1.0)),
            Entry::One => cols.push((j, -1.0, -1.0)),
            Entry::Interior(_) => {
                cols.push((j, 1.0, 1.0));
                cols.push((j, -1.0, -1.0));
            }
        }
    }
    let nv = cols.len();
    let mut a = DMatrix::<f64>::zeros(m + 1, nv);
    for (v, &(j, sign, _)) in cols.iter().enumerate() {
        for i in 0..m {
            a[(i, v)] = sign * inst.a_matrix[(i, j)];
        }
        if !matches!(inst.pattern[j], Entry::Interior(_)) {
            a[(m, v)] = 1.0;
        }
    }
    let mut b = vec![0.0; m + 1];
    b[m] = 1.0;
    let problem = LpProblem {
        a,
        b,
        c: cols.iter().map(|c| c.2).collect(),
        // Edge mass is normalized to one, so each edge variable is at most one.
        upper: cols
            .iter()
            .map(|&(j, _, _)| if matches!(inst.pattern[j], Entry::Interior(_)) { f64::INFINITY } else { 1.0 })
            .collect(),
    };
    match simplex::solve(&problem, &SimplexOptions::default()) {
        Ok(sol) => {
            if sol.certificate.gap > 1e-9 * (1.0 + sol.objective.abs()) {
                return Err(Error::NonConvergence(format!(
                    "null-space certificate gap {:e}",
                    sol.certificate.gap
                )));
            }
            Ok(Some(sol.objective))
        }
        Err(Error::Infeasible) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Failure iff some nonzero `w` in the null space with the planted sign pattern has
/// `sum(w) <= tol`.
pub fn null_space_failure(inst: &ProblemInstance, tol: f64) -> Result<bool> {
    Ok(matches!(null_space_value(inst)?, Some(v) if v <= tol))
}

/// Instance archive: the matrix as CSV plus a JSON sidecar with pattern, seed and `y`.
pub fn write_instance(inst: &ProblemInstance, dir: &std::path::Path, stem: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
    for i in 0..inst.dims.m {
        let row: Vec<String> = (0..inst.dims.n).map(|j| format!("{:e}", inst.a_matrix[(i, j)])).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    let side = serde_json::json!({
        "schema_version": 1,
        "model": inst.model,
        "dims": inst.dims,
        "seed": inst.seed,
        "stream": inst.stream,
        "pattern": inst.pattern,
        "y": inst.y_vec,
    });
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&side)?)
}
