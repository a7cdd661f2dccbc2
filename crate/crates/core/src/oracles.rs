//! Independent brute-force and high-precision references for tests and acceptance
//! runs. Nothing here is called by the estimators, and nothing here calls the
//! estimators' numerical kernels: chains are enumerated tuple by tuple, the
//! quadratic fit is a scalar search, and link integrals use a fixed-node
//! double-exponential rule instead of adaptive Gauss–Legendre.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    TupleEnumeration,
    DenseGrid,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub method: OracleMethod,
    /// Number of elementary evaluations performed.
    pub cost: u64,
    /// Standard error of `value`, for Monte Carlo results.
    pub std_error: Option<f64>,
}

impl OracleResult {
    fn new(value: f64, method: OracleMethod, cost: u64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NumericalFailure(format!("oracle {method:?} produced {value}")));
        }
        Ok(Self { value, method, cost, std_error: None })
    }
}

pub const MAX_BRUTEFORCE_N: usize = 14;
pub const MAX_BRUTEFORCE_K: usize = 5;

fn inner(a: &[f64], b: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..a.len() {
        total += a[i] * b[i];
    }
    total
}

/// Advances `idx` to the next increasing tuple in `0..n`, returning false after the last.
fn next_tuple(idx: &mut [usize], n: usize) -> bool {
    let len = idx.len();
    let mut pos = len;
    while pos > 0 {
        pos -= 1;
        if idx[pos] < n - len + pos {
            idx[pos] += 1;
            for j in pos + 1..len {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `Σ_{i₁<…<i_{k+1}} y_{i₁} (x_{i₁}·x_{i₂}) ⋯ (x_{i_k}·x_{i_{k+1}}) y_{i_{k+1}}`, by
/// explicit enumeration of increasing tuples.
pub fn chain_sum_bruteforce(data: &LabeledDataset, k: usize) -> Result<OracleResult> {
    let n = data.n();
    if n > MAX_BRUTEFORCE_N || k > MAX_BRUTEFORCE_K {
        return Err(Error::TooLarge(format!(
            "tuple enumeration needs n <= {MAX_BRUTEFORCE_N} and k <= {MAX_BRUTEFORCE_K} (got n = {n}, k = {k})"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("chain length must be at least 1".into()));
    }
    if k + 1 > n {
        return OracleResult::new(0.0, OracleMethod::TupleEnumeration, 0);
    }
    let y = data.labels();
    let mut idx: Vec<usize> = (0..=k).collect();
    let mut total = 0.0;
    let mut cost = 0u64;
    loop {
        let mut term = y[idx[0]] * y[idx[k]];
        for w in idx.windows(2) {
            term *= inner(data.row(w[0]), data.row(w[1]));
        }
        total += term;
        cost += 1;
        if !next_tuple(&mut idx, n) {
            break;
        }
    }
    OracleResult::new(total, OracleMethod::TupleEnumeration, cost)
}

pub const GRIDSEARCH_POINTS: usize = 20_001;

/// Best `a` for `max_x |a x² − x|` over a dense grid on `[s_l, s_r]`, by golden-section
/// search on `a ∈ [0, 4/s_r]` (the objective is convex in `a`). Only `k = 2` reduces
/// to a scalar search. Returns the minimal error and the minimiser.
pub fn best_poly_gridsearch(s_l: f64, s_r: f64, k: usize) -> Result<(OracleResult, f64)> {
    if k != 2 {
        return Err(Error::InvalidParameter(format!("grid search handles k = 2 only (got k = {k})")));
    }
    if !(s_l >= 0.0 && s_l <= s_r && s_r > 0.0 && s_r.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 <= s_l <= s_r, s_r > 0 (got [{s_l}, {s_r}])")));
    }
    let grid: Vec<f64> = (0..GRIDSEARCH_POINTS)
        .map(|i| s_l + (s_r - s_l) * i as f64 / (GRIDSEARCH_POINTS - 1) as f64)
        .collect();
    let mut cost = 0u64;
    let mut objective = |a: f64| {
        cost += grid.len() as u64;
        grid.iter().fold(0.0f64, |m, &x| m.max((a * x * x - x).abs()))
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 4.0 / s_r);
    let mut left = hi - ratio * (hi - lo);
    let mut right = lo + ratio * (hi - lo);
    let mut f_left = objective(left);
    let mut f_right = objective(right);
    while hi - lo > 1e-13 * (1.0 + hi.abs()) {
        if f_left <= f_right {
            hi = right;
            right = left;
            f_right = f_left;
            left = hi - ratio * (hi - lo);
            f_left = objective(left);
        } else {
            lo = left;
            left = right;
            f_left = f_right;
            right = lo + ratio * (hi - lo);
            f_right = objective(right);
        }
    }
    let a0 = 0.5 * (lo + hi);
    let error = objective(a0);
    Ok((OracleResult::new(error, OracleMethod::DenseGrid, cost)?, a0))
}

pub const QUADRATURE_NODE_COUNTS: [usize; 3] = [64, 128, 256];
const DE_T_LO: f64 = -4.5;
const DE_T_HI: f64 = 2.0;

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(q(b), p(b))` with `q(b) = E[(g(bx) − ½) x]` and `p(b) = ½ − E|g(bx) − ½|`, from
/// a `nodes`-point trapezoid rule in `t` after the substitution
/// `x = exp(π/2 · sinh t)` of the half-line integrals.
pub fn quadrature_reference(b: f64, nodes: usize) -> Result<(f64, f64)> {
    if !QUADRATURE_NODE_COUNTS.contains(&nodes) {
        return Err(Error::InvalidParameter(format!("node count must be one of 64, 128, 256 (got {nodes})")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("b must be finite and non-negative (got {b})")));
    }
    if b == 0.0 {
        return Ok((0.0, 0.5));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let h = (DE_T_HI - DE_T_LO) / (nodes - 1) as f64;
    let (mut q, mut p) = (0.0, 0.0);
    for i in 0..nodes {
        let t = DE_T_LO + i as f64 * h;
        let x = (half_pi * t.sinh()).exp();
        let jacobian = x * half_pi * t.cosh();
        let w = if i == 0 || i == nodes - 1 { 0.5 * h } else { h } * jacobian * density(x);
        // Both integrands are even in x, so each half-line integral is doubled.
        q += 2.0 * w * (logistic(b * x) - 0.5) * x;
        p += 2.0 * w * logistic(-b * x);
    }
    Ok((q, p))
}

pub const MIN_MONTE_CARLO_TRIALS: usize = 100;

/// Mean and standard error of `statistic(trial_seed)` over `trials` independent
/// trials, with `trial_seed = derive_seed(master_seed, [trial])`.
pub fn monte_carlo_truth<F>(master_seed: u64, trials: usize, statistic: F) -> Result<OracleResult>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if trials < MIN_MONTE_CARLO_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_MONTE_CARLO_TRIALS} trials (got {trials})"
        )));
    }
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|trial| statistic(derive_seed(master_seed, &[trial])))
        .collect::<Result<Vec<f64>>>()?;
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let mut result = OracleResult::new(mean, OracleMethod::MonteCarlo, trials as u64)?;
    result.std_error = Some((variance / count).sqrt());
    Ok(result)
}
