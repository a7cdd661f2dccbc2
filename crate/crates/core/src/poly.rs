//! Polynomials `p(x) = Σ a_i x^{i+2}` (no constant or linear term) approximating
//! `f(x) = x` on a spectral interval `[s_l, s_r]`.
//!
//! Coefficients come from two linear programs over an evenly spaced grid. The first
//! finds the smallest achievable ℓ∞ error `E`. The second minimises the weighted
//! coefficient mass `Σ 2^{i+2} |a_i|` subject to an ℓ∞ error of at most
//! `slack_factor · E`, trading a little bias for much smaller estimator variance.
//!
//! Both programs are solved in the well-conditioned basis `x² T_j(u)` (Chebyshev
//! polynomials of the interval mapped onto `[−1, 1]`) with free coefficients and
//! converted to monomials afterwards. Both are posed so the origin is feasible,
//! which avoids a phase-one search.
//!
//! They are solved on the interval rescaled to `[s_l / s_r, 1]`; the
//! returned coefficients are mapped back so that they approximate `x` on the
//! original interval. The normalised coefficients are what the general-covariance
//! estimators use after dividing features by `√s_r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex;

pub const DEFAULT_GRID_POINTS: usize = 1000;
pub const DEFAULT_SLACK_FACTOR: f64 = 1.5;
/// Verification grids are this many times denser than the fitting grid.
pub const VERIFICATION_DENSITY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub grid_points: usize,
    /// Stage-two error allowance as a multiple of the stage-one optimum.
    pub slack_factor: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { grid_points: DEFAULT_GRID_POINTS, slack_factor: DEFAULT_SLACK_FACTOR }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialPlan {
    #[serde(rename = "k")]
    pub degree_k: usize,
    pub s_l: f64,
    pub s_r: f64,
    /// `a_0..a_{k-2}` for the basis `x², …, x^k` on `[s_l, s_r]`.
    pub coefficients: Vec<f64>,
    /// Coefficients for the rescaled interval `[s_l / s_r, 1]`.
    pub normalized_coefficients: Vec<f64>,
    /// Max of `|p(x) − x|` over the verification grid on `[s_l, s_r]`.
    pub achieved_error: f64,
    /// Stage-two error on the fitting grid, rescaled interval.
    pub fit_error: f64,
    /// Stage-one optimum on the fitting grid, rescaled interval.
    pub stage1_error: f64,
    pub stage1_coefficients: Vec<f64>,
    /// `Σ 2^{i+2} |normalized a_i|`.
    pub weighted_cost: f64,
    pub grid_points: usize,
    pub slack_factor: f64,
}

impl PolynomialPlan {
    /// Wraps externally supplied coefficients (basis `x², x³, …`) on `[s_l, s_r]`,
    /// measuring their error on the verification grid.
    pub fn from_coefficients(s_l: f64, s_r: f64, coefficients: Vec<f64>) -> Result<Self> {
        validate_interval(s_l, s_r)?;
        if coefficients.is_empty() {
            return Err(Error::InvalidParameter("a plan needs at least one coefficient".into()));
        }
        let degree_k = coefficients.len() + 1;
        let normalized = normalize_coefficients(&coefficients, s_r);
        let b = s_l / s_r;
        let fit_grid = grid(b, 1.0, DEFAULT_GRID_POINTS);
        let fit_error = max_error(&normalized, &fit_grid);
        let achieved_error =
            max_error(&coefficients, &grid(s_l, s_r, verification_points(DEFAULT_GRID_POINTS, s_l, s_r)));
        Ok(Self {
            degree_k,
            s_l,
            s_r,
            weighted_cost: weighted_cost(&normalized),
            coefficients,
            stage1_coefficients: normalized.clone(),
            normalized_coefficients: normalized,
            achieved_error,
            fit_error,
            stage1_error: fit_error,
            grid_points: DEFAULT_GRID_POINTS,
            slack_factor: 1.0,
        })
    }

    /// Number of moment terms, `k − 1`.
    pub fn moments(&self) -> usize {
        self.coefficients.len()
    }
}

fn validate_interval(s_l: f64, s_r: f64) -> Result<()> {
    if !(s_l.is_finite() && s_r.is_finite()) || s_l < 0.0 || s_r <= 0.0 || s_l > s_r {
        return Err(Error::InvalidParameter(format!("need 0 <= s_l <= s_r and s_r > 0 (got [{s_l}, {s_r}])")));
    }
    Ok(())
}

/// `grid_points` evenly spaced points on `[lo, hi]`; a single point when `lo == hi`.
fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if lo == hi || points < 2 {
        return vec![hi];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|j| if j + 1 == points { hi } else { lo + step * j as f64 }).collect()
}

fn verification_points(grid_points: usize, s_l: f64, s_r: f64) -> usize {
    if s_l == s_r {
        1
    } else {
        (grid_points - 1) * VERIFICATION_DENSITY + 1
    }
}

/// `Σ a_i x^{i+2}` by Horner's rule.
pub fn evaluate_coefficients(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, a| acc * x + a) * x * x
}

pub fn evaluate_plan(plan: &PolynomialPlan, x: f64) -> f64 {
    evaluate_coefficients(&plan.coefficients, x)
}

fn max_error(coefficients: &[f64], points: &[f64]) -> f64 {
    points.iter().map(|&x| (evaluate_coefficients(coefficients, x) - x).abs()).fold(0.0, f64::max)
}

fn weighted_cost(coefficients: &[f64]) -> f64 {
    coefficients.iter().enumerate().map(|(i, a)| 2f64.powi(i as i32 + 2) * a.abs()).sum()
}

/// `a_i ↦ a_i · s_r^{i+1}`: coefficients on `[s_l, s_r]` to coefficients on `[s_l/s_r, 1]`.
fn normalize_coefficients(coefficients: &[f64], s_r: f64) -> Vec<f64> {
    coefficients.iter().enumerate().map(|(i, a)| a * s_r.powi(i as i32 + 1)).collect()
}

fn denormalize_coefficients(coefficients: &[f64], s_r: f64) -> Vec<f64> {
    coefficients.iter().enumerate().map(|(i, a)| a / s_r.powi(i as i32 + 1)).collect()
}

/// Monomial coefficients of the Chebyshev polynomials `T_0..T_{terms−1}` composed
/// with the affine map `u = αx + β`, stored column-wise: `m[i][j]` is the
/// coefficient of `x^i` in `T_j(αx + β)`.
fn chebyshev_to_monomial(terms: usize, alpha: f64, beta: f64) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(terms);
    for j in 0..terms {
        let mut poly = vec![0.0; terms];
        match j {
            0 => poly[0] = 1.0,
            1 => {
                poly[0] = beta;
                if terms > 1 {
                    poly[1] = alpha;
                }
            }
            _ => {
                let (prev, prev2) = (&cols[j - 1], &cols[j - 2]);
                for i in 0..terms {
                    let shifted = if i > 0 { prev[i - 1] } else { 0.0 };
                    poly[i] = 2.0 * (alpha * shifted + beta * prev[i]) - prev2[i];
                }
            }
        }
        cols.push(poly);
    }
    (0..terms).map(|i| (0..terms).map(|j| cols[j][i]).collect()).collect()
}

/// Basis `φ_j(x) = x² T_j(u(x))`, with `u` mapping the fitting interval onto
/// `[−1, 1]`. Fitting in this basis keeps the linear programs well conditioned;
/// monomial coefficients follow from [`chebyshev_to_monomial`].
struct Basis {
    terms: usize,
    alpha: f64,
    beta: f64,
}

impl Basis {
    fn new(lo: f64, terms: usize) -> Self {
        let width = 1.0 - lo;
        if width > 1e-9 {
            Self { terms, alpha: 2.0 / width, beta: -(1.0 + lo) / width }
        } else {
            Self { terms, alpha: 0.0, beta: 0.0 }
        }
    }

    fn row(&self, x: f64) -> Vec<f64> {
        let u = self.alpha * x + self.beta;
        let mut out = Vec::with_capacity(self.terms);
        let (mut t0, mut t1) = (1.0, u);
        for j in 0..self.terms {
            let value = match j {
                0 => 1.0,
                1 => u,
                _ => {
                    let t2 = 2.0 * u * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                    t2
                }
            };
            out.push(x * x * value);
        }
        out
    }
}

/// Constraint rows `±Σ c_j φ_j(x)` for every grid point, padded to `cols`
/// columns, with an optional value in the last column (the ℓ∞ slack).
fn band_constraints(basis: &Basis, points: &[f64], cols: usize, extra_col: Option<f64>) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = points.iter().map(|&x| basis.row(x)).collect();
    let mut a = Vec::with_capacity(2 * points.len() * cols);
    for sign in [1.0, -1.0] {
        for phi in &rows {
            let mut row = vec![0.0; cols];
            for (slot, value) in row.iter_mut().zip(phi) {
                *slot = sign * value;
            }
            if let Some(v) = extra_col {
                row[cols - 1] = v;
            }
            a.extend(row);
        }
    }
    a
}

/// Fits a degree-`k` plan on `[s_l, s_r]` with a `grid_points` fitting grid and the
/// default stage-two slack factor of 3/2.
pub fn fit_plan(s_l: f64, s_r: f64, k: usize, grid_points: usize) -> Result<PolynomialPlan> {
    fit_plan_with(s_l, s_r, k, PlanOptions { grid_points, ..PlanOptions::default() })
}

pub fn fit_plan_with(s_l: f64, s_r: f64, k: usize, options: PlanOptions) -> Result<PolynomialPlan> {
    validate_interval(s_l, s_r)?;
    if k < 2 {
        return Err(Error::InvalidParameter(format!("polynomial degree must be at least 2 (got {k})")));
    }
    if options.grid_points < 2 {
        return Err(Error::InvalidParameter("fitting grid needs at least 2 points".into()));
    }
    if !(options.slack_factor >= 1.0 && options.slack_factor.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "slack factor must be at least 1 (got {})",
            options.slack_factor
        )));
    }
    let terms = k - 1;
    let b = s_l / s_r;
    let points = grid(b, 1.0, options.grid_points);

    let basis = Basis::new(b, terms);

    let change = chebyshev_to_monomial(terms, basis.alpha, basis.beta);
    let to_monomial = |c: &[f64]| -> Vec<f64> {
        change.iter().map(|row| row.iter().zip(c).map(|(m, cj)| m * cj).sum()).collect()
    };

    // Stage one, in the Chebyshev basis, with the error bound written as t = 1 − t′
    // so that the origin (p = 0, t = 1) is feasible: maximise t′ subject to
    // |p(x_j) − x_j| ≤ 1 − t′. The coefficients c are free.
    let cols1 = terms + 1;
    let a1 = band_constraints(&basis, &points, cols1, Some(1.0));
    let rhs1: Vec<f64> = points.iter().map(|x| 1.0 + x).chain(points.iter().map(|x| 1.0 - x)).collect();
    let mut c1 = vec![0.0; cols1];
    c1[terms] = 1.0;
    let mut free1 = vec![true; cols1];
    free1[terms] = false;
    let stage1 = simplex::maximize_with_free(&c1, &a1, &rhs1, &free1)?;
    let stage1_chebyshev = stage1.x[..terms].to_vec();
    let stage1_coefficients = to_monomial(&stage1_chebyshev);
    let stage1_error = max_error(&stage1_coefficients, &points);

    // Stage two: minimise Σ 2^{i+2}|a_i| subject to |p(x_j) − x_j| ≤ slack · E, with
    // a = M c. The free variables are offsets from the stage-one solution,
    // c = c₁ + d, and bounds u = |a₁| + v on |a|, so the origin is again feasible.
    let tolerance = options.slack_factor * stage1_error;
    let stage1_residuals: Vec<f64> = points
        .iter()
        .map(|&x| basis.row(x).iter().zip(&stage1_chebyshev).map(|(phi, cj)| phi * cj).sum::<f64>() - x)
        .collect();
    let cols2 = 2 * terms;
    let mut a2 = band_constraints(&basis, &points, cols2, None);
    let mut rhs2: Vec<f64> = stage1_residuals
        .iter()
        .map(|r| (tolerance - r).max(0.0))
        .chain(stage1_residuals.iter().map(|r| (tolerance + r).max(0.0)))
        .collect();
    for sign in [1.0, -1.0] {
        for (i, m_row) in change.iter().enumerate() {
            let mut row = vec![0.0; cols2];
            for j in 0..terms {
                row[j] = sign * m_row[j];
            }
            row[terms + i] = -1.0;
            a2.extend(row);
            rhs2.push(stage1_coefficients[i].abs() - sign * stage1_coefficients[i]);
        }
    }
    let c2: Vec<f64> =
        (0..cols2).map(|j| if j < terms { 0.0 } else { -(2f64.powi((j - terms) as i32 + 2)) }).collect();
    let stage2 = simplex::maximize_with_free(&c2, &a2, &rhs2, &vec![true; cols2])?;
    let chebyshev: Vec<f64> = stage1_chebyshev.iter().zip(&stage2.x[..terms]).map(|(c, d)| c + d).collect();
    let mut normalized = to_monomial(&chebyshev);
    let mut fit_error = max_error(&normalized, &points);
    if fit_error > tolerance && fit_error > stage1_error {
        // The simplex tolerates violations at round-off level. Pulling towards the
        // stage-one polynomial by the smallest convex weight restores the allowance,
        // since the error of a convex combination is at most the combined errors.
        let lambda = (fit_error - tolerance) / (fit_error - stage1_error);
        normalized = normalized.iter().zip(&stage1_coefficients).map(|(a, a1)| (1.0 - lambda) * a + lambda * a1).collect();
        fit_error = max_error(&normalized, &points);
    }

    let coefficients = denormalize_coefficients(&normalized, s_r);
    let verify = grid(s_l, s_r, verification_points(options.grid_points, s_l, s_r));
    let achieved_error = max_error(&coefficients, &verify);

    Ok(PolynomialPlan {
        degree_k: k,
        s_l,
        s_r,
        weighted_cost: weighted_cost(&normalized),
        coefficients,
        normalized_coefficients: normalized,
        achieved_error,
        fit_error,
        stage1_error,
        stage1_coefficients,
        grid_points: options.grid_points,
        slack_factor: options.slack_factor,
    })
}

/// `min(2/k², 2·exp(−(k−1)·√b))` with `b = s_l / s_r`, scaled back by `s_r`.
pub fn theoretical_error_bound(s_l: f64, s_r: f64, k: usize) -> f64 {
    let b = s_l / s_r;
    let k = k as f64;
    s_r * (2.0 / (k * k)).min(2.0 * (-(k - 1.0) * b.sqrt()).exp())
}
