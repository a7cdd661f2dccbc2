//! Error of the best linear classifier under a logistic model.
//!
//! For `x ~ N(0, 1)` and the sigmoid link `g`, the correlation `q(b) = E[(g(bx) − ½) x]`
//! increases from 0 towards `1/√(2π)` while the Bayes error
//! `p(b) = ½ − E|g(bx) − ½|` decreases from ½ towards 0. A moment combination
//! estimates `t ≈ q(‖Σ^{1/2}β‖)`, and the tabulated [`LinkMap`] turns it into an
//! error estimate.
//!
//! Both quantities are even-integrand expectations evaluated on the half line:
//! `q(b) = ∫₀^∞ φ(x) x tanh(bx/2) dx` and `p(b) = 2 ∫₀^∞ φ(x) / (1 + e^{bx}) dx`.

use serde::{Deserialize, Serialize};

use crate::dataset::{LabelKind, LabeledDataset};
use crate::error::{Error, Result};
use crate::poly::PolynomialPlan;
use crate::quadrature::half_normal_integral;
use crate::regression::{plan_moment_terms, MomentTerm};

/// `lim_{b→∞} q(b) = E|x| / 2 = 1/√(2π)`.
pub const Q_SUP: f64 = 0.398_942_280_401_432_7;
pub const DEFAULT_B_MAX: f64 = 50.0;
pub const DEFAULT_GRID_SIZE: usize = 2000;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn length_scale(b: f64) -> f64 {
    if b > 1.0 {
        1.0 / b
    } else {
        1.0
    }
}

fn check_b(b: f64) -> Result<()> {
    if b >= 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("link parameter must be finite and non-negative (got {b})")))
    }
}

/// `q(b) = E[(g(bx) − ½) x]` for `x ~ N(0, 1)`.
pub fn link_q(b: f64) -> Result<f64> {
    check_b(b)?;
    if b == 0.0 {
        return Ok(0.0);
    }
    half_normal_integral(|x| x * (0.5 * b * x).tanh(), length_scale(b), b)
}

/// `p(b) = ½ − E|g(bx) − ½|` for `x ~ N(0, 1)`.
pub fn link_p(b: f64) -> Result<f64> {
    check_b(b)?;
    if b == 0.0 {
        return Ok(0.5);
    }
    half_normal_integral(|x| 2.0 * sigmoid(-b * x), length_scale(b), b)
}

/// Error of the Bayes-optimal classifier `sign(βᵀx)` when `‖Σ^{1/2}β‖ = ν`.
pub fn bayes_error_oracle(nu: f64) -> Result<f64> {
    link_p(nu)
}

/// Tabulated `(b, q(b), p(b))` on a grid that is uniform on `[0, 1]` and
/// logarithmic from 1 to `b_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMap {
    pub b_grid: Vec<f64>,
    pub q_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub q_sup: f64,
}

fn link_grid(b_max: f64, grid_size: usize) -> Vec<f64> {
    if b_max <= 1.0 {
        return (0..grid_size).map(|i| b_max * i as f64 / (grid_size - 1) as f64).collect();
    }
    let linear = grid_size / 4;
    let log_points = grid_size - linear;
    let mut grid: Vec<f64> = (0..linear).map(|i| i as f64 / linear as f64).collect();
    let ratio = b_max.ln() / (log_points - 1) as f64;
    grid.extend((0..log_points).map(|i| (i as f64 * ratio).exp()));
    *grid.last_mut().expect("non-empty grid") = b_max;
    grid
}

pub fn build_link_map(b_max: f64, grid_size: usize) -> Result<LinkMap> {
    if !(b_max > 0.0 && b_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("b_max must be positive (got {b_max})")));
    }
    if grid_size < 100 {
        return Err(Error::InvalidParameter(format!("link grid needs at least 100 points (got {grid_size})")));
    }
    let b_grid = link_grid(b_max, grid_size);
    let q_values = b_grid.iter().map(|&b| link_q(b)).collect::<Result<Vec<_>>>()?;
    let p_values = b_grid.iter().map(|&b| link_p(b)).collect::<Result<Vec<_>>>()?;
    Ok(LinkMap { b_grid, q_values, p_values, q_sup: Q_SUP })
}

impl Default for LinkMap {
    fn default() -> Self {
        build_link_map(DEFAULT_B_MAX, DEFAULT_GRID_SIZE).expect("default link map parameters are valid")
    }
}

impl LinkMap {
    pub fn len(&self) -> usize {
        self.b_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b_grid.is_empty()
    }

    pub fn b_max(&self) -> f64 {
        *self.b_grid.last().expect("link maps are never empty")
    }

    /// `(b, q, p)` rows in grid order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.len()).map(|i| (self.b_grid[i], self.q_values[i], self.p_values[i]))
    }

    /// `b̂` with `q(b̂) = t` by monotone cubic interpolation; `None` beyond the grid.
    pub fn invert_q(&self, t: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(0.0);
        }
        if t >= *self.q_values.last()? {
            return None;
        }
        Some(pchip(&self.q_values, &self.b_grid, t))
    }

    /// `p(b)` by monotone cubic interpolation, clamped to the grid.
    pub fn p_at(&self, b: f64) -> f64 {
        if b <= 0.0 {
            return self.p_values[0];
        }
        if b >= self.b_max() {
            return *self.p_values.last().expect("non-empty");
        }
        pchip(&self.b_grid, &self.p_values, b)
    }
}

/// One-sided three-point end slope, limited so the end interval stays monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Fritsch–Carlson derivative estimate at knot `j` (weighted harmonic mean of the
/// neighbouring secants, zero at local extrema).
fn pchip_slope(xs: &[f64], ys: &[f64], j: usize) -> f64 {
    let n = xs.len();
    let h = |i: usize| xs[i + 1] - xs[i];
    let secant = |i: usize| (ys[i + 1] - ys[i]) / h(i);
    if n == 2 {
        return secant(0);
    }
    if j == 0 {
        return end_slope(h(0), h(1), secant(0), secant(1));
    }
    if j == n - 1 {
        return end_slope(h(n - 2), h(n - 3), secant(n - 2), secant(n - 3));
    }
    let (a, b) = (secant(j - 1), secant(j));
    if a * b <= 0.0 {
        return 0.0;
    }
    let (w1, w2) = (2.0 * h(j) + h(j - 1), h(j) + 2.0 * h(j - 1));
    (w1 + w2) / (w1 / a + w2 / b)
}

/// Monotone piecewise-cubic Hermite interpolation of `(xs, ys)` at `x`.
fn pchip(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        p => (p - 1).min(xs.len() - 2),
    };
    let (m0, m1) = (pchip_slope(xs, ys, i), pchip_slope(xs, ys, i + 1));
    let h = xs[i + 1] - xs[i];
    let s = (x - xs[i]) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * ys[i] + h10 * h * m0 + h01 * ys[i + 1] + h11 * h * m1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FgMode {
    #[default]
    ExactSigmoid,
    LinearApprox,
}

/// Value of `F_g(t)` and whether `t` fell beyond the tabulated range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgValue {
    pub value: f64,
    pub saturated: bool,
}

/// `F_g(t)`: the Bayes error whose correlation `q` equals `t`, or the linear
/// approximation `½ − t` clamped to `[0, ½]`.
pub fn fg_evaluate(map: &LinkMap, t: f64, mode: FgMode) -> FgValue {
    let t = t.max(0.0);
    match mode {
        FgMode::LinearApprox => FgValue { value: (0.5 - t).clamp(0.0, 0.5), saturated: false },
        FgMode::ExactSigmoid => match map.invert_q(t) {
            Some(b) => FgValue { value: map.p_at(b), saturated: false },
            None => FgValue { value: *map.p_values.last().expect("non-empty"), saturated: true },
        },
    }
}

pub fn fg_apply(map: &LinkMap, t: f64, mode: FgMode) -> f64 {
    fg_evaluate(map, t, mode).value
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub err_estimate: f64,
    pub t_value: f64,
    /// `Σ a_i yᵀ Gⁱ⁺¹ y / C(n, i+2)` before clamping at zero.
    pub t_squared_raw: f64,
    pub negative_mass_clamped: bool,
    /// `t` exceeded the largest tabulated `q`.
    pub saturated: bool,
    pub fg_mode: FgMode,
    pub moment_terms: Vec<MomentTerm>,
    pub n: usize,
    pub d: usize,
}

/// `t = √max(0, Σ a_i yᵀ Gⁱ⁺¹ y / C(n, i+2)) / 2` on features divided by `√s_r`, then
/// `F_g(t)`.
pub fn estimate_classification_error(
    data: &LabeledDataset,
    plan: &PolynomialPlan,
    map: &LinkMap,
    mode: FgMode,
) -> Result<ClassificationReport> {
    if data.label_kind() != LabelKind::PlusMinusOne {
        return Err(Error::WrongLabelKind);
    }
    let terms = plan_moment_terms(data, &plan.normalized_coefficients, plan.s_r)?;
    let t_squared_raw: f64 = terms.iter().map(MomentTerm::contribution).sum();
    let negative_mass_clamped = t_squared_raw < 0.0;
    let t_value = t_squared_raw.max(0.0).sqrt() / 2.0;
    let fg = fg_evaluate(map, t_value, mode);
    Ok(ClassificationReport {
        err_estimate: fg.value,
        t_value,
        t_squared_raw,
        negative_mass_clamped,
        saturated: fg.saturated,
        fg_mode: mode,
        moment_terms: terms,
        n: data.n(),
        d: data.d(),
    })
}
