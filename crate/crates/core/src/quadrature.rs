//! Gaussian-weighted integrals on the half line.
//!
//! Rules come from the Golub–Welsch eigenvalue method applied to the Jacobi matrix
//! of the orthogonal polynomial family, so no node tables are embedded.
//!
//! The link-map integrands are even in `x`, have a kink in `|g(bx) − ½|` at the
//! origin, and have sigmoid poles at distance `π/b` from the real axis. A
//! single Gauss–Hermite rule converges slowly on such integrands. Production code
//! therefore integrates on `[0, ∞)` with composite Gauss–Legendre panels graded to
//! the `1/b` length scale and doubles the panel count until successive results
//! agree.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Golub–Welsch: eigenvalues of the symmetric tridiagonal Jacobi matrix with zero
/// diagonal and off-diagonal `off(k)`, `k = 1..n−1`, are the nodes; the weights are
/// `mu0 · v₀²` from the normalised eigenvectors.
fn golub_welsch(n: usize, mu0: f64, off: impl Fn(usize) -> f64) -> GaussRule {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let beta = off(k);
        jacobi[(k - 1, k)] = beta;
        jacobi[(k, k - 1)] = beta;
    }
    let eigen = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eigen.eigenvalues[i], mu0 * eigen.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // The weight function is even, so symmetrise away eigen-solver asymmetry.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let node = 0.5 * (pairs[j].0 - pairs[i].0);
        let weight = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-node, weight);
        pairs[j] = (node, weight);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    GaussRule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
}

/// Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> GaussRule {
    golub_welsch(n, 2.0, |k| {
        let k = k as f64;
        k / (4.0 * k * k - 1.0).sqrt()
    })
}

/// Gauss–Hermite rule for the weight `e^{−x²}` on the real line.
pub fn gauss_hermite(n: usize) -> GaussRule {
    golub_welsch(n, std::f64::consts::PI.sqrt(), |k| (k as f64 / 2.0).sqrt())
}

const PANEL_RULE_POINTS: usize = 20;
/// Beyond this the standard normal density is below 1e−31.
const HALF_LINE_CUTOFF: f64 = 12.0;
const AGREEMENT: f64 = 1e-12;
const FAILURE_THRESHOLD: f64 = 1e-8;
const MAX_REFINEMENTS: usize = 8;

fn panel_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_RULE_POINTS))
}

/// Standard normal density.
pub fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Panel breakpoints on `[0, cutoff]`: width `scale` where the integrand varies on
/// that scale (up to `40·scale`), then width 1/2, each split into `split` pieces.
fn breakpoints(scale: f64, split: usize) -> Vec<f64> {
    let fine_end = (40.0 * scale).min(HALF_LINE_CUTOFF);
    let mut coarse = vec![0.0];
    let fine_panels = (fine_end / scale).ceil().max(1.0) as usize;
    coarse.extend((1..=fine_panels).map(|i| i as f64 * fine_end / fine_panels as f64));
    let rest = ((HALF_LINE_CUTOFF - fine_end) / 0.5).ceil() as usize;
    coarse.extend((1..=rest).map(|i| fine_end + i as f64 * (HALF_LINE_CUTOFF - fine_end) / rest as f64));
    let mut points = vec![0.0];
    for w in coarse.windows(2) {
        let step = (w[1] - w[0]) / split as f64;
        points.extend((1..=split).map(|s| if s == split { w[1] } else { w[0] + s as f64 * step }));
    }
    points
}

fn composite(f: &impl Fn(f64) -> f64, points: &[f64]) -> f64 {
    let rule = panel_rule();
    points
        .windows(2)
        .map(|w| {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            half * rule.nodes.iter().zip(&rule.weights).map(|(t, wt)| wt * f(mid + half * t)).sum::<f64>()
        })
        .sum()
}

/// `∫₀^∞ φ(x) f(x) dx` for a smooth `f` whose features live on the length scale
/// `scale` near the origin. `label` identifies the integrand in failures.
pub fn half_normal_integral(f: impl Fn(f64) -> f64, scale: f64, label: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("quadrature length scale must be positive (got {scale})")));
    }
    let integrand = |x: f64| normal_density(x) * f(x);
    let mut previous = composite(&integrand, &breakpoints(scale, 1));
    let mut discrepancy = f64::INFINITY;
    for level in 1..=MAX_REFINEMENTS {
        let current = composite(&integrand, &breakpoints(scale, 1 << level));
        discrepancy = (current - previous).abs();
        if discrepancy <= AGREEMENT * previous.abs().max(1.0) {
            return Ok(current);
        }
        previous = current;
    }
    if discrepancy <= FAILURE_THRESHOLD {
        Ok(previous)
    } else {
        Err(Error::QuadratureFailure { b: label, discrepancy })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = gauss_legendre(10);
        let integral: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(18)).sum();
        assert_abs_diff_eq!(integral, 2.0 / 19.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn hermite_moments() {
        let rule = gauss_hermite(20);
        let pi = std::f64::consts::PI;
        let moment = |p: i32| rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert_abs_diff_eq!(moment(0), pi.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(moment(2), pi.sqrt() / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(moment(4), 3.0 * pi.sqrt() / 4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(moment(3), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn rules_are_symmetric() {
        let rule = gauss_hermite(7);
        for i in 0..7 {
            assert_eq!(rule.nodes[i], -rule.nodes[6 - i]);
            assert_eq!(rule.weights[i], rule.weights[6 - i]);
        }
    }

    #[test]
    fn half_normal_moments() {
        let half = half_normal_integral(|_| 1.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(half, 0.5, epsilon = 1e-14);
        let mean_abs = half_normal_integral(|x| 2.0 * x, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(mean_abs, (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-14);
        let narrow = half_normal_integral(|x| (-x * 1e3).exp(), 1e-3, 0.0).unwrap();
        // ∫₀^∞ φ(x) e^{−ax} dx ≈ φ(0)/a for large a.
        assert!((narrow * 1e3 - normal_density(0.0)).abs() < 1e-3);
    }
}
