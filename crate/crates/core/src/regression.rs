//! Unexplained-variance estimators for linear regression.
//!
//! The moment estimators subtract a combination of Gram-chain moments from the
//! label second moment `yᵀy/n`. With identity covariance a single moment suffices:
//! `yᵀy/n − yᵀGy/C(n,2)`. With general covariance the combination follows a
//! [`PolynomialPlan`] fitted on the spectral interval. The classical baseline fits
//! least squares and needs `n > d`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::{moment_estimates, LabelKind, LabeledDataset};
use crate::error::{Error, Result};
use crate::poly::PolynomialPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    Isotropic,
    GeneralCov,
    BaselineUnbiased,
}

/// One term `coefficient · value` of a moment combination, where `value` estimates
/// `βᵀ Σ^order β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTerm {
    pub order: usize,
    pub coefficient: f64,
    pub value: f64,
}

impl MomentTerm {
    pub fn contribution(&self) -> f64 {
        self.coefficient * self.value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// `raw_estimate`, clamped to `[0, 1]` when the labels were normalised.
    pub estimate: f64,
    pub raw_estimate: f64,
    pub clamped: bool,
    /// `yᵀy / n`.
    pub label_second_moment: f64,
    pub moment_terms: Vec<MomentTerm>,
    pub method: EstimatorMethod,
    pub n: usize,
    pub d: usize,
}

impl EstimateReport {
    fn new(data: &LabeledDataset, raw: f64, moment_terms: Vec<MomentTerm>, method: EstimatorMethod) -> Self {
        let estimate = if data.has_unit_variance_labels() { raw.clamp(0.0, 1.0) } else { raw };
        Self {
            estimate,
            raw_estimate: raw,
            clamped: estimate != raw,
            label_second_moment: data.label_second_moment(),
            moment_terms,
            method,
            n: data.n(),
            d: data.d(),
        }
    }
}

/// The constant-free accuracy scale `C·√(d+n)/(τ·n)`. Only ratios between values
/// are meaningful; the absolute constant is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalBound {
    pub d: usize,
    pub n: usize,
    pub c_fourth: f64,
    pub tau: f64,
    pub scaling_value: f64,
}

/// Divides labels by their empirical standard deviation (divisor `n`) and returns
/// the scale used. The result is flagged so estimators clamp to `[0, 1]`.
pub fn normalize_labels(data: &LabeledDataset) -> Result<(LabeledDataset, f64)> {
    let n = data.n() as f64;
    let mean = data.labels().iter().sum::<f64>() / n;
    let variance = data.labels().iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let scale = variance.sqrt();
    let labels: Vec<f64> = data.labels().iter().map(|y| y / scale).collect();
    let kind = if data.label_kind() == LabelKind::PlusMinusOne && labels.iter().all(|y| y.abs() == 1.0) {
        LabelKind::PlusMinusOne
    } else {
        LabelKind::Real
    };
    Ok((data.with_labels(labels, kind)?.mark_unit_variance(), scale))
}

/// Moment terms `a_i · yᵀ Gⁱ⁺¹ y / C(n, i+2)` on features divided by `√s_r`.
/// Scaling is skipped when `s_r = 1`, so identical inputs give identical bits.
pub(crate) fn plan_moment_terms(data: &LabeledDataset, coefficients: &[f64], s_r: f64) -> Result<Vec<MomentTerm>> {
    if coefficients.is_empty() {
        return Err(Error::InvalidParameter("plan has no coefficients".into()));
    }
    if !(s_r > 0.0 && s_r.is_finite()) {
        return Err(Error::InvalidParameter(format!("σ_max must be positive (got {s_r})")));
    }
    let k = coefficients.len() + 1;
    if data.n() < k + 1 {
        return Err(Error::InsufficientSamples { required: k + 1, available: data.n() });
    }
    let scaled;
    let data = if s_r == 1.0 {
        data
    } else {
        scaled = data.scale_features(1.0 / s_r.sqrt());
        &scaled
    };
    let moments = moment_estimates(data, k)?;
    Ok(moments
        .iter()
        .zip(coefficients)
        .map(|(m, &a)| MomentTerm { order: m.order, coefficient: a, value: m.value })
        .collect())
}

fn combination(terms: &[MomentTerm]) -> f64 {
    terms.iter().map(MomentTerm::contribution).sum()
}

fn moment_report(data: &LabeledDataset, coefficients: &[f64], s_r: f64, method: EstimatorMethod) -> Result<EstimateReport> {
    let terms = plan_moment_terms(data, coefficients, s_r)?;
    let raw = data.label_second_moment() - combination(&terms);
    Ok(EstimateReport::new(data, raw, terms, method))
}

/// `yᵀy/n − yᵀGy/C(n,2)`, for features with identity covariance.
pub fn estimate_isotropic(data: &LabeledDataset) -> Result<EstimateReport> {
    if data.n() < 2 {
        return Err(Error::InsufficientSamples { required: 2, available: data.n() });
    }
    let terms = {
        let moments = moment_estimates(data, 2)?;
        vec![MomentTerm { order: 2, coefficient: 1.0, value: moments[0].value }]
    };
    let raw = data.label_second_moment() - combination(&terms);
    Ok(EstimateReport::new(data, raw, terms, EstimatorMethod::Isotropic))
}

/// `yᵀy/n − Σ a_i yᵀ Gⁱ⁺¹ y / C(n, i+2)` with features divided by `√s_r` of the plan
/// (its `σ_max`).
pub fn estimate_general(data: &LabeledDataset, plan: &PolynomialPlan) -> Result<EstimateReport> {
    moment_report(data, &plan.normalized_coefficients, plan.s_r, EstimatorMethod::GeneralCov)
}

/// Residual sum of squares of the least-squares fit divided by `n − d`.
pub fn baseline_unbiased(data: &LabeledDataset) -> Result<EstimateReport> {
    let (n, d) = (data.n(), data.d());
    if n <= d {
        return Err(Error::Underdetermined { n, d });
    }
    let x = data.feature_matrix();
    let y = DVector::from_column_slice(data.labels());
    let beta = least_squares(&x, &y)?;
    let residual = &y - &x * beta;
    let raw = residual.norm_squared() / (n - d) as f64;
    Ok(EstimateReport::new(data, raw, Vec::new(), EstimatorMethod::BaselineUnbiased))
}

/// Normal equations by Cholesky when `XᵀX` is comfortably well conditioned (the
/// common case, and much faster than QR for tall `X`); otherwise column-pivoted QR,
/// with a minimum-norm SVD solve when `X` is numerically rank deficient.
fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let gram = x.transpose() * x;
    if let Some(chol) = gram.cholesky() {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
        // diag(L) ratios bound κ(XᵀX) from below; demand a wide margin before trusting it.
        if lo > 0.0 && (lo / hi).powi(2) > 1e-8 {
            let z = chol.solve(&(x.transpose() * y));
            if z.iter().all(|v| v.is_finite()) {
                return Ok(z);
            }
        }
    }
    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let rank_tol = diag_max * f64::EPSILON * x.nrows().max(x.ncols()) as f64;
    let full_rank = diag_max > 0.0 && r.diagonal().iter().all(|v| v.abs() > rank_tol);
    if full_rank {
        // X P = Q R, so solve R z = Qᵀ y and undo the column permutation.
        let qty = qr.q().transpose() * y;
        if let Some(mut z) = r.solve_upper_triangular(&qty) {
            qr.p().inv_permute_rows(&mut z);
            return Ok(z);
        }
    }
    let svd = x.clone().svd(true, true);
    let eps = svd.singular_values.max() * f64::EPSILON * x.nrows().max(x.ncols()) as f64;
    svd.solve(y, eps).map_err(|e| Error::NumericalFailure(format!("least squares: {e}")))
}

/// Replaces every feature vector `x` by `Σ̂^{-1/2} x`, using the symmetric inverse
/// square root from an eigendecomposition.
pub fn whiten(data: &LabeledDataset, sigma_hat: &DMatrix<f64>) -> Result<LabeledDataset> {
    let d = data.d();
    if sigma_hat.nrows() != d || sigma_hat.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: sigma_hat.nrows().max(sigma_hat.ncols()) });
    }
    let scale = sigma_hat.amax();
    if (sigma_hat - sigma_hat.transpose()).amax() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter("covariance estimate is not symmetric".into()));
    }
    let eigen = SymmetricEigen::new(sigma_hat.clone());
    let max = eigen.eigenvalues.max();
    let min = eigen.eigenvalues.min();
    if max.is_nan() || max <= 0.0 || min <= 1e-12 * max {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    let inv_sqrt = DVector::from_iterator(d, eigen.eigenvalues.iter().map(|l| 1.0 / l.sqrt()));
    let w = &eigen.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eigen.eigenvectors.transpose();
    // Rows are samples, so X ↦ X W (W is symmetric).
    let whitened = data.feature_matrix() * w;
    let mut features = Vec::with_capacity(data.n() * d);
    for row in whitened.row_iter() {
        features.extend(row.iter());
    }
    Ok(data.replace_features(features))
}

pub fn theoretical_scaling(d: usize, n: usize, c_fourth: f64, tau: f64) -> Result<TheoreticalBound> {
    if d == 0 || n == 0 || c_fourth.is_nan() || c_fourth <= 0.0 || tau.is_nan() || tau <= 0.0 || tau >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "need d, n, C > 0 and τ in (0, 1) (got d = {d}, n = {n}, C = {c_fourth}, τ = {tau})"
        )));
    }
    let scaling_value = c_fourth * ((d + n) as f64).sqrt() / (tau * n as f64);
    Ok(TheoreticalBound { d, n, c_fourth, tau, scaling_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small() -> LabeledDataset {
        LabeledDataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], vec![1.0, 1.0, 2.0], LabelKind::Real)
            .unwrap()
    }

    #[test]
    fn normalization_examples() {
        let data = LabeledDataset::from_rows(&[vec![0.0], vec![1.0]], vec![2.0, -2.0], LabelKind::Real).unwrap();
        let (scaled, scale) = normalize_labels(&data).unwrap();
        assert_eq!(scale, 2.0);
        assert_eq!(scaled.labels(), &[1.0, -1.0]);
        assert!(scaled.has_unit_variance_labels());

        let flat = data.with_labels(vec![5.0, 5.0], LabelKind::Real).unwrap();
        assert_eq!(normalize_labels(&flat), Err(Error::ZeroVariance));
    }

    #[test]
    fn isotropic_forced_arithmetic() {
        let report = estimate_isotropic(&small()).unwrap();
        assert_abs_diff_eq!(report.label_second_moment, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(report.raw_estimate, 2.0 - 4.0 / 3.0, epsilon = 1e-14);
        assert!(!report.clamped);
        assert_eq!(report.method, EstimatorMethod::Isotropic);
    }

    #[test]
    fn zero_labels_give_zero() {
        let data = small().with_labels(vec![0.0; 3], LabelKind::Real).unwrap();
        assert_eq!(estimate_isotropic(&data).unwrap().raw_estimate, 0.0);
    }

    #[test]
    fn general_with_square_plan_is_isotropic() {
        let plan = PolynomialPlan::from_coefficients(1.0, 1.0, vec![1.0]).unwrap();
        let data = small();
        let iso = estimate_isotropic(&data).unwrap();
        let gen = estimate_general(&data, &plan).unwrap();
        assert_eq!(iso.raw_estimate.to_bits(), gen.raw_estimate.to_bits());
    }

    #[test]
    fn clamping_only_after_normalisation() {
        let data = LabeledDataset::from_rows(&[vec![1.0], vec![1.0], vec![1.0]], vec![1.0, 1.0, -1.0], LabelKind::Real)
            .unwrap();
        let raw = estimate_isotropic(&data).unwrap();
        assert_eq!(raw.estimate, raw.raw_estimate);
        let (normalized, _) = normalize_labels(&data).unwrap();
        let report = estimate_isotropic(&normalized).unwrap();
        assert!(report.raw_estimate > 1.0);
        assert_eq!(report.estimate, 1.0);
        assert!(report.clamped);
    }

    #[test]
    fn baseline_exact_fit_and_underdetermined() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, (i * i) as f64 * 0.1]).collect();
        let labels: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] - r[1] + 3.0 * r[2]).collect();
        let data = LabeledDataset::from_rows(&rows, labels, LabelKind::Real).unwrap();
        assert_abs_diff_eq!(baseline_unbiased(&data).unwrap().raw_estimate, 0.0, epsilon = 1e-20);
        let square = data.select_rows(&[0, 1, 2]).unwrap();
        assert_eq!(baseline_unbiased(&square), Err(Error::Underdetermined { n: 3, d: 3 }));
    }

    #[test]
    fn baseline_rank_deficient_falls_back() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let labels = vec![0.0, 1.0, 2.0, 3.0, 5.0];
        let data = LabeledDataset::from_rows(&rows, labels, LabelKind::Real).unwrap();
        let report = baseline_unbiased(&data).unwrap();
        assert!(report.raw_estimate.is_finite() && report.raw_estimate > 0.0);
    }

    #[test]
    fn whitening_identity_and_scaled() {
        let data = small();
        let same = whiten(&data, &DMatrix::identity(2, 2)).unwrap();
        for (a, b) in same.features().iter().zip(data.features()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let halved = whiten(&data, &(DMatrix::identity(2, 2) * 4.0)).unwrap();
        for (a, b) in halved.features().iter().zip(data.features()) {
            assert_abs_diff_eq!(*a, b / 2.0, epsilon = 1e-12);
        }
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(whiten(&data, &singular), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn scaling_formula() {
        let b = theoretical_scaling(100, 100, 3.0, 0.1).unwrap();
        assert_abs_diff_eq!(b.scaling_value, 3.0 * 200f64.sqrt() / 10.0, epsilon = 1e-12);
        let more = theoretical_scaling(100, 400, 3.0, 0.1).unwrap();
        let ratio = b.scaling_value / more.scaling_value;
        assert!(ratio > 2.0 && ratio < 4.0);
        assert!(theoretical_scaling(1, 1, 3.0, 1.0).is_err());
    }
}
