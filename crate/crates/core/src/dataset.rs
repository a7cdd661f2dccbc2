//! Labeled datasets, the strictly upper triangular Gram matrix, and the chained
//! quadratic forms `yᵀ Gᵏ y` that every estimator is built from.
//!
//! `yᵀ Gᵏ y` sums `y_{i1} ⟨x_{i1}, x_{i2}⟩ ⋯ ⟨x_{ik}, x_{ik+1}⟩ y_{ik+1}` over strictly
//! increasing index tuples, so dividing by `C(n, k+1)` gives an unbiased estimate of
//! `βᵀ Σᵏ⁺¹ β` whenever `E[y x] = Σ β`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Real,
    PlusMinusOne,
}

/// `n` samples in `d` dimensions, stored row-major, with one label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
    label_kind: LabelKind,
    unit_variance_labels: bool,
}

impl LabeledDataset {
    /// Builds a dataset from a row-major `n × d` feature buffer.
    pub fn new(features: Vec<f64>, d: usize, labels: Vec<f64>, label_kind: LabelKind) -> Result<Self> {
        let n = labels.len();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!("need n >= 1 and d >= 1 (got n = {n}, d = {d})")));
        }
        if features.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, found: features.len() });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        if let Some(pos) = labels.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite label at row {pos}")));
        }
        if label_kind == LabelKind::PlusMinusOne {
            if let Some(pos) = labels.iter().position(|&v| v != 1.0 && v != -1.0) {
                return Err(Error::InvalidDataset(format!(
                    "label {} at row {pos} is not +1 or -1",
                    labels[pos]
                )));
            }
        }
        Ok(Self { n, d, features, labels, label_kind, unit_variance_labels: false })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<f64>, label_kind: LabelKind) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), found: rows.len() });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.len() });
        }
        Self::new(rows.concat(), d, labels, label_kind)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn label_kind(&self) -> LabelKind {
        self.label_kind
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Row-major `n × d` feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    /// True once labels were rescaled to unit empirical variance.
    pub fn has_unit_variance_labels(&self) -> bool {
        self.unit_variance_labels
    }

    pub(crate) fn mark_unit_variance(mut self) -> Self {
        self.unit_variance_labels = true;
        self
    }

    /// Replaces the labels, keeping features.
    pub fn with_labels(&self, labels: Vec<f64>, label_kind: LabelKind) -> Result<Self> {
        Self::new(self.features.clone(), self.d, labels, label_kind)
    }

    /// Multiplies every feature by `factor`. Label state is preserved.
    pub fn scale_features(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.features.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Keeps the rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidParameter(format!("row index {i} out of range (n = {})", self.n)));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::new(features, self.d, labels, self.label_kind)
    }

    /// Features as an `n × d` matrix.
    pub fn feature_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.features)
    }

    pub(crate) fn replace_features(&self, features: Vec<f64>) -> Self {
        debug_assert_eq!(features.len(), self.n * self.d);
        Self { features, ..self.clone() }
    }

    /// `yᵀy / n`.
    pub fn label_second_moment(&self) -> f64 {
        self.labels.iter().map(|y| y * y).sum::<f64>() / self.n as f64
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Anything that can apply the strictly upper triangular Gram matrix to a vector.
pub trait GramOperator {
    fn size(&self) -> usize;

    /// Returns `G v`.
    fn apply(&self, v: &[f64]) -> Vec<f64>;
}

/// Dense strictly upper triangular Gram matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramChain {
    n: usize,
    g: Vec<f64>,
}

impl GramChain {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.g
    }
}

/// `G[i][j] = ⟨x_i, x_j⟩` for `i < j`, zero on and below the diagonal.
pub fn gram_upper(data: &LabeledDataset) -> GramChain {
    let n = data.n();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        let xi = data.row(i);
        for j in i + 1..n {
            g[i * n + j] = dot(xi, data.row(j));
        }
    }
    GramChain { n, g }
}

impl GramOperator for GramChain {
    fn size(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.g[i * n..(i + 1) * n];
                dot(&row[i + 1..], &v[i + 1..])
            })
            .collect()
    }
}

/// Applies `G` without materialising it: `(G v)_i = ⟨x_i, Σ_{j>i} v_j x_j⟩`, accumulated
/// as a suffix sum. Costs `O(n d)` time and `O(d)` extra memory per product.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitGram<'a> {
    data: &'a LabeledDataset,
}

impl<'a> ImplicitGram<'a> {
    pub fn new(data: &'a LabeledDataset) -> Self {
        Self { data }
    }
}

impl GramOperator for ImplicitGram<'_> {
    fn size(&self) -> usize {
        self.data.n()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.data.n();
        let mut suffix = vec![0.0; self.data.d()];
        let mut out = vec![0.0; n];
        for i in (0..n).rev() {
            let xi = self.data.row(i);
            out[i] = dot(xi, &suffix);
            let vi = v[i];
            if vi != 0.0 {
                suffix.iter_mut().zip(xi).for_each(|(s, x)| *s += vi * x);
            }
        }
        out
    }
}

/// `yᵀ Gᵏ y` by `k` repeated matrix-vector products. Exactly zero once `k >= n`.
pub fn chain_form<G: GramOperator + ?Sized>(gram: &G, y: &[f64], k: usize) -> Result<f64> {
    let n = gram.size();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("chain power k must be at least 1".into()));
    }
    if k >= n {
        return Ok(0.0);
    }
    let mut v = y.to_vec();
    for _ in 0..k {
        v = gram.apply(&v);
    }
    Ok(dot(y, &v))
}

/// All chained forms `yᵀ Gʲ y` for `j = 1..=max_power`, sharing the product chain.
pub fn chain_forms<G: GramOperator + ?Sized>(gram: &G, y: &[f64], max_power: usize) -> Result<Vec<f64>> {
    let n = gram.size();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    let mut out = Vec::with_capacity(max_power);
    let mut v = y.to_vec();
    for power in 1..=max_power {
        if power >= n {
            out.push(0.0);
            continue;
        }
        v = gram.apply(&v);
        out.push(dot(y, &v));
    }
    Ok(out)
}

/// `ln C(n, k)`, accumulated as `Σ ln((n - j) / (j + 1))`.
pub fn log_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|j| ((n - j) as f64 / (j + 1) as f64).ln()).sum()
}

/// `numerator / C(n, k)` evaluated as `sign · exp(ln|numerator| − ln C)`.
pub fn divide_by_binomial(numerator: f64, log_divisor: f64) -> f64 {
    if numerator == 0.0 {
        return 0.0;
    }
    numerator.signum() * (numerator.abs().ln() - log_divisor).exp()
}

/// Unbiased estimate of `βᵀ Σᵏ β` from `yᵀ Gᵏ⁻¹ y / C(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: usize,
    pub value: f64,
    /// `ln C(n, order)`.
    pub divisor_log: f64,
}

pub fn moment_estimate(data: &LabeledDataset, k: usize) -> Result<MomentEstimate> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("moment order must be at least 2 (got {k})")));
    }
    let n = data.n();
    if n < k {
        return Err(Error::InsufficientSamples { required: k, available: n });
    }
    let numerator = chain_form(&ImplicitGram::new(data), data.labels(), k - 1)?;
    let divisor_log = log_binomial(n, k);
    Ok(MomentEstimate { order: k, value: divide_by_binomial(numerator, divisor_log), divisor_log })
}

/// Moment estimates of orders `2..=max_order` from one shared product chain.
pub fn moment_estimates(data: &LabeledDataset, max_order: usize) -> Result<Vec<MomentEstimate>> {
    if max_order < 2 {
        return Err(Error::InvalidParameter(format!("moment order must be at least 2 (got {max_order})")));
    }
    let n = data.n();
    if n < max_order {
        return Err(Error::InsufficientSamples { required: max_order, available: n });
    }
    let forms = chain_forms(&ImplicitGram::new(data), data.labels(), max_order - 1)?;
    Ok(forms
        .into_iter()
        .enumerate()
        .map(|(j, numerator)| {
            let order = j + 2;
            let divisor_log = log_binomial(n, order);
            MomentEstimate { order, value: divide_by_binomial(numerator, divisor_log), divisor_log }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_point() -> LabeledDataset {
        LabeledDataset::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]], vec![1.0, 2.0], LabelKind::Real).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(LabeledDataset::new(vec![], 1, vec![], LabelKind::Real).is_err());
        assert!(LabeledDataset::new(vec![1.0], 0, vec![1.0], LabelKind::Real).is_err());
        assert!(LabeledDataset::new(vec![1.0, 2.0], 1, vec![1.0], LabelKind::Real).is_err());
        assert!(LabeledDataset::new(vec![f64::NAN], 1, vec![1.0], LabelKind::Real).is_err());
        assert!(LabeledDataset::new(vec![1.0], 1, vec![f64::INFINITY], LabelKind::Real).is_err());
        assert!(LabeledDataset::new(vec![1.0], 1, vec![0.5], LabelKind::PlusMinusOne).is_err());
        assert!(LabeledDataset::new(vec![1.0], 1, vec![-1.0], LabelKind::PlusMinusOne).is_ok());
    }

    #[test]
    fn single_sample_gram_is_zero() {
        let data = LabeledDataset::new(vec![3.0, 4.0, 5.0], 3, vec![1.0], LabelKind::Real).unwrap();
        let g = gram_upper(&data);
        assert_eq!(g.n(), 1);
        assert_eq!(g.as_slice(), &[0.0]);
    }

    #[test]
    fn two_point_gram_and_chain() {
        let data = two_point();
        let g = gram_upper(&data);
        assert_eq!(g.as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(chain_form(&g, data.labels(), 1).unwrap(), 2.0);
        assert_eq!(chain_form(&ImplicitGram::new(&data), data.labels(), 1).unwrap(), 2.0);
        assert_eq!(chain_form(&g, data.labels(), 2).unwrap(), 0.0);
    }

    #[test]
    fn chain_form_rejects_mismatch() {
        let data = two_point();
        let g = gram_upper(&data);
        assert!(matches!(chain_form(&g, &[1.0], 1), Err(Error::DimensionMismatch { .. })));
        assert!(chain_form(&g, &[1.0, 1.0], 0).is_err());
    }

    #[test]
    fn gram_matches_dense_product() {
        let mut s = crate::rng::SampleStream::new(11);
        let (n, d) = (10, 5);
        let data = LabeledDataset::new(s.normal_vec(n * d), d, s.normal_vec(n), LabelKind::Real).unwrap();
        let x = data.feature_matrix();
        let full = &x * x.transpose();
        let g = gram_upper(&data);
        for i in 0..n {
            for j in 0..n {
                let expected = if i < j { full[(i, j)] } else { 0.0 };
                assert_relative_eq!(g.get(i, j), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_labels_give_zero_moments() {
        let mut s = crate::rng::SampleStream::new(5);
        let data = LabeledDataset::new(s.normal_vec(40), 4, vec![0.0; 10], LabelKind::Real).unwrap();
        for k in 2..6 {
            assert_eq!(moment_estimate(&data, k).unwrap().value, 0.0);
        }
    }

    #[test]
    fn moment_requires_enough_samples() {
        let data = two_point();
        assert!(matches!(moment_estimate(&data, 3), Err(Error::InsufficientSamples { required: 3, available: 2 })));
        assert!(moment_estimate(&data, 1).is_err());
    }

    #[test]
    fn log_binomial_small_values() {
        assert_relative_eq!(log_binomial(6, 3), 20f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(log_binomial(10, 0), 0.0);
        assert_relative_eq!(log_binomial(1_000_000, 2), (1e6 * 999_999.0 / 2.0f64).ln(), max_relative = 1e-14);
        assert_eq!(log_binomial(2, 3), f64::NEG_INFINITY);
    }

    #[test]
    fn divide_by_binomial_keeps_sign() {
        assert_relative_eq!(divide_by_binomial(-40.0, 20f64.ln()), -2.0, epsilon = 1e-14);
        assert_eq!(divide_by_binomial(0.0, 3.0), 0.0);
    }

    #[test]
    fn batched_moments_match_single() {
        let mut s = crate::rng::SampleStream::new(9);
        let data = LabeledDataset::new(s.normal_vec(30 * 4), 4, s.normal_vec(30), LabelKind::Real).unwrap();
        let all = moment_estimates(&data, 5).unwrap();
        for m in all {
            assert_eq!(m.value.to_bits(), moment_estimate(&data, m.order).unwrap().value.to_bits());
        }
    }
}
