//! Seeded synthetic distributions with known ground truth.
//!
//! Regression data follows `y = βᵀx + η` with `η ~ N(0, δ²)` and `Var[βᵀx] = 1 − δ²`,
//! so labels have unit variance. Classification data follows the logistic model
//! `P(y = 1 | x) = g(βᵀx)`. Covariance is either the identity or
//! `R · diag(1/d, 2/d, …, 1) · Rᵀ` for a Haar-random rotation `R`.
//!
//! Every generator draws from a single [`SampleStream`] seeded by `seed`, so equal
//! arguments give bitwise-equal datasets.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classification::sigmoid;
use crate::dataset::{LabelKind, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::SampleStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Identity,
    /// Eigenvalues `i/d` for `i = 1..d`, in a random orientation.
    LinearRamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthGroundTruth {
    pub beta: Vec<f64>,
    /// Unexplained variance of the regression model (zero for classification).
    pub delta2: f64,
    /// `√(βᵀ Σ β)`.
    pub nu: f64,
    /// Eigenvalues of the feature covariance.
    pub spectrum: Vec<f64>,
    pub seed: u64,
}

/// A Haar-distributed `d × d` orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn haar_rotation(d: usize, stream: &mut SampleStream) -> DMatrix<f64> {
    let gaussian = DMatrix::from_iterator(d, d, (0..d * d).map(|_| stream.normal()));
    let qr = gaussian.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for (j, r) in r_diag.iter().enumerate() {
        if *r < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Linear-ramp covariance factor: features are `x = R · diag(√s) · z`.
struct Ramp {
    rotation: DMatrix<f64>,
    spectrum: Vec<f64>,
}

impl Ramp {
    fn new(d: usize, stream: &mut SampleStream) -> Self {
        let rotation = haar_rotation(d, stream);
        let spectrum = (1..=d).map(|i| i as f64 / d as f64).collect();
        Self { rotation, spectrum }
    }

    /// `βᵀ Σ β = Σ_i s_i (Rᵀβ)_i²`.
    fn quadratic_form(&self, beta: &[f64]) -> f64 {
        let d = beta.len();
        (0..d)
            .map(|i| {
                let projected: f64 = (0..d).map(|j| self.rotation[(j, i)] * beta[j]).sum();
                self.spectrum[i] * projected * projected
            })
            .sum()
    }

    /// Row-major `n × d` features: rows of `Z · diag(√s) · Rᵀ`.
    fn features(&self, n: usize, stream: &mut SampleStream) -> Vec<f64> {
        let d = self.spectrum.len();
        let roots: Vec<f64> = self.spectrum.iter().map(|s| s.sqrt()).collect();
        let mut z = DMatrix::<f64>::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                z[(i, j)] = stream.normal() * roots[j];
            }
        }
        let x = z * self.rotation.transpose();
        let mut out = Vec::with_capacity(n * d);
        for row in x.row_iter() {
            out.extend(row.iter());
        }
        out
    }
}

/// The linear-ramp covariance `R · diag(1/d, …, 1) · Rᵀ` that the spectrum
/// generators draw with this `seed`.
pub fn ramp_covariance(d: usize, seed: u64) -> DMatrix<f64> {
    let ramp = Ramp::new(d, &mut SampleStream::new(seed));
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(ramp.spectrum));
    &ramp.rotation * diag * ramp.rotation.transpose()
}

fn check_sizes(d: usize, n: usize) -> Result<()> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("need d >= 1 and n >= 1 (got d = {d}, n = {n})")));
    }
    Ok(())
}

fn check_delta2(delta2: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta2) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("δ² must lie in [0, 1] (got {delta2})")))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn regression_labels(features: &[f64], beta: &[f64], delta2: f64, stream: &mut SampleStream) -> Vec<f64> {
    let noise_sd = delta2.sqrt();
    features.chunks_exact(beta.len()).map(|x| dot(beta, x) + noise_sd * stream.normal()).collect()
}

/// `x ~ N(0, I_d)`, `β` uniform on the sphere of radius `√(1 − δ²)`.
pub fn gen_isotropic_regression(d: usize, n: usize, delta2: f64, seed: u64) -> Result<(LabeledDataset, SynthGroundTruth)> {
    check_sizes(d, n)?;
    check_delta2(delta2)?;
    let mut stream = SampleStream::new(seed);
    let norm = (1.0 - delta2).sqrt();
    let beta: Vec<f64> = stream.unit_vector(d).into_iter().map(|v| v * norm).collect();
    let features = stream.normal_vec(n * d);
    let labels = regression_labels(&features, &beta, delta2, &mut stream);
    let data = LabeledDataset::new(features, d, labels, LabelKind::Real)?;
    let nu = dot(&beta, &beta).sqrt();
    Ok((data, SynthGroundTruth { beta, delta2, nu, spectrum: vec![1.0; d], seed }))
}

/// Linear-ramp covariance, `β` in a uniform direction scaled so `βᵀΣβ = 1 − δ²`.
pub fn gen_spectrum_regression(d: usize, n: usize, delta2: f64, seed: u64) -> Result<(LabeledDataset, SynthGroundTruth)> {
    let (data, _, truth) = gen_spectrum_regression_with_pool(d, n, 1, delta2, seed)?;
    Ok((data, truth))
}

/// As [`gen_spectrum_regression`], plus `pool` further unlabeled feature draws from
/// the same distribution (returned with zero labels) for covariance estimation.
/// The labeled part is identical to what [`gen_spectrum_regression`] returns.
pub fn gen_spectrum_regression_with_pool(
    d: usize,
    n: usize,
    pool: usize,
    delta2: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, SynthGroundTruth)> {
    check_sizes(d, n)?;
    check_sizes(d, pool)?;
    check_delta2(delta2)?;
    let mut stream = SampleStream::new(seed);
    let ramp = Ramp::new(d, &mut stream);
    let direction = stream.unit_vector(d);
    let scale = ((1.0 - delta2) / ramp.quadratic_form(&direction)).sqrt();
    let beta: Vec<f64> = direction.iter().map(|v| v * scale).collect();
    let features = ramp.features(n, &mut stream);
    let labels = regression_labels(&features, &beta, delta2, &mut stream);
    let data = LabeledDataset::new(features, d, labels, LabelKind::Real)?;
    let unlabeled = LabeledDataset::new(ramp.features(pool, &mut stream), d, vec![0.0; pool], LabelKind::Real)?;
    let nu = ramp.quadratic_form(&beta).sqrt();
    Ok((data, unlabeled, SynthGroundTruth { beta, delta2, nu, spectrum: ramp.spectrum, seed }))
}

/// Logistic labels `y = +1` with probability `g(βᵀx)`, with `‖β‖ = beta_norm` in a
/// uniform direction.
pub fn gen_logistic_classification(
    d: usize,
    n: usize,
    beta_norm: f64,
    spectrum_kind: SpectrumKind,
    seed: u64,
) -> Result<(LabeledDataset, SynthGroundTruth)> {
    check_sizes(d, n)?;
    if !(beta_norm >= 0.0 && beta_norm.is_finite()) {
        return Err(Error::InvalidParameter(format!("‖β‖ must be finite and non-negative (got {beta_norm})")));
    }
    let mut stream = SampleStream::new(seed);
    let ramp = match spectrum_kind {
        SpectrumKind::Identity => None,
        SpectrumKind::LinearRamp => Some(Ramp::new(d, &mut stream)),
    };
    let beta: Vec<f64> = stream.unit_vector(d).into_iter().map(|v| v * beta_norm).collect();
    let (features, nu, spectrum) = match &ramp {
        None => (stream.normal_vec(n * d), beta_norm, vec![1.0; d]),
        Some(r) => (r.features(n, &mut stream), r.quadratic_form(&beta).sqrt(), r.spectrum.clone()),
    };
    let labels: Vec<f64> = features
        .chunks_exact(d)
        .map(|x| if stream.uniform() < sigmoid(dot(&beta, x)) { 1.0 } else { -1.0 })
        .collect();
    let data = LabeledDataset::new(features, d, labels, LabelKind::PlusMinusOne)?;
    Ok((data, SynthGroundTruth { beta, delta2: 0.0, nu, spectrum, seed }))
}
