use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest negative eigenvalue clamped to zero before `NonPsd` is raised.
const CLAMP_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureGaussian {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

fn check_features(features: &[Vec<f64>]) -> Result<usize> {
    let first = features.first().ok_or(Error::EmptyCorpus)?;
    let d = first.len();
    if d == 0 {
        return Err(Error::EmptyCorpus);
    }
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(Error::shape(format!("feature of width {} among width {d}", bad.len())));
    }
    Ok(d)
}

fn mean_of(features: &[Vec<f64>], d: usize) -> DVector<f64> {
    let mut m = DVector::zeros(d);
    for f in features {
        m += DVector::from_column_slice(f);
    }
    m / features.len() as f64
}

/// `Σ (x − μ)(x − μ)ᵀ`.
fn scatter(features: &[Vec<f64>], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = mean.len();
    let mut s = DMatrix::zeros(d, d);
    for f in features {
        let x = DVector::from_column_slice(f) - mean;
        s.ger(1.0, &x, &x, 1.0);
    }
    s
}

impl FeatureGaussian {
    /// Checks symmetry and positive semidefiniteness.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.shape() != (d, d) {
            return Err(Error::shape(format!(
                "covariance {:?} for mean of length {d}",
                covariance.shape()
            )));
        }
        let asym = (&covariance - covariance.transpose()).abs().max();
        if asym > 1e-9 {
            return Err(Error::NonPsd(asym));
        }
        let min = SymmetricEigen::new(covariance.clone()).eigenvalues.min();
        if min < -1e-9 {
            return Err(Error::NonPsd(min));
        }
        Ok(Self { mean, covariance })
    }

    /// Sample mean and unbiased covariance; needs more samples than dimensions.
    pub fn fit(features: &[Vec<f64>]) -> Result<Self> {
        let d = check_features(features)?;
        let n = features.len();
        if n < d + 1 {
            return Err(Error::SingularCovariance { samples: n, dim: d });
        }
        let mean = mean_of(features, d);
        let covariance = scatter(features, &mean) / (n - 1) as f64;
        Ok(Self { mean, covariance })
    }

    /// Ledoit-Wolf shrinkage of the sample covariance towards a scaled
    /// identity; well defined for any nonempty corpus.
    pub fn fit_shrunk(features: &[Vec<f64>]) -> Result<Self> {
        let d = check_features(features)?;
        let n = features.len() as f64;
        let mean = mean_of(features, d);
        let s = scatter(features, &mean) / n;
        let mu = s.trace() / d as f64;
        let target = DMatrix::<f64>::identity(d, d) * mu;
        let delta = (&s - &target).norm_squared();
        let mut beta = 0.0;
        for f in features {
            let x = DVector::from_column_slice(f) - &mean;
            beta += (&x * x.transpose() - &s).norm_squared();
        }
        beta /= n * n;
        let rho = if delta > 0.0 { beta.min(delta) / delta } else { 1.0 };
        let covariance = target * rho + s * (1.0 - rho);
        Ok(Self { mean, covariance })
    }

    /// [`fit`](Self::fit), falling back to shrinkage for small corpora.
    pub fn fit_or_shrink(features: &[Vec<f64>]) -> Result<Self> {
        match Self::fit(features) {
            Err(Error::SingularCovariance { .. }) => Self::fit_shrunk(features),
            r => r,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Square root of a symmetric PSD matrix through its eigendecomposition.
fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let min = e.eigenvalues.min();
    if min < -CLAMP_TOL {
        return Err(Error::NonPsd(min));
    }
    let roots = e.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&e.eigenvectors * DMatrix::from_diagonal(&roots) * e.eigenvectors.transpose())
}

/// `‖μ₁ − μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^{1/2})`. The trace of `(Σ₁Σ₂)^{1/2}`
/// is taken from the symmetric product `Σ₁^{1/2} Σ₂ Σ₁^{1/2}`.
pub fn frechet_distance(a: &FeatureGaussian, b: &FeatureGaussian) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::shape(format!(
            "gaussians of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let s1 = psd_sqrt(&a.covariance)?;
    let m = &s1 * &b.covariance * &s1;
    let sym = (&m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym).eigenvalues;
    let min = e.min();
    if min < -CLAMP_TOL {
        return Err(Error::NonPsd(min));
    }
    let tr_sqrt: f64 = e.iter().map(|v| v.max(0.0).sqrt()).sum();
    let dm = (&a.mean - &b.mean).norm_squared();
    Ok((dm + a.covariance.trace() + b.covariance.trace() - 2.0 * tr_sqrt).max(0.0))
}
