use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Mean and (symmetrised, unbiased) covariance of a set of embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianFit {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, what: &'static str) -> Result<()> {
        let d = self.dim();
        if self.covariance.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "{what}: mean has {d} entries, covariance is {:?}",
                self.covariance.shape()
            )));
        }
        if self.mean.iter().chain(self.covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what));
        }
        Ok(())
    }
}

/// Fits a Gaussian to `embeddings` (one sample per row) with divisor `n - 1`.
pub fn fit_gaussian(embeddings: &DMatrix<f64>) -> Result<GaussianFit> {
    let n = embeddings.nrows();
    if n < 2 {
        return Err(Error::TooShort { len: n, needed: 2 });
    }
    if embeddings.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("embedding matrix"));
    }
    let mean = embeddings.row_mean().transpose();
    let mut centred = embeddings.clone();
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centred.transpose() * &centred / (n - 1) as f64;
    let covariance = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianFit { mean, covariance })
}

/// Eigenvalues of a symmetric matrix with negative round-off clamped to 0.
fn clamped_eigen(m: DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let mut e = SymmetricEigen::new(m);
    e.eigenvalues.iter_mut().for_each(|v| *v = v.max(0.0));
    e
}

fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = clamped_eigen((m + m.transpose()) * 0.5);
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f64::sqrt));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Fréchet distance between two Gaussians:
/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2)`, never
/// negative.
pub fn frechet_distance(a: &GaussianFit, b: &GaussianFit) -> Result<f64> {
    a.check("first Gaussian fit")?;
    b.check("second Gaussian fit")?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Gaussian fits of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let diff = (&a.mean - &b.mean).norm_squared();
    let root_a = sqrt_psd(&a.covariance);
    let inner = &root_a * &b.covariance * &root_a;
    let cross = clamped_eigen((&inner + inner.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .map(|v| v.sqrt())
        .sum::<f64>();
    let d = diff + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
    Ok(d.max(0.0))
}
