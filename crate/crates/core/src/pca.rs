//! PCA with the population covariance and with the sample covariance
//! `(1/n) X Xᵀ` estimated from the data itself.

use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::dist::SampleBatch;
use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricEigen};
use crate::loss::{LossValue, Status};

/// Eigenvalues at or below this cannot be sphered.
pub const SPHERE_MIN_EIGENVALUE: f64 = 1e-12;

/// Where the rotation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PcaSource {
    Population,
    Sample { n: usize },
}

/// Rotation `W` (eigenvectors as columns) and eigenvalues, non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    #[serde(with = "row_major")]
    pub rotation: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub source: PcaSource,
}

mod row_major {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(D::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
    }
}

impl PcaModel {
    fn from_eigen(eig: SymmetricEigen, source: PcaSource) -> Self {
        PcaModel {
            rotation: eig.eigenvectors,
            eigenvalues: eig.eigenvalues,
            source,
        }
    }

    /// PCA from a known covariance matrix.
    pub fn from_covariance(covariance: &DMatrix<f64>) -> Result<Self> {
        Ok(Self::from_eigen(
            linalg::evd_symmetric(covariance)?,
            PcaSource::Population,
        ))
    }

    pub fn dims(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `W diag(λ) Wᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let w = &self.rotation;
        w * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues))
            * w.transpose()
    }

    /// Largest entrywise deviation of `WᵀW` from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.dims();
        (self.rotation.transpose() * &self.rotation - DMatrix::<f64>::identity(n, n)).amax()
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `(1/n) X Xᵀ`; the data is not centered.
pub fn sample_covariance(data: &SampleBatch) -> DMatrix<f64> {
    let x = data.values();
    let mut c = x * x.transpose() / data.count() as f64;
    // exact symmetry regardless of summation order
    let n = c.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Subtract each coordinate's sample mean.
pub fn center(data: &SampleBatch) -> Result<SampleBatch> {
    let x = data.values();
    let means = x.column_mean();
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        col -= &means;
    }
    SampleBatch::from_matrix(out)
}

/// `Y = Wᵀ X`.
pub fn pca_transform(model: &PcaModel, batch: &SampleBatch) -> Result<SampleBatch> {
    check_dims(model.dims(), batch.dims())?;
    SampleBatch::from_matrix(model.rotation.transpose() * batch.values())
}

/// Keep the first `m` coordinates.
pub fn truncate(batch: &SampleBatch, m: usize) -> Result<SampleBatch> {
    if m == 0 || m > batch.dims() {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= M <= {}, got M = {m}",
            batch.dims()
        )));
    }
    SampleBatch::from_matrix(batch.values().rows(0, m).into_owned())
}

/// `W [I_M; 0] Y_M`: zero-pad the retained coordinates and rotate back.
pub fn reconstruct(model: &PcaModel, truncated: &SampleBatch) -> Result<SampleBatch> {
    let m = truncated.dims();
    if m > model.dims() {
        return Err(Error::DimensionMismatch {
            expected: model.dims(),
            found: m,
        });
    }
    SampleBatch::from_matrix(model.rotation.columns(0, m) * truncated.values())
}

/// PCA using the sample covariance of `data` (columns are the `n`
/// measurements). Returns the rotated data and the model.
pub fn sample_pca(data: &SampleBatch) -> Result<(SampleBatch, PcaModel)> {
    let eig = linalg::evd_symmetric(&sample_covariance(data))?;
    let model = PcaModel::from_eigen(eig, PcaSource::Sample { n: data.count() });
    let y = pca_transform(&model, data)?;
    Ok((y, model))
}

/// [`sample_pca`] on an `dims x n` data matrix flattened column by column;
/// returns the rotated matrix flattened the same way.
pub fn sample_pca_flat(dims: usize, flat: &[f64]) -> Result<Vec<f64>> {
    if dims == 0 || !flat.len().is_multiple_of(dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: flat.len(),
        });
    }
    let batch = SampleBatch::from_column_major(dims, flat.to_vec())?;
    Ok(sample_pca(&batch)?.0.into_values().as_slice().to_vec())
}

fn check_sphere(model: &PcaModel, ymat: &SampleBatch) -> Result<()> {
    check_dims(model.dims(), ymat.dims())?;
    if let Some(&bad) = model
        .eigenvalues
        .iter()
        .find(|&&l| l <= SPHERE_MIN_EIGENVALUE)
    {
        return Err(Error::SingularSpectrum { eigenvalue: bad });
    }
    Ok(())
}

fn scale_rows(
    ymat: &SampleBatch,
    scale: impl Fn(f64) -> f64,
    eigenvalues: &[f64],
) -> Result<SampleBatch> {
    let mut out = ymat.values().clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= scale(eigenvalues[i]);
    }
    SampleBatch::from_matrix(out)
}

/// `Σ^{-1/2} Y`.
pub fn sphere(ymat: &SampleBatch, model: &PcaModel) -> Result<SampleBatch> {
    check_sphere(model, ymat)?;
    scale_rows(ymat, |l| 1.0 / l.sqrt(), &model.eigenvalues)
}

/// `Σ^{1/2} Y`, the inverse of [`sphere`].
pub fn unsphere(sphered: &SampleBatch, model: &PcaModel) -> Result<SampleBatch> {
    check_sphere(model, sphered)?;
    scale_rows(sphered, f64::sqrt, &model.eigenvalues)
}

/// Dimension of the rotated data: `nN - N(N-1)/2` when `n >= N`,
/// `n(n+1)/2` otherwise.
pub fn sample_pca_out_dim(dims: usize, samples: usize) -> usize {
    if samples >= dims {
        samples * dims - dims * (dims - 1) / 2
    } else {
        samples * (samples + 1) / 2
    }
}

/// Exact loss of sample-covariance PCA: `(N-1)/(2n)` for `n >= N`
/// (proved), `(2N-n-1)/(2N)` for `n < N` (conjectured).
pub fn sample_pca_loss_exact(dims: u64, samples: u64) -> Result<(Ratio<u64>, Status)> {
    if dims == 0 || samples == 0 {
        return Err(Error::InvalidArgument("need N >= 1 and n >= 1".into()));
    }
    Ok(if samples >= dims {
        (Ratio::new(dims - 1, 2 * samples), Status::Proved)
    } else {
        (
            Ratio::new(2 * dims - samples - 1, 2 * dims),
            Status::Conjectured,
        )
    })
}

pub fn sample_pca_loss(dims: u64, samples: u64) -> Result<LossValue> {
    let (r, status) = sample_pca_loss_exact(dims, samples)?;
    LossValue::from_ratio(r, status)
}

/// Loss of keeping `m` of `n` principal components: `(N-M)/N`. The
/// population rotation itself is lossless.
pub fn population_truncation_loss_exact(n: u64, m: u64) -> Result<Ratio<u64>> {
    if n == 0 || m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= M <= N, got M = {m}, N = {n}"
        )));
    }
    Ok(Ratio::new(n - m, n))
}

pub fn population_truncation_loss(n: u64, m: u64) -> Result<LossValue> {
    LossValue::from_ratio(population_truncation_loss_exact(n, m)?, Status::Proved)
}
