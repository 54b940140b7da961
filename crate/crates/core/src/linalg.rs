//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues below this (but above `-PSD_TOLERANCE`) are clipped to zero.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Index-ascending pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Returns `(A + A^T) / 2` and the largest absolute asymmetry of `A`.
pub fn symmetrize(a: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let t = a.transpose();
    let asym = (a - &t).amax() / 2.0;
    ((a + t) * 0.5, asym)
}

/// Symmetric square-root factor `L` with `L L^T = S` after clipping tiny
/// negative eigenvalues. Fails when an eigenvalue is below `-PSD_TOLERANCE`.
pub fn psd_factor(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (s, _) = symmetrize(s);
    let eig = s.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "covariance is not positive semidefinite (min eigenvalue {min:.3e})"
        )));
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Clip a covariance to the PSD cone, with the same tolerance rule as `psd_factor`.
pub fn clip_psd(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = psd_factor(s)?;
    Ok(&l * l.transpose())
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

/// Smallest singular value over `min(rows, cols)`; `None` for an empty matrix.
pub fn min_singular_value(a: &DMatrix<f64>) -> Option<f64> {
    let s = singular_values(a);
    s.iter().cloned().reduce(f64::min)
}

pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis (as columns) of `{h : row_i . h = 0 for all rows}`.
///
/// Basis vectors are sign-normalized so their largest-magnitude entry is
/// positive, which makes the basis deterministic for the axis-aligned cases.
pub fn null_space(rows: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = rows.ncols();
    if rows.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to a square matrix so the SVD returns a full right basis.
    let r = rows.nrows().max(n);
    let mut padded = DMatrix::zeros(r, n);
    padded.view_mut((0, 0), (rows.nrows(), n)).copy_from(rows);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut cols = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol {
            cols.push(sign_normalize(v_t.row(i).transpose()));
        }
    }
    // Singular values beyond min(r, n) do not exist; r >= n so all n are listed.
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    let basis = DMatrix::from_columns(&cols);
    orthonormalize(&basis)
}

fn sign_normalize(mut v: DVector<f64>) -> DVector<f64> {
    let idx = v.iamax();
    if v[idx] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Modified Gram-Schmidt on the columns, dropping dependent columns.
pub fn orthonormalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for j in 0..a.ncols() {
        let mut v = a.column(j).into_owned();
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-12 {
            out.push(v / norm);
        }
    }
    if out.is_empty() {
        DMatrix::zeros(a.nrows(), 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

/// Orthonormal completion of an orthonormal basis `b` (n x r) to R^n.
pub fn orthogonal_complement(b: &DMatrix<f64>) -> DMatrix<f64> {
    null_space(&b.transpose(), 1e-10)
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-13 * smax.max(1.0);
    svd.solve(b, eps).expect("svd with u and v_t")
}

/// Cholesky-based positive-definiteness test; returns the smallest eigenvalue.
pub fn min_eigenvalue(s: &DMatrix<f64>) -> Option<f64> {
    if s.nrows() == 0 {
        return None;
    }
    let (s, _) = symmetrize(s);
    s.symmetric_eigen().eigenvalues.iter().cloned().reduce(f64::min)
}

/// Row-major matrix with explicit dimensions, the on-disk matrix format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl From<&MatrixJson> for DMatrix<f64> {
    fn from(m: &MatrixJson) -> Self {
        DMatrix::from_row_slice(m.rows, m.cols, &m.data)
    }
}

pub(crate) mod serde_matrix {
    use super::MatrixJson;
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let m = MatrixJson::deserialize(d)?;
        if m.data.len() != m.rows * m.cols {
            return Err(serde::de::Error::custom("matrix data length mismatch"));
        }
        Ok(DMatrix::from(&m))
    }
}

pub(crate) mod serde_vectors {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[DVector<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DVector<f64>>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Ok(rows.into_iter().map(DVector::from_vec).collect())
    }
}

pub(crate) mod serde_matrices {
    use super::MatrixJson;
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        let ms: Vec<MatrixJson> = v.iter().map(MatrixJson::from).collect();
        ms.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        let ms = Vec::<MatrixJson>::deserialize(d)?;
        Ok(ms.iter().map(DMatrix::from).collect())
    }
}
