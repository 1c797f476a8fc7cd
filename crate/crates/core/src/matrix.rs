use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Result, VoiError};

/// Relative tolerance for the positive-semidefinite check.
pub const PSD_REL_TOL: f64 = 1e-12;

/// Symmetric covariance matrix.
///
/// Symmetry holds by construction: every constructor either mirrors the upper
/// triangle or rejects asymmetric input. Positive semidefiniteness is checked on
/// demand with [`CovMatrix::check_psd`], since kernels that factor the matrix
/// detect indefiniteness anyway.
#[derive(Clone, PartialEq)]
pub struct CovMatrix {
    inner: DMatrix<f64>,
}

impl CovMatrix {
    /// Builds a matrix from the upper triangle of `f(i, j)` (`i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut inner = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                inner[(i, j)] = v;
                inner[(j, i)] = v;
            }
        }
        CovMatrix { inner }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Wraps a dense matrix, rejecting non-square or asymmetric input.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(VoiError::domain(format!(
                "covariance must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if m[(i, j)] != m[(j, i)] {
                    return Err(VoiError::domain(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(CovMatrix { inner: m })
    }

    /// Row-major constructor, mostly for tests and small literals.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(VoiError::domain("covariance rows must form a square"));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    /// Principal submatrix on `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> CovMatrix {
        Self::from_fn(indices.len(), |i, j| self.inner[(indices[i], indices[j])])
    }

    pub fn scaled(&self, factor: f64) -> CovMatrix {
        CovMatrix {
            inner: &self.inner * factor,
        }
    }

    /// Entrywise sum; both operands must have the same dimension.
    pub fn add(&self, other: &CovMatrix) -> Result<CovMatrix> {
        if self.dim() != other.dim() {
            return Err(VoiError::domain(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(CovMatrix {
            inner: &self.inner + &other.inner,
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.inner.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// All eigenvalues >= -PSD_REL_TOL * (largest eigenvalue).
    pub fn is_psd(&self) -> bool {
        let ev = self.eigenvalues();
        let Some(&max) = ev.last() else {
            return true;
        };
        let floor = -PSD_REL_TOL * max.abs().max(f64::MIN_POSITIVE);
        ev.iter().all(|&e| e.is_finite() && e >= floor)
    }

    pub fn check_psd(&self) -> Result<()> {
        if self.is_psd() {
            Ok(())
        } else {
            let min = self.eigenvalues().first().copied().unwrap_or(0.0);
            Err(VoiError::domain(format!(
                "covariance is not positive semidefinite (smallest eigenvalue {min:e})"
            )))
        }
    }
}

impl fmt::Debug for CovMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CovMatrix")
            .field("dim", &self.dim())
            .field("entries", &self.inner)
            .finish()
    }
}
