use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Reciprocal condition number of X_A^T X_A below which an active set is rejected.
pub const RCOND_THRESHOLD: f64 = 1e-10;

/// Reciprocal condition number of a symmetric positive semidefinite matrix.
pub fn reciprocal_condition(gram: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) {
        return 0.0;
    }
    (min / max).max(0.0)
}

/// `(X_A^T X_A)^{-1}`, rejecting singular or ill-conditioned active sets.
pub fn gram_inverse(x: &DMatrix<f64>, active: &[usize]) -> Result<DMatrix<f64>> {
    let xa = x.select_columns(active.iter());
    let gram = xa.transpose() * &xa;
    let rcond = reciprocal_condition(&gram);
    let ill = || Error::IllConditioned {
        active: active.to_vec(),
        rcond,
    };
    if !(rcond >= RCOND_THRESHOLD) {
        return Err(ill());
    }
    gram.cholesky().map(|c| c.inverse()).ok_or_else(ill)
}

/// Rows of `(X_A^T X_A)^{-1} X_A^T`, the least-squares coefficient map on `A`.
pub fn least_squares_operator(x: &DMatrix<f64>, active: &[usize]) -> Result<DMatrix<f64>> {
    let ginv = gram_inverse(x, active)?;
    let xa = x.select_columns(active.iter());
    Ok(ginv * xa.transpose())
}

/// Orthonormal basis of the span of the active columns, grown one column at a
/// time with twice-applied modified Gram-Schmidt.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    dim: usize,
    vectors: Vec<DVector<f64>>,
}

impl OrthoBasis {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `P^⊥ v`: the component of `v` orthogonal to the current span.
    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(v.len(), self.dim);
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.vectors {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        r
    }

    /// Adds `v` to the span. Returns false (and leaves the basis unchanged)
    /// when `v` is numerically inside the current span.
    pub fn push(&mut self, v: &DVector<f64>) -> bool {
        let r = self.residual(v);
        let norm = r.norm();
        if !(norm > 1e-12 * v.norm().max(f64::MIN_POSITIVE)) {
            return false;
        }
        self.vectors.push(r / norm);
        true
    }
}
