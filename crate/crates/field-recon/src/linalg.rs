//! Small helpers over nalgebra for Hermitian spectral calculus.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default condition-number threshold beyond which an inversion is reported
/// as a reconstruction failure instead of producing garbage.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e12;

/// Eigendecomposition of a Hermitian matrix.
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

pub fn hermitian_eigen(matrix: &DMatrix<Complex64>) -> HermitianEigen {
    let se: SymmetricEigen<Complex64, Dyn> = SymmetricEigen::new(matrix.clone());
    HermitianEigen {
        eigenvalues: se.eigenvalues.iter().copied().collect(),
        eigenvectors: se.eigenvectors,
    }
}

/// Eigenvalues only (no vectors); cheaper for spectral sampling.
pub fn hermitian_eigenvalues(matrix: &DMatrix<Complex64>) -> Vec<f64> {
    matrix.symmetric_eigenvalues().iter().copied().collect()
}

impl HermitianEigen {
    /// 2-norm condition estimate max|lambda| / min|lambda|.
    pub fn condition(&self) -> f64 {
        condition_from_eigenvalues(&self.eigenvalues)
    }

    /// `f(A) * x` where `A = U diag(lambda) U^H` and `f` acts on eigenvalues.
    pub fn apply_function(
        &self,
        f: impl Fn(f64) -> f64,
        x: &DMatrix<Complex64>,
    ) -> DMatrix<Complex64> {
        let mut y = self.eigenvectors.adjoint() * x;
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            let s = Complex64::new(f(lam), 0.0);
            for v in y.row_mut(i).iter_mut() {
                *v *= s;
            }
        }
        &self.eigenvectors * y
    }
}

pub fn condition_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &l in eigenvalues {
        let a = l.abs();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Reject the decomposition when the (shifted) spectrum is too ill-conditioned.
pub fn check_condition(eigenvalues: &[f64], shift: f64, threshold: f64) -> Result<()> {
    let shifted: Vec<f64> = eigenvalues.iter().map(|&l| l + shift).collect();
    let cond = condition_from_eigenvalues(&shifted);
    if cond > threshold {
        Err(Error::IllConditioned {
            cond,
            threshold,
        })
    } else {
        Ok(())
    }
}

/// Trace of a complex matrix as a real number (imaginary part discarded).
pub fn trace_re(matrix: &DMatrix<Complex64>) -> f64 {
    matrix.diagonal().iter().map(|c| c.re).sum()
}

/// Largest entry modulus of a complex matrix or vector.
pub trait MaxAbs {
    fn max_abs(&self) -> f64;
}

impl<R, C, S> MaxAbs for nalgebra::Matrix<Complex64, R, C, S>
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<Complex64, R, C>,
{
    fn max_abs(&self) -> f64 {
        self.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}
