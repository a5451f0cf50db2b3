use std::sync::OnceLock;

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigen-decomposition of a complex Hermitian matrix, ascending eigenvalues.
///
/// The input is copied to column-major storage first: for row-major complex
/// input `Eigh` returns the eigenvectors of the conjugate matrix.
pub fn hermitian_eigh(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let mut f = Array2::<C64>::zeros(m.dim().f());
    f.assign(m);
    Ok(f.eigh(UPLO::Lower)?)
}

/// Checks once per process that the linked BLAS multiplies real matrices
/// correctly at a size where optimized kernels are in use.
pub fn check_blas() -> Result<()> {
    static STATUS: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    STATUS
        .get_or_init(|| {
            let n = 256;
            let a = Array2::from_shape_fn((n, n), |(i, j)| ((i * 7 + j * 13) % 17) as f64 - 8.0);
            let b = Array2::from_shape_fn((n, n), |(i, j)| ((i * 3 + j * 5) % 11) as f64 - 5.0);
            let fast = a.dot(&b);
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let exact: f64 = (0..n).map(|k| a[[i, k]] * b[[k, j]]).sum();
                    worst = worst.max((fast[[i, j]] - exact).abs());
                }
            }
            if worst == 0.0 {
                Ok(())
            } else {
                Err(format!(
                    "BLAS dgemm self-check failed (max error {worst:e}); \
                     try setting OPENBLAS_CORETYPE=Haswell or linking a different BLAS"
                ))
            }
        })
        .clone()
        .map_err(Error::Backend)
}
