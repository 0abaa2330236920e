use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::sparse::SparseOperator;
use crate::Result;

/// Largest operator the dense oracle accepts by default.
pub const DEFAULT_DENSE_CAP: usize = 5_000;

/// Full spectrum in ascending order; column `k` of `eigenvectors` belongs to `eigenvalues[k]`.
#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl DenseSpectrum {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_vector(&self) -> Vec<f64> {
        self.eigenvectors.column(0).iter().copied().collect()
    }
}

pub fn ground_state_dense(op: &SparseOperator, cap: usize) -> Result<DenseSpectrum> {
    Ok(dense_spectrum(op.to_dense(cap)?))
}

/// Sorted eigen-decomposition of a symmetric matrix.
pub fn dense_spectrum(matrix: DMatrix<f64>) -> DenseSpectrum {
    let n = matrix.nrows();
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let columns: Vec<DVector<f64>> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
    let eigenvectors = if n == 0 { DMatrix::zeros(0, 0) } else { DMatrix::from_columns(&columns) };
    DenseSpectrum { eigenvalues, eigenvectors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::symmetric_from_entries;

    #[test]
    fn two_by_two_closed_form() {
        let (a, b, c) = (1.3, -0.7, -0.4);
        let op = symmetric_from_entries(2, &[(0, 0, a), (0, 1, b), (1, 1, c)]).unwrap();
        let s = ground_state_dense(&op, 10).unwrap();
        let mean = 0.5 * (a + c);
        let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        assert!((s.eigenvalues[0] - (mean - radius)).abs() < 1e-14);
        assert!((s.eigenvalues[1] - (mean + radius)).abs() < 1e-14);
    }

    #[test]
    fn trace_equals_eigenvalue_sum() {
        let entries: Vec<_> =
            (0..30).flat_map(|i| [(i, i, (i as f64 * 0.37).sin()), (i, (i * 7 + 3) % 30, 0.1 * i as f64)]).collect();
        let op = symmetric_from_entries(30, &entries).unwrap();
        let s = ground_state_dense(&op, 100).unwrap();
        let trace: f64 = op.diagonal().iter().sum();
        let sum: f64 = s.eigenvalues.iter().sum();
        assert!((trace - sum).abs() <= 1e-9 * trace.abs().max(1.0));
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cap_is_enforced() {
        let op = crate::sparse::diagonal_operator(&[1.0; 10]);
        assert!(ground_state_dense(&op, 9).is_err());
    }
}
