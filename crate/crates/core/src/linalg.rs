//! Small dense helpers for fixed-size matrices of generic dimension.

use nalgebra::{DMatrix, SMatrix, SymmetricEigen};

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant<const D: usize>(m: &SMatrix<f64, D, D>) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..D {
        let pivot = (col..D)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap_or(col);
        if a[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for row in (col + 1)..D {
            let factor = a[(row, col)] / p;
            if factor != 0.0 {
                for k in col..D {
                    a[(row, k)] -= factor * a[(col, k)];
                }
            }
        }
    }
    det
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues<const D: usize>(m: &SMatrix<f64, D, D>) -> Vec<f64> {
    let dynamic = DMatrix::from_column_slice(D, D, m.as_slice());
    let mut values: Vec<f64> = SymmetricEigen::new(dynamic).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}
