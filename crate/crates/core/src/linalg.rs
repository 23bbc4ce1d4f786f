//! Dense symmetric eigendecomposition and the small-matrix helpers built on it.

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with eigenvalues in descending order.
///
/// Only the lower triangle of `m` is read.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> SortedEigen {
    let n = m.nrows();
    if n == 0 {
        return SortedEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    SortedEigen { values, vectors }
}

/// Nearest positive semidefinite matrix in Frobenius norm: eigenvalues below
/// zero are replaced by zero. Returns the projection and the smallest
/// eigenvalue of the input.
pub fn project_psd(m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = m.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), 0.0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let lambda_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.0).collect();
    let mut scaled = DMatrix::zeros(n, keep.len());
    let mut basis = DMatrix::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k];
        for i in 0..n {
            let v = eig.eigenvectors[(i, k)];
            basis[(i, c)] = v;
            scaled[(i, c)] = v * s;
        }
    }
    let mut out = &scaled * basis.transpose();
    symmetrize(&mut out);
    (out, lambda_min)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Copies the upper triangle onto the lower one so symmetry is exact.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
