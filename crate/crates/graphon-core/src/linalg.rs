//! Thin wrappers over nalgebra's dense symmetric eigendecomposition with the
//! ordering conventions used throughout the crate: eigenvalues sorted by
//! absolute value descending, ties broken by sign (positive first) and then
//! by position in nalgebra's output, so a fixed input always yields the same
//! ordering.

use nalgebra::DMatrix;

/// Sort order shared by eigenvalue lists and singular-value-indexed data:
/// indices of `values` ordered by |v| descending, then sign descending,
/// then original index ascending.
pub fn abs_desc_permutation(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap()
            .then_with(|| {
                // sign descending: positive before negative on |·| ties
                let sa = values[a] >= 0.0;
                let sb = values[b] >= 0.0;
                sb.cmp(&sa)
            })
            .then_with(|| a.cmp(&b))
    });
    idx
}

/// Full symmetric eigendecomposition. Returns `(eigenvalues, eigenvectors)`
/// with eigenvalues sorted by absolute value descending and eigenvector
/// columns permuted to match.
pub fn symmetric_eigen(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    debug_assert_eq!(matrix.nrows(), matrix.ncols());
    let decomp = matrix.clone().symmetric_eigen();
    sort_eigen_pairs(
        &decomp.eigenvalues.iter().copied().collect::<Vec<_>>(),
        &decomp.eigenvectors,
    )
}

/// Fallible variant of [`symmetric_eigen`] with an iteration cap, for
/// callers that must report non-convergence instead of looping.
pub fn try_symmetric_eigen(
    matrix: &DMatrix<f64>,
    max_iterations: usize,
) -> Option<(Vec<f64>, DMatrix<f64>)> {
    debug_assert_eq!(matrix.nrows(), matrix.ncols());
    let decomp = nalgebra::SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, max_iterations)?;
    Some(sort_eigen_pairs(
        &decomp.eigenvalues.iter().copied().collect::<Vec<_>>(),
        &decomp.eigenvectors,
    ))
}

fn sort_eigen_pairs(raw: &[f64], raw_vectors: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let perm = abs_desc_permutation(raw);
    let n = raw.len();
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in perm.iter().enumerate() {
        values.push(raw[src]);
        vectors.set_column(dst, &raw_vectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues only (no vectors), sorted by absolute value descending.
/// Roughly 3x cheaper than [`symmetric_eigen`] at n = 1600.
pub fn symmetric_eigenvalues_abs_desc(matrix: &DMatrix<f64>) -> Vec<f64> {
    debug_assert_eq!(matrix.nrows(), matrix.ncols());
    let raw: Vec<f64> = matrix
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    let perm = abs_desc_permutation(&raw);
    perm.into_iter().map(|i| raw[i]).collect()
}

/// Eigenvalues only, sorted by signed value descending. Used when comparing
/// spectra entrywise (two relabelings of the same operator must produce the
/// same signed list).
pub fn symmetric_eigenvalues_desc(matrix: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = matrix
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

/// Squared Frobenius norm.
pub fn frobenius_sq(matrix: &DMatrix<f64>) -> f64 {
    matrix.iter().map(|v| v * v).sum()
}

/// First position `(row, col)` where the matrix fails exact (bitwise)
/// symmetry, or `None` for square symmetric input. Non-square input reports
/// `(0, 0)`.
pub fn first_asymmetry(matrix: &DMatrix<f64>) -> Option<(usize, usize)> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Some((0, 0));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if matrix[(i, j)] != matrix[(j, i)] {
                return Some((i, j));
            }
        }
    }
    None
}

/// Largest absolute entry.
pub fn linf_norm(matrix: &DMatrix<f64>) -> f64 {
    matrix.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
