//! Restriction of matrices to the tangent space of the product of simplices.

use nalgebra::{DMatrix, SymmetricEigen};

/// Orthonormal basis (as columns) of `{z : each block of z sums to 0}`.
///
/// Each block of size `n` contributes `n - 1` Helmert vectors.
pub fn tangent_basis(sizes: &[usize]) -> DMatrix<f64> {
    let dim: usize = sizes.iter().sum();
    let cols: usize = sizes.iter().map(|n| n.saturating_sub(1)).sum();
    let mut basis = DMatrix::zeros(dim, cols);
    let mut row0 = 0;
    let mut col = 0;
    for &n in sizes {
        for k in 1..n {
            let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
            for r in 0..k {
                basis[(row0 + r, col)] = scale;
            }
            basis[(row0 + k, col)] = -(k as f64) * scale;
            col += 1;
        }
        row0 += n;
    }
    basis
}

/// Largest eigenvalue of the symmetric part of `m` restricted to the tangent space.
/// Returns `None` when the tangent space is trivial.
pub fn max_tangent_eigenvalue(m: &DMatrix<f64>, sizes: &[usize]) -> Option<f64> {
    let q = tangent_basis(sizes);
    if q.ncols() == 0 {
        return None;
    }
    let sym = (m + m.transpose()) * 0.5;
    let restricted = q.transpose() * sym * &q;
    let eig = SymmetricEigen::new(restricted);
    eig.eigenvalues.iter().copied().reduce(f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal_and_tangent() {
        let q = tangent_basis(&[2, 3, 1]);
        assert_eq!(q.ncols(), 3);
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-14);
        for c in 0..q.ncols() {
            let col = q.column(c);
            assert!((col[0] + col[1]).abs() < 1e-14);
            assert!((col[2] + col[3] + col[4]).abs() < 1e-14);
            assert_eq!(col[5], 0.0);
        }
    }

    #[test]
    fn identity_restricted_eigenvalue() {
        let m = -DMatrix::<f64>::identity(4, 4);
        let e = max_tangent_eigenvalue(&m, &[2, 2]).unwrap();
        assert!((e + 1.0).abs() < 1e-14);
        // All-ones coupling vanishes on the tangent space.
        let ones = DMatrix::from_element(3, 3, 5.0);
        assert!(max_tangent_eigenvalue(&ones, &[3]).unwrap().abs() < 1e-12);
    }
}
