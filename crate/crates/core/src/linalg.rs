//! Dense complex linear algebra helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Square root of a PSD matrix; negative eigenvalues from numerical drift are
/// clipped at zero.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, v) in values.iter().enumerate() {
        let s = libm::sqrt(v.max(0.0));
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `ρ ← A ρ A†` restricted to the matrices given.
pub(crate) fn sandwich(a: &CMatrix, rho: &CMatrix) -> CMatrix {
    a * rho * a.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let a = CMatrix::from_fn(4, 4, |i, j| Complex64::new((i + j) as f64 * 0.1, i as f64 - j as f64));
        let psd = &a * a.adjoint();
        let s = sqrt_psd(&psd);
        assert!(max_abs_diff(&(&s * &s), &psd) < 1e-10);
    }

    #[test]
    fn trace_norm_of_difference_of_projectors() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = ONE;
        let mut b = CMatrix::zeros(2, 2);
        b[(1, 1)] = ONE;
        assert!((trace_norm_hermitian(&(a - b)) - 2.0).abs() < 1e-14);
    }
}
