//! Special functions and quadrature rules used throughout the engine.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// Harmonic-oscillator eigenfunctions ψ₀(x) … ψ_{n-1}(x) in the ħ = 1
/// convention where ψ₀(x) = π^{-1/4} e^{-x²/2}.
pub fn hermite_functions(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    out[0] = libm::pow(PI, -0.25) * libm::exp(-0.5 * x * x);
    if n > 1 {
        out[1] = core::f64::consts::SQRT_2 * x * out[0];
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = libm::sqrt(2.0 / (kf + 1.0)) * x * out[k] - libm::sqrt(kf / (kf + 1.0)) * out[k - 1];
    }
    out
}

/// `ln(n!)` for n = 0..len.
pub fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for k in 0..len {
        if k > 0 {
            acc += libm::log(k as f64);
        }
        out.push(acc);
    }
    out
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut z = libm::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                let jf = j as f64;
                p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Hermite rule for expectations over a standard normal variable:
/// E[f(Z)] ≈ Σ wᵢ f(zᵢ), Σ wᵢ = 1.
pub fn gauss_hermite_normal(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let jacobi = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            libm::sqrt(i.max(j) as f64)
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], { let v = eig.eigenvectors[(0, k)]; v * v }))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Trapezoid integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// Quadrature variance of a level given in dB relative to vacuum.
pub fn db_to_variance(db: f64) -> f64 {
    0.5 * libm::pow(10.0, db / 10.0)
}

/// Level in dB of a quadrature variance, relative to the vacuum value 1/2.
pub fn variance_to_db(var: f64) -> f64 {
    10.0 * libm::log10(2.0 * var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_functions_are_orthonormal() {
        let (z, w) = gauss_legendre(400);
        let half = 12.0;
        let mut gram = [[0.0; 6]; 6];
        for (zi, wi) in z.iter().zip(&w) {
            let psi = hermite_functions(half * zi, 6);
            for a in 0..6 {
                for b in 0..6 {
                    gram[a][b] += half * wi * psi[a] * psi[b];
                }
            }
        }
        for a in 0..6 {
            for b in 0..6 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a][b] - want).abs() < 1e-12, "({a},{b}) {}", gram[a][b]);
            }
        }
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let (z, w) = gauss_legendre(7);
        let s: f64 = z.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_normal_moments() {
        let (z, w) = gauss_hermite_normal(20);
        let m2: f64 = z.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = z.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((m2 - 1.0).abs() < 1e-12);
        assert!((m4 - 3.0).abs() < 1e-11);
    }

    #[test]
    fn db_roundtrip() {
        assert!((variance_to_db(db_to_variance(-6.8)) + 6.8).abs() < 1e-12);
        assert!((db_to_variance(0.0) - 0.5).abs() < 1e-15);
    }
}
