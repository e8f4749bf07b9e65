//! Matrix elements of the Gaussian unitaries used by the engine.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::linalg::{CMatrix, ZERO};

/// Fock amplitudes of a coherent state |α⟩ truncated to `len` levels.
pub fn coherent_amplitudes(alpha: Complex64, len: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(len);
    let mut c = Complex64::new(libm::exp(-0.5 * alpha.norm_sqr()), 0.0);
    for k in 0..len {
        out.push(c);
        c = c * alpha / libm::sqrt(k as f64 + 1.0);
    }
    out
}

/// Fock amplitudes of Ŝ(r)|0⟩, Ŝ(r) = exp[(r/2)(â² − â†²)], truncated to `len`.
pub fn squeezed_vacuum_amplitudes(r: f64, len: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; len];
    let t = libm::tanh(r);
    let mut c = 1.0 / libm::sqrt(libm::cosh(r));
    let mut n = 0;
    while 2 * n < len {
        out[2 * n] = Complex64::new(c, 0.0);
        let nf = n as f64;
        c *= -t * libm::sqrt((2.0 * nf + 1.0) / (2.0 * nf + 2.0));
        n += 1;
    }
    out
}

/// Rows `0..rows`, columns `0..cols` of the displacement D(α).
///
/// For m = n + k, ⟨m|D|n⟩ = e^{−|α|²/2} √(n!/m!) α^k L_n^{(k)}(|α|²), and
/// ⟨n|D|m⟩ = ⟨m|D(−α)|n⟩*. Each diagonal band starts from a coherent
/// amplitude evaluated in log space and follows the normalized Laguerre
/// recurrence, whose coefficients stay bounded. This avoids the cancellation
/// that the ladder recursion suffers at large |α|.
pub fn displacement_matrix(alpha: Complex64, rows: usize, cols: usize) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    let x = alpha.norm_sqr();
    let (mag, theta) = (alpha.norm(), alpha.arg());
    let band = |k: usize, len: usize| -> Vec<f64> {
        let mut h = vec![0.0; len];
        if len == 0 {
            return h;
        }
        let kf = k as f64;
        h[0] = if k == 0 {
            libm::exp(-0.5 * x)
        } else if mag == 0.0 {
            0.0
        } else {
            libm::exp(-0.5 * x + kf * libm::log(mag) - 0.5 * libm::lgamma(kf + 1.0))
        };
        for n in 0..len - 1 {
            let nf = n as f64;
            let prev = if n > 0 { libm::sqrt(nf * (nf + kf)) * h[n - 1] } else { 0.0 };
            h[n + 1] = ((2.0 * nf + 1.0 + kf - x) * h[n] - prev) / libm::sqrt((nf + 1.0) * (nf + 1.0 + kf));
        }
        h
    };
    // Lower bands: m = n + k with phase e^{ikθ}.
    for k in 0..rows {
        let len = cols.min(rows - k);
        let phase = Complex64::from_polar(1.0, k as f64 * theta);
        for (n, v) in band(k, len).into_iter().enumerate() {
            out[(n + k, n)] = phase * v;
        }
    }
    // Upper bands: n = m + k with phase (−e^{−iθ})^k.
    for k in 1..cols {
        let len = rows.min(cols - k);
        let phase = Complex64::from_polar(1.0, k as f64 * (core::f64::consts::PI - theta));
        for (m, v) in band(k, len).into_iter().enumerate() {
            out[(m, m + k)] = phase * v;
        }
    }
    out
}

/// Rows `0..rows`, columns `0..cols` of Ŝ(r) with Ŝ†x̂Ŝ = e^{-r}x̂.
///
/// Uses Ŝâ† = sech r â†Ŝ + tanh r Ŝâ, whose coefficients are bounded by one,
/// so the recursion is stable and every kept element is exact.
pub fn squeeze_matrix(r: f64, rows: usize, cols: usize) -> CMatrix {
    let sech = 1.0 / libm::cosh(r);
    let t = libm::tanh(r);
    let first = squeezed_vacuum_amplitudes(r, rows);
    let mut out = CMatrix::zeros(rows, cols);
    for (m, v) in first.into_iter().enumerate() {
        if cols > 0 {
            out[(m, 0)] = v;
        }
    }
    for n in 0..cols.saturating_sub(1) {
        let norm = 1.0 / libm::sqrt(n as f64 + 1.0);
        for m in 0..rows {
            let mut v = ZERO;
            if m > 0 {
                v += out[(m - 1, n)] * (sech * libm::sqrt(m as f64));
            }
            if n > 0 {
                v += out[(m, n - 1)] * (t * libm::sqrt(n as f64));
            }
            out[(m, n + 1)] = v * norm;
        }
    }
    out
}

/// Matrix elements ⟨i, j+l−i| U_BS |j, l⟩ of the beam splitter with
/// Heisenberg action x̂₁ → √R x̂₁ + √T x̂₂, x̂₂ → √T x̂₁ − √R x̂₂ (same for p̂).
///
/// Photon number is conserved, so every element is exact regardless of the
/// cutoffs chosen for the two input modes and the kept output mode.
#[derive(Debug, Clone)]
pub struct BeamSplitterAmplitudes {
    reflectivity: f64,
    dim1: usize,
    dim2: usize,
    rows: usize,
    data: Vec<f64>,
}

impl BeamSplitterAmplitudes {
    /// Amplitudes for inputs j < `dim1`, l < `dim2` and output i < `rows` in mode 1.
    pub fn new(reflectivity: f64, dim1: usize, dim2: usize, rows: usize) -> Self {
        let sr = libm::sqrt(reflectivity);
        let st = libm::sqrt(1.0 - reflectivity);
        let mut data = vec![0.0; dim1 * dim2 * rows];
        // U â₁† U† = √R â₁† + √T â₂†,  U â₂† U† = √T â₁† − √R â₂†.
        // A block-n vector stores the coefficient of |i, n−i⟩ at index i.
        let mut base = vec![1.0];
        for l in 0..dim2 {
            if l > 0 {
                base = raise(&base, st, -sr) ;
                let s = 1.0 / libm::sqrt(l as f64);
                base.iter_mut().for_each(|v| *v *= s);
            }
            let mut v = base.clone();
            for j in 0..dim1 {
                if j > 0 {
                    v = raise(&v, sr, st);
                    let s = 1.0 / libm::sqrt(j as f64);
                    v.iter_mut().for_each(|x| *x *= s);
                }
                let off = (j * dim2 + l) * rows;
                for (i, &x) in v.iter().take(rows).enumerate() {
                    data[off + i] = x;
                }
            }
        }
        Self { reflectivity, dim1, dim2, rows, data }
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    /// ⟨i, j+l−i| U |j, l⟩; zero when i > j + l.
    #[inline]
    pub fn get(&self, j: usize, l: usize, i: usize) -> f64 {
        self.data[(j * self.dim2 + l) * self.rows + i]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dim1, self.dim2, self.rows)
    }
}

/// Applies (c₁ â₁† + c₂ â₂†) to a block-n vector, producing a block-(n+1) vector.
fn raise(v: &[f64], c1: f64, c2: f64) -> Vec<f64> {
    let n = v.len() - 1;
    let mut out = vec![0.0; n + 2];
    for (i, &x) in v.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        out[i + 1] += c1 * libm::sqrt(i as f64 + 1.0) * x;
        out[i] += c2 * libm::sqrt((n - i) as f64 + 1.0) * x;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn is_isometry_block(m: &CMatrix, n: usize) -> f64 {
        let g = m.adjoint() * m;
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                err = err.max((g[(i, j)] - Complex64::new(want, 0.0)).norm());
            }
        }
        err
    }

    #[test]
    fn displacement_columns_are_orthonormal() {
        let alpha = Complex64::new(1.3, -0.7);
        let d = displacement_matrix(alpha, 200, 20);
        assert!(is_isometry_block(&d, 20) < 1e-12);
    }

    #[test]
    fn displacement_first_columns_match_coherent_states() {
        let alpha = Complex64::new(-2.1, 1.4);
        let d = displacement_matrix(alpha, 60, 2);
        let coh = coherent_amplitudes(alpha, 61);
        for m in 0..60 {
            assert!((d[(m, 0)] - coh[m]).norm() < 1e-13);
            // D|1⟩ = (â† − α*) D|0⟩
            let mut want = -alpha.conj() * coh[m];
            if m > 0 {
                want += coh[m - 1] * libm::sqrt(m as f64);
            }
            assert!((d[(m, 1)] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn large_displacement_stays_unitary() {
        let alpha = Complex64::from_polar(13.0, 2.0);
        let d = displacement_matrix(alpha, 1400, 430);
        assert!(is_isometry_block(&d, 430) < 1e-10);
    }

    #[test]
    fn displacement_inverse() {
        let alpha = Complex64::new(0.8, 0.4);
        let d = displacement_matrix(alpha, 120, 120);
        let dinv = displacement_matrix(-alpha, 120, 120);
        let prod = (&dinv * &d).view((0, 0), (15, 15)).into_owned();
        assert!(max_abs_diff(&prod, &CMatrix::identity(15, 15)) < 1e-12);
    }

    #[test]
    fn squeeze_columns_are_orthonormal_and_compose() {
        let s = squeeze_matrix(0.7, 200, 25);
        assert!(is_isometry_block(&s, 25) < 1e-11);
        let a = squeeze_matrix(0.3, 160, 160);
        let b = squeeze_matrix(0.4, 160, 160);
        let ab = (&b * &a).view((0, 0), (20, 20)).into_owned();
        let direct = squeeze_matrix(0.7, 20, 20);
        assert!(max_abs_diff(&ab, &direct) < 1e-10);
    }

    #[test]
    fn beamsplitter_amplitudes_conserve_norm() {
        let bs = BeamSplitterAmplitudes::new(0.37, 8, 8, 16);
        for j in 0..8 {
            for l in 0..8 {
                let norm: f64 = (0..=j + l).map(|i| bs.get(j, l, i).powi(2)).sum();
                assert!((norm - 1.0).abs() < 1e-12, "({j},{l}) {norm}");
            }
        }
    }

    #[test]
    fn beamsplitter_single_photon_split() {
        let bs = BeamSplitterAmplitudes::new(0.3, 2, 2, 3);
        // |1,0⟩ → √R|1,0⟩ + √T|0,1⟩
        assert!((bs.get(1, 0, 1) - libm::sqrt(0.3)).abs() < 1e-15);
        assert!((bs.get(1, 0, 0) - libm::sqrt(0.7)).abs() < 1e-15);
        // |0,1⟩ → √T|1,0⟩ − √R|0,1⟩
        assert!((bs.get(0, 1, 1) - libm::sqrt(0.7)).abs() < 1e-15);
        assert!((bs.get(0, 1, 0) + libm::sqrt(0.3)).abs() < 1e-15);
    }
}
