use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_PI, SQRT_2};

use num_complex::Complex64;

use super::unitaries::displacement_matrix;
use super::FockState;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, trace_norm_hermitian, CMatrix, ZERO};
use crate::math::hermite_functions;

/// First and second quadrature moments of a single-mode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    /// Symmetrized covariance ½⟨{Δx̂, Δp̂}⟩.
    pub cov_xp: f64,
}

impl Moments {
    /// Variance of x̂_φ = x̂cosφ + p̂sinφ.
    pub fn variance_at(&self, phi: f64) -> f64 {
        let (s, c) = libm::sincos(phi);
        c * c * self.var_x + s * s * self.var_p + 2.0 * s * c * self.cov_xp
    }
}

pub fn moments(state: &FockState) -> Result<Moments> {
    state.require_modes(1)?;
    let rho = state.matrix();
    let n = state.cutoff();
    let tr = state.trace();
    let mut a = ZERO;
    let mut a2 = ZERO;
    let mut num = 0.0;
    for k in 0..n {
        num += k as f64 * rho[(k, k)].re;
        if k >= 1 {
            a += rho[(k, k - 1)] * libm::sqrt(k as f64);
        }
        if k >= 2 {
            a2 += rho[(k, k - 2)] * libm::sqrt((k * (k - 1)) as f64);
        }
    }
    let (a, a2, num) = (a / tr, a2 / tr, num / tr);
    let mean_x = SQRT_2 * a.re;
    let mean_p = SQRT_2 * a.im;
    // x̂² = (â² + â†² + 2n̂ + 1)/2,  p̂² = −(â² + â†² − 2n̂ − 1)/2
    let x2 = a2.re + num + 0.5;
    let p2 = -a2.re + num + 0.5;
    // ½{x̂,p̂} = (â² − â†²)/(2i)
    let xp = a2.im;
    Ok(Moments {
        mean_x,
        mean_p,
        var_x: x2 - mean_x * mean_x,
        var_p: p2 - mean_p * mean_p,
        cov_xp: xp - mean_x * mean_p,
    })
}

pub fn quadrature_variance(state: &FockState, phi: f64) -> Result<f64> {
    Ok(moments(state)?.variance_at(phi))
}

/// Homodyne density p(x|φ) = Σ ρ_{mn} e^{i(n−m)φ} ψ_m(x) ψ_n(x).
pub fn quadrature_pdf(state: &FockState, phi: f64, x: f64) -> Result<f64> {
    state.require_modes(1)?;
    let n = state.cutoff();
    let psi = hermite_functions(x, n);
    let phases: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, k as f64 * phi)).collect();
    let rho = state.matrix();
    let mut acc = 0.0;
    for m in 0..n {
        if psi[m] == 0.0 {
            continue;
        }
        let left = phases[m].conj() * psi[m];
        let mut row = ZERO;
        for k in 0..n {
            row += rho[(m, k)] * phases[k] * psi[k];
        }
        acc += (left * row).re;
    }
    Ok(acc.max(0.0))
}

/// W(x, p) = (1/π) Tr[ρ D(α) Π D†(α)], α = (x + ip)/√2, with ∬W = 1.
///
/// Since Π D†(α) = D(α) Π this is (1/π) Σ ρₘₙ (−1)ᵐ ⟨n|D(2α)|m⟩, which needs
/// only the cutoff block of D(2α).
pub fn wigner(state: &FockState, x: f64, p: f64) -> Result<f64> {
    state.require_modes(1)?;
    let n = state.cutoff();
    let alpha = Complex64::new(x, p) / SQRT_2;
    if alpha.norm() == 0.0 {
        return wigner_origin_parity(state);
    }
    let d = displacement_matrix(alpha * 2.0, n, n);
    let rho = state.matrix();
    let mut acc = 0.0;
    for m in 0..n {
        let mut col = ZERO;
        for k in 0..n {
            col += rho[(m, k)] * d[(k, m)];
        }
        acc += if m % 2 == 0 { col.re } else { -col.re };
    }
    Ok(FRAC_1_PI * acc / state.trace())
}

/// W(0,0) from the parity identity (1/π) Σₙ (−1)ⁿ ρₙₙ.
pub fn wigner_origin_parity(state: &FockState) -> Result<f64> {
    state.require_modes(1)?;
    let rho = state.matrix();
    let acc: f64 = (0..state.cutoff())
        .map(|k| if k % 2 == 0 { rho[(k, k)].re } else { -rho[(k, k)].re })
        .sum();
    Ok(FRAC_1_PI * acc / state.trace())
}

/// Wigner function on the tensor grid `xs × ps`; result indexed `[ix][ip]`.
pub fn wigner_grid(state: &FockState, xs: &[f64], ps: &[f64]) -> Result<Vec<Vec<f64>>> {
    xs.iter()
        .map(|&x| ps.iter().map(|&p| wigner(state, x, p)).collect())
        .collect()
}

/// Jozsa fidelity (Tr√(√ρ σ √ρ))².
pub fn fidelity(rho: &FockState, sigma: &FockState) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(Error::DimensionMismatch(alloc::format!("{:?} vs {:?}", rho.dims(), sigma.dims())));
    }
    for s in [rho, sigma] {
        let min = hermitian_eigen(s.matrix()).0[0];
        if min < -1e-8 {
            return Err(Error::NotPsd(min));
        }
    }
    // Work in the support of ρ: eigenvalues at rounding level would otherwise
    // contribute O(√ε) each through the square roots.
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 1e-13 * top).collect();
    let mut basis = CMatrix::zeros(vals.len(), keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let s = libm::sqrt(vals[k]);
        for r in 0..vals.len() {
            basis[(r, c)] = vecs[(r, k)] * s;
        }
    }
    let inner = basis.adjoint() * sigma.matrix() * &basis;
    let ivals = hermitian_eigen(&inner).0;
    let itop = ivals.iter().cloned().fold(0.0, f64::max);
    let root: f64 = ivals.iter().filter(|&&v| v > 1e-13 * itop).map(|v| libm::sqrt(*v)).sum();
    Ok((root * root / (rho.trace() * sigma.trace())).clamp(0.0, 1.0))
}

/// ½‖ρ − σ‖₁.
pub fn trace_distance(rho: &FockState, sigma: &FockState) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(Error::DimensionMismatch(alloc::format!("{:?} vs {:?}", rho.dims(), sigma.dims())));
    }
    Ok(0.5 * trace_norm_hermitian(&(rho.matrix() - sigma.matrix())))
}
