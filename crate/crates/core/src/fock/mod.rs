//! Truncated Fock-basis density matrices for one or two optical modes.
//!
//! Conventions: ħ = 1, x̂ = (â+â†)/√2, p̂ = (â−â†)/(i√2), so the vacuum has
//! Var(x̂) = Var(p̂) = 1/2. The rotated quadrature is x̂_φ = x̂cosφ + p̂sinφ.
//! Two-mode states are stored with mode 0 as the slow (outer) index.

mod channels;
mod measure;
mod unitaries;

pub use channels::{apply_beamsplitter, apply_loss, displace, partial_trace, rotate, squeeze, tensor};
pub use measure::{
    fidelity, moments, quadrature_pdf, quadrature_variance, trace_distance, wigner, wigner_grid, wigner_origin_parity,
    Moments,
};
pub use unitaries::{coherent_amplitudes, displacement_matrix, squeeze_matrix, squeezed_vacuum_amplitudes, BeamSplitterAmplitudes};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, ONE};

/// Default population threshold in the top two Fock levels above which a
/// state is considered to be leaking past its cutoff.
pub const DEFAULT_CUTOFF_THRESHOLD: f64 = 1e-4;

/// Truncated density matrix of one or two modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    dims: Vec<usize>,
    data: CMatrix,
}

impl FockState {
    /// Wraps a density matrix. The matrix side must equal the product of `dims`.
    pub fn from_matrix(dims: Vec<usize>, data: CMatrix) -> Result<Self> {
        check_dims(&dims)?;
        let total: usize = dims.iter().product();
        if data.nrows() != total || data.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, dims {:?} need {total}x{total}",
                data.nrows(),
                data.ncols(),
                dims
            )));
        }
        Ok(Self { dims, data })
    }

    /// Pure state |ψ⟩⟨ψ| from a (not necessarily normalized) ket.
    pub fn from_ket(dims: Vec<usize>, ket: &[Complex64]) -> Result<Self> {
        check_dims(&dims)?;
        let total: usize = dims.iter().product();
        if ket.len() != total {
            return Err(Error::DimensionMismatch(format!("ket has {} entries, expected {total}", ket.len())));
        }
        let norm: f64 = ket.iter().map(|c| c.norm_sqr()).sum();
        let data = CMatrix::from_fn(total, total, |i, j| ket[i] * ket[j].conj() / norm);
        Ok(Self { dims, data })
    }

    pub fn vacuum(n_modes: usize, cutoff: usize) -> Result<Self> {
        Self::number(&vec![0; n_modes], cutoff)
    }

    /// Product of number states |n₀, n₁, …⟩.
    pub fn number(photons: &[usize], cutoff: usize) -> Result<Self> {
        let dims = vec![cutoff; photons.len()];
        check_dims(&dims)?;
        if photons.iter().any(|&n| n >= cutoff) {
            return Err(Error::OutOfRange {
                name: "photon number",
                value: *photons.iter().max().unwrap_or(&0) as f64,
                range: "[0, cutoff)",
            });
        }
        let index = flat_index(&dims, photons);
        let total: usize = dims.iter().product();
        let mut data = CMatrix::zeros(total, total);
        data[(index, index)] = ONE;
        Ok(Self { dims, data })
    }

    /// Pure squeezed vacuum Ŝ(r)|0⟩ with Ŝ†x̂Ŝ = e^{-r}x̂.
    pub fn squeezed_vacuum(r: f64, cutoff: usize) -> Result<Self> {
        check_dims(&[cutoff])?;
        let amps = squeezed_vacuum_amplitudes(r, cutoff);
        Self::from_ket(vec![cutoff], &amps)
    }

    /// Coherent state with ⟨x̂⟩ = x, ⟨p̂⟩ = p.
    pub fn coherent(x: f64, p: f64, cutoff: usize) -> Result<Self> {
        check_dims(&[cutoff])?;
        let alpha = Complex64::new(x, p) / core::f64::consts::SQRT_2;
        Self::from_ket(vec![cutoff], &coherent_amplitudes(alpha, cutoff))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    /// Cutoff of mode 0 (the only mode for single-mode states).
    pub fn cutoff(&self) -> usize {
        self.dims[0]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    pub fn normalized(mut self) -> Self {
        let t = self.trace();
        if t > 0.0 {
            self.data /= Complex64::new(t, 0.0);
        }
        self
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.data).0[0]
    }

    pub fn hermiticity_error(&self) -> f64 {
        crate::linalg::max_abs_diff(&self.data, &self.data.adjoint())
    }

    /// Checks the density-matrix invariants: Hermitian to 1e-10, unit trace
    /// to 1e-9 and PSD down to -1e-9.
    pub fn validate(&self) -> Result<()> {
        if self.hermiticity_error() > 1e-10 {
            return Err(Error::DimensionMismatch(format!(
                "matrix is not Hermitian (error {:e})",
                self.hermiticity_error()
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange { name: "trace", value: tr, range: "1 ± 1e-9" });
        }
        let min = self.min_eigenvalue();
        if min < -1e-9 {
            return Err(Error::NotPsd(min));
        }
        Ok(())
    }

    /// Photon-number distribution of one mode.
    pub fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let mut out = vec![0.0; self.dims[mode]];
        let total: usize = self.dims.iter().product();
        for idx in 0..total {
            let occ = occupation(&self.dims, idx);
            out[occ[mode]] += self.data[(idx, idx)].re;
        }
        Ok(out)
    }

    /// Population in the top two Fock levels of each mode.
    pub fn top_population(&self) -> Vec<f64> {
        (0..self.n_modes())
            .map(|m| {
                let dist = self.photon_distribution(m).unwrap_or_default();
                dist.iter().rev().take(2).sum()
            })
            .collect()
    }

    /// True when any mode holds more than `threshold` in its top two levels.
    pub fn cutoff_warning(&self, threshold: f64) -> bool {
        self.top_population().iter().any(|&p| p > threshold)
    }

    pub fn has_cutoff_warning(&self) -> bool {
        self.cutoff_warning(DEFAULT_CUTOFF_THRESHOLD)
    }

    /// Zero-pads or truncates a single-mode state to a new cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        self.require_modes(1)?;
        check_dims(&[cutoff])?;
        let n = self.cutoff().min(cutoff);
        let mut data = CMatrix::zeros(cutoff, cutoff);
        data.view_mut((0, 0), (n, n)).copy_from(&self.data.view((0, 0), (n, n)));
        Ok(Self { dims: vec![cutoff], data })
    }

    pub(crate) fn require_modes(&self, n: usize) -> Result<()> {
        if self.n_modes() != n {
            return Err(Error::ModeCount { expected: n, actual: self.n_modes() });
        }
        Ok(())
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::ModeIndex { index: mode, modes: self.n_modes() });
        }
        Ok(())
    }

    pub(crate) fn from_parts(dims: Vec<usize>, data: CMatrix) -> Self {
        Self { dims, data }
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > 2 {
        return Err(Error::ModeCount { expected: 1, actual: dims.len() });
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 2) {
        return Err(Error::CutoffTooSmall(d));
    }
    Ok(())
}

pub(crate) fn flat_index(dims: &[usize], occ: &[usize]) -> usize {
    occ.iter().zip(dims).fold(0, |acc, (&o, &d)| acc * d + o)
}

pub(crate) fn occupation(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut occ = vec![0; dims.len()];
    for (slot, &d) in occ.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    occ
}
