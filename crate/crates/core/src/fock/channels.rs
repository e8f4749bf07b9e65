use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::unitaries::{displacement_matrix, squeeze_matrix, BeamSplitterAmplitudes};
use super::{flat_index, FockState};
use crate::error::{Error, Result};
use crate::linalg::{sandwich, CMatrix, ZERO};
use crate::math::ln_factorials;

/// Kraus operators of the pure-loss channel with transmissivity `eta` on a
/// mode truncated at `dim`: E_k = Σₙ √C(n,k) η^{(n−k)/2}(1−η)^{k/2} |n−k⟩⟨n|.
pub(crate) fn loss_kraus(eta: f64, dim: usize) -> Vec<CMatrix> {
    let lf = ln_factorials(dim + 1);
    let mut out = Vec::new();
    for k in 0..dim {
        if k > 0 && eta >= 1.0 {
            break;
        }
        let mut e = CMatrix::zeros(dim, dim);
        for n in k..dim {
            let ln_binom = lf[n] - lf[k] - lf[n - k];
            let mut c = libm::exp(0.5 * ln_binom);
            c *= libm::pow(eta, 0.5 * (n - k) as f64);
            c *= libm::pow(1.0 - eta, 0.5 * k as f64);
            e[(n - k, n)] = Complex64::new(c, 0.0);
        }
        out.push(e);
    }
    out
}

/// Embeds a single-mode operator acting on `mode` into the full space.
fn embed(state: &FockState, mode: usize, op: &CMatrix) -> CMatrix {
    match (state.n_modes(), mode) {
        (1, _) => op.clone(),
        (_, 0) => op.kronecker(&CMatrix::identity(state.dims[1], state.dims[1])),
        _ => CMatrix::identity(state.dims[0], state.dims[0]).kronecker(op),
    }
}

fn renormalize(data: CMatrix, dims: Vec<usize>) -> FockState {
    FockState::from_parts(dims, data).normalized()
}

/// Pure-loss channel (beam splitter with a vacuum environment that is traced out).
pub fn apply_loss(state: &FockState, mode: usize, eta: f64) -> Result<FockState> {
    state.check_mode(mode)?;
    if !(0.0..=1.0).contains(&eta) || eta.is_nan() {
        return Err(Error::OutOfRange { name: "eta", value: eta, range: "[0, 1]" });
    }
    if eta == 1.0 {
        return Ok(state.clone());
    }
    let dim = state.dims[mode];
    let total = state.data.nrows();
    let mut out = CMatrix::zeros(total, total);
    for e in loss_kraus(eta, dim) {
        let full = embed(state, mode, &e);
        out += sandwich(&full, &state.data);
    }
    Ok(FockState::from_parts(state.dims.clone(), out))
}

/// Two-mode beam splitter with reflectivity `reflectivity`, Heisenberg action
/// x̂₁ → √R x̂₁ + √T x̂₂ and x̂₂ → √T x̂₁ − √R x̂₂ (identically for p̂).
/// Population pushed beyond the cutoffs is dropped and the result renormalized.
pub fn apply_beamsplitter(state: &FockState, reflectivity: f64) -> Result<FockState> {
    state.require_modes(2)?;
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(Error::OutOfRange { name: "reflectivity", value: reflectivity, range: "[0, 1]" });
    }
    let (d1, d2) = (state.dims[0], state.dims[1]);
    let bs = BeamSplitterAmplitudes::new(reflectivity, d1, d2, d1);
    let total = d1 * d2;
    let mut u = CMatrix::zeros(total, total);
    for j in 0..d1 {
        for l in 0..d2 {
            let col = flat_index(&state.dims, &[j, l]);
            for i in 0..d1.min(j + l + 1) {
                let k = j + l - i;
                if k < d2 {
                    u[(flat_index(&state.dims, &[i, k]), col)] = Complex64::new(bs.get(j, l, i), 0.0);
                }
            }
        }
    }
    Ok(renormalize(sandwich(&u, &state.data), state.dims.clone()))
}

/// Displacement ⟨x̂⟩ → ⟨x̂⟩ + dx, ⟨p̂⟩ → ⟨p̂⟩ + dp on one mode.
pub fn displace(state: &FockState, mode: usize, dx: f64, dp: f64) -> Result<FockState> {
    state.check_mode(mode)?;
    if !dx.is_finite() || !dp.is_finite() {
        return Err(Error::OutOfRange { name: "displacement", value: dx + dp, range: "finite" });
    }
    if dx == 0.0 && dp == 0.0 {
        return Ok(state.clone());
    }
    let dim = state.dims[mode];
    let alpha = Complex64::new(dx, dp) / core::f64::consts::SQRT_2;
    let d = displacement_matrix(alpha, dim, dim);
    Ok(renormalize(sandwich(&embed(state, mode, &d), &state.data), state.dims.clone()))
}

/// Applies Ŝ(r) (Ŝ†x̂Ŝ = e^{-r}x̂) to a single-mode state.
pub fn squeeze(state: &FockState, r: f64) -> Result<FockState> {
    state.require_modes(1)?;
    if r == 0.0 {
        return Ok(state.clone());
    }
    let n = state.cutoff();
    let s = squeeze_matrix(r, n, n);
    Ok(renormalize(sandwich(&s, &state.data), state.dims.clone()))
}

/// ρ → e^{-iθn̂} ρ e^{iθn̂}: the x̂ statistics of the output are the x̂_θ
/// statistics of the input.
pub fn rotate(state: &FockState, theta: f64) -> Result<FockState> {
    state.require_modes(1)?;
    let n = state.cutoff();
    let mut data = state.data.clone();
    for i in 0..n {
        for j in 0..n {
            data[(i, j)] *= Complex64::from_polar(1.0, -theta * (i as f64 - j as f64));
        }
    }
    Ok(FockState::from_parts(state.dims.clone(), data))
}

/// Reduced state of `keep_mode` for a two-mode state.
pub fn partial_trace(state: &FockState, keep_mode: usize) -> Result<FockState> {
    state.require_modes(2)?;
    state.check_mode(keep_mode)?;
    let dims = state.dims.clone();
    let kept = dims[keep_mode];
    let traced = dims[1 - keep_mode];
    let mut out = CMatrix::from_element(kept, kept, ZERO);
    for a in 0..kept {
        for b in 0..kept {
            let mut acc = ZERO;
            for t in 0..traced {
                let (ia, ib) = if keep_mode == 0 {
                    (flat_index(&dims, &[a, t]), flat_index(&dims, &[b, t]))
                } else {
                    (flat_index(&dims, &[t, a]), flat_index(&dims, &[t, b]))
                };
                acc += state.data[(ia, ib)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(FockState::from_parts(vec![kept], out))
}

/// ρ ⊗ σ for two single-mode states with equal cutoffs.
pub fn tensor(a: &FockState, b: &FockState) -> Result<FockState> {
    a.require_modes(1)?;
    b.require_modes(1)?;
    if a.cutoff() != b.cutoff() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "mixed cutoffs {} and {} are not supported",
            a.cutoff(),
            b.cutoff()
        )));
    }
    Ok(FockState::from_parts(vec![a.cutoff(), b.cutoff()], a.data.kronecker(&b.data)))
}
