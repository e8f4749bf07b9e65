//! Covariance-matrix model of the gate.
//!
//! Every step is linear in the quadratures: the kept mode leaves as
//! q_out = A q_in + B q_anc, with the homodyne outcome folded back in by the
//! feedforward. On Gaussian states this is exact; on any state it is the
//! phase-space channel W_out = (W_in ∘ A⁻¹)/|det A| ⋆ G_N.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::gate::{GateProgram, GateStep, Variant};

/// Mean vector and covariance of a single-mode Gaussian state (vacuum = I/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl GaussianState {
    pub fn vacuum() -> Self {
        Self { mean: Vector2::zeros(), cov: Matrix2::identity() * 0.5 }
    }

    /// Ŝ(r)|0⟩; positive r squeezes x̂.
    pub fn squeezed(r: f64) -> Self {
        let e = libm::exp(-2.0 * r);
        Self { mean: Vector2::zeros(), cov: Matrix2::new(0.5 * e, 0.0, 0.0, 0.5 / e) }
    }

    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>) -> Result<Self> {
        let s = Self { mean, cov };
        if !s.is_physical(1e-12) {
            return Err(Error::NotPsd(s.cov.determinant() - 0.25));
        }
        Ok(s)
    }

    /// cov + (i/2)Ω ⪰ 0, which for one mode reads cov ≻ 0 and det cov ≥ 1/4.
    pub fn is_physical(&self, tol: f64) -> bool {
        let c = &self.cov;
        (c[(0, 1)] - c[(1, 0)]).abs() <= tol && c[(0, 0)] > 0.0 && c.determinant() >= 0.25 - tol
    }

    /// Pure-loss channel with transmissivity `eta`.
    pub fn lossy(&self, eta: f64) -> Self {
        Self { mean: self.mean * libm::sqrt(eta), cov: self.cov * eta + Matrix2::identity() * (0.5 * (1.0 - eta)) }
    }

    /// Variance of x̂_φ.
    pub fn variance_at(&self, phi: f64) -> f64 {
        let (s, c) = libm::sincos(phi);
        let u = Vector2::new(c, s);
        (u.transpose() * self.cov * u)[(0, 0)]
    }

    /// Wigner function value at (x, p).
    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let d = Vector2::new(x, p) - self.mean;
        let inv = self.cov.try_inverse().unwrap_or_else(Matrix2::zeros);
        let q = (d.transpose() * inv * d)[(0, 0)];
        libm::exp(-0.5 * q) / (2.0 * core::f64::consts::PI * libm::sqrt(self.cov.determinant()))
    }
}

/// Uhlmann fidelity between single-mode Gaussian states.
pub fn gaussian_fidelity(a: &GaussianState, b: &GaussianState) -> f64 {
    let sum = a.cov + b.cov;
    let big = sum.determinant();
    let small = (4.0 * (a.cov.determinant() - 0.25) * (b.cov.determinant() - 0.25)).max(0.0);
    let d = a.mean - b.mean;
    let inv = sum.try_inverse().unwrap_or_else(Matrix2::zeros);
    let q = (d.transpose() * inv * d)[(0, 0)];
    libm::exp(-0.5 * q) / (libm::sqrt(big + small) - libm::sqrt(small))
}

/// Gaussian channel q ↦ A q + noise with noise covariance `noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianChannel {
    pub a: Matrix2<f64>,
    pub noise: Matrix2<f64>,
}

impl GaussianChannel {
    pub fn identity() -> Self {
        Self { a: Matrix2::identity(), noise: Matrix2::zeros() }
    }

    pub fn loss(eta: f64) -> Self {
        Self { a: Matrix2::identity() * libm::sqrt(eta), noise: Matrix2::identity() * (0.5 * (1.0 - eta)) }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Self) -> Self {
        Self { a: next.a * self.a, noise: next.a * self.noise * next.a.transpose() + next.noise }
    }

    pub fn apply(&self, s: &GaussianState) -> GaussianState {
        GaussianState { mean: self.a * s.mean, cov: self.a * s.cov * self.a.transpose() + self.noise }
    }
}

/// Channel of one gate step including the ancilla noise and the loop loss.
pub fn step_channel(step: &GateStep) -> Result<GaussianChannel> {
    step.validate()?;
    let r = step.reflectivity;
    let (sr, st) = (libm::sqrt(r), libm::sqrt(1.0 - r));
    let (s, c) = libm::sincos(step.phi);
    let u = Vector2::new(c, s);
    let proj = u * u.transpose();
    let id = Matrix2::identity();
    let g = step.gain;
    // Kept mode 1 plus g·(measured mode 2 along φ).
    let (a, b) = match step.variant {
        Variant::LoopStep => (id * sr + proj * (g * st), id * st - proj * (g * sr)),
        Variant::FirstStep => (id * st - proj * (g * sr), id * sr + proj * (g * st)),
    };
    let anc = step.effective_ancilla().covariance();
    let gate = GaussianChannel { a, noise: b * anc * b.transpose() };
    Ok(gate.then(&GaussianChannel::loss(step.loop_eta)))
}

/// One step in terms of the ancilla variances, for an x̂-squeezing gate with
/// ideal gain. `v_anc_x` and `v_anc_antisq` are the ancilla variances as it
/// meets the input (any first-pass loss already included).
pub fn mis_step_cov(
    input: &GaussianState,
    reflectivity: f64,
    variant: Variant,
    v_anc_x: f64,
    v_anc_antisq: f64,
    eta_loop: f64,
) -> Result<GaussianState> {
    if !(reflectivity > 0.0 && reflectivity < 1.0) {
        return Err(Error::DegenerateGate(reflectivity));
    }
    if !(v_anc_x <= 0.5 + 1e-12 && v_anc_antisq >= 0.5 - 1e-12 && v_anc_x * v_anc_antisq >= 0.25 - 1e-12) {
        return Err(Error::OutOfRange { name: "ancilla variances", value: v_anc_x, range: "V_x <= 1/2 <= V_p, V_x V_p >= 1/4" });
    }
    let k = match variant {
        Variant::LoopStep => reflectivity,
        Variant::FirstStep => 1.0 - reflectivity,
    };
    let sk = libm::sqrt(k);
    let a = Matrix2::new(sk, 0.0, 0.0, 1.0 / sk);
    let noise = Matrix2::new((1.0 - k) * v_anc_x, 0.0, 0.0, 0.0);
    // The antisqueezed ancilla noise is cancelled exactly by the ideal gain.
    let ch = GaussianChannel { a, noise }.then(&GaussianChannel::loss(eta_loop));
    Ok(ch.apply(input))
}

/// Composite channel of a whole program.
pub fn program_channel(program: &GateProgram) -> Result<GaussianChannel> {
    program.validate()?;
    program.steps.iter().try_fold(GaussianChannel::identity(), |acc, s| Ok(acc.then(&step_channel(s)?)))
}

pub fn propagate_program_cov(input: &GaussianState, program: &GateProgram) -> Result<GaussianState> {
    Ok(program_channel(program)?.apply(input))
}

/// Per-step outputs of a program.
pub fn propagate_program_steps(input: &GaussianState, program: &GateProgram) -> Result<alloc::vec::Vec<GaussianState>> {
    program.validate()?;
    let mut out = alloc::vec::Vec::with_capacity(program.steps.len());
    let mut s = *input;
    for step in &program.steps {
        s = step_channel(step)?.apply(&s);
        out.push(s);
    }
    Ok(out)
}
