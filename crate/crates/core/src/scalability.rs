//! Iteration-count projections: how many identical squeezing steps a cat
//! survives with W(0,0) < 0.
//!
//! Every step is a Gaussian channel q ↦ A q + noise. A click-heralded cat is
//! exactly a difference of two zero-mean Gaussians, so the screen evaluates
//! W(0,0) in closed form for any number of steps. The boundary is then
//! re-checked with the Fock-basis cat by integrating its Wigner function
//! against the channel kernel.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix2, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fock::{wigner, FockState};
use crate::gate::{GateProgram, LossScenario};
use crate::gaussian::{step_channel, GaussianChannel};
use crate::sources::{make_cat, CatSpec, Herald, Quadrature};

/// Σ wᵢ N(0, Σᵢ): a zero-mean Gaussian mixture with signed weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub terms: Vec<(f64, Matrix2<f64>)>,
}

impl GaussianMixture {
    /// Click-heralded cat. With Σ the signal covariance after the tap and
    /// Σ₀ the signal covariance conditioned on tap vacuum (probability P₀),
    /// W = (N(Σ) − P₀ N(Σ₀))/(1 − P₀). Preparation loss acts term by term.
    pub fn from_cat(spec: &CatSpec) -> Result<Self> {
        spec.validate()?;
        if spec.herald != Herald::Click {
            return Err(Error::OutOfRange { name: "herald", value: 1.0, range: "click herald only" });
        }
        let e = libm::exp(-2.0 * spec.source_squeezing_r);
        let src = match spec.squeezed {
            Quadrature::X => Matrix2::new(0.5 * e, 0.0, 0.0, 0.5 / e),
            Quadrature::P => Matrix2::new(0.5 / e, 0.0, 0.0, 0.5 * e),
        };
        let half = Matrix2::identity() * 0.5;
        let t = spec.tap_reflectivity;
        let signal = src * (1.0 - t) + half * t;
        let tap = src * t + half * (1.0 - t);
        let cross = (src - half) * libm::sqrt(t * (1.0 - t));
        let inv = (tap + half).try_inverse().ok_or(Error::NotPsd(0.0))?;
        let conditioned = signal - cross * inv * cross.transpose();
        let p0 = 1.0 / libm::sqrt((tap + half).determinant());
        let norm = 1.0 - p0;
        if norm < 1e-12 {
            return Err(Error::EmptyHerald(norm));
        }
        let eta = 1.0 - spec.preparation_loss;
        let lossy = |c: Matrix2<f64>| c * eta + half * (1.0 - eta);
        Ok(Self { terms: vec![(1.0 / norm, lossy(signal)), (-p0 / norm, lossy(conditioned))] })
    }

    pub fn through(&self, ch: &GaussianChannel) -> Self {
        Self { terms: self.terms.iter().map(|&(w, c)| (w, ch.a * c * ch.a.transpose() + ch.noise)).collect() }
    }

    pub fn wigner_origin(&self) -> f64 {
        self.terms.iter().map(|&(w, c)| w / (2.0 * PI * libm::sqrt(c.determinant()))).sum()
    }

    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(w, c)| {
                let d = c.determinant();
                let q = (c[(1, 1)] * x * x - 2.0 * c[(0, 1)] * x * p + c[(0, 0)] * p * p) / d;
                w * libm::exp(-0.5 * q) / (2.0 * PI * libm::sqrt(d))
            })
            .sum()
    }
}

/// W(0,0) of `state` after `ch`, computed as (1/|det A|) ∫ W(u) N(u; 0, Σ) du
/// with Σ = A⁻¹ N A⁻ᵀ. The integral runs on a trapezoid grid aligned with
/// the eigenvectors of Σ; the channel must add noise in every direction.
pub fn origin_after_channel(state: &FockState, ch: &GaussianChannel) -> Result<f64> {
    let det_a = ch.a.determinant();
    let a_inv = ch.a.try_inverse().filter(|_| det_a.abs() > 1e-300).ok_or(Error::DegenerateGate(det_a))?;
    let sigma = a_inv * ch.noise * a_inv.transpose();
    let sigma = (sigma + sigma.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sigma);
    if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NotPsd(eig.eigenvalues.min()));
    }
    // The Wigner function of a state below the cutoff lives inside this radius.
    let support = libm::sqrt(2.0 * state.cutoff() as f64 + 1.0) + 6.0;
    let axes: Vec<(f64, Vec<f64>)> = (0..2)
        .map(|i| {
            let s = libm::sqrt(eig.eigenvalues[i]);
            let reach = (9.0 * s).min(support);
            let h = (s / 6.0).min(0.08);
            let half = libm::ceil(reach / h) as i64;
            (s, (-half..=half).map(|k| k as f64 * h).collect())
        })
        .collect();
    let (v0, v1) = (eig.eigenvectors.column(0), eig.eigenvectors.column(1));
    let mut acc = 0.0;
    for &t0 in &axes[0].1 {
        let g0 = libm::exp(-0.5 * t0 * t0 / (axes[0].0 * axes[0].0));
        for &t1 in &axes[1].1 {
            let g1 = libm::exp(-0.5 * t1 * t1 / (axes[1].0 * axes[1].0));
            let u = v0 * t0 + v1 * t1;
            acc += g0 * g1 * wigner(state, u[0], u[1])?;
        }
    }
    let cell = (axes[0].1[1] - axes[0].1[0]) * (axes[1].1[1] - axes[1].1[0]);
    Ok(acc * cell / (2.0 * PI * axes[0].0 * axes[1].0) / det_a.abs())
}

/// Largest step count examined per squeezing value.
pub const MAX_ITERATIONS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationCount {
    pub r: f64,
    /// Steps after which W(0,0) is still negative.
    pub max_steps: usize,
    /// Closed-form W(0,0) after 0, 1, … steps, up to the first non-negative value.
    pub screen: Vec<f64>,
    /// Fock-basis W(0,0) at `max_steps` and `max_steps + 1`.
    pub fock_boundary: [f64; 2],
    /// Both engines put the sign change at the same step.
    pub confirmed: bool,
}

/// Herald tap of the projected cat source. A weak tap keeps two-photon
/// subtraction events rare; at 5% they cost one step at r = 0.1.
pub const PROJECTION_TAP: f64 = 0.01;

/// Cat entering the loop under `scenario`.
pub fn scenario_cat(scenario: &LossScenario) -> CatSpec {
    CatSpec { preparation_loss: scenario.cat_preparation_loss, tap_reflectivity: PROJECTION_TAP, ..CatSpec::default() }
}

/// Counts how many steps of squeezing `r` keep the cat's W(0,0) negative.
/// `cutoff` sets the Fock cat used for the boundary check.
pub fn iteration_count(r: f64, scenario: &LossScenario, cat: &CatSpec, cutoff: usize) -> Result<IterationCount> {
    let program = GateProgram::from_squeezing(&vec![r; MAX_ITERATIONS + 1], scenario)?;
    let mixture = GaussianMixture::from_cat(cat)?;
    let mut screen = vec![mixture.wigner_origin()];
    let mut channels = vec![GaussianChannel::identity()];
    let mut ch = GaussianChannel::identity();
    for step in &program.steps {
        if *screen.last().unwrap_or(&0.0) >= 0.0 {
            break;
        }
        ch = ch.then(&step_channel(step)?);
        channels.push(ch);
        screen.push(mixture.through(&ch).wigner_origin());
    }
    if screen[0] >= 0.0 {
        return Err(Error::OutOfRange { name: "cat W(0,0)", value: screen[0], range: "(-inf, 0)" });
    }
    let max_steps = screen.iter().take_while(|&&w| w < 0.0).count() - 1;
    if max_steps >= MAX_ITERATIONS {
        return Err(Error::OutOfRange { name: "r", value: r, range: "negativity must vanish within MAX_ITERATIONS steps" });
    }
    let (fock_cat, _) = make_cat(cat, cutoff)?;
    let at = |n: usize| -> Result<f64> {
        if n == 0 {
            crate::fock::wigner_origin_parity(&fock_cat)
        } else {
            origin_after_channel(&fock_cat, &channels[n])
        }
    };
    let fock_boundary = [at(max_steps)?, at(max_steps + 1)?];
    let confirmed = fock_boundary[0] < 0.0 && fock_boundary[1] >= 0.0;
    Ok(IterationCount { r, max_steps, screen, fock_boundary, confirmed })
}

pub fn iteration_counts(rs: &[f64], scenario: &LossScenario, cutoff: usize) -> Result<Vec<IterationCount>> {
    let cat = scenario_cat(scenario);
    rs.iter().map(|&r| iteration_count(r, scenario, &cat, cutoff)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_loss, wigner_origin_parity};

    #[test]
    fn mixture_matches_fock_cat() {
        for spec in [
            CatSpec::default(),
            CatSpec { source_squeezing_r: 0.7, tap_reflectivity: 0.2, preparation_loss: 0.0, ..CatSpec::default() },
            CatSpec::default().aligned_to(Quadrature::X),
        ] {
            let (cat, _) = make_cat(&spec, 40).unwrap();
            let mix = GaussianMixture::from_cat(&spec).unwrap();
            assert!((mix.wigner_origin() - wigner_origin_parity(&cat).unwrap()).abs() < 1e-10);
            for &(x, p) in &[(0.4, -0.3), (1.2, 0.9), (-0.1, 1.7)] {
                let (a, b) = (mix.wigner(x, p), wigner(&cat, x, p).unwrap());
                assert!((a - b).abs() < 1e-8, "{x} {p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kernel_integral_matches_closed_form() {
        let spec = CatSpec::default();
        let (cat, _) = make_cat(&spec, 30).unwrap();
        let mix = GaussianMixture::from_cat(&spec).unwrap();
        let program = GateProgram::from_squeezing(&[0.3, 0.3, 0.3], &LossScenario::best_recorded()).unwrap();
        let mut ch = GaussianChannel::identity();
        for step in &program.steps {
            ch = ch.then(&step_channel(step).unwrap());
            let want = mix.through(&ch).wigner_origin();
            let got = origin_after_channel(&cat, &ch).unwrap();
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        assert!(origin_after_channel(&cat, &GaussianChannel::identity()).is_err());
    }

    #[test]
    fn loss_commutes_with_the_mixture() {
        let spec = CatSpec { preparation_loss: 0.0, ..CatSpec::default() };
        let (cat, _) = make_cat(&spec, 40).unwrap();
        let mix = GaussianMixture::from_cat(&spec).unwrap();
        for eta in [1.0, 0.8, 0.5, 0.3] {
            let w = mix.through(&GaussianChannel::loss(eta)).wigner_origin();
            let want = wigner_origin_parity(&apply_loss(&cat, 0, eta).unwrap()).unwrap();
            assert!((w - want).abs() < 1e-10);
        }
    }

    #[test]
    fn counts_shrink_with_squeezing() {
        let s = LossScenario::best_recorded();
        let counts = iteration_counts(&[0.2, 0.4], &s, 24).unwrap();
        assert!(counts[0].max_steps > counts[1].max_steps);
        for c in &counts {
            assert!(c.confirmed);
            assert_eq!(c.screen.len(), c.max_steps + 2);
        }
        assert!(GaussianMixture::from_cat(&CatSpec { herald: Herald::SinglePhoton, ..CatSpec::default() }).is_err());
    }
}
