//! The two light sources feeding the loop: heralded photon-subtracted
//! squeezed vacuum (the cat) and lossy ancillary squeezed vacuum.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{apply_loss, rotate, squeezed_vacuum_amplitudes, BeamSplitterAmplitudes, FockState};
use crate::linalg::CMatrix;
use crate::math::db_to_variance;

/// Which quadrature carries the reduced noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Quadrature {
    #[default]
    X,
    P,
}

impl Quadrature {
    /// Homodyne angle used by a gate squeezing this quadrature.
    pub fn measurement_angle(self) -> f64 {
        match self {
            Quadrature::X => core::f64::consts::FRAC_PI_2,
            Quadrature::P => 0.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Quadrature::X => Quadrature::P,
            Quadrature::P => Quadrature::X,
        }
    }

    /// Signed squeezing parameter: positive squeezes x̂, negative squeezes p̂.
    pub fn signed(self, r: f64) -> f64 {
        match self {
            Quadrature::X => r,
            Quadrature::P => -r,
        }
    }
}

/// Ancillary squeezed vacuum: a pure squeezer followed by preparation loss.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AncillaSpec {
    /// Pure squeezing level in dB; negative means squeezed.
    pub pure_squeezing_db: f64,
    /// Fraction of power lost before the ancilla reaches the loop.
    pub preparation_loss: f64,
    pub quadrature: Quadrature,
}

impl AncillaSpec {
    pub fn new(pure_squeezing_db: f64, preparation_loss: f64, quadrature: Quadrature) -> Result<Self> {
        let spec = Self { pure_squeezing_db, preparation_loss, quadrature };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pure_squeezing_db <= 0.0) {
            return Err(Error::OutOfRange { name: "pure_squeezing_db", value: self.pure_squeezing_db, range: "(-inf, 0]" });
        }
        if !(0.0..1.0).contains(&self.preparation_loss) {
            return Err(Error::OutOfRange { name: "preparation_loss", value: self.preparation_loss, range: "[0, 1)" });
        }
        Ok(())
    }

    /// Squeezing parameter of the pure squeezer (always ≥ 0).
    pub fn pure_r(&self) -> f64 {
        -self.pure_squeezing_db * core::f64::consts::LN_10 / 20.0
    }

    /// Same spec with extra transmission `eta` applied after preparation.
    pub fn with_extra_loss(&self, eta: f64) -> Self {
        Self { preparation_loss: 1.0 - (1.0 - self.preparation_loss) * eta, ..*self }
    }

    /// Variances (squeezed, antisqueezed) after loss.
    pub fn variances(&self) -> (f64, f64) {
        let eta = 1.0 - self.preparation_loss;
        let sq = db_to_variance(self.pure_squeezing_db);
        let anti = 0.25 / sq;
        (eta * sq + 0.5 * (1.0 - eta), eta * anti + 0.5 * (1.0 - eta))
    }

    /// Covariance matrix in the (x̂, p̂) basis, vacuum = I/2.
    pub fn covariance(&self) -> Matrix2<f64> {
        let (sq, anti) = self.variances();
        match self.quadrature {
            Quadrature::X => Matrix2::new(sq, 0.0, 0.0, anti),
            Quadrature::P => Matrix2::new(anti, 0.0, 0.0, sq),
        }
    }

    /// Fock cutoff capturing all but `tail` of the ancilla's photon-number
    /// distribution.
    pub fn required_cutoff(&self, tail: f64) -> usize {
        squeezed_vacuum_cutoff(self.pure_r(), tail)
    }
}

/// Smallest cutoff N with Σ_{n≥N} |⟨n|Ŝ(r)|0⟩|² < `tail`.
pub fn squeezed_vacuum_cutoff(r: f64, tail: f64) -> usize {
    let t = libm::tanh(r.abs());
    let mut c = 1.0 / libm::cosh(r);
    let mut remaining = 1.0 - c;
    let mut n = 0usize;
    // c tracks the population of |2n⟩.
    while remaining >= tail && n < 100_000 {
        let nf = n as f64;
        c *= t * t * (2.0 * nf + 1.0) / (2.0 * nf + 2.0);
        remaining -= c;
        n += 1;
    }
    (2 * n + 2).max(2)
}

pub fn make_ancilla(spec: &AncillaSpec, cutoff: usize) -> Result<FockState> {
    spec.validate()?;
    let r = spec.quadrature.signed(spec.pure_r());
    let pure = FockState::squeezed_vacuum(r, cutoff)?;
    apply_loss(&pure, 0, 1.0 - spec.preparation_loss)
}

/// Herald model on the tapped arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Herald {
    /// On/off detector: POVM element 1 − |0⟩⟨0|.
    #[default]
    Click,
    /// Number-resolving detection of exactly one photon.
    SinglePhoton,
}

/// Photon-subtracted squeezed vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatSpec {
    /// Squeezing parameter of the source; the source is x̂-squeezed.
    pub source_squeezing_r: f64,
    /// Power fraction sent to the photon detector.
    pub tap_reflectivity: f64,
    /// Loss between the source and the loop, applied after heralding.
    pub preparation_loss: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub herald: Herald,
    /// Squeezed quadrature of the source; the cat is elongated along the other one.
    #[cfg_attr(feature = "serde", serde(default))]
    pub squeezed: Quadrature,
}

impl Default for CatSpec {
    fn default() -> Self {
        Self {
            source_squeezing_r: DEFAULT_CAT_SOURCE_R,
            tap_reflectivity: 0.05,
            preparation_loss: 0.30,
            herald: Herald::Click,
            squeezed: Quadrature::X,
        }
    }
}

/// Default source squeezing of the cat (about −4.3 dB pure).
pub const DEFAULT_CAT_SOURCE_R: f64 = 0.50;

impl CatSpec {
    /// Orients the cat so that a gate squeezing `gate` acts on its long axis.
    pub fn aligned_to(self, gate: Quadrature) -> Self {
        Self { squeezed: gate.other(), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.source_squeezing_r > 0.0) {
            return Err(Error::OutOfRange { name: "source_squeezing_r", value: self.source_squeezing_r, range: "(0, inf)" });
        }
        if !(self.tap_reflectivity > 0.0 && self.tap_reflectivity <= 0.5) {
            return Err(Error::OutOfRange { name: "tap_reflectivity", value: self.tap_reflectivity, range: "(0, 0.5]" });
        }
        if !(0.0..1.0).contains(&self.preparation_loss) {
            return Err(Error::OutOfRange { name: "preparation_loss", value: self.preparation_loss, range: "[0, 1)" });
        }
        Ok(())
    }
}

/// Heralded cat on the signal arm and the herald probability.
///
/// The source ket is split at the tap, so the joint state stays pure and the
/// conditional state is Σ_k |φ_k⟩⟨φ_k| over the accepted tap photon numbers k.
pub fn make_cat(spec: &CatSpec, cutoff: usize) -> Result<(FockState, f64)> {
    spec.validate()?;
    let source_dim = squeezed_vacuum_cutoff(spec.source_squeezing_r, 1e-15).max(cutoff + 2);
    let source = squeezed_vacuum_amplitudes(spec.source_squeezing_r, source_dim);
    // Tap fraction goes to mode 2, so the splitter's reflectivity is 1 − tap.
    let bs = BeamSplitterAmplitudes::new(1.0 - spec.tap_reflectivity, source_dim, 1, source_dim);
    let ks: Vec<usize> = match spec.herald {
        Herald::Click => (1..source_dim).collect(),
        Herald::SinglePhoton => vec![1],
    };
    let mut rho = CMatrix::zeros(cutoff, cutoff);
    let mut probability = 0.0;
    let mut phi = vec![Complex64::new(0.0, 0.0); cutoff];
    for k in ks {
        phi.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for i in 0..source_dim - k {
            let amp = source[i + k] * bs.get(i + k, 0, i);
            probability += amp.norm_sqr();
            if i < cutoff {
                phi[i] = amp;
            }
        }
        for a in 0..cutoff {
            if phi[a].norm_sqr() == 0.0 {
                continue;
            }
            for b in 0..cutoff {
                rho[(a, b)] += phi[a] * phi[b].conj();
            }
        }
    }
    if probability < 1e-12 {
        return Err(Error::EmptyHerald(probability));
    }
    let heralded = FockState::from_matrix(vec![cutoff], rho)?.normalized();
    let lossy = apply_loss(&heralded, 0, 1.0 - spec.preparation_loss)?.normalized();
    let oriented = match spec.squeezed {
        Quadrature::X => lossy,
        Quadrature::P => rotate(&lossy, core::f64::consts::FRAC_PI_2)?,
    };
    Ok((oriented, probability))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{moments, wigner_origin_parity};
    use crate::math::variance_to_db;
    use core::f64::consts::FRAC_1_PI;

    #[test]
    fn ancilla_levels() {
        let x = AncillaSpec::new(-6.8, 0.22, Quadrature::X).unwrap();
        let st = make_ancilla(&x, x.required_cutoff(1e-15)).unwrap();
        let m = moments(&st).unwrap();
        let want = 0.78 * 0.5 * libm::pow(10.0, -0.68) + 0.11;
        assert!((m.var_x - want).abs() < 1e-8);
        assert!((m.var_x - x.variances().0).abs() < 1e-8);

        let p = AncillaSpec::new(-7.0, 0.27, Quadrature::P).unwrap();
        let st = make_ancilla(&p, p.required_cutoff(1e-15)).unwrap();
        let m = moments(&st).unwrap();
        let want = 0.73 * 0.5 * libm::pow(10.0, -0.70) + 0.27 * 0.5;
        assert!((m.var_p - want).abs() < 1e-8);
        assert!((m.var_p - 0.2078).abs() < 1e-4);
        assert!((variance_to_db(m.var_p) + 3.81).abs() < 0.01);

        let none = AncillaSpec::new(0.0, 0.0, Quadrature::X).unwrap();
        let vac = FockState::vacuum(1, 10).unwrap();
        assert_eq!(make_ancilla(&none, 10).unwrap(), vac);
        assert!(AncillaSpec::new(1.0, 0.0, Quadrature::X).is_err());
        assert!(AncillaSpec::new(-3.0, 1.0, Quadrature::X).is_err());
    }

    #[test]
    fn squeezed_cutoff_bounds_tail() {
        let r = 0.8;
        let n = squeezed_vacuum_cutoff(r, 1e-12);
        let amps = squeezed_vacuum_amplitudes(r, n + 200);
        let tail: f64 = amps[n..].iter().map(|a| a.norm_sqr()).sum();
        assert!(tail < 1e-12);
        let tail_before: f64 = amps[n - 2..].iter().map(|a| a.norm_sqr()).sum();
        assert!(tail_before >= 1e-12);
    }

    #[test]
    fn ideal_subtraction_is_odd() {
        let spec = CatSpec { source_squeezing_r: 0.05, tap_reflectivity: 0.01, preparation_loss: 0.0, herald: Herald::SinglePhoton, squeezed: Quadrature::X };
        let (cat, _) = make_cat(&spec, 20).unwrap();
        for n in (0..20).step_by(2) {
            assert!(cat.matrix()[(n, n)].re.abs() < 1e-14);
        }
        assert!((wigner_origin_parity(&cat).unwrap() + FRAC_1_PI).abs() < 1e-4);
        // A click also accepts two-photon events, suppressed only by the tap ratio.
        let click = CatSpec { herald: Herald::Click, tap_reflectivity: 1e-4, ..spec };
        let (cat, _) = make_cat(&click, 20).unwrap();
        assert!((wigner_origin_parity(&cat).unwrap() + FRAC_1_PI).abs() < 1e-4);
    }

    #[test]
    fn single_photon_herald_probability_matches_closed_form() {
        // P(k=1) = Σ_n |s_n|² · n·T·R^{n−1}
        let spec = CatSpec { source_squeezing_r: 0.4, tap_reflectivity: 0.1, preparation_loss: 0.0, herald: Herald::SinglePhoton, squeezed: Quadrature::X };
        let (_, p) = make_cat(&spec, 20).unwrap();
        let s = squeezed_vacuum_amplitudes(0.4, 200);
        let want: f64 = s
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, a)| a.norm_sqr() * n as f64 * 0.1 * libm::pow(0.9, n as f64 - 1.0))
            .sum();
        assert!((p - want).abs() < 1e-13);
    }

    #[test]
    fn loss_attenuates_negativity() {
        let base = CatSpec::default();
        let w = |loss: f64| {
            let (cat, _) = make_cat(&CatSpec { preparation_loss: loss, ..base }, 30).unwrap();
            wigner_origin_parity(&cat).unwrap()
        };
        let (w0, w13, w30) = (w(0.0), w(0.13), w(0.30));
        assert!(w0 < w13 && w13 < w30 && w30 < 0.0);
    }

    #[test]
    fn herald_probability_is_monotone() {
        let mut last = 0.0;
        for tap in [0.01, 0.05, 0.1, 0.2, 0.5] {
            let (_, p) = make_cat(&CatSpec { tap_reflectivity: tap, ..CatSpec::default() }, 20).unwrap();
            assert!(p > last);
            last = p;
        }
        let mut last = 0.0;
        for r in [0.05, 0.1, 0.2, 0.3, 0.4] {
            let (_, p) = make_cat(&CatSpec { source_squeezing_r: r, ..CatSpec::default() }, 20).unwrap();
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(make_cat(&CatSpec { tap_reflectivity: 0.7, ..CatSpec::default() }, 10).is_err());
        assert!(make_cat(&CatSpec { source_squeezing_r: 0.0, ..CatSpec::default() }, 10).is_err());
        assert!(make_cat(&CatSpec { preparation_loss: 1.0, ..CatSpec::default() }, 10).is_err());
    }
}
