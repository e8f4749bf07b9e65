//! Measurement-induced squeezing gates.
//!
//! One step: the input meets an ancillary squeezed vacuum at a beam splitter
//! of reflectivity R, one output is measured along x̂_φ, and the other is
//! displaced along x̂_φ by g times the outcome. In a loop step the input
//! enters port 1 and the ancilla port 2; the first step swaps them because
//! the ancilla must already circulate in the loop when the input arrives.

mod engine;

pub use engine::{
    realistic_model_predict, run_program, run_step_deterministic, run_step_montecarlo, EngineOptions, ProgramRun, StepReport,
};

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fock::{fidelity, squeeze, FockState};
use crate::sources::{AncillaSpec, Quadrature};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    /// Ancilla on the loop side (port 1), input on port 2.
    FirstStep,
    /// Circulating state on port 1, fresh ancilla on port 2.
    LoopStep,
}

/// Beam-splitter setting, homodyne angle and gain of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorkingCondition {
    pub reflectivity: f64,
    /// Homodyne angle in radians.
    pub phi: f64,
    pub gain: f64,
    pub variant: Variant,
}

/// Working conditions realizing the signed squeezing parameters `r_list`
/// (positive squeezes x̂, negative squeezes p̂). Step one uses T = e^{−2|r|}
/// and g = −√(R/T); later steps use R = e^{−2|r|} and g = √(T/R).
pub fn r_to_working_condition(r_list: &[f64]) -> Result<Vec<WorkingCondition>> {
    if r_list.is_empty() {
        return Err(Error::InvalidProgram("empty squeezing list".into()));
    }
    let positive = r_list[0] > 0.0;
    let mut out = Vec::with_capacity(r_list.len());
    for (i, &r) in r_list.iter().enumerate() {
        if r == 0.0 || !r.is_finite() {
            return Err(Error::OutOfRange { name: "r", value: r, range: "nonzero and finite" });
        }
        if (r > 0.0) != positive {
            return Err(Error::InvalidProgram("squeezing parameters must share one sign".into()));
        }
        let k = libm::exp(-2.0 * r.abs());
        let phi = if positive { Quadrature::X } else { Quadrature::P }.measurement_angle();
        out.push(if i == 0 {
            let refl = 1.0 - k;
            WorkingCondition { reflectivity: refl, phi, gain: -libm::sqrt(refl / k), variant: Variant::FirstStep }
        } else {
            WorkingCondition { reflectivity: k, phi, gain: libm::sqrt((1.0 - k) / k), variant: Variant::LoopStep }
        });
    }
    Ok(out)
}

/// One executable gate step with its ancilla and losses.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateStep {
    pub reflectivity: f64,
    pub phi: f64,
    pub gain: f64,
    pub variant: Variant,
    pub ancilla: AncillaSpec,
    /// Transmission of the loop applied to the kept mode.
    pub loop_eta: f64,
    /// Extra loss on the ancilla before it meets the input (first step only).
    pub ancilla_first_pass_loss: f64,
}

impl GateStep {
    pub fn from_condition(wc: &WorkingCondition, scenario: &LossScenario) -> Self {
        let quadrature = if libm::cos(wc.phi).abs() < 0.5 { Quadrature::X } else { Quadrature::P };
        Self {
            reflectivity: wc.reflectivity,
            phi: wc.phi,
            gain: wc.gain,
            variant: wc.variant,
            ancilla: scenario.ancilla_for(quadrature),
            loop_eta: scenario.loop_eta,
            ancilla_first_pass_loss: scenario.ancilla_first_pass_loss,
        }
    }

    pub fn condition(&self) -> WorkingCondition {
        WorkingCondition { reflectivity: self.reflectivity, phi: self.phi, gain: self.gain, variant: self.variant }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reflectivity > 0.0 && self.reflectivity < 1.0) {
            return Err(Error::DegenerateGate(self.reflectivity));
        }
        if !self.phi.is_finite() || !self.gain.is_finite() {
            return Err(Error::InvalidProgram("non-finite angle or gain".into()));
        }
        if !(0.0..=1.0).contains(&self.loop_eta) {
            return Err(Error::OutOfRange { name: "loop_eta", value: self.loop_eta, range: "[0, 1]" });
        }
        if !(0.0..1.0).contains(&self.ancilla_first_pass_loss) {
            return Err(Error::OutOfRange {
                name: "ancilla_first_pass_loss",
                value: self.ancilla_first_pass_loss,
                range: "[0, 1)",
            });
        }
        self.ancilla.validate()
    }

    /// The ancilla as it reaches the beam splitter.
    pub fn effective_ancilla(&self) -> AncillaSpec {
        match self.variant {
            Variant::FirstStep => self.ancilla.with_extra_loss(1.0 - self.ancilla_first_pass_loss),
            Variant::LoopStep => self.ancilla,
        }
    }
}

/// Efficiencies and ancilla quality of a hardware configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossScenario {
    pub name: String,
    pub loop_eta: f64,
    pub ancilla_first_pass_loss: f64,
    pub cat_preparation_loss: f64,
    pub ancilla_x: AncillaSpec,
    pub ancilla_p: AncillaSpec,
}

impl LossScenario {
    /// The present system: 4% loop loss, −6.8 dB/22% (x) and −7.0 dB/27% (p) ancillae.
    pub fn current() -> Self {
        Self {
            name: "current".into(),
            loop_eta: 0.96,
            ancilla_first_pass_loss: 0.04,
            cat_preparation_loss: 0.30,
            ancilla_x: AncillaSpec { pure_squeezing_db: -6.8, preparation_loss: 0.22, quadrature: Quadrature::X },
            ancilla_p: AncillaSpec { pure_squeezing_db: -7.0, preparation_loss: 0.27, quadrature: Quadrature::P },
        }
    }

    /// Loop loss and ancilla noise roughly halved: 2% loop loss, −7 dB ancilla.
    pub fn improved_half() -> Self {
        Self::uniform("improved_half", 0.98, -7.0, 0.30)
    }

    /// A quarter of the loop loss, −15 dB ancilla and 13% cat preparation loss.
    pub fn best_recorded() -> Self {
        Self::uniform("best_recorded", 0.99, -15.0, 0.13)
    }

    /// No loss anywhere and a pure ancilla at `ancilla_db`.
    pub fn lossless(ancilla_db: f64) -> Self {
        Self { ancilla_first_pass_loss: 0.0, ..Self::uniform("lossless", 1.0, ancilla_db, 0.0) }
    }

    /// Pure ancillae at `ancilla_db`; the first pass through the loop costs
    /// the same as a round trip.
    pub fn uniform(name: &str, loop_eta: f64, ancilla_db: f64, cat_loss: f64) -> Self {
        Self {
            name: name.into(),
            loop_eta,
            ancilla_first_pass_loss: 1.0 - loop_eta,
            cat_preparation_loss: cat_loss,
            ancilla_x: AncillaSpec { pure_squeezing_db: ancilla_db, preparation_loss: 0.0, quadrature: Quadrature::X },
            ancilla_p: AncillaSpec { pure_squeezing_db: ancilla_db, preparation_loss: 0.0, quadrature: Quadrature::P },
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "current" => Some(Self::current()),
            "improved_half" => Some(Self::improved_half()),
            "best_recorded" => Some(Self::best_recorded()),
            _ => None,
        }
    }

    pub fn ancilla_for(&self, q: Quadrature) -> AncillaSpec {
        match q {
            Quadrature::X => self.ancilla_x,
            Quadrature::P => self.ancilla_p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("loop_eta", self.loop_eta),
            ("ancilla_first_pass_loss", self.ancilla_first_pass_loss),
            ("cat_preparation_loss", self.cat_preparation_loss),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange { name, value: v, range: "[0, 1]" });
            }
        }
        self.ancilla_x.validate()?;
        self.ancilla_p.validate()
    }
}

/// Ordered gate steps plus the scenario they were built for.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateProgram {
    pub steps: Vec<GateStep>,
    pub scenario: LossScenario,
}

impl GateProgram {
    /// Program realizing signed squeezing parameters under `scenario`.
    pub fn from_squeezing(r_list: &[f64], scenario: &LossScenario) -> Result<Self> {
        let steps = r_to_working_condition(r_list)?.iter().map(|wc| GateStep::from_condition(wc, scenario)).collect();
        let program = Self { steps, scenario: scenario.clone() };
        program.validate()?;
        Ok(program)
    }

    pub fn from_conditions(conditions: &[WorkingCondition], scenario: &LossScenario) -> Result<Self> {
        let steps = conditions.iter().map(|wc| GateStep::from_condition(wc, scenario)).collect();
        let program = Self { steps, scenario: scenario.clone() };
        program.validate()?;
        Ok(program)
    }

    /// Same working conditions with ancillae and losses taken from `scenario`.
    pub fn with_scenario(&self, scenario: &LossScenario) -> Self {
        let steps = self.steps.iter().map(|s| GateStep::from_condition(&s.condition(), scenario)).collect();
        Self { steps, scenario: scenario.clone() }
    }

    /// Quadrature the program squeezes.
    pub fn quadrature(&self) -> Option<Quadrature> {
        self.steps.first().map(|s| s.ancilla.quadrature)
    }

    /// The first `n` steps.
    pub fn truncated(&self, n: usize) -> Self {
        Self { steps: self.steps[..n.min(self.steps.len())].to_vec(), scenario: self.scenario.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.steps.first().ok_or_else(|| Error::InvalidProgram("program has no steps".into()))?;
        if first.variant != Variant::FirstStep {
            return Err(Error::InvalidProgram("step 1 must use the first-step variant".into()));
        }
        if self.steps[1..].iter().any(|s| s.variant != Variant::LoopStep) {
            return Err(Error::InvalidProgram("steps after the first must use the loop-step variant".into()));
        }
        self.steps.iter().try_for_each(GateStep::validate)
    }
}

/// Exact squeezing Ŝ(r): positive r squeezes x̂, negative r squeezes p̂.
pub fn ideal_squeeze(state: &FockState, r: f64) -> Result<FockState> {
    squeeze(state, r)
}

impl GateStep {
    /// Signed squeezing parameter the step aims at with ideal ancillae:
    /// the kept quadrature scales by √T in the first step and √R afterwards.
    pub fn target_r(&self) -> f64 {
        let k = match self.variant {
            Variant::FirstStep => 1.0 - self.reflectivity,
            Variant::LoopStep => self.reflectivity,
        };
        self.ancilla.quadrature.signed(-0.5 * libm::log(k))
    }
}

impl GateProgram {
    /// Σ rᵢ over the first `n` steps.
    pub fn cumulative_r(&self, n: usize) -> f64 {
        self.steps.iter().take(n).map(GateStep::target_r).sum()
    }
}

/// Jozsa fidelity of `output` with Ŝ(r) applied to `input`. The ideal state
/// is built on a cutoff padded for the squeezing so it is not truncated.
pub fn ideal_fidelity(input: &FockState, output: &FockState, r: f64) -> Result<f64> {
    let padded = ((input.cutoff() as f64) * (1.0 + 2.0 * libm::fabs(r))) as usize;
    let big = padded.max(output.cutoff());
    let ideal = ideal_squeeze(&input.with_cutoff(big)?, r)?;
    fidelity(&output.with_cutoff(big)?, &ideal)
}
