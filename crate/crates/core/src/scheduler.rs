//! Control schedule of the loop processor and its timing budget.
//!
//! One variable beam splitter (VBS), one input switch and one homodyne
//! detector serve any number of steps; only the timeline grows.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gate::{GateProgram, GateStep, LossScenario, Variant, WorkingCondition};
use crate::sources::Quadrature;

/// Loop round-trip time, ns.
pub const ROUND_TRIP_NS: f64 = 60.8;
/// Ringing after a VBS change, recorded as metadata only.
pub const VBS_SETTLE_NS: f64 = 20.0;

/// Input switch: route the incoming pulse into the loop or discard it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum SwitchState {
    ToLoop,
    ToDump,
}

/// What the switch lets in during a bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum BinInput {
    Ancilla,
    Cat,
    Nothing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum DetectorRole {
    Idle,
    /// Measure x̂_φ and feed the outcome forward with `gain`.
    Feedforward { phi_deg: f64, gain: f64 },
    /// Output leaves the loop; the detector sweeps the tomography phases.
    Characterize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScheduleEntry {
    pub bin: usize,
    pub time_ns: f64,
    pub vbs_reflectivity: f64,
    pub switch: SwitchState,
    pub input: BinInput,
    pub detector: DetectorRole,
    /// Port convention of the gate performed in this bin.
    pub variant: Option<Variant>,
    /// Settling time after a VBS change in this bin, if any.
    pub settle_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlSchedule {
    pub tau_ns: f64,
    pub entries: Vec<ScheduleEntry>,
    /// Squeezed quadrature of the ancillae.
    pub ancilla_quadrature: Quadrature,
    /// Always one VBS, one switch and one detector.
    pub hardware: Hardware,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Hardware {
    pub vbs: usize,
    pub switches: usize,
    pub detectors: usize,
}

impl ControlSchedule {
    pub fn vbs_sequence(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.vbs_reflectivity).collect()
    }

    /// Rebuilds the gate sequence the schedule encodes.
    pub fn to_program(&self, scenario: &LossScenario) -> Result<GateProgram> {
        let conditions: Vec<WorkingCondition> = self
            .entries
            .iter()
            .filter_map(|e| match (e.detector, e.variant) {
                (DetectorRole::Feedforward { phi_deg, gain }, Some(variant)) => Some(WorkingCondition {
                    reflectivity: e.vbs_reflectivity,
                    phi: phi_deg.to_radians(),
                    gain,
                    variant,
                }),
                _ => None,
            })
            .collect();
        GateProgram::from_conditions(&conditions, scenario)
    }
}

fn quadrature_of(step: &GateStep) -> Quadrature {
    if libm::fabs(libm::sin(step.phi)) > 0.5 {
        Quadrature::X
    } else {
        Quadrature::P
    }
}

/// Lays a program out on the bin clock. Bin 0 loads the first ancilla with
/// the VBS transparent, bin i performs step i, and the last bin opens the
/// VBS again so the output leaves for characterization.
pub fn compile_schedule(program: &GateProgram, tau_ns: f64) -> Result<ControlSchedule> {
    if program.steps.is_empty() {
        return Err(Error::InvalidProgram(String::from("empty program")));
    }
    if !(tau_ns > 0.0 && tau_ns.is_finite()) {
        return Err(Error::OutOfRange { name: "tau_ns", value: tau_ns, range: "(0, inf)" });
    }
    program.validate()?;
    let n = program.steps.len();
    let mut entries = Vec::with_capacity(n + 2);
    entries.push(ScheduleEntry {
        bin: 0,
        time_ns: 0.0,
        vbs_reflectivity: 0.0,
        switch: SwitchState::ToLoop,
        input: BinInput::Ancilla,
        detector: DetectorRole::Idle,
        variant: None,
        settle_ns: None,
    });
    for (i, step) in program.steps.iter().enumerate() {
        let bin = i + 1;
        entries.push(ScheduleEntry {
            bin,
            time_ns: bin as f64 * tau_ns,
            vbs_reflectivity: step.reflectivity,
            switch: SwitchState::ToLoop,
            // The cat meets the stored ancilla in the first step; later
            // steps bring a fresh ancilla to the circulating state.
            input: if i == 0 { BinInput::Cat } else { BinInput::Ancilla },
            detector: DetectorRole::Feedforward { phi_deg: step.phi.to_degrees(), gain: step.gain },
            variant: Some(step.variant),
            settle_ns: None,
        });
    }
    entries.push(ScheduleEntry {
        bin: n + 1,
        time_ns: (n + 1) as f64 * tau_ns,
        vbs_reflectivity: 0.0,
        switch: SwitchState::ToDump,
        input: BinInput::Nothing,
        detector: DetectorRole::Characterize,
        variant: None,
        settle_ns: None,
    });
    for i in 1..entries.len() {
        if entries[i].vbs_reflectivity != entries[i - 1].vbs_reflectivity {
            entries[i].settle_ns = Some(VBS_SETTLE_NS);
        }
    }
    Ok(ControlSchedule {
        tau_ns,
        entries,
        ancilla_quadrature: quadrature_of(&program.steps[0]),
        hardware: Hardware { vbs: 1, switches: 1, detectors: 1 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimingBudget {
    pub pulse_length_ns: f64,
    /// Rise/fall, ringing and jitter allowance of the active components.
    pub component_response_ns: f64,
    pub tau_ns: f64,
}

impl TimingBudget {
    /// ~20 ns pulses, ~30 ns response, 60.8 ns loop.
    pub fn current() -> Self {
        Self { pulse_length_ns: 20.0, component_response_ns: 30.0, tau_ns: ROUND_TRIP_NS }
    }

    /// 50 ps pulses, 40 ps response, 100 ps loop.
    pub fn projected() -> Self {
        Self { pulse_length_ns: 0.05, component_response_ns: 0.04, tau_ns: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimingReport {
    pub feasible: bool,
    /// 1/τ.
    pub clock_hz: f64,
    /// 1/(pulse + response), the fastest clock the components allow.
    pub max_clock_hz: f64,
    /// pulse + response − τ when infeasible, otherwise 0.
    pub deficit_ns: f64,
}

pub fn check_timing(budget: &TimingBudget) -> Result<TimingReport> {
    for (name, v) in [
        ("pulse_length_ns", budget.pulse_length_ns),
        ("component_response_ns", budget.component_response_ns),
        ("tau_ns", budget.tau_ns),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::OutOfRange { name, value: v, range: "(0, inf)" });
        }
    }
    let need = budget.pulse_length_ns + budget.component_response_ns;
    let feasible = budget.tau_ns >= need;
    Ok(TimingReport {
        feasible,
        clock_hz: 1e9 / budget.tau_ns,
        max_clock_hz: 1e9 / need,
        deficit_ns: if feasible { 0.0 } else { need - budget.tau_ns },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference reflectivities are given to two decimals.
    fn close(got: &[f64], want: &[f64]) -> bool {
        got.len() == want.len() && got.iter().zip(want).all(|(a, b)| (a - b).abs() <= 0.015)
    }

    #[test]
    fn reference_programs_compile() {
        let s = LossScenario::current();
        let three = compile_schedule(&GateProgram::from_squeezing(&[0.33, 0.14, 0.37], &s).unwrap(), ROUND_TRIP_NS).unwrap();
        assert!(close(&three.vbs_sequence(), &[0.0, 0.48, 0.75, 0.48, 0.0]));
        assert_eq!(three.vbs_sequence()[0], 0.0);
        assert_eq!(three.vbs_sequence()[4], 0.0);
        assert_eq!(three.entries.len(), 5);
        for (k, e) in three.entries.iter().enumerate() {
            assert_eq!(e.bin, k);
            assert!((e.time_ns - k as f64 * 60.8).abs() < 1e-9);
        }
        assert_eq!(three.entries[1].input, BinInput::Cat);
        assert_eq!(three.entries[4].switch, SwitchState::ToDump);

        let one = compile_schedule(&GateProgram::from_squeezing(&[0.26], &s).unwrap(), ROUND_TRIP_NS).unwrap();
        assert!(close(&one.vbs_sequence(), &[0.0, 0.40, 0.0]));
        assert!(compile_schedule(&GateProgram { steps: Vec::new(), scenario: s }, 60.8).is_err());
    }

    #[test]
    fn schedule_round_trips_to_the_program() {
        let s = LossScenario::current();
        let program = GateProgram::from_squeezing(&[-0.33, -0.14, -0.37], &s).unwrap();
        let back = compile_schedule(&program, ROUND_TRIP_NS).unwrap().to_program(&s).unwrap();
        assert_eq!(back.steps.len(), program.steps.len());
        for (a, b) in back.steps.iter().zip(&program.steps) {
            assert!((a.reflectivity - b.reflectivity).abs() < 1e-15);
            assert!((a.phi - b.phi).abs() < 1e-12);
            assert!((a.gain - b.gain).abs() < 1e-15);
            assert_eq!(a.variant, b.variant);
            assert_eq!(a.ancilla, b.ancilla);
        }
    }

    #[test]
    fn hardware_is_constant() {
        let s = LossScenario::lossless(-10.0);
        for n in 1..=12 {
            let p = GateProgram::from_squeezing(&alloc::vec![0.1; n], &s).unwrap();
            let c = compile_schedule(&p, ROUND_TRIP_NS).unwrap();
            assert_eq!(c.entries.len(), n + 2);
            assert_eq!(c.hardware, Hardware { vbs: 1, switches: 1, detectors: 1 });
        }
    }

    #[test]
    fn timing_budgets() {
        let now = check_timing(&TimingBudget::current()).unwrap();
        assert!(now.feasible);
        assert_eq!(libm::round(now.clock_hz / 1e6), 16.0);
        assert_eq!(now.max_clock_hz, 2e7);
        let later = check_timing(&TimingBudget::projected()).unwrap();
        assert!(later.feasible);
        assert_eq!(later.clock_hz, 1e10);
        let tight = check_timing(&TimingBudget { tau_ns: 45.0, ..TimingBudget::current() }).unwrap();
        assert!(!tight.feasible);
        assert!((tight.deficit_ns - 5.0).abs() < 1e-12);
        assert!(check_timing(&TimingBudget { tau_ns: 0.0, ..TimingBudget::current() }).is_err());
    }
}
