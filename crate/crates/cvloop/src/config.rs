//! Experiment configuration: parsing, overrides and range checks.

use std::collections::HashSet;
use std::path::Path;

use cvloop_core::gate::WorkingCondition;
use cvloop_core::temporal::{ModeFunction, TimeGrid};
use cvloop_core::{CatSpec, GateProgram, LossScenario, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MAX_CUTOFF: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Fock cutoff of input and output states.
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    pub analysis: Analysis,
}

fn default_cutoff() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    /// Run gate programs, compare with the ideal squeezer, optionally
    /// simulate homodyne tomography of the outputs.
    Gate(GateAnalysis),
    /// W(0,0) after each step of each program under several scenarios.
    NegativitySteps(NegativityAnalysis),
    /// Largest number of identical steps that keeps W(0,0) negative.
    IterationCounts(IterationAnalysis),
    /// Recover the temporal mode function from homodyne records.
    ModeFit(ModeFitAnalysis),
}

impl Analysis {
    pub fn kind(&self) -> &'static str {
        match self {
            Analysis::Gate(_) => "gate",
            Analysis::NegativitySteps(_) => "negativity_steps",
            Analysis::IterationCounts(_) => "iteration_counts",
            Analysis::ModeFit(_) => "mode_fit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Vacuum,
    Cat {
        /// Defaults to the built-in cat with the scenario's preparation loss.
        #[serde(default)]
        cat: Option<CatSpec>,
        /// Orient the cat so each program squeezes its long axis.
        #[serde(default = "yes")]
        align: bool,
    },
}

fn yes() -> bool {
    true
}

/// A preset name ("current", "improved_half", "best_recorded") or a full scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Preset(String),
    Custom(LossScenario),
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec::Preset("current".into())
    }
}

impl ScenarioSpec {
    pub fn resolve(&self) -> Result<LossScenario> {
        let s = match self {
            ScenarioSpec::Preset(name) => {
                LossScenario::preset(name).ok_or_else(|| CliError::config(format!("unknown scenario preset `{name}`")))?
            }
            ScenarioSpec::Custom(s) => s.clone(),
        };
        s.validate().map_err(|e| CliError::config(format!("scenario: {e}")))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub reflectivity: f64,
    pub phi_deg: f64,
    pub gain: f64,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramSpec {
    /// Used in output file names.
    pub label: String,
    /// Signed squeezing per step (positive squeezes x̂).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezing: Option<Vec<f64>>,
    /// Explicit working conditions instead of `squeezing`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<Vec<ConditionSpec>>,
}

impl ProgramSpec {
    pub fn build(&self, scenario: &LossScenario) -> Result<GateProgram> {
        let built = match (&self.squeezing, &self.conditions) {
            (Some(rs), None) => GateProgram::from_squeezing(rs, scenario),
            (None, Some(cs)) => {
                let wcs: Vec<WorkingCondition> = cs
                    .iter()
                    .map(|c| WorkingCondition { reflectivity: c.reflectivity, phi: c.phi_deg.to_radians(), gain: c.gain, variant: c.variant })
                    .collect();
                GateProgram::from_conditions(&wcs, scenario)
            }
            _ => return Err(CliError::config(format!("program `{}`: give exactly one of `squeezing` or `conditions`", self.label))),
        };
        built.map_err(|e| CliError::config(format!("program `{}`: {e}", self.label)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySettings {
    /// Measurement phases in degrees; defaults to 12 angles 15° apart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases_deg: Option<Vec<f64>>,
    #[serde(default = "default_samples")]
    pub samples_per_phase: usize,
    /// The dataset is split into this many contiguous subsets for error bars.
    #[serde(default = "default_subsets")]
    pub subsets: usize,
    #[serde(default = "default_mle_cutoff")]
    pub mle_cutoff: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_samples() -> usize {
    3000
}
fn default_subsets() -> usize {
    5
}
fn default_mle_cutoff() -> usize {
    20
}
fn default_max_iters() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerGridSpec {
    /// The grid spans [−extent, extent] in x and p.
    pub extent: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default = "default_wigner")]
    pub wigner: Option<WignerGridSpec>,
    #[serde(default = "yes")]
    pub dataset_csv: bool,
    #[serde(default = "yes")]
    pub schedule: bool,
    /// Write every intermediate state as a JSON container.
    #[serde(default)]
    pub dump_states: bool,
}

fn default_wigner() -> Option<WignerGridSpec> {
    Some(WignerGridSpec { extent: 4.0, points: 81 })
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { wigner: default_wigner(), dataset_csv: true, schedule: true, dump_states: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateAnalysis {
    pub input: InputSpec,
    #[serde(default)]
    pub scenario: ScenarioSpec,
    pub programs: Vec<ProgramSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographySettings>,
    #[serde(default)]
    pub outputs: OutputSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegativityAnalysis {
    pub input: InputSpec,
    pub programs: Vec<ProgramSpec>,
    /// Preset names; "ideal" is the exact squeezer.
    pub scenarios: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationAnalysis {
    pub r_values: Vec<f64>,
    #[serde(default = "best_recorded")]
    pub scenario: ScenarioSpec,
}

fn best_recorded() -> ScenarioSpec {
    ScenarioSpec::Preset("best_recorded".into())
}

/// Mode parameters in lab units: bandwidths as γ/2π in MHz, t₀ in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    pub gamma1_mhz: f64,
    pub gamma2_mhz: f64,
    pub t0_ns: f64,
}

impl ModeParams {
    pub fn to_mode(self) -> ModeFunction {
        let w = 2.0 * std::f64::consts::PI * 1e6;
        ModeFunction { gamma1: self.gamma1_mhz * w, gamma2: self.gamma2_mhz * w, t0: self.t0_ns * 1e-9 }
    }

    pub fn from_mode(m: &ModeFunction) -> Self {
        let w = 2.0 * std::f64::consts::PI * 1e6;
        Self { gamma1_mhz: m.gamma1 / w, gamma2_mhz: m.gamma2 / w, t0_ns: m.t0 * 1e9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeFitAnalysis {
    /// Mode used to synthesize records; omit when `timeseries_csv` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<ModeParams>,
    /// Variance of the heralded quadrature in the true mode.
    #[serde(default = "default_variance")]
    pub variance: f64,
    #[serde(default = "default_windows")]
    pub windows: usize,
    #[serde(default = "default_dt")]
    pub dt_ns: f64,
    #[serde(default = "default_len")]
    pub bins: usize,
    /// Only bins inside this interval enter the fit.
    #[serde(default = "default_interval")]
    pub fit_interval_ns: [f64; 2],
    pub initial: ModeParams,
    /// Measured records with columns window,t_ns,x.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeseries_csv: Option<String>,
    /// Number of synthesized windows written out as CSV.
    #[serde(default = "default_dump")]
    pub dump_windows: usize,
}

fn default_variance() -> f64 {
    1.2
}
fn default_windows() -> usize {
    300_000
}
fn default_dt() -> f64 {
    0.5
}
fn default_len() -> usize {
    800
}
fn default_interval() -> [f64; 2] {
    [0.0, 115.0]
}
fn default_dump() -> usize {
    10
}

impl ModeFitAnalysis {
    pub fn grid(&self) -> TimeGrid {
        TimeGrid { start: 0.0, dt: self.dt_ns * 1e-9, len: self.bins }
    }
}

fn range(name: &str, v: f64, ok: bool, want: &str) -> Result<()> {
    if ok && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("`{name}` = {v} must be {want}")))
    }
}

fn check_label(label: &str, seen: &mut HashSet<String>) -> Result<()> {
    if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(CliError::config(format!("program label `{label}` must be nonempty [A-Za-z0-9_-]")));
    }
    if !seen.insert(label.to_string()) {
        return Err(CliError::config(format!("duplicate program label `{label}`")));
    }
    Ok(())
}

fn check_programs(programs: &[ProgramSpec], scenario: &LossScenario) -> Result<()> {
    if programs.is_empty() {
        return Err(CliError::config("no programs"));
    }
    let mut seen = HashSet::new();
    for p in programs {
        check_label(&p.label, &mut seen)?;
        p.build(scenario)?;
    }
    Ok(())
}

fn check_input(input: &InputSpec) -> Result<()> {
    if let InputSpec::Cat { cat: Some(c), .. } = input {
        c.validate().map_err(|e| CliError::config(format!("cat: {e}")))?;
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn with_overrides(mut self, seed: Option<u64>, cutoff: Option<usize>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(c) = cutoff {
            self.cutoff = c;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(CliError::config("`name` is empty"));
        }
        if !(2..=MAX_CUTOFF).contains(&self.cutoff) {
            return Err(CliError::config(format!("`cutoff` = {} must lie in [2, {MAX_CUTOFF}]", self.cutoff)));
        }
        match &self.analysis {
            Analysis::Gate(g) => {
                check_input(&g.input)?;
                let scenario = g.scenario.resolve()?;
                check_programs(&g.programs, &scenario)?;
                if let Some(t) = &g.tomography {
                    if let Some(ph) = &t.phases_deg {
                        if ph.is_empty() || ph.iter().any(|p| !p.is_finite()) {
                            return Err(CliError::config("`phases_deg` must be a nonempty list of finite angles"));
                        }
                    }
                    let n_phases = t.phases_deg.as_ref().map_or(12, Vec::len);
                    if t.samples_per_phase * n_phases < 100 {
                        return Err(CliError::config("tomography needs at least 100 samples in total"));
                    }
                    if !(2..=t.samples_per_phase).contains(&t.subsets) {
                        return Err(CliError::config(format!("`subsets` = {} must lie in [2, samples_per_phase]", t.subsets)));
                    }
                    if !(2..=60).contains(&t.mle_cutoff) {
                        return Err(CliError::config(format!("`mle_cutoff` = {} must lie in [2, 60]", t.mle_cutoff)));
                    }
                    if t.max_iters == 0 {
                        return Err(CliError::config("`max_iters` must be positive"));
                    }
                }
                if let Some(w) = &g.outputs.wigner {
                    range("wigner.extent", w.extent, w.extent > 0.0, "positive")?;
                    if !(2..=401).contains(&w.points) {
                        return Err(CliError::config(format!("`wigner.points` = {} must lie in [2, 401]", w.points)));
                    }
                }
            }
            Analysis::NegativitySteps(n) => {
                check_input(&n.input)?;
                if n.scenarios.is_empty() {
                    return Err(CliError::config("no scenarios"));
                }
                for s in &n.scenarios {
                    if s != "ideal" {
                        ScenarioSpec::Preset(s.clone()).resolve()?;
                    }
                }
                check_programs(&n.programs, &LossScenario::current())?;
            }
            Analysis::IterationCounts(it) => {
                it.scenario.resolve()?;
                if it.r_values.is_empty() {
                    return Err(CliError::config("no r_values"));
                }
                for &r in &it.r_values {
                    range("r_values", r, r > 0.0 && r < 3.0, "in (0, 3)")?;
                }
            }
            Analysis::ModeFit(m) => {
                if m.truth.is_none() && m.timeseries_csv.is_none() {
                    return Err(CliError::config("mode fit needs `truth` (to synthesize) or `timeseries_csv`"));
                }
                let modes = m.truth.iter().chain(std::iter::once(&m.initial));
                for p in modes {
                    p.to_mode().validate().map_err(|e| CliError::config(format!("mode: {e}")))?;
                }
                range("variance", m.variance, m.variance > 0.0, "positive")?;
                range("dt_ns", m.dt_ns, m.dt_ns > 0.0, "positive")?;
                if m.bins < 2 || m.windows < 2 {
                    return Err(CliError::config("`bins` and `windows` must be at least 2"));
                }
                let [a, b] = m.fit_interval_ns;
                range("fit_interval_ns", b, a >= 0.0 && b > a, "an increasing pair starting at or after 0")?;
                if let Some(t) = &m.truth {
                    m.grid()
                        .check_resolution(t.to_mode().gamma1.max(t.to_mode().gamma2))
                        .map_err(|e| CliError::config(e.to_string()))?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "analysis": { "kind": "gate", "input": { "kind": "vacuum" },
                      "programs": [ { "label": "a", "squeezing": [0.26] } ] }
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.cutoff, 25);
        assert_eq!(c.seed, 0);
        let Analysis::Gate(g) = &c.analysis else { panic!("kind") };
        assert_eq!(g.scenario, ScenarioSpec::Preset("current".into()));
        assert!(g.tomography.is_none());
        assert_eq!(g.outputs, OutputSettings::default());
    }

    #[test]
    fn range_violations_are_config_errors() {
        for (from, to) in [
            (r#""squeezing": [0.26]"#, r#""squeezing": [0.0]"#),
            (r#""squeezing": [0.26]"#, r#""squeezing": [0.2, -0.1]"#),
            (r#""label": "a""#, r#""label": "a b""#),
            (r#""kind": "vacuum""#, r#""kind": "squeezed""#),
            (r#""name": "t""#, r#""name": "t", "cutoff": 1"#),
            (r#""name": "t""#, r#""name": "t", "bogus": 1"#),
        ] {
            let text = MINIMAL.replace(from, to);
            let err = ExperimentConfig::from_json(&text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{to}: {err}");
        }
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert!(c.clone().with_overrides(None, Some(500)).is_err());
        assert_eq!(c.with_overrides(Some(9), Some(30)).unwrap().seed, 9);
    }

    #[test]
    fn explicit_conditions_build() {
        let p = ProgramSpec {
            label: "c".into(),
            squeezing: None,
            conditions: Some(vec![ConditionSpec { reflectivity: 0.4, phi_deg: 90.0, gain: -0.82, variant: Variant::FirstStep }]),
        };
        let prog = p.build(&LossScenario::current()).unwrap();
        assert!((prog.steps[0].target_r() - 0.2554).abs() < 1e-3);
        let both = ProgramSpec { squeezing: Some(vec![0.1]), ..p };
        assert!(both.build(&LossScenario::current()).is_err());
    }

    #[test]
    fn mode_params_round_trip() {
        let m = ModeFunction::measured();
        let back = ModeParams::from_mode(&m).to_mode();
        assert!((back.gamma1 - m.gamma1).abs() < 1e-3 && (back.t0 - m.t0).abs() < 1e-18);
        let p = ModeParams::from_mode(&m);
        assert!((p.gamma1_mhz - 29.8).abs() < 1e-9 && (p.t0_ns - 100.0).abs() < 1e-9);
    }

    #[test]
    fn bundled_configs_validate() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
        assert_eq!(n, 7);
    }
}
