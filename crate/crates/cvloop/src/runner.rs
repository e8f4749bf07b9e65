//! Experiment pipelines behind the `run`, `sweep`, `schedule` and `fit-mode`
//! subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use cvloop_core::fock::{fidelity, moments, wigner_grid};
use cvloop_core::gate::{ideal_fidelity, run_program, EngineOptions};
use cvloop_core::gaussian::{step_channel, GaussianChannel};
use cvloop_core::scalability::{iteration_counts, origin_after_channel, GaussianMixture, IterationCount};
use cvloop_core::scheduler::{check_timing, compile_schedule, TimingBudget, TimingReport, ROUND_TRIP_NS};
use cvloop_core::sources::{make_cat, Herald};
use cvloop_core::temporal::{expected_projected_variance, fit_mode_stats, synthesize_into, synthesize_timeseries, FitOptions, TimeGrid, WindowStats};
use cvloop_core::tomography::{
    default_phases, gaussian_ellipse_fit, mean_and_stderr, mle_reconstruct, negativity, normalized_variances, sample_quadratures, EllipseFit,
    MleOptions, MleWarning,
};
use cvloop_core::{CatSpec, FockState, GateProgram, LossScenario};
use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{
    Analysis, ExperimentConfig, GateAnalysis, InputSpec, IterationAnalysis, ModeFitAnalysis, ModeParams, NegativityAnalysis, ProgramSpec,
    TomographySettings,
};
use crate::error::{CliError, Result};
use crate::io;

/// Mean ± standard error over the tomography subsets.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    fn of(values: &[f64]) -> Self {
        let (mean, stderr) = mean_and_stderr(values);
        Self { mean, stderr }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepMetrics {
    pub step: usize,
    /// Σ of the target squeezing parameters so far.
    pub target_r: f64,
    /// Fidelity between the realistic-model output and Ŝ(r) on the input.
    pub f_ideal_theory: f64,
    pub w00: f64,
    pub var_x_norm: f64,
    pub var_p_norm: f64,
    /// The same ratios from the covariance-matrix model.
    pub oracle_var_x_norm: f64,
    pub oracle_var_p_norm: f64,
    pub quadrature_nodes: usize,
    pub truncation_loss: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographyReport {
    pub phases_deg: Vec<f64>,
    pub samples_per_phase: usize,
    pub subsets: usize,
    pub seed: u64,
    /// Fidelity of each reconstruction with the realistic-model output.
    pub f_real: Estimate,
    /// Fidelity of each reconstruction with Ŝ(r) on the input.
    pub f_ideal: Estimate,
    pub w00: Estimate,
    pub var_x_norm: Estimate,
    pub var_p_norm: Estimate,
    /// Output ellipse from sample variances; vacuum input only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ellipse: Option<EllipseFit>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProgramReport {
    pub label: String,
    pub squeezing: Vec<f64>,
    pub reflectivities: Vec<f64>,
    pub input_w00: f64,
    pub steps: Vec<StepMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographyReport>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub name: String,
    pub kind: &'static str,
    pub seed: u64,
    pub cutoff: usize,
    pub results: T,
}

fn warn(state: &FockState, out: &mut Vec<String>) {
    if state.has_cutoff_warning() {
        out.push(format!("cutoff {}: top Fock levels hold {:.1e}", state.cutoff(), state.top_population().iter().cloned().fold(0.0, f64::max)));
    }
}

fn input_cat(cat: &Option<CatSpec>, align: bool, scenario: &LossScenario, program: &GateProgram) -> CatSpec {
    let spec = cat.unwrap_or(CatSpec { preparation_loss: scenario.cat_preparation_loss, ..CatSpec::default() });
    match (align, program.quadrature()) {
        (true, Some(q)) => spec.aligned_to(q),
        _ => spec,
    }
}

fn input_state(input: &InputSpec, scenario: &LossScenario, program: &GateProgram, cutoff: usize) -> Result<FockState> {
    Ok(match input {
        InputSpec::Vacuum => FockState::vacuum(1, cutoff)?,
        InputSpec::Cat { cat, align } => make_cat(&input_cat(cat, *align, scenario, program), cutoff)?.0,
    })
}

fn covariance(state: &FockState) -> Result<Matrix2<f64>> {
    let m = moments(state)?;
    Ok(Matrix2::new(m.var_x, m.cov_xp, m.cov_xp, m.var_p))
}

/// Runs a program on the Fock engine and collects the theory metrics of every step.
fn theory(program: &GateProgram, input: &FockState) -> Result<(Vec<FockState>, Vec<StepMetrics>)> {
    let run = run_program(input, program, &EngineOptions::default())?;
    let c_in = covariance(input)?;
    let mut ch = GaussianChannel::identity();
    let mut steps = Vec::with_capacity(run.states.len());
    for (k, (state, rep)) in run.states.iter().zip(&run.reports).enumerate() {
        ch = ch.then(&step_channel(&program.steps[k])?);
        let target_r = program.cumulative_r(k + 1);
        let (vx, vp) = normalized_variances(state, input)?;
        let c_out = ch.a * c_in * ch.a.transpose() + ch.noise;
        let mut warnings = Vec::new();
        warn(state, &mut warnings);
        steps.push(StepMetrics {
            step: k + 1,
            target_r,
            f_ideal_theory: ideal_fidelity(input, state, target_r)?,
            w00: negativity(state)?,
            var_x_norm: vx,
            var_p_norm: vp,
            oracle_var_x_norm: c_out[(0, 0)] / c_in[(0, 0)],
            oracle_var_p_norm: c_out[(1, 1)] / c_in[(1, 1)],
            quadrature_nodes: rep.nodes,
            truncation_loss: rep.truncation_loss,
            warnings,
        });
    }
    Ok((run.states, steps))
}

struct SubsetMetrics {
    f_real: f64,
    f_ideal: f64,
    w00: f64,
    vx: f64,
    vp: f64,
    warnings: Vec<MleWarning>,
}

fn tomography(
    t: &TomographySettings,
    output: &FockState,
    input: &FockState,
    target_r: f64,
    seed: u64,
    vacuum_input: bool,
) -> Result<(TomographyReport, cvloop_core::tomography::QuadratureDataset)> {
    let phases: Vec<f64> = t.phases_deg.as_ref().map_or_else(default_phases, |p| p.iter().map(|d| d.to_radians()).collect());
    let data = sample_quadratures(output, &phases, t.samples_per_phase, seed)?;
    let opts = MleOptions { cutoff: t.mle_cutoff, max_iters: t.max_iters, ..MleOptions::default() };
    let subsets = data.split(t.subsets)?;
    let per: Vec<SubsetMetrics> = subsets
        .par_iter()
        .map(|sub| -> Result<SubsetMetrics> {
            let rec = mle_reconstruct(sub, &opts)?;
            let d = rec.state.cutoff().max(output.cutoff());
            let (vx, vp) = normalized_variances(&rec.state, input)?;
            Ok(SubsetMetrics {
                f_real: fidelity(&rec.state.with_cutoff(d)?, &output.with_cutoff(d)?)?,
                f_ideal: ideal_fidelity(input, &rec.state, target_r)?,
                w00: negativity(&rec.state)?,
                vx,
                vp,
                warnings: rec.warnings,
            })
        })
        .collect::<Result<_>>()?;
    let pick = |f: fn(&SubsetMetrics) -> f64| Estimate::of(&per.iter().map(f).collect::<Vec<_>>());
    let mut warnings: Vec<String> = Vec::new();
    for (i, s) in per.iter().enumerate() {
        for w in &s.warnings {
            warnings.push(format!("subset {}: {w:?}", i + 1));
        }
    }
    let ellipse = if vacuum_input { Some(gaussian_ellipse_fit(&data)?) } else { None };
    let report = TomographyReport {
        phases_deg: phases.iter().map(|p| p.to_degrees()).collect(),
        samples_per_phase: t.samples_per_phase,
        subsets: t.subsets,
        seed,
        f_real: pick(|s| s.f_real),
        f_ideal: pick(|s| s.f_ideal),
        w00: pick(|s| s.w00),
        var_x_norm: pick(|s| s.vx),
        var_p_norm: pick(|s| s.vp),
        ellipse,
        warnings,
    };
    Ok((report, data))
}

fn axis(extent: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| -extent + 2.0 * extent * k as f64 / (points - 1) as f64).collect()
}

fn rel(out: &Path, name: &str) -> (PathBuf, String) {
    (out.join(name), name.to_string())
}

fn run_gate_program(cfg: &ExperimentConfig, g: &GateAnalysis, index: usize, spec: &ProgramSpec, out: &Path) -> Result<ProgramReport> {
    let scenario = g.scenario.resolve()?;
    let program = spec.build(&scenario)?;
    let input = input_state(&g.input, &scenario, &program, cfg.cutoff)?;
    let (states, steps) = theory(&program, &input)?;
    let output = states.last().expect("programs are nonempty");
    let mut files = Vec::new();
    let label = &spec.label;

    let tomo = match &g.tomography {
        Some(t) => {
            let seed = cfg.seed.wrapping_add(index as u64);
            let r = program.cumulative_r(program.steps.len());
            let (rep, data) = tomography(t, output, &input, r, seed, matches!(g.input, InputSpec::Vacuum))?;
            if g.outputs.dataset_csv {
                let (p, n) = rel(out, &format!("{label}_dataset.csv"));
                io::write_dataset_csv(&p, &data)?;
                files.push(n);
            }
            Some(rep)
        }
        None => None,
    };
    if let Some(w) = &g.outputs.wigner {
        let xs = axis(w.extent, w.points);
        let grid = wigner_grid(output, &xs, &xs)?;
        let (p, n) = rel(out, &format!("{label}_wigner.csv"));
        io::write_wigner_csv(&p, &xs, &xs, &grid)?;
        files.push(n);
    }
    if g.outputs.schedule {
        let sched = compile_schedule(&program, ROUND_TRIP_NS)?;
        let (p, n) = rel(out, &format!("{label}_schedule.csv"));
        io::write_schedule_csv(&p, &sched)?;
        files.push(n);
    }
    if g.outputs.dump_states {
        let (p, n) = rel(out, &format!("{label}_input.json"));
        io::write_state(&p, &input)?;
        files.push(n);
        for (k, s) in states.iter().enumerate() {
            let (p, n) = rel(out, &format!("{label}_step{}.json", k + 1));
            io::write_state(&p, s)?;
            files.push(n);
        }
    }
    Ok(ProgramReport {
        label: label.clone(),
        squeezing: program.steps.iter().map(|s| s.target_r()).collect(),
        reflectivities: program.steps.iter().map(|s| s.reflectivity).collect(),
        input_w00: negativity(&input)?,
        steps,
        tomography: tomo,
        files,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NegativityCurve {
    pub program: String,
    pub scenario: String,
    /// W(0,0) of the input followed by one value per step.
    pub w00: Vec<f64>,
}

fn negativity_curves(cfg: &ExperimentConfig, n: &NegativityAnalysis) -> Result<Vec<NegativityCurve>> {
    let mut jobs = Vec::new();
    for p in &n.programs {
        for s in &n.scenarios {
            jobs.push((p, s));
        }
    }
    jobs.par_iter()
        .map(|&(spec, name)| {
            // One input cat for every scenario, so curves differ only by gate quality.
            let base = LossScenario::current();
            let shape = spec.build(&base)?;
            let mixture = match &n.input {
                InputSpec::Vacuum => Some(GaussianMixture { terms: vec![(1.0, Matrix2::identity() * 0.5)] }),
                InputSpec::Cat { cat, align } => {
                    let c = input_cat(cat, *align, &base, &shape);
                    (c.herald == Herald::Click).then(|| GaussianMixture::from_cat(&c)).transpose()?
                }
            };
            let fock_cat = match (&n.input, &mixture) {
                (InputSpec::Cat { cat, align }, None) => Some(make_cat(&input_cat(cat, *align, &base, &shape), cfg.cutoff)?.0),
                _ => None,
            };
            let origin = |ch: &GaussianChannel, first: bool| -> Result<f64> {
                match (&mixture, &fock_cat) {
                    (Some(m), _) => Ok(m.through(ch).wigner_origin()),
                    (None, Some(c)) if first => Ok(negativity(c)?),
                    (None, Some(c)) => Ok(origin_after_channel(c, ch)?),
                    (None, None) => unreachable!("one input model is always built"),
                }
            };
            let mut w00 = vec![origin(&GaussianChannel::identity(), true)?];
            if name == "ideal" {
                // Ŝ(r) preserves W(0,0).
                w00.extend(std::iter::repeat_n(w00[0], shape.steps.len()));
            } else {
                let scenario = LossScenario::preset(name).ok_or_else(|| CliError::config(format!("unknown scenario `{name}`")))?;
                let program = shape.with_scenario(&scenario);
                let mut ch = GaussianChannel::identity();
                for step in &program.steps {
                    ch = ch.then(&step_channel(step)?);
                    w00.push(origin(&ch, false)?);
                }
            }
            Ok(NegativityCurve { program: spec.label.clone(), scenario: name.clone(), w00 })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeFitReport {
    pub windows: usize,
    pub fit_interval_ns: [f64; 2],
    pub initial: ModeParams,
    pub fitted: ModeParams,
    pub projected_variance: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub identifiable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<ModeParams>,
    /// |fit − truth| / truth for γ₁ and γ₂, and |Δt₀| in ns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<[f64; 3]>,
    /// 1/2 + overlap²(V − 1/2) of the fitted mode with the true one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_variance: Option<f64>,
    pub files: Vec<String>,
}

pub fn mode_fit(cfg: &ExperimentConfig, m: &ModeFitAnalysis, out: &Path) -> Result<ModeFitReport> {
    let [a, b] = m.fit_interval_ns;
    let mut files = Vec::new();
    let (stats, windows) = match &m.timeseries_csv {
        Some(csv) => {
            let (times, records) = io::read_timeseries_csv(Path::new(csv))?;
            let grid = TimeGrid { start: times[0], dt: times[1] - times[0], len: times.len() };
            let mut st = WindowStats::for_interval(grid, a * 1e-9, b * 1e-9)?;
            records.iter().for_each(|w| st.push(w));
            (st, records.len())
        }
        None => {
            let truth = m.truth.expect("validated").to_mode();
            let grid = m.grid();
            let mut st = WindowStats::for_interval(grid, a * 1e-9, b * 1e-9)?;
            synthesize_into(&mut st, &truth, m.variance, m.windows, cfg.seed)?;
            if m.dump_windows > 0 {
                let dump = synthesize_timeseries(&truth, m.variance, &grid, m.dump_windows.min(m.windows), cfg.seed)?;
                let rows: Vec<(Vec<f64>, Vec<f64>)> = dump.windows.into_iter().map(|w| (grid.times(), w)).collect();
                let (p, n) = rel(out, "timeseries.csv");
                io::write_timeseries_csv(&p, &rows)?;
                files.push(n);
            }
            (st, m.windows)
        }
    };
    let fit = fit_mode_stats(&stats, &m.initial.to_mode(), &FitOptions::default())?;
    let truth = m.truth.filter(|_| m.timeseries_csv.is_none());
    let errors = truth.map(|t| {
        let f = ModeParams::from_mode(&fit.mode);
        [(f.gamma1_mhz - t.gamma1_mhz).abs() / t.gamma1_mhz, (f.gamma2_mhz - t.gamma2_mhz).abs() / t.gamma2_mhz, (f.t0_ns - t.t0_ns).abs()]
    });
    Ok(ModeFitReport {
        windows,
        fit_interval_ns: m.fit_interval_ns,
        initial: m.initial,
        fitted: ModeParams::from_mode(&fit.mode),
        projected_variance: fit.variance,
        evaluations: fit.evaluations,
        converged: fit.converged,
        identifiable: fit.identifiable,
        truth,
        errors,
        expected_variance: truth.map(|t| expected_projected_variance(&fit.mode, &t.to_mode(), m.variance, &stats.grid)),
        files,
    })
}

fn iteration_table(cfg: &ExperimentConfig, it: &IterationAnalysis) -> Result<Vec<IterationCount>> {
    let scenario = it.scenario.resolve()?;
    let per: Vec<Vec<IterationCount>> =
        it.r_values.par_iter().map(|&r| iteration_counts(&[r], &scenario, cfg.cutoff).map_err(CliError::from)).collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn fmt(x: f64) -> String {
    format!("{x:.4}")
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

/// Runs the configured analysis, writes `report.json` plus the per-kind
/// tables into `out`, and returns the report as written.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    ensure_dir(out)?;
    let kind = cfg.analysis.kind();
    let wrap = |results: Value| Report { name: cfg.name.clone(), kind, seed: cfg.seed, cutoff: cfg.cutoff, results };
    let report = match &cfg.analysis {
        Analysis::Gate(g) => {
            let programs: Vec<ProgramReport> =
                g.programs.par_iter().enumerate().map(|(i, p)| run_gate_program(cfg, g, i, p, out)).collect::<Result<_>>()?;
            let header: Vec<String> = ["program", "step", "target_r", "f_ideal_theory", "w00", "var_x_norm", "var_p_norm"].map(String::from).into();
            let rows: Vec<Vec<String>> = programs
                .iter()
                .flat_map(|p| {
                    p.steps.iter().map(|s| {
                        vec![p.label.clone(), s.step.to_string(), fmt(s.target_r), fmt(s.f_ideal_theory), fmt(s.w00), fmt(s.var_x_norm), fmt(s.var_p_norm)]
                    })
                })
                .collect();
            io::write_table(&out.join("steps.csv"), &header, &rows)?;
            wrap(serde_json::to_value(programs)?)
        }
        Analysis::NegativitySteps(n) => {
            let curves = negativity_curves(cfg, n)?;
            let header: Vec<String> = ["program", "scenario", "step", "w00"].map(String::from).into();
            let rows: Vec<Vec<String>> = curves
                .iter()
                .flat_map(|c| c.w00.iter().enumerate().map(|(k, w)| vec![c.program.clone(), c.scenario.clone(), k.to_string(), fmt(*w)]))
                .collect();
            io::write_table(&out.join("negativity_steps.csv"), &header, &rows)?;
            wrap(serde_json::to_value(curves)?)
        }
        Analysis::IterationCounts(it) => {
            let counts = iteration_table(cfg, it)?;
            let header: Vec<String> = ["r", "max_steps", "confirmed"].map(String::from).into();
            let rows: Vec<Vec<String>> = counts.iter().map(|c| vec![fmt(c.r), c.max_steps.to_string(), c.confirmed.to_string()]).collect();
            io::write_table(&out.join("iteration_counts.csv"), &header, &rows)?;
            wrap(serde_json::to_value(counts)?)
        }
        Analysis::ModeFit(m) => wrap(serde_json::to_value(mode_fit(cfg, m, out)?)?),
    };
    let path = out.join("report.json");
    io::write_report(&path, &report)?;
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// `fit-mode`: the mode fit alone.
pub fn run_fit_mode(cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    match cfg.analysis {
        Analysis::ModeFit(_) => run_experiment(cfg, out),
        _ => Err(CliError::config(format!("fit-mode needs a `mode_fit` analysis, got `{}`", cfg.analysis.kind()))),
    }
}

#[derive(Debug, Clone, Serialize)]
struct TimingSummary {
    current: TimingReport,
    projected: TimingReport,
    /// Loop round trips a program occupies, one per schedule bin.
    bins: Vec<(String, usize)>,
}

/// `schedule`: control schedules of every program plus the timing check.
pub fn run_schedule(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let Analysis::Gate(g) = &cfg.analysis else {
        return Err(CliError::config(format!("schedule needs a `gate` analysis, got `{}`", cfg.analysis.kind())));
    };
    ensure_dir(out)?;
    let scenario = g.scenario.resolve()?;
    let mut written = Vec::new();
    let mut bins = Vec::new();
    for spec in &g.programs {
        let sched = compile_schedule(&spec.build(&scenario)?, ROUND_TRIP_NS)?;
        let csv = out.join(format!("{}_schedule.csv", spec.label));
        let json = out.join(format!("{}_schedule.json", spec.label));
        io::write_schedule_csv(&csv, &sched)?;
        io::write_json(&json, &sched)?;
        bins.push((spec.label.clone(), sched.entries.len()));
        written.extend([csv, json]);
    }
    let timing = TimingSummary { current: check_timing(&TimingBudget::current())?, projected: check_timing(&TimingBudget::projected())?, bins };
    let path = out.join("timing.json");
    io::write_report(&path, &timing)?;
    written.push(path);
    Ok(written)
}

/// Replaces the value at a dotted path (`analysis.programs.0.squeezing`).
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    if path.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("bad parameter path `{path}`")));
    }
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.get_mut(*part).ok_or_else(|| CliError::config(format!("`{path}`: no field `{part}`")))?
            }
            Value::Array(arr) => {
                let idx: usize = part.parse().map_err(|_| CliError::config(format!("`{path}`: `{part}` is not an index")))?;
                let len = arr.len();
                let slot = arr.get_mut(idx).ok_or_else(|| CliError::config(format!("`{path}`: index {idx} out of {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::config(format!("`{path}`: `{part}` is below a scalar"))),
        };
    }
    unreachable!("loop returns at the last part")
}

pub const SWEEP_HEADER: [&str; 10] =
    ["value", "program", "step", "target_r", "f_ideal_theory", "w00", "var_x_norm", "var_p_norm", "oracle_var_x_norm", "oracle_var_p_norm"];

/// `sweep`: theory metrics of a gate config for each value at `param`.
/// Tomography and file outputs of the base config are skipped.
pub fn run_sweep(cfg: &ExperimentConfig, param: &str, values: &[Value], out: &Path) -> Result<PathBuf> {
    if !matches!(cfg.analysis, Analysis::Gate(_)) {
        return Err(CliError::config(format!("sweep needs a `gate` analysis, got `{}`", cfg.analysis.kind())));
    }
    let base = serde_json::to_value(cfg)?;
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| {
            let mut c = base.clone();
            set_path(&mut c, param, v.clone())?;
            let parsed: ExperimentConfig = serde_json::from_value(c).map_err(|e| CliError::config(format!("{param} = {v}: {e}")))?;
            parsed.validate().map_err(|e| CliError::config(format!("{param} = {v}: {e}")))?;
            Ok(parsed)
        })
        .collect::<Result<_>>()?;
    let blocks: Vec<Vec<Vec<String>>> = configs
        .par_iter()
        .zip(values)
        .map(|(c, v)| -> Result<Vec<Vec<String>>> {
            let Analysis::Gate(g) = &c.analysis else { unreachable!("checked above") };
            let scenario = g.scenario.resolve()?;
            let mut rows = Vec::new();
            for spec in &g.programs {
                let program = spec.build(&scenario)?;
                let input = input_state(&g.input, &scenario, &program, c.cutoff)?;
                let (_, steps) = theory(&program, &input)?;
                for s in steps {
                    rows.push(vec![
                        v.to_string(),
                        spec.label.clone(),
                        s.step.to_string(),
                        fmt(s.target_r),
                        fmt(s.f_ideal_theory),
                        fmt(s.w00),
                        fmt(s.var_x_norm),
                        fmt(s.var_p_norm),
                        fmt(s.oracle_var_x_norm),
                        fmt(s.oracle_var_p_norm),
                    ]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    ensure_dir(out)?;
    let path = out.join("sweep.csv");
    let header: Vec<String> = SWEEP_HEADER.map(String::from).into();
    io::write_table(&path, &header, &blocks.concat())?;
    Ok(path)
}
