use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GateProgram, GateStep, LossScenario, Variant};
use crate::error::{Error, Result};
use crate::fock::{apply_loss, displacement_matrix, moments, BeamSplitterAmplitudes, FockState};
use crate::linalg::{hermitian_eigen, hermitize, trace_norm_hermitian, CMatrix, ZERO};
use crate::math::{gauss_legendre, hermite_functions};
use crate::sources::make_ancilla;

/// Numerical settings of the gate engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    /// Photon-number tail of the pure ancilla left out of its cutoff.
    pub ancilla_tail: f64,
    /// Ancilla mixture components below this weight are dropped.
    pub component_floor: f64,
    /// Gauss–Legendre nodes of the first pass; doubled until converged.
    pub initial_nodes: usize,
    pub max_nodes: usize,
    /// Target trace-norm change between successive node counts.
    pub tol: f64,
    /// Change above which the integration is reported as failed.
    pub fail_tol: f64,
    /// Half-width of the outcome window in standard deviations.
    pub window_sigmas: f64,
    /// Output cutoff; `None` keeps the input cutoff.
    pub output_cutoff: Option<usize>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            ancilla_tail: 1e-12,
            component_floor: 1e-13,
            initial_nodes: 64,
            max_nodes: 1024,
            tol: 1e-6,
            fail_tol: 1e-4,
            window_sigmas: 6.0,
            output_cutoff: None,
        }
    }
}

/// Diagnostics of one deterministic step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub nodes: usize,
    /// Trace-norm change at the last doubling.
    pub integration_change: f64,
    /// Probability lost to the output cutoff before renormalization.
    pub truncation_loss: f64,
    pub ancilla_cutoff: usize,
    pub ancilla_components: usize,
}

/// Everything about a step that does not depend on the outcome m.
struct Prepared {
    d_in: usize,
    d_anc: usize,
    rows: usize,
    out: usize,
    /// Ancilla mixture components √λ_s e^{−iaφ} a_s[a].
    components: Vec<Vec<Complex64>>,
    /// Beam-splitter amplitude for (input j, kept i, ancilla a), contiguous in a.
    /// The measured mode then holds k = j + a − i photons.
    table: Vec<f64>,
    phi: f64,
    gain: f64,
    center: f64,
    sigma: f64,
}

impl Prepared {
    fn new(input: &FockState, step: &GateStep, opts: &EngineOptions) -> Result<Self> {
        input.require_modes(1)?;
        step.validate()?;
        let anc_spec = step.effective_ancilla();
        let d_anc = anc_spec.required_cutoff(opts.ancilla_tail).max(2);
        let anc = make_ancilla(&anc_spec, d_anc)?;
        let (vals, vecs) = hermitian_eigen(anc.matrix());
        let components: Vec<Vec<Complex64>> = (0..vals.len())
            .filter(|&k| vals[k] > opts.component_floor)
            .map(|k| {
                let s = libm::sqrt(vals[k]);
                (0..d_anc).map(|a| vecs[(a, k)] * Complex64::from_polar(s, -(a as f64) * step.phi)).collect()
            })
            .collect();
        let d_in = input.cutoff();
        let rows = d_in + d_anc - 1;
        let bs = match step.variant {
            Variant::LoopStep => BeamSplitterAmplitudes::new(step.reflectivity, d_in, d_anc, rows),
            Variant::FirstStep => BeamSplitterAmplitudes::new(step.reflectivity, d_anc, d_in, rows),
        };
        let mut table = vec![0.0; d_in * rows * d_anc];
        for j in 0..d_in {
            for a in 0..d_anc {
                for i in 0..=(j + a).min(rows - 1) {
                    table[(j * rows + i) * d_anc + a] = match step.variant {
                        Variant::LoopStep => bs.get(j, a, i),
                        Variant::FirstStep => bs.get(a, j, i),
                    };
                }
            }
        }
        // Measured arm: √T q_in − √R q_anc (loop step) or √T q_anc − √R q_in (first step).
        let (sr, st) = (libm::sqrt(step.reflectivity), libm::sqrt(1.0 - step.reflectivity));
        let (c_in, c_anc) = match step.variant {
            Variant::LoopStep => (st, -sr),
            Variant::FirstStep => (-sr, st),
        };
        let mi = moments(input)?;
        let ma = moments(&anc)?;
        let (s, c) = libm::sincos(step.phi);
        let mean = |m: &crate::fock::Moments| m.mean_x * c + m.mean_p * s;
        let center = c_in * mean(&mi) + c_anc * mean(&ma);
        let var = c_in * c_in * mi.variance_at(step.phi) + c_anc * c_anc * ma.variance_at(step.phi);
        Ok(Self {
            d_in,
            d_anc,
            rows,
            out: opts.output_cutoff.unwrap_or(d_in),
            components,
            table,
            phi: step.phi,
            gain: step.gain,
            center,
            sigma: libm::sqrt(var.max(1e-12)),
        })
    }

    /// Weighted Kraus operators for outcome m, each `rows × d_in`:
    /// K_s[i][j] = Σ_a √λ_s a_s[a] B(j, a, i) ⟨m|_φ j+a−i⟩.
    fn raw_kraus(&self, m: f64) -> Vec<CMatrix> {
        let psi = hermite_functions(m, self.d_in + self.d_anc - 1);
        // ⟨m|_φ k⟩ = e^{−ikφ}ψ_k(m); the e^{−iaφ} part sits in the components.
        let phase: Vec<Complex64> =
            (0..self.rows + self.d_in).map(|d| Complex64::from_polar(1.0, -(d as f64 - self.rows as f64) * self.phi)).collect();
        self.components
            .iter()
            .map(|c| {
                let mut k = CMatrix::zeros(self.rows, self.d_in);
                for j in 0..self.d_in {
                    for i in 0..self.rows {
                        let lo = i.saturating_sub(j);
                        if lo >= self.d_anc {
                            break;
                        }
                        let row = &self.table[(j * self.rows + i) * self.d_anc..][..self.d_anc];
                        let mut acc = ZERO;
                        for a in lo..self.d_anc {
                            acc += c[a] * (row[a] * psi[j + a - i]);
                        }
                        k[(i, j)] = acc * phase[self.rows + j - i];
                    }
                }
                k
            })
            .collect()
    }

    /// Kraus operators after the feedforward displacement, each `out × d_in`.
    fn kraus(&self, m: f64) -> Vec<CMatrix> {
        let alpha = Complex64::from_polar(self.gain * m / core::f64::consts::SQRT_2, self.phi);
        let d = displacement_matrix(alpha, self.out, self.rows);
        self.raw_kraus(m).iter().map(|k| &d * k).collect()
    }

    /// Σ_s M_s ρ M_s† for outcome m (unnormalized; its trace is p(m) up to truncation).
    fn conditional(&self, rho: &CMatrix, m: f64) -> CMatrix {
        let mut acc = CMatrix::zeros(self.out, self.out);
        for k in self.kraus(m) {
            acc += &k * rho * k.adjoint();
        }
        acc
    }

    /// Exact outcome density p(m).
    fn density(&self, rho: &CMatrix, m: f64) -> f64 {
        self.raw_kraus(m).iter().map(|k| (k * rho * k.adjoint()).trace().re).sum()
    }

    fn window(&self, sigmas: f64) -> (f64, f64) {
        (self.center - sigmas * self.sigma, self.center + sigmas * self.sigma)
    }

    fn integrate(&self, rho: &CMatrix, nodes: usize, sigmas: f64) -> CMatrix {
        let (lo, hi) = self.window(sigmas);
        let (z, w) = gauss_legendre(nodes);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = CMatrix::zeros(self.out, self.out);
        for (zi, wi) in z.iter().zip(&w) {
            acc += self.conditional(rho, mid + half * zi) * Complex64::new(wi * half, 0.0);
        }
        acc
    }
}

fn finish(data: CMatrix, out: usize, loop_eta: f64) -> Result<(FockState, f64)> {
    let data = hermitize(&data);
    let tr = data.trace().re;
    let state = FockState::from_matrix(vec![out], data)?.normalized();
    Ok((apply_loss(&state, 0, loop_eta)?, 1.0 - tr))
}

/// One gate step with the homodyne outcome integrated out:
/// ρ_out = L_η[∫dm D(gm) K(m) ρ K(m)† D(gm)†].
pub fn run_step_deterministic(input: &FockState, step: &GateStep, opts: &EngineOptions) -> Result<(FockState, StepReport)> {
    let prep = Prepared::new(input, step, opts)?;
    let rho = input.matrix();
    let mut nodes = opts.initial_nodes.max(8);
    let mut current = prep.integrate(rho, nodes, opts.window_sigmas);
    let mut change = f64::INFINITY;
    while nodes < opts.max_nodes {
        let next = prep.integrate(rho, 2 * nodes, opts.window_sigmas);
        change = trace_norm_hermitian(&(&next - &current));
        nodes *= 2;
        current = next;
        if change < opts.tol {
            break;
        }
    }
    if change > opts.fail_tol {
        return Err(Error::QuadratureNonConvergence(change));
    }
    let (state, truncation_loss) = finish(current, prep.out, step.loop_eta)?;
    let report = StepReport {
        nodes,
        integration_change: change,
        truncation_loss,
        ancilla_cutoff: prep.d_anc,
        ancilla_components: prep.components.len(),
    };
    Ok((state, report))
}

/// Average of `n_traj` trajectories, each with an outcome drawn from the
/// exact measured-arm marginal. Trajectory i draws from stream i of a
/// ChaCha8 generator seeded with `seed`, so the result does not depend on
/// evaluation order.
pub fn run_step_montecarlo(
    input: &FockState,
    step: &GateStep,
    n_traj: usize,
    seed: u64,
    opts: &EngineOptions,
) -> Result<FockState> {
    if n_traj == 0 {
        return Err(Error::OutOfRange { name: "n_traj", value: 0.0, range: "[1, inf)" });
    }
    let prep = Prepared::new(input, step, opts)?;
    let rho = input.matrix();
    let sampler = OutcomeSampler::new(&prep, rho, opts.window_sigmas + 2.0, 2049);
    let mut acc = CMatrix::zeros(prep.out, prep.out);
    for i in 0..n_traj {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let m = sampler.sample(rng.random::<f64>());
        let cond = prep.conditional(rho, m);
        let p = cond.trace().re;
        if p > 0.0 {
            acc += cond / Complex64::new(p, 0.0);
        }
    }
    acc /= Complex64::new(n_traj as f64, 0.0);
    Ok(finish(acc, prep.out, step.loop_eta)?.0)
}

/// Inverse-CDF sampler over a tabulated density.
struct OutcomeSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl OutcomeSampler {
    fn new(prep: &Prepared, rho: &CMatrix, sigmas: f64, points: usize) -> Self {
        let (lo, hi) = prep.window(sigmas);
        let h = (hi - lo) / (points - 1) as f64;
        let xs: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
        let pdf: Vec<f64> = xs.iter().map(|&m| prep.density(rho, m).max(0.0)).collect();
        let mut cdf = vec![0.0; points];
        for i in 1..points {
            cdf[i] = cdf[i - 1] + 0.5 * h * (pdf[i] + pdf[i - 1]);
        }
        let total = cdf[points - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { xs, cdf }
    }

    fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.xs.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[i - 1] + f * (self.xs[i] - self.xs[i - 1])
    }
}

/// Per-step outputs of a program run.
#[derive(Debug, Clone)]
pub struct ProgramRun {
    pub states: Vec<FockState>,
    pub reports: Vec<StepReport>,
}

impl ProgramRun {
    pub fn output(&self) -> &FockState {
        self.states.last().expect("validated programs are nonempty")
    }
}

pub fn run_program(input: &FockState, program: &GateProgram, opts: &EngineOptions) -> Result<ProgramRun> {
    program.validate()?;
    let mut states = Vec::with_capacity(program.steps.len());
    let mut reports = Vec::with_capacity(program.steps.len());
    let mut current = input.clone();
    for step in &program.steps {
        let (next, report) = run_step_deterministic(&current, step, opts)?;
        states.push(next.clone());
        reports.push(report);
        current = next;
    }
    Ok(ProgramRun { states, reports })
}

/// `program`'s working conditions executed with the ancillae and losses of `scenario`.
pub fn realistic_model_predict(
    input: &FockState,
    program: &GateProgram,
    scenario: &LossScenario,
    opts: &EngineOptions,
) -> Result<ProgramRun> {
    scenario.validate()?;
    run_program(input, &program.with_scenario(scenario), opts)
}
