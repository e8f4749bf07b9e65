//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use cvloop::config::{Analysis, ExperimentConfig, OutputSettings};
use cvloop::runner::{run_experiment, run_fit_mode};
use cvloop_core::fock::{
    apply_beamsplitter, apply_loss, displace, fidelity, moments, partial_trace, tensor, trace_distance, wigner_origin_parity,
};
use cvloop_core::gate::{ideal_fidelity, ideal_squeeze, run_program, run_step_deterministic, run_step_montecarlo, EngineOptions};
use cvloop_core::gaussian::{step_channel, GaussianState};
use cvloop_core::math::{db_to_variance, variance_to_db};
use cvloop_core::scheduler::{check_timing, TimingBudget};
use cvloop_core::sources::make_cat;
use cvloop_core::tomography::{default_phases, mle_reconstruct, negativity, normalized_variances, sample_quadratures, MleOptions};
use cvloop_core::{CatSpec, FockState, GateProgram, LossScenario, Quadrature};
use serde_json::Value;

struct Tally {
    failed: usize,
}

impl Tally {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} [{id}] {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"));
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Theory metrics only: no tomography and no side files.
fn theory_only(mut cfg: ExperimentConfig) -> ExperimentConfig {
    if let Analysis::Gate(g) = &mut cfg.analysis {
        g.tomography = None;
        g.outputs = OutputSettings { wigner: None, dataset_csv: false, schedule: false, dump_states: false };
    }
    cfg
}

fn run(cfg: &ExperimentConfig) -> (Value, f64) {
    let dir = tempfile::tempdir().expect("tempdir");
    let t = Instant::now();
    let report = run_experiment(cfg, dir.path()).unwrap_or_else(|e| panic!("{}: {e}", cfg.name));
    (report, t.elapsed().as_secs_f64())
}

/// f_ideal_theory of every step of every program, in config order.
fn fidelities(report: &Value) -> Vec<f64> {
    report["results"]
        .as_array()
        .expect("gate results")
        .iter()
        .flat_map(|p| p["steps"].as_array().expect("steps").iter().map(|s| s["f_ideal_theory"].as_f64().expect("number")))
        .collect()
}

fn compare(got: &[f64], want: &[f64], tol: f64) -> (bool, String) {
    let worst = got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ok = got.len() == want.len() && worst <= tol;
    (ok, format!("got {got:?} want {want:?} max|d| {worst:.4} (tol {tol})"))
}

fn single_step_vacuum(t: &mut Tally) {
    let (report, secs) = run(&theory_only(config("table1_vacuum")));
    let (ok, detail) = compare(&fidelities(&report), &[0.937, 0.872, 0.934, 0.868], 0.010);
    t.line("1 single-step vacuum fidelities", ok && secs < 30.0, format!("{detail}, {secs:.1}s (< 30s) at cutoff 25"));
}

fn three_step_vacuum(t: &mut Tally) {
    let (report, secs) = run(&theory_only(config("table2_vacuum")));
    let (ok, detail) = compare(&fidelities(&report), &[0.915, 0.870, 0.732, 0.912, 0.866, 0.725], 0.015);
    t.line("2 three-step vacuum fidelities", ok && secs < 120.0, format!("{detail}, {secs:.1}s (< 120s) at cutoff 30"));
}

fn cat_fidelities(t: &mut Tally) {
    let (r1, _) = run(&theory_only(config("table1_cat")));
    let (r2, _) = run(&theory_only(config("table2_cat")));
    let got: Vec<f64> = fidelities(&r1).into_iter().chain(fidelities(&r2)).collect();
    let want = [0.961, 0.907, 0.961, 0.911, 0.944, 0.905, 0.793, 0.945, 0.910, 0.821];
    let (ok, detail) = compare(&got, &want, 0.04);
    t.line("3 modeled cat fidelities", ok, format!("{detail} (plausibility check on a modeled input)"));
}

fn iteration_counts(t: &mut Tally) {
    let (report, secs) = run(&config("appendixD_iterations"));
    let rows = report["results"].as_array().expect("counts");
    let counts: Vec<u64> = rows.iter().map(|c| c["max_steps"].as_u64().expect("count")).collect();
    let confirmed = rows.iter().all(|c| c["confirmed"].as_bool() == Some(true));
    let ok = counts == [18, 10, 7, 5] && confirmed && secs < 600.0;
    t.line("4 iteration counts", ok, format!("{counts:?} want [18, 10, 7, 5], Fock-confirmed {confirmed}, {secs:.1}s (< 600s)"));
}

fn ancilla_levels(t: &mut Tally) {
    let s = LossScenario::current();
    let x = variance_to_db(s.ancilla_x.variances().0);
    let p = variance_to_db(s.ancilla_p.variances().0);
    let ok = (x + 4.2).abs() <= 0.3 && (p + 4.0).abs() <= 0.3;
    t.line("5 ancilla squeezing", ok, format!("x {x:.2} dB (want -4.2), p {p:.2} dB (want -4.0), tol 0.3 dB"));
}

fn cptp(t: &mut Tally) {
    let cat = make_cat(&CatSpec::default(), 12).unwrap().0;
    let coh = FockState::coherent(0.4, -0.2, 12).unwrap();
    let mut worst_trace: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    let mut check = |s: FockState| {
        worst_trace = worst_trace.max((s.trace() - 1.0).abs());
        worst_eig = worst_eig.min(s.min_eigenvalue());
    };
    let step = GateProgram::from_squeezing(&[0.26], &LossScenario::current()).unwrap().steps[0].clone();
    for s in [&cat, &coh] {
        check(apply_loss(s, 0, 0.7).unwrap());
        check(displace(s, 0, 0.3, -0.1).unwrap());
        check(partial_trace(&apply_beamsplitter(&tensor(s, &coh).unwrap(), 0.3).unwrap(), 0).unwrap());
        check(run_step_deterministic(s, &step, &EngineOptions::default()).unwrap().0);
    }
    let ok = worst_trace <= 1e-9 && worst_eig >= -1e-9;
    t.line("6a channels CPTP", ok, format!("max |Tr-1| {worst_trace:.1e}, min eigenvalue {worst_eig:.1e} (tol 1e-9)"));
}

fn montecarlo(t: &mut Tally) {
    let program = GateProgram::from_squeezing(&[0.3], &LossScenario::current()).unwrap();
    let input = FockState::number(&[1], 10).unwrap();
    let opts = EngineOptions::default();
    let (det, _) = run_step_deterministic(&input, &program.steps[0], &opts).unwrap();
    let n = 10_000;
    let mc = run_step_montecarlo(&input, &program.steps[0], n, 11, &opts).unwrap();
    let d = trace_distance(&mc, &det).unwrap();
    let bound = 3.0 / (n as f64).sqrt();
    t.line("6b monte carlo vs deterministic", d <= bound, format!("trace distance {d:.4} <= {bound:.4} at n = {n}"));
}

fn oracle_moments(t: &mut Tally) {
    let s = LossScenario::current();
    let mut worst: f64 = 0.0;
    // Three antisqueezing steps on a squeezed input need more than 30 levels.
    let inputs = [
        (FockState::vacuum(1, 40).unwrap(), GaussianState::vacuum()),
        (FockState::squeezed_vacuum(0.2, 40).unwrap(), GaussianState::squeezed(0.2)),
    ];
    for rs in [vec![0.26], vec![-0.46], vec![0.33, 0.14, 0.37]] {
        let program = GateProgram::from_squeezing(&rs, &s).unwrap();
        for (fock, gauss) in &inputs {
            let run = run_program(fock, &program, &EngineOptions::default()).unwrap();
            let mut g = *gauss;
            for (state, step) in run.states.iter().zip(&program.steps) {
                g = step_channel(step).unwrap().apply(&g);
                let m = moments(state).unwrap();
                for d in [m.var_x - g.cov[(0, 0)], m.var_p - g.cov[(1, 1)], m.cov_xp - g.cov[(0, 1)], m.mean_x, m.mean_p] {
                    worst = worst.max(d.abs());
                }
            }
        }
    }
    t.line("6c fock vs gaussian oracle", worst <= 1e-3, format!("max moment difference {worst:.1e} (tol 1e-3)"));
}

fn negativity_invariance(t: &mut Tally) {
    let cat = make_cat(&CatSpec::default(), 20).unwrap().0;
    let w0 = wigner_origin_parity(&cat).unwrap();
    let big = cat.with_cutoff(120).unwrap();
    let worst = [-0.9, -0.4, 0.3, 0.9]
        .iter()
        .map(|&r| (negativity(&ideal_squeeze(&big, r).unwrap()).unwrap() - w0).abs())
        .fold(0.0, f64::max);
    t.line("6d ideal squeezing keeps W(0,0)", worst <= 1e-6, format!("max |dW(0,0)| {worst:.1e} for |r| <= 0.9 (tol 1e-6)"));
}

fn tomography_roundtrip(t: &mut Tally) {
    let s = LossScenario::current();
    let x = GateProgram::from_squeezing(&[0.26], &s).unwrap();
    let gate_out = run_program(&FockState::vacuum(1, 20).unwrap(), &x, &EngineOptions::default()).unwrap().states[0].clone();
    let cat = make_cat(&CatSpec::default().aligned_to(Quadrature::X), 20).unwrap().0;
    let mut fs = Vec::new();
    for (i, state) in [gate_out, cat].iter().enumerate() {
        let data = sample_quadratures(state, &default_phases(), 3000, 100 + i as u64).unwrap();
        let rec = mle_reconstruct(&data, &MleOptions { cutoff: state.cutoff(), ..MleOptions::default() }).unwrap();
        fs.push(fidelity(&rec.state, state).unwrap());
    }
    let ok = fs.iter().all(|&f| f >= 0.98);
    t.line("6e tomography round trip", ok, format!("fidelities {fs:.4?} (>= 0.98) at 3000 x 12 samples"));
}

fn mode_recovery(t: &mut Tally) {
    let mut cfg = config("mode_fit");
    if let Analysis::ModeFit(m) = &mut cfg.analysis {
        m.dump_windows = 0;
    }
    let dir = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let report = run_fit_mode(&cfg, dir.path()).unwrap();
    let e = &report["results"]["errors"];
    let (g1, g2, dt) = (e[0].as_f64().unwrap(), e[1].as_f64().unwrap(), e[2].as_f64().unwrap());
    let ok = g1 <= 0.05 && g2 <= 0.05 && dt <= 1.0;
    t.line(
        "6f temporal mode recovery",
        ok,
        format!("gamma1 {:.1}%, gamma2 {:.1}%, t0 {dt:.2} ns off (5%, 5%, 1 ns), {} windows, {:.1}s", g1 * 100.0, g2 * 100.0, report["results"]["windows"], t0.elapsed().as_secs_f64()),
    );
}

fn ideal_limit(t: &mut Tally) {
    // Infidelity is linear in the ancilla variance near zero, so two pure
    // ancillae extrapolate to the infinitely squeezed limit.
    let vac = FockState::vacuum(1, 20).unwrap();
    let point = |db: f64| {
        let program = GateProgram::from_squeezing(&[0.26, 0.2], &LossScenario::lossless(db)).unwrap();
        let out = run_program(&vac, &program, &EngineOptions::default()).unwrap();
        (db_to_variance(db), ideal_fidelity(&vac, out.output(), program.cumulative_r(2)).unwrap())
    };
    let (v1, f1) = point(-12.0);
    let (v2, f2) = point(-15.0);
    let f0 = f2 - (f1 - f2) * v2 / (v1 - v2);
    t.line("6g ideal-ancilla limit", f0 >= 0.999 && f2 > f1, format!("F = {f1:.4} (-12 dB), {f2:.4} (-15 dB), extrapolated {f0:.5} (>= 0.999)"));
}

fn cutoff_convergence(t: &mut Tally) {
    let s = LossScenario::current();
    let mut worst: f64 = 0.0;
    for rs in [vec![0.26], vec![-0.33, -0.14]] {
        let program = GateProgram::from_squeezing(&rs, &s).unwrap();
        let scalars = |cutoff: usize, cat: bool| -> Vec<f64> {
            let input = if cat {
                make_cat(&CatSpec::default().aligned_to(program.quadrature().unwrap()), cutoff).unwrap().0
            } else {
                FockState::vacuum(1, cutoff).unwrap()
            };
            let out = run_program(&input, &program, &EngineOptions::default()).unwrap();
            let o = out.output();
            let (vx, vp) = normalized_variances(o, &input).unwrap();
            let r = program.cumulative_r(rs.len());
            vec![ideal_fidelity(&input, o, r).unwrap(), negativity(o).unwrap(), vx, vp]
        };
        for cat in [false, true] {
            let (a, b) = (scalars(25, cat), scalars(30, cat));
            worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
        }
    }
    t.line("6h cutoff convergence", worst < 1e-3, format!("max change {worst:.1e} from cutoff 25 to 30 (< 1e-3)"));
}

fn timing(t: &mut Tally) {
    let now = check_timing(&TimingBudget::current()).unwrap();
    let next = check_timing(&TimingBudget::projected()).unwrap();
    let ok = now.feasible && (now.clock_hz / 1e6).round() == 16.0 && next.feasible && (next.clock_hz / 1e10 - 1.0).abs() < 1e-12;
    t.line("7 timing", ok, format!("current {:.2} MHz feasible {}, projected {:.3} GHz feasible {}", now.clock_hz / 1e6, now.feasible, next.clock_hz / 1e9, next.feasible));
}

fn main() -> ExitCode {
    let mut t = Tally { failed: 0 };
    let checks: [fn(&mut Tally); 14] = [
        single_step_vacuum,
        three_step_vacuum,
        cat_fidelities,
        iteration_counts,
        ancilla_levels,
        cptp,
        montecarlo,
        oracle_moments,
        negativity_invariance,
        tomography_roundtrip,
        mode_recovery,
        ideal_limit,
        cutoff_convergence,
        timing,
    ];
    for c in checks {
        c(&mut t);
    }
    println!("acceptance: {} of {} checks passed", checks.len() - t.failed, checks.len());
    if t.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
