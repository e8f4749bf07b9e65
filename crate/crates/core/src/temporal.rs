//! Temporal wave-packet model of the heralded mode and its recovery from
//! synthetic homodyne records by variance maximization.
//!
//! Times are in seconds and bandwidths in rad/s. A record sample x_k stands
//! for the field integrated over bin k divided by √dt, so white vacuum noise
//! has variance 1/2 per bin and a normalized mode vector u gives the mode
//! quadrature Σ u_k x_k.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};

/// Round-trip time of the loop.
pub const ROUND_TRIP_S: f64 = 60.8e-9;

/// f(t) = N (e^{γ₁(t−t₀)} − e^{γ₂(t−t₀)}) Θ(t₀ − t).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeFunction {
    pub gamma1: f64,
    pub gamma2: f64,
    pub t0: f64,
}

impl ModeFunction {
    pub fn new(gamma1: f64, gamma2: f64, t0: f64) -> Result<Self> {
        let f = Self { gamma1, gamma2, t0 };
        f.validate()?;
        Ok(f)
    }

    /// Cavity bandwidths 2π×29.8 MHz and 2π×95.6 MHz, herald at 100 ns.
    pub fn measured() -> Self {
        Self { gamma1: 2.0 * PI * 29.8e6, gamma2: 2.0 * PI * 95.6e6, t0: 100e-9 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2)] {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::OutOfRange { name, value: g, range: "(0, inf)" });
            }
        }
        if !self.t0.is_finite() {
            return Err(Error::OutOfRange { name: "t0", value: self.t0, range: "finite" });
        }
        if (self.gamma1 - self.gamma2).abs() <= 1e-12 * self.gamma1.max(self.gamma2) {
            return Err(Error::DegenerateMode(self.gamma1));
        }
        Ok(())
    }

    /// N with ∫|f|² = 1: 1/N² = 1/(2γ₁) + 1/(2γ₂) − 2/(γ₁+γ₂).
    pub fn normalization(&self) -> f64 {
        let (a, b) = (self.gamma1, self.gamma2);
        1.0 / libm::sqrt(0.5 / a + 0.5 / b - 2.0 / (a + b))
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t > self.t0 {
            return 0.0;
        }
        let s = t - self.t0;
        self.normalization() * (libm::exp(self.gamma1 * s) - libm::exp(self.gamma2 * s))
    }

    /// The mode of the i-th time bin, f(t − (i−1)τ).
    pub fn shifted(&self, i: usize, tau: f64) -> Result<Self> {
        if i == 0 {
            return Err(Error::OutOfRange { name: "mode index", value: 0.0, range: "[1, inf)" });
        }
        Ok(Self { t0: self.t0 + (i - 1) as f64 * tau, ..*self })
    }

    /// (coefficient, rate) pairs of the exponential terms.
    fn terms(&self) -> [(f64, f64); 2] {
        let n = self.normalization();
        [(n, self.gamma1), (-n, self.gamma2)]
    }

    /// ∫ f(t) over [a, b].
    fn integral(&self, a: f64, b: f64) -> f64 {
        let hi = b.min(self.t0);
        if hi <= a {
            return 0.0;
        }
        self.terms()
            .iter()
            .map(|&(c, g)| c * (libm::exp(g * (hi - self.t0)) - libm::exp(g * (a - self.t0))) / g)
            .sum()
    }
}

/// Exact ⟨f, g⟩ = ∫ f(t) g(t) dt.
pub fn inner_product(f: &ModeFunction, g: &ModeFunction) -> f64 {
    overlap_between(f, g, f64::NEG_INFINITY, f64::INFINITY)
}

/// ∫_a^b f g dt, evaluated from the exponential terms.
fn overlap_between(f: &ModeFunction, g: &ModeFunction, a: f64, b: f64) -> f64 {
    let hi = b.min(f.t0).min(g.t0);
    if hi <= a {
        return 0.0;
    }
    let mut acc = 0.0;
    for &(cf, rf) in &f.terms() {
        for &(cg, rg) in &g.terms() {
            let r = rf + rg;
            // e^{rf(t−t0f) + rg(t−t0g)} = e^{r t − rf t0f − rg t0g}
            let shift = -rf * f.t0 - rg * g.t0;
            let upper = libm::exp(r * hi + shift);
            let lower = if a.is_finite() { libm::exp(r * a + shift) } else { 0.0 };
            acc += cf * cg * (upper - lower) / r;
        }
    }
    acc
}

/// Uniform sampling grid of a heralded window.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeGrid {
    pub start: f64,
    pub dt: f64,
    pub len: usize,
}

impl Default for TimeGrid {
    /// 0.5 ns bins over a 400 ns window.
    fn default() -> Self {
        Self { start: 0.0, dt: 0.5e-9, len: 800 }
    }
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.start + self.dt * k as f64).collect()
    }

    pub fn end(&self) -> f64 {
        self.start + self.dt * self.len as f64
    }

    /// Requires at least three samples per e-fold of the fastest rate.
    pub fn check_resolution(&self, gamma_max: f64) -> Result<()> {
        if !(self.dt > 0.0) || self.len == 0 || self.dt * gamma_max > 1.0 / 3.0 {
            return Err(Error::CoarseSampling { dt_ns: self.dt * 1e9, gamma: gamma_max });
        }
        Ok(())
    }
}

/// Σ_k ∫_{bin k} f g dt over the grid; equals ⟨f, g⟩ up to the parts of the
/// modes that fall outside the window.
pub fn overlap_on_grid(f: &ModeFunction, g: &ModeFunction, grid: &TimeGrid) -> f64 {
    (0..grid.len)
        .map(|k| {
            let a = grid.start + grid.dt * k as f64;
            overlap_between(f, g, a, a + grid.dt)
        })
        .sum()
}

/// Unit vector u_k ∝ ∫_{bin k} f dt used to project a record onto the mode.
pub fn mode_vector(f: &ModeFunction, grid: &TimeGrid) -> Vec<f64> {
    let mut v: Vec<f64> = (0..grid.len)
        .map(|k| {
            let a = grid.start + grid.dt * k as f64;
            f.integral(a, a + grid.dt)
        })
        .collect();
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Candidate vector that stays defined as γ₁ → γ₂ (limit ∝ s e^{γs}).
fn candidate_vector(gamma1: f64, gamma2: f64, t0: f64, grid: &TimeGrid) -> Vec<f64> {
    let (g1, mut g2) = (gamma1, gamma2);
    if (g1 - g2).abs() <= 1e-7 * g1.max(g2) {
        g2 = g1 * (1.0 + 1e-6);
    }
    mode_vector(&ModeFunction { gamma1: g1, gamma2: g2, t0 }, grid)
}

/// Heralded windows of a homodyne record, each sampled on `grid`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ensemble {
    pub grid: TimeGrid,
    pub windows: Vec<Vec<f64>>,
}

impl Ensemble {
    /// Sample variance of the record projected on `u`.
    pub fn projected_variance(&self, u: &[f64]) -> f64 {
        // Mode vectors vanish after t₀ and decay before it; skip the zeros.
        let lo = u.iter().position(|&x| x != 0.0).unwrap_or(0);
        let hi = u.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1);
        let q: Vec<f64> = self.windows.iter().map(|w| w[lo..hi].iter().zip(&u[lo..hi]).map(|(a, b)| a * b).sum()).collect();
        let n = q.len() as f64;
        let mean = q.iter().sum::<f64>() / n;
        q.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    }

    /// Moments over the whole grid.
    pub fn stats(&self) -> Result<WindowStats> {
        let mut st = WindowStats::new(self.grid, 0, self.grid.len)?;
        for w in &self.windows {
            st.push(w);
        }
        Ok(st)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, windows: self.windows.iter().map(|w| w.iter().map(|x| c * x).collect()).collect() }
    }
}

/// Running moments of the record bins `lo..hi`, enough to evaluate the
/// projected variance of any mode without keeping the windows.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub grid: TimeGrid,
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
    sum: Vec<f64>,
    /// Upper triangle of Σ x_i x_j, row-major over the analysed bins.
    second: Vec<f64>,
}

impl WindowStats {
    pub fn new(grid: TimeGrid, lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi || hi > grid.len {
            return Err(Error::InvalidDataset(alloc::format!("bin range {lo}..{hi} outside a grid of {}", grid.len)));
        }
        let m = hi - lo;
        Ok(Self { grid, lo, hi, count: 0, sum: vec![0.0; m], second: vec![0.0; m * m] })
    }

    /// Bins covering `[t_from, t_to)`, clipped to the grid.
    pub fn for_interval(grid: TimeGrid, t_from: f64, t_to: f64) -> Result<Self> {
        let idx = |t: f64| libm::floor(((t - grid.start) / grid.dt).clamp(0.0, grid.len as f64)) as usize;
        Self::new(grid, idx(t_from), idx(t_to))
    }

    pub fn push(&mut self, window: &[f64]) {
        let x = &window[self.lo..self.hi];
        let m = x.len();
        for i in 0..m {
            self.sum[i] += x[i];
            let xi = x[i];
            let row = &mut self.second[i * m + i..(i + 1) * m];
            for (r, xj) in row.iter_mut().zip(&x[i..]) {
                *r += xi * xj;
            }
        }
        self.count += 1;
    }

    /// Sample variance of Σ u_k x_k for a unit vector `u` on the full grid.
    /// Bins outside the analysed range are taken to hold vacuum.
    pub fn projected_variance(&self, u: &[f64]) -> f64 {
        let m = self.hi - self.lo;
        let ur = &u[self.lo..self.hi];
        let n = self.count as f64;
        let mut quad = 0.0;
        for i in 0..m {
            if ur[i] == 0.0 {
                continue;
            }
            let row = &self.second[i * m..(i + 1) * m];
            let mut acc = 0.5 * row[i] * ur[i];
            for j in i + 1..m {
                acc += row[j] * ur[j];
            }
            quad += 2.0 * ur[i] * acc;
        }
        let mean: f64 = ur.iter().zip(&self.sum).map(|(a, b)| a * b).sum::<f64>() / n;
        let outside: f64 = u[..self.lo].iter().chain(&u[self.hi..]).map(|x| x * x).sum();
        (quad / n - mean * mean) * n / (n - 1.0) + 0.5 * outside
    }
}

/// One synthetic window: x = w + (√(2V) − 1) u (u·w), w white with variance
/// 1/2 per bin, drawn from stream `index` of a ChaCha8 generator.
fn synth_window(u: &[f64], excess: f64, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let sd = core::f64::consts::FRAC_1_SQRT_2;
    let mut w: Vec<f64> = (0..u.len()).map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect();
    let proj: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
    for (x, uk) in w.iter_mut().zip(u) {
        *x += excess * uk * proj;
    }
    w
}

fn synth_setup(mode: &ModeFunction, variance: f64, grid: &TimeGrid) -> Result<(Vec<f64>, f64)> {
    mode.validate()?;
    grid.check_resolution(mode.gamma1.max(mode.gamma2))?;
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::OutOfRange { name: "variance", value: variance, range: "(0, inf)" });
    }
    Ok((mode_vector(mode, grid), libm::sqrt(2.0 * variance) - 1.0))
}

/// Records whose quadrature has variance `variance` in `mode` and 1/2 in
/// every orthogonal mode. Window i uses stream i, so windows do not depend
/// on how many are drawn.
pub fn synthesize_timeseries(
    mode: &ModeFunction,
    variance: f64,
    grid: &TimeGrid,
    n_windows: usize,
    seed: u64,
) -> Result<Ensemble> {
    let (u, excess) = synth_setup(mode, variance, grid)?;
    let windows = (0..n_windows).map(|i| synth_window(&u, excess, seed, i)).collect();
    Ok(Ensemble { grid: *grid, windows })
}

/// Same windows as [`synthesize_timeseries`], folded into `stats` as they
/// are drawn, for ensembles too large to hold in memory.
pub fn synthesize_into(
    stats: &mut WindowStats,
    mode: &ModeFunction,
    variance: f64,
    n_windows: usize,
    seed: u64,
) -> Result<()> {
    let (u, excess) = synth_setup(mode, variance, &stats.grid)?;
    for i in 0..n_windows {
        stats.push(&synth_window(&u, excess, seed, i));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Box on both bandwidths, rad/s.
    pub gamma_bounds: (f64, f64),
    pub nelder_mead: NelderMeadOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            gamma_bounds: (2.0 * PI * 5e6, 2.0 * PI * 300e6),
            nelder_mead: NelderMeadOptions { max_evals: 600, ftol: 1e-9, xtol: 1e-4 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFit {
    /// Fitted mode with γ₁ < γ₂.
    pub mode: ModeFunction,
    pub variance: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// False when the achieved variance is statistically compatible with
    /// vacuum, so the maximizer carries no information.
    pub identifiable: bool,
}

/// Maximizes the projected variance over (γ₁, γ₂, t₀) with a bounded
/// simplex search started at `initial`.
pub fn fit_mode(ensemble: &Ensemble, initial: &ModeFunction, opts: &FitOptions) -> Result<ModeFit> {
    if ensemble.windows.iter().any(|w| w.len() != ensemble.grid.len) {
        return Err(Error::InvalidDataset("window length differs from the grid".into()));
    }
    fit_mode_stats(&ensemble.stats()?, initial, opts)
}

/// [`fit_mode`] on accumulated moments.
pub fn fit_mode_stats(stats: &WindowStats, initial: &ModeFunction, opts: &FitOptions) -> Result<ModeFit> {
    let n = stats.count;
    if n < 2 {
        return Err(Error::InvalidDataset(alloc::format!("{n} windows")));
    }
    // Work in units of 2π MHz and ns so the simplex is well scaled.
    let unit_g = 2.0 * PI * 1e6;
    let unit_t = 1e-9;
    let grid = stats.grid;
    let (glo, ghi) = (opts.gamma_bounds.0 / unit_g, opts.gamma_bounds.1 / unit_g);
    let lower = [glo, glo, grid.start / unit_t];
    let upper = [ghi, ghi, grid.end() / unit_t];
    let x0 = [initial.gamma1 / unit_g, initial.gamma2 / unit_g, initial.t0 / unit_t];
    let step = [0.1 * x0[0].abs().max(1.0), 0.1 * x0[1].abs().max(1.0), 2.0];
    let objective = |x: &[f64]| -stats.projected_variance(&candidate_vector(x[0] * unit_g, x[1] * unit_g, x[2] * unit_t, &grid));
    let m = nelder_mead(objective, &x0, &step, &lower, &upper, &opts.nelder_mead);
    let (mut g1, mut g2) = (m.x[0] * unit_g, m.x[1] * unit_g);
    if g1 > g2 {
        core::mem::swap(&mut g1, &mut g2);
    }
    if (g1 - g2).abs() <= 1e-7 * g2 {
        g2 = g1 * (1.0 + 1e-6);
    }
    let variance = -m.value;
    let noise = 3.0 * 0.5 * libm::sqrt(2.0 / (n as f64 - 1.0));
    Ok(ModeFit {
        mode: ModeFunction { gamma1: g1, gamma2: g2, t0: m.x[2] * unit_t },
        variance,
        evaluations: m.evals,
        converged: m.converged,
        identifiable: (variance - 0.5).abs() > noise,
    })
}

/// Expected projected variance 1/2 + |⟨g, f⟩|²(V − 1/2) on the grid.
pub fn expected_projected_variance(candidate: &ModeFunction, truth: &ModeFunction, variance: f64, grid: &TimeGrid) -> f64 {
    let c: f64 = mode_vector(candidate, grid).iter().zip(mode_vector(truth, grid)).map(|(a, b)| a * b).sum();
    0.5 + c * c * (variance - 0.5)
}

/// Times of a grid paired with one record, for CSV output.
pub fn timeseries_rows(grid: &TimeGrid, values: &[f64]) -> Vec<(f64, f64)> {
    grid.times().into_iter().zip(values.iter().copied()).collect()
}
