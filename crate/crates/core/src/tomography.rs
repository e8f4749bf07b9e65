//! Homodyne sampling, maximum-likelihood reconstruction and state metrics.
//!
//! Phases are in radians throughout; the CLI converts to degrees at the edge.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{moments, wigner_origin_parity, FockState};
use crate::linalg::{hermitian_eigen, hermitize, CMatrix};
use crate::math::{gauss_legendre, hermite_functions, variance_to_db};

/// Samples of x̂_φ taken at one phase.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureGroup {
    pub phase: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureDataset {
    pub groups: Vec<QuadratureGroup>,
    pub seed: u64,
    pub source: String,
}

impl QuadratureDataset {
    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::InvalidDataset("no phase groups".into()));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.samples.is_empty() {
                return Err(Error::InvalidDataset(alloc::format!("group {i} is empty")));
            }
            if !g.phase.is_finite() || g.samples.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDataset(alloc::format!("group {i} has non-finite values")));
            }
            if self.groups[..i].iter().any(|h| (h.phase - g.phase).abs() < 1e-12) {
                return Err(Error::InvalidDataset(alloc::format!("phase {} appears twice", g.phase)));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(|g| g.samples.len()).sum()
    }

    /// Number of phases that differ modulo π.
    pub fn distinct_angles(&self) -> usize {
        distinct_mod_pi(self.groups.iter().map(|g| g.phase))
    }

    /// Partitions every group into `k` contiguous, nearly equal parts and
    /// returns the `k` sub-datasets.
    pub fn split(&self, k: usize) -> Result<Vec<QuadratureDataset>> {
        if k == 0 || self.groups.iter().any(|g| g.samples.len() < k) {
            return Err(Error::InvalidDataset(alloc::format!("cannot split into {k} subsets")));
        }
        Ok((0..k)
            .map(|part| QuadratureDataset {
                groups: self
                    .groups
                    .iter()
                    .map(|g| {
                        let n = g.samples.len();
                        QuadratureGroup { phase: g.phase, samples: g.samples[part * n / k..(part + 1) * n / k].to_vec() }
                    })
                    .collect(),
                seed: self.seed,
                source: alloc::format!("{} [subset {}/{}]", self.source, part + 1, k),
            })
            .collect())
    }
}

fn distinct_mod_pi(phases: impl Iterator<Item = f64>) -> usize {
    let mut seen: Vec<f64> = Vec::new();
    for p in phases {
        let r = p.rem_euclid(PI);
        if !seen.iter().any(|&s| {
            let d = (s - r).abs();
            d < 1e-9 || PI - d < 1e-9
        }) {
            seen.push(r);
        }
    }
    seen.len()
}

/// Twelve phases from 90° down to −75° in 15° steps.
pub fn default_phases() -> Vec<f64> {
    (0..12).map(|i| (90.0 - 15.0 * i as f64).to_radians()).collect()
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var / n))
}

/// Re ρ̃ with ρ̃_mn = ρ_mn e^{i(n−m)φ}, so p(x|φ) = ψ(x)ᵀ Re ρ̃ ψ(x).
fn rotated_real(rho: &CMatrix, phi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rho.nrows(), rho.ncols(), |m, n| {
        (rho[(m, n)] * Complex64::from_polar(1.0, (n as f64 - m as f64) * phi)).re
    })
}

fn quadratic_form(a: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for m in 0..n {
        let mut row = 0.0;
        for k in 0..n {
            row += a[(m, k)] * v[k];
        }
        acc += v[m] * row;
    }
    acc
}

/// Draws `n_per_phase` homodyne outcomes at every phase by inverting the
/// exact marginal tabulated on a grid. Group i uses stream i of a ChaCha8
/// generator seeded with `seed`.
pub fn sample_quadratures(state: &FockState, phases: &[f64], n_per_phase: usize, seed: u64) -> Result<QuadratureDataset> {
    state.require_modes(1)?;
    let mom = moments(state)?;
    let rho = state.clone().normalized().into_matrix();
    let d = rho.nrows();
    let groups = phases
        .iter()
        .enumerate()
        .map(|(i, &phi)| {
            let rr = rotated_real(&rho, phi);
            let (s, c) = libm::sincos(phi);
            let center = mom.mean_x * c + mom.mean_p * s;
            let sigma = libm::sqrt(mom.variance_at(phi).max(1e-6));
            // Widen until the density at the window edges is negligible.
            let mut half = 8.0 * sigma;
            let pdf = |x: f64| quadratic_form(&rr, &hermite_functions(x, d)).max(0.0);
            while half < 60.0 && pdf(center - half).max(pdf(center + half)) > 1e-14 {
                half *= 1.5;
            }
            let points = 4097;
            let h = 2.0 * half / (points - 1) as f64;
            let xs: Vec<f64> = (0..points).map(|k| center - half + h * k as f64).collect();
            let mut cdf = vec![0.0; points];
            let mut prev = pdf(xs[0]);
            for k in 1..points {
                let cur = pdf(xs[k]);
                cdf[k] = cdf[k - 1] + 0.5 * h * (prev + cur);
                prev = cur;
            }
            let total = cdf[points - 1];
            cdf.iter_mut().for_each(|v| *v /= total);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let samples = (0..n_per_phase)
                .map(|_| {
                    let u: f64 = rng.random();
                    let j = cdf.partition_point(|&v| v < u).clamp(1, points - 1);
                    let (c0, c1) = (cdf[j - 1], cdf[j]);
                    let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                    xs[j - 1] + f * h
                })
                .collect();
            QuadratureGroup { phase: phi, samples }
        })
        .collect();
    Ok(QuadratureDataset { groups, seed, source: String::from("sampled from model state") })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub cutoff: usize,
    pub max_iters: usize,
    /// Stop once the per-sample log-likelihood gain drops below this.
    pub tol: f64,
    pub bins: usize,
    /// Bins cover the pooled mean ± this many pooled standard deviations.
    pub window_sigmas: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { cutoff: 20, max_iters: 2000, tol: 1e-9, bins: 120, window_sigmas: 6.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MleWarning {
    /// Fewer than two distinct phases: the state is not identifiable.
    IllPosed,
    NotConverged,
    /// Samples outside the binning window were ignored.
    SamplesOutsideWindow(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub state: FockState,
    pub iterations: usize,
    /// Mean log-likelihood per sample of the returned state.
    pub log_likelihood: f64,
    /// Likelihood after every accepted iteration, starting with the initial guess.
    pub history: Vec<f64>,
    pub warnings: Vec<MleWarning>,
}

impl MleResult {
    pub fn converged(&self) -> bool {
        !self.warnings.iter().any(|w| matches!(w, MleWarning::NotConverged | MleWarning::IllPosed))
    }
}

/// Binned homodyne projectors Π_{φ,b} = P_φ Q_b P_φ†, P_φ = diag(e^{ikφ}),
/// Q_b = ∫_bin ψ ψᵀ.
struct Binned {
    phases: Vec<f64>,
    counts: Vec<Vec<f64>>,
    q: Vec<DMatrix<f64>>,
    g_inv: CMatrix,
    g: CMatrix,
    total: f64,
}

impl Binned {
    fn new(data: &QuadratureDataset, opts: &MleOptions) -> (Self, usize) {
        let d = opts.cutoff;
        let all = data.groups.iter().flat_map(|g| g.samples.iter().copied());
        let n = data.total() as f64;
        let mean = all.clone().sum::<f64>() / n;
        let sd = libm::sqrt(all.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).max(0.5);
        let (lo, hi) = (mean - opts.window_sigmas * sd, mean + opts.window_sigmas * sd);
        let width = (hi - lo) / opts.bins as f64;
        let mut outside = 0;
        let counts = data
            .groups
            .iter()
            .map(|g| {
                let mut c = vec![0.0; opts.bins];
                for &x in &g.samples {
                    let b = libm::floor((x - lo) / width);
                    if b >= 0.0 && (b as usize) < opts.bins {
                        c[b as usize] += 1.0;
                    } else {
                        outside += 1;
                    }
                }
                c
            })
            .collect();
        let (z, w) = gauss_legendre(8);
        let q: Vec<DMatrix<f64>> = (0..opts.bins)
            .map(|b| {
                let a = lo + width * b as f64;
                let mut m = DMatrix::zeros(d, d);
                for (zi, wi) in z.iter().zip(&w) {
                    let psi = hermite_functions(a + 0.5 * width * (zi + 1.0), d);
                    let wt = 0.5 * width * wi;
                    for i in 0..d {
                        for j in 0..d {
                            m[(i, j)] += wt * psi[i] * psi[j];
                        }
                    }
                }
                m
            })
            .collect();
        let phases: Vec<f64> = data.groups.iter().map(|g| g.phase).collect();
        let qsum = q.iter().fold(DMatrix::<f64>::zeros(d, d), |acc, m| acc + m);
        let mut g = CMatrix::zeros(d, d);
        for &phi in &phases {
            g += unrotate(&qsum, phi);
        }
        let (vals, vecs) = hermitian_eigen(&g);
        let mut scaled = vecs.clone();
        for (j, v) in vals.iter().enumerate() {
            let s = 1.0 / v.max(1e-12);
            for i in 0..d {
                scaled[(i, j)] *= s;
            }
        }
        let g_inv = &scaled * vecs.adjoint();
        let total = n - outside as f64;
        (Self { phases, counts, q, g_inv, g, total }, outside)
    }

    fn probs(&self, rho: &CMatrix) -> Vec<Vec<f64>> {
        self.phases
            .iter()
            .map(|&phi| {
                let rr = rotated_real(rho, phi);
                self.q.iter().map(|q| q.component_mul(&rr).sum()).collect()
            })
            .collect()
    }

    /// Mean log-likelihood per sample, normalized by the projector sum.
    fn log_likelihood(&self, rho: &CMatrix, probs: &[Vec<f64>]) -> f64 {
        let mut acc = 0.0;
        for (c, p) in self.counts.iter().zip(probs) {
            for (&n, &pb) in c.iter().zip(p) {
                if n > 0.0 {
                    acc += n * libm::log(pb.max(1e-300));
                }
            }
        }
        let norm = (&self.g * rho).trace().re / self.phases.len() as f64;
        acc / self.total - libm::log(norm)
    }

    /// A = G⁻¹ R scaled so that A = I at the likelihood maximum.
    fn step_operator(&self, rho: &CMatrix, probs: &[Vec<f64>]) -> CMatrix {
        let d = rho.nrows();
        let mut r = CMatrix::zeros(d, d);
        for ((c, p), &phi) in self.counts.iter().zip(probs).zip(&self.phases) {
            let mut w = DMatrix::<f64>::zeros(d, d);
            for ((&n, &pb), q) in c.iter().zip(p).zip(&self.q) {
                if n > 0.0 && pb > 0.0 {
                    w += q * (n / pb);
                }
            }
            r += unrotate(&w, phi);
        }
        let scale = (&self.g * rho).trace().re / self.total;
        &self.g_inv * r * Complex64::new(scale, 0.0)
    }
}

/// P_φ W P_φ† for real symmetric W.
fn unrotate(w: &DMatrix<f64>, phi: f64) -> CMatrix {
    CMatrix::from_fn(w.nrows(), w.ncols(), |a, b| Complex64::from_polar(w[(a, b)], (a as f64 - b as f64) * phi))
}

fn normalize(rho: CMatrix) -> CMatrix {
    let rho = hermitize(&rho);
    let tr = rho.trace().re;
    rho / Complex64::new(tr, 0.0)
}

/// Iterative RρR maximum-likelihood reconstruction over binned projectors.
///
/// Every step is accepted only if the likelihood does not drop; otherwise
/// the step operator is diluted toward the identity, halving the mixing
/// from 0.5 until it does.
pub fn mle_reconstruct(data: &QuadratureDataset, opts: &MleOptions) -> Result<MleResult> {
    data.validate()?;
    if data.total() < 100 {
        return Err(Error::InvalidDataset(alloc::format!("{} samples, need at least 100", data.total())));
    }
    if opts.cutoff < 2 {
        return Err(Error::CutoffTooSmall(opts.cutoff));
    }
    if opts.bins < 2 || !(opts.window_sigmas > 0.0) {
        return Err(Error::OutOfRange { name: "bins", value: opts.bins as f64, range: "[2, inf) with a positive window" });
    }
    let (binned, outside) = Binned::new(data, opts);
    let d = opts.cutoff;
    let mut warnings = Vec::new();
    if data.distinct_angles() < 2 {
        warnings.push(MleWarning::IllPosed);
    }
    if outside > 0 {
        warnings.push(MleWarning::SamplesOutsideWindow(outside));
    }
    let mut rho = CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0);
    let mut probs = binned.probs(&rho);
    let mut ll = binned.log_likelihood(&rho, &probs);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let eye = CMatrix::identity(d, d);
    while iterations < opts.max_iters {
        iterations += 1;
        let a = binned.step_operator(&rho, &probs);
        let mut mixing = 1.0;
        let mut accepted = None;
        while mixing > 1e-4 {
            let am = &eye * Complex64::new(1.0 - mixing, 0.0) + &a * Complex64::new(mixing, 0.0);
            let cand = normalize(&am * &rho * am.adjoint());
            let cp = binned.probs(&cand);
            let cl = binned.log_likelihood(&cand, &cp);
            if cl >= ll - 1e-12 {
                accepted = Some((cand, cp, cl));
                break;
            }
            mixing = if mixing == 1.0 { 0.5 } else { 0.5 * mixing };
        }
        let Some((cand, cp, cl)) = accepted else {
            converged = true;
            break;
        };
        let gain = cl - ll;
        rho = cand;
        probs = cp;
        ll = cl;
        history.push(ll);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(MleWarning::NotConverged);
    }
    let state = FockState::from_matrix(vec![d], rho)?;
    Ok(MleResult { state, iterations, log_likelihood: ll, history, warnings })
}

/// W(0,0).
pub fn negativity(state: &FockState) -> Result<f64> {
    wigner_origin_parity(state)
}

/// (Δ²x, Δ²p): output central variances divided by the input ones.
pub fn normalized_variances(out: &FockState, input: &FockState) -> Result<(f64, f64)> {
    let (mo, mi) = (moments(out)?, moments(input)?);
    for v in [mi.var_x, mi.var_p] {
        if !(v > 0.0) {
            return Err(Error::OutOfRange { name: "input variance", value: v, range: "(0, inf)" });
        }
    }
    Ok((mo.var_x / mi.var_x, mo.var_p / mi.var_p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EllipseFit {
    /// Minor-axis variance relative to vacuum, in dB.
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    /// Direction of the minor axis from the x axis, in (−90°, 90°].
    pub angle_degrees: f64,
    /// [[C_xx, C_xp], [C_xp, C_pp]].
    pub covariance: [[f64; 2]; 2],
    /// RMS residual of the variance fit.
    pub residual: f64,
}

/// Least-squares fit of Var(φ) = C_xx cos²φ + C_pp sin²φ + 2C_xp sinφcosφ
/// to (phase, variance) pairs.
pub fn ellipse_from_variances(points: &[(f64, f64)]) -> Result<EllipseFit> {
    let distinct = distinct_mod_pi(points.iter().map(|p| p.0));
    if distinct < 3 {
        return Err(Error::RankDeficientAngles(distinct));
    }
    let row = |phi: f64| {
        let (s, c) = libm::sincos(phi);
        Vector3::new(c * c, s * s, 2.0 * s * c)
    };
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for &(phi, v) in points {
        let a = row(phi);
        ata += a * a.transpose();
        atb += a * v;
    }
    let sol = ata.lu().solve(&atb).ok_or(Error::RankDeficientAngles(distinct))?;
    let (cxx, cpp, cxp) = (sol[0], sol[1], sol[2]);
    let residual = libm::sqrt(
        points.iter().map(|&(phi, v)| (row(phi).dot(&sol) - v) * (row(phi).dot(&sol) - v)).sum::<f64>() / points.len() as f64,
    );
    let cov = Matrix2::new(cxx, cxp, cxp, cpp);
    let half_sum = 0.5 * (cxx + cpp);
    let radius = libm::hypot(0.5 * (cxx - cpp), cxp);
    let (minor, major) = (half_sum - radius, half_sum + radius);
    let angle = if radius <= 1e-12 * half_sum.abs().max(1.0) {
        0.0
    } else {
        // Major axis sits at ½ atan2(2C_xp, C_xx − C_pp); the minor axis is 90° away.
        let mut a = (0.5 * libm::atan2(2.0 * cxp, cxx - cpp)).to_degrees() + 90.0;
        while a > 90.0 {
            a -= 180.0;
        }
        while a <= -90.0 {
            a += 180.0;
        }
        a
    };
    if !(minor > 0.0) {
        return Err(Error::NotPsd(minor));
    }
    Ok(EllipseFit {
        squeezing_db: variance_to_db(minor),
        antisqueezing_db: variance_to_db(major),
        angle_degrees: angle,
        covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
        residual,
    })
}

/// Ellipse fit to the per-phase sample variances of a dataset.
pub fn gaussian_ellipse_fit(data: &QuadratureDataset) -> Result<EllipseFit> {
    data.validate()?;
    let points: Vec<(f64, f64)> = data
        .groups
        .iter()
        .map(|g| {
            let n = g.samples.len() as f64;
            let mean = g.samples.iter().sum::<f64>() / n;
            let var = g.samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
            (g.phase, var)
        })
        .collect();
    ellipse_from_variances(&points)
}

/// Ellipse fit to exact variances of a state at the default phases.
pub fn gaussian_ellipse_fit_state(state: &FockState) -> Result<EllipseFit> {
    let m = moments(state)?;
    let points: Vec<(f64, f64)> = default_phases().into_iter().map(|phi| (phi, m.variance_at(phi))).collect();
    ellipse_from_variances(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_loss, fidelity};
    use crate::gate::ideal_squeeze;
    use crate::sources::{make_cat, CatSpec};

    fn sample_var(s: &[f64]) -> f64 {
        let n = s.len() as f64;
        let m = s.iter().sum::<f64>() / n;
        s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn default_phase_grid() {
        let p = default_phases();
        assert_eq!(p.len(), 12);
        assert!((p[0].to_degrees() - 90.0).abs() < 1e-12);
        assert!((p[11].to_degrees() + 75.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_samples_have_half_variance() {
        let vac = FockState::vacuum(1, 10).unwrap();
        let data = sample_quadratures(&vac, &default_phases(), 3000, 11).unwrap();
        // Standard deviation of a sample variance is σ²√(2/(n−1)).
        let bound = 3.0 * 0.5 * libm::sqrt(2.0 / 2999.0);
        for g in &data.groups {
            assert!((sample_var(&g.samples) - 0.5).abs() < bound);
        }
        assert_eq!(data, sample_quadratures(&vac, &default_phases(), 3000, 11).unwrap());
    }

    #[test]
    fn squeezed_variance_ratio() {
        let r = 0.4;
        let sq = FockState::squeezed_vacuum(r, 40).unwrap();
        let data = sample_quadratures(&sq, &[0.0, PI / 2.0], 20000, 3).unwrap();
        let ratio = sample_var(&data.groups[0].samples) / sample_var(&data.groups[1].samples);
        let rel = 3.0 * libm::sqrt(4.0 / 19999.0);
        assert!((ratio / libm::exp(-4.0 * r) - 1.0).abs() < rel);
    }

    #[test]
    fn split_partitions_every_group() {
        let vac = FockState::vacuum(1, 6).unwrap();
        let data = sample_quadratures(&vac, &default_phases(), 3000, 1).unwrap();
        let parts = data.split(5).unwrap();
        assert_eq!(parts.len(), 5);
        assert_eq!(parts.iter().map(|p| p.total()).sum::<usize>(), data.total());
        assert!(data.split(3001).is_err());
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(m, 3.0);
        assert!((se - libm::sqrt(2.5 / 5.0)).abs() < 1e-12);
    }

    #[test]
    fn vacuum_roundtrip() {
        let vac = FockState::vacuum(1, 12).unwrap();
        let data = sample_quadratures(&vac, &default_phases(), 3000, 5).unwrap();
        let res = mle_reconstruct(&data, &MleOptions { cutoff: 12, ..Default::default() }).unwrap();
        assert!(fidelity(&res.state, &vac).unwrap() >= 0.99);
        for w in res.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn cat_roundtrip() {
        let (cat, _) = make_cat(&CatSpec::default(), 16).unwrap();
        let data = sample_quadratures(&cat, &default_phases(), 3000, 9).unwrap();
        let res = mle_reconstruct(&data, &MleOptions { cutoff: 16, ..Default::default() }).unwrap();
        assert!(fidelity(&res.state, &cat).unwrap() >= 0.98);
        let dw = negativity(&res.state).unwrap() - negativity(&cat).unwrap();
        assert!(dw.abs() <= 0.02 / PI);
    }

    #[test]
    fn single_angle_is_flagged() {
        let vac = FockState::vacuum(1, 8).unwrap();
        let data = sample_quadratures(&vac, &[0.0], 500, 2).unwrap();
        let res = mle_reconstruct(&data, &MleOptions { cutoff: 8, max_iters: 50, ..Default::default() }).unwrap();
        assert!(res.warnings.contains(&MleWarning::IllPosed));
        assert!(!res.converged());
    }

    #[test]
    fn negativity_reference_values() {
        let one = FockState::number(&[1], 5).unwrap();
        let vac = FockState::vacuum(1, 5).unwrap();
        assert!((negativity(&one).unwrap() + 1.0 / PI).abs() < 1e-14);
        assert!((negativity(&vac).unwrap() - 1.0 / PI).abs() < 1e-14);
        let (cat, _) = make_cat(&CatSpec::default(), 30).unwrap();
        let sq = ideal_squeeze(&cat, 0.3).unwrap();
        assert!((negativity(&sq).unwrap() - negativity(&cat).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn normalized_variances_of_ideal_squeeze() {
        let cat = make_cat(&CatSpec::default(), 30).unwrap().0.with_cutoff(60).unwrap();
        assert_eq!(normalized_variances(&cat, &cat).unwrap(), (1.0, 1.0));
        let r = 0.26;
        let sq = ideal_squeeze(&cat, r).unwrap();
        let (dx, dp) = normalized_variances(&sq, &cat).unwrap();
        assert!((dx - libm::exp(-2.0 * r)).abs() < 1e-6);
        assert!((dp - libm::exp(2.0 * r)).abs() < 1e-6);
    }

    #[test]
    fn ellipse_reference_cases() {
        let vac = FockState::vacuum(1, 6).unwrap();
        let f = gaussian_ellipse_fit_state(&vac).unwrap();
        assert!(f.squeezing_db.abs() < 1e-10 && f.antisqueezing_db.abs() < 1e-10);
        assert_eq!(f.angle_degrees, 0.0);

        let r = 0.33;
        let sq = FockState::squeezed_vacuum(r, 50).unwrap();
        let f = gaussian_ellipse_fit_state(&sq).unwrap();
        let db = 2.0 * r * 10.0 / core::f64::consts::LN_10;
        assert!((f.squeezing_db + db).abs() < 1e-8);
        assert!((f.antisqueezing_db - db).abs() < 1e-8);
        assert!(f.angle_degrees.abs() < 1e-8);
        assert!(f.residual < 1e-10);

        // rotate(θ) maps x̂_φ statistics to x̂_{φ+θ}, so the minor axis moves to −θ.
        let lossy = apply_loss(&crate::fock::rotate(&sq, 0.5).unwrap(), 0, 0.9).unwrap();
        let f = gaussian_ellipse_fit_state(&lossy).unwrap();
        assert!((f.angle_degrees + 0.5f64.to_degrees()).abs() < 1e-6);
        assert!(f.residual < 1e-10);
    }

    #[test]
    fn ellipse_needs_three_angles() {
        assert_eq!(ellipse_from_variances(&[(0.0, 0.5), (PI, 0.5), (1.0, 0.5)]), Err(Error::RankDeficientAngles(2)));
    }

    #[test]
    fn ellipse_from_samples_tracks_exact_fit() {
        let sq = FockState::squeezed_vacuum(0.3, 40).unwrap();
        let data = sample_quadratures(&sq, &default_phases(), 3000, 4).unwrap();
        let f = gaussian_ellipse_fit(&data).unwrap();
        let exact = gaussian_ellipse_fit_state(&sq).unwrap();
        assert!((f.squeezing_db - exact.squeezing_db).abs() < 0.2);
        assert!((f.antisqueezing_db - exact.antisqueezing_db).abs() < 0.2);
    }
}
