//! Box-constrained Nelder–Mead minimizer.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Converged once the simplex values span less than `ftol` and every
    /// vertex lies within `xtol` (max norm) of the best one.
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 2000, ftol: 1e-10, xtol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Coordinates seen by the simplex: x = mid + half·sin(z) keeps every trial
/// point inside the box, and the bounds stay reachable.
struct BoxMap {
    mid: Vec<f64>,
    half: Vec<f64>,
}

impl BoxMap {
    fn new(lower: &[f64], upper: &[f64]) -> Self {
        Self {
            mid: lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
            half: lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).collect(),
        }
    }

    fn to_x(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.mid).zip(&self.half).map(|((z, m), h)| m + h * libm::sin(*z)).collect()
    }

    fn to_z(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mid)
            .zip(&self.half)
            .map(|((x, m), h)| if *h > 0.0 { libm::asin(((x - m) / h).clamp(-1.0, 1.0)) } else { 0.0 })
            .collect()
    }
}

/// Restarts allowed after a converged run.
const MAX_RESTARTS: usize = 4;

/// Minimizes `f` inside the box `[lower, upper]`, starting from a simplex
/// built on `x0` with per-coordinate offsets `step`. A converged run is
/// restarted from its best vertex until a restart no longer improves it.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let map = BoxMap::new(lower, upper);
    let mut best = run(&mut f, &map, x0, step, opts, 0);
    for _ in 0..MAX_RESTARTS {
        if !best.converged || best.evals >= opts.max_evals {
            break;
        }
        let next = run(&mut f, &map, &best.x.clone(), step, opts, best.evals);
        let improved = next.value < best.value - opts.ftol;
        best = if next.value <= best.value { next } else { Minimum { evals: next.evals, converged: next.converged, ..best } };
        if !improved {
            break;
        }
    }
    best
}

fn run<F: FnMut(&[f64]) -> f64>(f: &mut F, map: &BoxMap, x0: &[f64], step: &[f64], opts: &NelderMeadOptions, used: usize) -> Minimum {
    let n = x0.len();
    let mut evals = used;
    let mut eval = |z: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(&map.to_x(z));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let start = map.to_z(x0);
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        // Offset of `step` in x near the start, capped so sin stays monotone.
        let slope = (map.half[i] * libm::cos(start[i])).abs().max(0.05 * map.half[i]);
        let dz = if slope > 0.0 { (step[i] / slope).min(0.5) } else { 0.0 };
        v[i] += if start[i] > 0.0 { -dz } else { dz };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|z| eval(z, &mut evals)).collect();
    let mut converged = false;

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let best_x = map.to_x(&simplex[0]);
        let size = simplex[1..]
            .iter()
            .map(|v| map.to_x(v).iter().zip(&best_x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.ftol && size <= opts.xtol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        // Outside contraction if the reflection helped at all, inside otherwise.
        let xc = along(if fr < values[n] { 0.5 } else { -0.5 });
        let fc = eval(&xc, &mut evals);
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for i in 1..=n {
            let best = simplex[0].clone();
            for (x, b) in simplex[i].iter_mut().zip(&best) {
                *x = b + 0.5 * (*x - b);
            }
            values[i] = eval(&simplex[i], &mut evals);
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum { x: map.to_x(&simplex[best]), value: values[best], evals, converged }
}
