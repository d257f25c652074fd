use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{probe_stream, stream};
use crate::scalar::fmt17;

use super::{binomial_half_width, simulate_with, ChainKernel, DriftFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct MassRow {
    pub n: usize,
    /// `P(f(X_n) > R)`.
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `epsilon + f(x0) / (n lambda_1)`, NaN when no bound was requested.
    pub bound: f64,
    /// `estimate - half width > bound`.
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassProfile {
    pub r: f64,
    pub trials: usize,
    pub rows: Vec<MassRow>,
}

impl MassProfile {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation).count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &str) -> Result<()> {
        write!(out, "{preamble}")?;
        writeln!(out, "n,estimate,ci_low,ci_high,bound")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.n, fmt17(r.estimate), fmt17(r.ci_low), fmt17(r.ci_high), fmt17(r.bound))?;
        }
        Ok(())
    }
}

/// Monte Carlo `P_{x0}(f(X_n) > r)` on a grid of times. With
/// `bound = Some((epsilon, lambda1))` each row is compared with
/// `epsilon + f(x0)/(n lambda1)`.
#[allow(clippy::too_many_arguments)]
pub fn mass_escape_profile<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    r: f64,
    x0: &K::State,
    grid: &[usize],
    trials: usize,
    seed: u64,
    bound: Option<(f64, f64)>,
    z: f64,
) -> Result<MassProfile> {
    if grid.is_empty() || trials == 0 {
        return Err(Error::InvalidParams("need a non-empty grid and trials >= 1".into()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let horizon = *sorted.last().unwrap();
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0usize; sorted.len()],
            |mut acc, t| {
                let mut rng = stream(seed, t as u64);
                let mut x = x0.clone();
                let mut next = 0;
                for n in 0..=horizon {
                    if n > 0 {
                        x = kernel.step(&x, &mut rng);
                    }
                    while next < sorted.len() && sorted[next] == n {
                        if f.eval(&x) > r {
                            acc[next] += 1;
                        }
                        next += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| vec![0usize; sorted.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let fx = f.eval(x0);
    let rows = sorted
        .iter()
        .zip(&counts)
        .map(|(&n, &c)| {
            let estimate = c as f64 / trials as f64;
            let hw = binomial_half_width(estimate, trials, z);
            let b = match bound {
                Some((eps, lambda1)) if n > 0 => eps + fx / (n as f64 * lambda1),
                Some(_) => f64::INFINITY,
                None => f64::NAN,
            };
            MassRow {
                n,
                estimate,
                ci_low: (estimate - hw).max(0.0),
                ci_high: (estimate + hw).min(1.0),
                bound: b,
                violation: estimate - hw > b,
            }
        })
        .collect();
    Ok(MassProfile { r, trials, rows })
}

/// Share of `k in 1..=n` with `f(X_k) > r` along one trajectory.
pub fn occupation_fraction<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    r: f64,
    x0: &K::State,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    let mut rng = stream(seed, 0);
    let mut x = x0.clone();
    let mut above = 0usize;
    for _ in 0..n {
        x = kernel.step(&x, &mut rng);
        if f.eval(&x) > r {
            above += 1;
        }
    }
    Ok(above as f64 / n as f64)
}

/// Summary of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryStats {
    pub seed: u64,
    pub n: usize,
    pub thresholds: Vec<f64>,
    /// `#{k in 1..=n : f(X_k) > thresholds[j]}`.
    pub above: Vec<usize>,
    /// Gaps between successive visits to `{f <= r0}`.
    pub return_times: Vec<usize>,
    pub terminal: f64,
}

pub fn trajectory_stats<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    x0: &K::State,
    n: usize,
    seed: u64,
    thresholds: &[f64],
    r0: f64,
) -> TrajectoryStats {
    let path = simulate_with(kernel, x0, n, &mut stream(seed, 0));
    let values: Vec<f64> = path.iter().map(|x| f.eval(x)).collect();
    let above = thresholds.iter().map(|&t| values[1..].iter().filter(|&&v| v > t).count()).collect();
    let mut return_times = Vec::new();
    let mut last = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v <= r0 {
            return_times.push(k - last);
            last = k;
        }
    }
    TrajectoryStats { seed, n, thresholds: thresholds.to_vec(), above, return_times, terminal: values[n] }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenewalWindow {
    /// Smallest `l <= max_window` that works for every probe and every `n`,
    /// if any.
    pub window: Option<usize>,
    /// `min_{probe, n} P(some X_i in K for i in [n-l, n])` at that `l`.
    pub worst_probability: f64,
}

/// Search for a window length `l` with
/// `P_x(exists i in [n-l, n] : X_i in K) > 1 - alpha` for all probes
/// `x in K` and all `n <= horizon`.
#[allow(clippy::too_many_arguments)]
pub fn renewal_window<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    r0: f64,
    starts: &[K::State],
    alpha: f64,
    horizon: usize,
    trials: usize,
    seed: u64,
    max_window: usize,
) -> Result<RenewalWindow> {
    if starts.iter().any(|x| !(f.eval(x) <= r0)) {
        return Err(Error::InvalidParams("renewal probes must start inside K".into()));
    }
    if trials == 0 || starts.is_empty() {
        return Err(Error::InvalidParams("need trials >= 1 and at least one probe".into()));
    }
    let width = max_window + 2;
    let need = (1.0 - alpha) * trials as f64;
    let mut required = 0usize;
    let mut hists: Vec<Vec<usize>> = Vec::with_capacity(starts.len());
    for (p, x0) in starts.iter().enumerate() {
        // hist[n * width + g] = #{trajectories with n - last_visit(n) = g}, g capped
        let hist = (0..trials)
            .into_par_iter()
            .fold(
                || vec![0usize; (horizon + 1) * width],
                |mut acc, t| {
                    let mut rng = stream(seed, probe_stream(p, t));
                    let mut x = x0.clone();
                    let mut last = 0;
                    acc[0] += 1;
                    for n in 1..=horizon {
                        x = kernel.step(&x, &mut rng);
                        if f.eval(&x) <= r0 {
                            last = n;
                        }
                        acc[n * width + (n - last).min(width - 1)] += 1;
                    }
                    acc
                },
            )
            .reduce(|| vec![0usize; (horizon + 1) * width], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
        for n in 0..=horizon {
            let mut cum = 0usize;
            let mut l_n = width - 1;
            for g in 0..width - 1 {
                cum += hist[n * width + g];
                if cum as f64 > need {
                    l_n = g;
                    break;
                }
            }
            required = required.max(l_n);
        }
        hists.push(hist);
    }
    let window = (required <= max_window).then_some(required);
    let l = required.min(max_window);
    let mut worst = 1.0f64;
    for hist in &hists {
        for n in 0..=horizon {
            let cum: usize = hist[n * width..n * width + l + 1].iter().sum();
            worst = worst.min(cum as f64 / trials as f64);
        }
    }
    Ok(RenewalWindow { window, worst_probability: worst })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecLawCalibration {
    pub window: usize,
    pub alpha: f64,
    pub r: f64,
    /// `alpha + sup_{y in K} P_y(max_{j <= window} f(X_j) > r)`, upper CI.
    pub epsilon: f64,
    /// `(R, excursion probability upper CI)` for every grid value.
    pub excursions: Vec<(f64, f64)>,
}

/// Empirical `(R, epsilon)` pair for the bound
/// `P_x(f(X_n) > R) < epsilon + f(x)/(n lambda_1)`: a renewal window `l` is
/// found first, then `R` is the smallest grid value for which a chain
/// started in `K` exceeds `R` within `l` steps with probability at most
/// `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn rec_law_calibration<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    r0: f64,
    starts: &[K::State],
    alpha: f64,
    horizon: usize,
    trials: usize,
    seed: u64,
    r_grid: &[f64],
    max_window: usize,
    z: f64,
) -> Result<RecLawCalibration> {
    if r_grid.is_empty() {
        return Err(Error::InvalidParams("empty R grid".into()));
    }
    let renewal = renewal_window(kernel, f, r0, starts, alpha, horizon, trials, seed, max_window)?;
    let window = renewal
        .window
        .ok_or_else(|| Error::InvalidParams(format!("no renewal window up to {max_window} at alpha = {alpha}")))?;
    let excursion_seed = crate::rng::derive_seed(seed, 0x5ec0);
    let mut grid = r_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut excursions: Vec<(f64, f64)> = grid.iter().map(|&r| (r, 0.0)).collect();
    for (p, y) in starts.iter().enumerate() {
        let maxima: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(excursion_seed, probe_stream(p, t));
                let path = simulate_with(kernel, y, window, &mut rng);
                path.iter().map(|x| f.eval(x)).fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        for (r, e) in excursions.iter_mut() {
            let q = maxima.iter().filter(|&&m| m > *r).count() as f64 / trials as f64;
            *e = e.max(q + binomial_half_width(q, trials, z));
        }
    }
    let &(r, exc) = excursions.iter().find(|(_, e)| *e <= alpha).unwrap_or_else(|| excursions.last().unwrap());
    Ok(RecLawCalibration { window, alpha, r, epsilon: alpha + exc, excursions })
}
