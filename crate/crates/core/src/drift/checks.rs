use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dist::{build_dominating_pair, DriftSpec, FiniteDist};
use crate::error::{Error, Result};
use crate::lattice::{small_sublattices, LatticeBasis, ENUMERATION_CAP};
use crate::linalg::{norm, Mat};
use crate::rng::{derive_seed, probe_stream, stream};
use crate::scalar::Real;

use super::fa::{f_a, phi_a_covolume, positive_sublattices, variation_constant, QuasiNormParams};
use super::{LatticeWalk, MatrixMeasure};

/// Which norm `log ||Phi(g)||` is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    /// `wedge^i R^d`.
    Exterior(usize),
    /// The standard representation on `R^d`.
    Full,
}

/// `log ||Phi(g)||` (operator norm).
pub fn log_norm<T: Real>(g: &Mat<T>, rep: Representation) -> f64 {
    let s = g.singular_values();
    let i = match rep {
        Representation::Exterior(i) => i,
        Representation::Full => 1,
    };
    s[..i].iter().map(|x| x.as_f64().ln()).sum()
}

/// A drift function controlled by `log ||Phi(g)||`: `f(g x) - f(x) <= C log ||Phi(g)||`.
pub trait ControlledDrift<T: Real>: Sync {
    fn drift(&self, x: &LatticeBasis<T>) -> Result<T>;
    fn representation(&self) -> Representation;
    fn constant(&self) -> T;
}

impl<T: Real> ControlledDrift<T> for QuasiNormParams<T> {
    fn drift(&self, x: &LatticeBasis<T>) -> Result<T> {
        Ok(f_a(x, self)?.value)
    }

    fn representation(&self) -> Representation {
        Representation::Full
    }

    fn constant(&self) -> T {
        variation_constant(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecreaseRow {
    pub f_before: f64,
    /// `f_A(x) <= A0`: the lattice is not tested.
    pub skipped: bool,
    /// Share of samples with `f_A(g x) <= f_A(x) - n lambda`.
    pub fraction: f64,
    pub mean_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecreaseReport {
    pub n: usize,
    pub lambda: f64,
    pub rows: Vec<DecreaseRow>,
}

impl DecreaseReport {
    /// Smallest decrease fraction over tested lattices.
    pub fn min_fraction(&self) -> Option<f64> {
        self.rows.iter().filter(|r| !r.skipped).map(|r| r.fraction).reduce(f64::min)
    }

    pub fn tested(&self) -> usize {
        self.rows.iter().filter(|r| !r.skipped).count()
    }
}

/// `lambda` defaults to half the smallest exponent.
pub fn default_decrease_rate<T: Real>(params: &QuasiNormParams<T>) -> f64 {
    params.exponents().iter().map(|l| l.as_f64()).fold(f64::INFINITY, f64::min) / 2.0
}

/// For each lattice with `f_A > a0`, the share of `g ~ mu^{*n}` with
/// `f_A(g x) <= f_A(x) - n lambda`. `g x` is built one factor at a time,
/// reducing after each.
#[allow(clippy::too_many_arguments)]
pub fn check_probable_decrease<T: Real>(
    mu: &MatrixMeasure<T>,
    params: &QuasiNormParams<T>,
    n: usize,
    lattices: &[LatticeBasis<T>],
    a0: f64,
    lambda: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<DecreaseReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("need trials >= 1".into()));
    }
    let lambda = lambda.unwrap_or_else(|| default_decrease_rate(params));
    let walk = LatticeWalk::new(mu.clone());
    let rows = lattices
        .par_iter()
        .enumerate()
        .map(|(p, x)| {
            let before = f_a(x, params)?.value.as_f64();
            if before <= a0 {
                return Ok(DecreaseRow { f_before: before, skipped: true, fraction: f64::NAN, mean_change: f64::NAN });
            }
            let (mut hits, mut change) = (0usize, 0.0);
            for t in 0..trials {
                let mut rng = stream(seed, probe_stream(p, t));
                let mut y = x.clone();
                for _ in 0..n {
                    y = walk.apply(&y, mu.sample(&mut rng));
                }
                let after = f_a(&y, params)?.value.as_f64();
                if after <= before - n as f64 * lambda {
                    hits += 1;
                }
                change += after - before;
            }
            Ok(DecreaseRow {
                f_before: before,
                skipped: false,
                fraction: hits as f64 / trials as f64,
                mean_change: change / trials as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecreaseReport { n, lambda, rows })
}

/// `None` when `f_A(x) <= a0`; otherwise whether every rank has at most one
/// primitive sublattice with `phi_A >= f_A(x) - a0`.
pub fn check_uniqueness_at_top<T: Real>(
    basis: &LatticeBasis<T>,
    params: &QuasiNormParams<T>,
    a0: T,
) -> Result<Option<bool>> {
    let top = f_a(basis, params)?.value;
    if top <= a0 {
        return Ok(None);
    }
    let level = top - a0;
    for i in 1..params.dim() {
        // phi_A >= level  <=>  covol <= exp(-(lambda level + A i (d-i)))
        let bound = (-(params.exponent(i) * level + params.shift(i))).exp();
        let bound = bound * (T::one() + T::lit(T::GEOM_TOL));
        let count = small_sublattices(basis, i, bound, ENUMERATION_CAP)?
            .into_iter()
            .filter(|(_, c)| phi_a_covolume(*c, i, params) >= level)
            .count();
        if count > 1 {
            return Ok(Some(false));
        }
    }
    Ok(Some(true))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationStep {
    pub a: f64,
    pub tested: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessCalibration {
    pub a: f64,
    pub log: Vec<CalibrationStep>,
}

/// Double `A` from `a_start` until no validation lattice with `f_A > a0`
/// violates uniqueness at the top, with at least `min_tested` of them.
pub fn calibrate_uniqueness<T: Real>(
    params: &QuasiNormParams<T>,
    a0: T,
    a_start: T,
    lattices: &[LatticeBasis<T>],
    min_tested: usize,
    max_doublings: usize,
) -> Result<UniquenessCalibration> {
    let mut a = a_start;
    let mut log = Vec::new();
    for _ in 0..=max_doublings {
        let p = params.with_a(a)?;
        let results = lattices.par_iter().map(|x| check_uniqueness_at_top(x, &p, a0)).collect::<Result<Vec<_>>>()?;
        let tested = results.iter().filter(|r| r.is_some()).count();
        let violations = results.iter().filter(|r| **r == Some(false)).count();
        log.push(CalibrationStep { a: a.as_f64(), tested, violations });
        if tested < min_tested {
            return Err(Error::InvalidParams(format!(
                "only {tested} validation lattices have f_A > A0 at A = {a}; need {min_tested}"
            )));
        }
        if violations == 0 {
            return Ok(UniquenessCalibration { a: a.as_f64(), log });
        }
        a = a + a;
    }
    Err(Error::InvalidParams(format!("uniqueness still fails after {max_doublings} doublings of A")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationReport {
    pub samples: usize,
    /// `(g, Delta)` pairs checked.
    pub pairs: usize,
    pub violations: usize,
    /// `max (phi_A(g Delta) - phi_A(Delta) - C log ||g||)`.
    pub worst_excess: f64,
}

/// `phi_A(g Delta) - phi_A(Delta) <= C log ||g|| + 1e-9` over sublattices
/// with positive `phi_A`, for `g ~ mu^{*m}`.
pub fn check_variation<T: Real>(
    mu: &MatrixMeasure<T>,
    params: &QuasiNormParams<T>,
    m: usize,
    lattices: &[LatticeBasis<T>],
    samples: usize,
    seed: u64,
) -> Result<VariationReport> {
    if lattices.is_empty() {
        return Err(Error::InvalidParams("no lattices".into()));
    }
    let tracked = lattices.par_iter().map(|x| positive_sublattices(x, params)).collect::<Result<Vec<_>>>()?;
    let c = variation_constant(params).as_f64();
    let per_sample: Vec<(usize, usize, f64)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let k = s % lattices.len();
            let mut rng = stream(seed, s as u64);
            let g = mu.sample_product(m, &mut rng);
            let log_g = log_norm(&g, Representation::Full);
            let gx = lattices[k].transformed(&g);
            let (mut pairs, mut bad, mut worst) = (0, 0, f64::NEG_INFINITY);
            for (sub, phi) in &tracked[k] {
                let moved = phi_a_covolume(gx.covolume(sub), sub.rank(), params).as_f64();
                let excess = moved - phi.as_f64() - c * log_g;
                pairs += 1;
                if excess > 1e-9 {
                    bad += 1;
                }
                worst = worst.max(excess);
            }
            (pairs, bad, worst)
        })
        .collect();
    Ok(VariationReport {
        samples,
        pairs: per_sample.iter().map(|x| x.0).sum(),
        violations: per_sample.iter().map(|x| x.1).sum(),
        worst_excess: per_sample.iter().map(|x| x.2).fold(f64::NEG_INFINITY, f64::max),
    })
}

fn log_norm_samples<T: Real>(mu: &MatrixMeasure<T>, rep: Representation, n: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    if let Representation::Exterior(i) = rep {
        if i == 0 || i >= mu.dim() {
            return Err(Error::InvalidParams(format!("rank must lie in 1..{}, got {i}", mu.dim())));
        }
    }
    if trials < 100 {
        return Err(Error::InvalidParams(format!("need at least 100 trials, got {trials}")));
    }
    Ok((0..trials)
        .into_par_iter()
        .map(|t| log_norm(&mu.sample_product(n, &mut stream(seed, t as u64)), rep))
        .collect())
}

/// `E[Z'_n 1_(0,alpha]]` for the empirical law of `Z_n = log ||Phi(g)||`,
/// `g ~ mu^{*n}`.
pub fn truncated_log_norm_expectation<T: Real>(
    mu: &MatrixMeasure<T>,
    rep: Representation,
    n: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0,1], got {alpha}")));
    }
    let z = FiniteDist::empirical(&log_norm_samples(mu, rep, n, trials, seed)?)?;
    Ok(z.truncated_tail_expectation(alpha))
}

/// Dominance certificate for the `n`-step chain of a controlled drift:
/// overshoots are bounded by `C max(0, log ||Phi(g)||)`, and outside
/// `{f <= r0}` the drift drops by `n lambda` with probability `1 - alpha`.
#[allow(clippy::too_many_arguments)]
pub fn sd_certificate<T: Real>(
    mu: &MatrixMeasure<T>,
    rep: Representation,
    c: f64,
    n: usize,
    lambda: f64,
    alpha: f64,
    r0: f64,
    trials: usize,
    seed: u64,
) -> Result<DriftSpec<f64>> {
    let z: Vec<f64> = log_norm_samples(mu, rep, n, trials, seed)?.into_iter().map(|v| c * v.max(0.0)).collect();
    build_dominating_pair(&FiniteDist::empirical(&z)?, r0, n as f64 * lambda, alpha)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    pub probes: usize,
    /// `min` over probe directions of the share of `g ~ mu^{*n}` with
    /// `log ||wedge^i g v|| / lambda^(i) >= n lambda`.
    pub worst_fraction: f64,
    pub pass: bool,
}

/// Uniform expansion of unit vectors in `wedge^i`, measured in the quasi-norm.
#[allow(clippy::too_many_arguments)]
pub fn check_uniform_expansion<T: Real>(
    mu: &MatrixMeasure<T>,
    params: &QuasiNormParams<T>,
    i: usize,
    n: usize,
    lambda: f64,
    alpha: f64,
    probes: usize,
    trials: usize,
    seed: u64,
) -> Result<ExpansionReport> {
    let d = mu.dim();
    if i == 0 || i >= d || probes == 0 || trials == 0 {
        return Err(Error::InvalidParams("need 1 <= i < d, probes >= 1 and trials >= 1".into()));
    }
    let exponent = params.exponent(i).as_f64();
    let fractions: Vec<f64> = (0..probes)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream(derive_seed(seed, 0xd1), p as u64);
            let dim = crate::linalg::binomial(d, i);
            let mut v: Vec<T> = (0..dim).map(|_| T::lit(StandardNormal.sample(&mut rng))).collect();
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            let hits = (0..trials)
                .filter(|&t| {
                    let g = mu.sample_product(n, &mut stream(seed, probe_stream(p, t)));
                    norm(&g.compound(i).mul_vec(&v)).as_f64().ln() / exponent >= n as f64 * lambda
                })
                .count();
            hits as f64 / trials as f64
        })
        .collect();
    let worst = fractions.iter().copied().fold(1.0, f64::min);
    Ok(ExpansionReport { probes, worst_fraction: worst, pass: worst >= 1.0 - alpha })
}
