use std::io::Write;

use rayon::prelude::*;

use crate::dist::DriftSpec;
use crate::error::{Error, Result};
use crate::rng::{probe_stream, stream, StreamRng};
use crate::scalar::fmt17;

use super::{binomial_half_width, ChainKernel, DriftFunction};

/// Outcome of a first-return search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReturnTime {
    Returned(usize),
    /// No return within the horizon (the payload).
    Censored(usize),
}

impl ReturnTime {
    pub fn value(self) -> usize {
        match self {
            ReturnTime::Returned(n) | ReturnTime::Censored(n) => n,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, ReturnTime::Censored(_))
    }
}

/// Smallest `n >= 1` with `f(X_n) <= r0`, on stream 0 of `seed`.
pub fn first_return_time<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    r0: f64,
    x0: &K::State,
    seed: u64,
    horizon: usize,
) -> ReturnTime {
    return_time_with(kernel, f, r0, x0, horizon, &mut stream(seed, 0))
}

pub(crate) fn return_time_with<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    r0: f64,
    x0: &K::State,
    horizon: usize,
    rng: &mut StreamRng,
) -> ReturnTime {
    let mut x = x0.clone();
    for n in 1..=horizon {
        x = kernel.step(&x, rng);
        if f.eval(&x) <= r0 {
            return ReturnTime::Returned(n);
        }
    }
    ReturnTime::Censored(horizon)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailRow {
    pub n: usize,
    /// `max_probe P(tau >= n)`.
    pub tail: f64,
    pub half_width: f64,
    /// Index into the start set achieving the max.
    pub argmax: usize,
    /// `sum_{k <= n} tail(k)`.
    pub partial_sum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailProfile {
    pub rows: Vec<TailRow>,
    pub trials: usize,
    pub censored_fraction: f64,
}

impl TailProfile {
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &str) -> Result<()> {
        write!(out, "{preamble}")?;
        writeln!(out, "n,tail,partial_sum")?;
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.n, fmt17(r.tail), fmt17(r.partial_sum))?;
        }
        Ok(())
    }
}

/// Monte Carlo estimates of `sup_{x in starts} P_x(tau >= n)` for
/// `n = 1..=horizon`, with Wald half-widths at `z` standard errors.
#[allow(clippy::too_many_arguments)]
pub fn return_tail_profile<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    r0: f64,
    starts: &[K::State],
    trials: usize,
    horizon: usize,
    seed: u64,
    z: f64,
) -> Result<TailProfile> {
    if trials == 0 || starts.is_empty() || horizon == 0 {
        return Err(Error::InvalidParams("need trials >= 1, horizon >= 1 and a non-empty start set".into()));
    }
    let mut per_probe: Vec<Vec<usize>> = Vec::with_capacity(starts.len());
    let mut censored = 0usize;
    for (p, x0) in starts.iter().enumerate() {
        let times: Vec<ReturnTime> = (0..trials)
            .into_par_iter()
            .map(|t| return_time_with(kernel, f, r0, x0, horizon, &mut stream(seed, probe_stream(p, t))))
            .collect();
        // at_least[n] = #{tau >= n}
        let mut at_least = vec![0usize; horizon + 2];
        for t in &times {
            let reach = match t {
                ReturnTime::Returned(n) => *n,
                ReturnTime::Censored(_) => {
                    censored += 1;
                    horizon + 1
                }
            };
            at_least[reach] += 1;
        }
        for n in (0..=horizon).rev() {
            at_least[n] += at_least[n + 1];
        }
        per_probe.push(at_least);
    }
    let mut rows = Vec::with_capacity(horizon);
    let mut partial = 0.0;
    for n in 1..=horizon {
        let (argmax, count) = per_probe
            .iter()
            .enumerate()
            .map(|(p, c)| (p, c[n]))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let tail = count as f64 / trials as f64;
        partial += tail;
        rows.push(TailRow { n, tail, half_width: binomial_half_width(tail, trials, z), argmax, partial_sum: partial });
    }
    let censored_fraction = censored as f64 / (trials * starts.len()) as f64;
    Ok(TailProfile { rows, trials, censored_fraction })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FosterReport {
    pub mean: f64,
    pub half_width: f64,
    /// `f(x0) / lambda_1`.
    pub bound: f64,
    pub censored_fraction: f64,
    pub pass: bool,
}

/// Largest tolerated share of censored trajectories.
pub const MAX_CENSORED: f64 = 0.01;

/// Compare the empirical mean return time to `sub K = {f <= R0}` with the
/// Foster bound `f(x0)/lambda_1`. Passes iff
/// `mean + z * stderr <= bound * (1 + slack)`.
#[allow(clippy::too_many_arguments)]
pub fn foster_bound_check<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    spec: &DriftSpec<f64>,
    x0: &K::State,
    trials: usize,
    horizon: usize,
    seed: u64,
    slack: f64,
    z: f64,
) -> Result<FosterReport> {
    let fx = f.eval(x0);
    if !(fx > spec.r0()) {
        return Err(Error::InvalidParams(format!("f(x0) = {fx} must exceed R0 = {}", spec.r0())));
    }
    if trials < 2 {
        return Err(Error::InvalidParams("need at least two trials".into()));
    }
    let times: Vec<ReturnTime> = (0..trials)
        .into_par_iter()
        .map(|t| return_time_with(kernel, f, spec.r0(), x0, horizon, &mut stream(seed, t as u64)))
        .collect();
    let censored = times.iter().filter(|t| t.is_censored()).count();
    let censored_fraction = censored as f64 / trials as f64;
    if censored_fraction > MAX_CENSORED {
        return Err(Error::Censoring { fraction: censored_fraction, limit: MAX_CENSORED });
    }
    let n = trials as f64;
    let mean = times.iter().map(|t| t.value() as f64).sum::<f64>() / n;
    let var = times.iter().map(|t| (t.value() as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half_width = z * (var / n).sqrt();
    let bound = fx / spec.lambda1();
    Ok(FosterReport { mean, half_width, bound, censored_fraction, pass: mean + half_width <= bound * (1.0 + slack) })
}

/// Parameters of the `L^{1+eta}` moment bound for return times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentParams {
    /// Uniform bound on `E_x |f(X_1) - f(x)|^{1+eta}`.
    pub m: f64,
    pub eta: f64,
    pub r0: f64,
    pub lambda1: f64,
}

impl MomentParams {
    pub fn new(m: f64, eta: f64, r0: f64, lambda1: f64) -> Result<Self> {
        if !(m > 0.0 && eta > 0.0 && r0 >= 0.0 && lambda1 > 0.0) {
            return Err(Error::InvalidParams(format!("invalid moment parameters M={m}, eta={eta}, R0={r0}, lambda1={lambda1}")));
        }
        Ok(Self { m, eta, r0, lambda1 })
    }

    /// `M_1 = 1 + 4((M^{1/(1+eta)} + R0)^{1+eta} + M (M + R0) / lambda1)`.
    pub fn m1(&self) -> f64 {
        let p = 1.0 + self.eta;
        1.0 + 4.0 * ((self.m.powf(1.0 / p) + self.r0).powf(p) + self.m * (self.m + self.r0) / self.lambda1)
    }
}

/// Bound on `E_x[tau^{1+eta}]`:
/// `(f(x)/lambda1)^{1+eta} + M f(x)/lambda1 + M_1`.
pub fn moment_bound_m1(params: &MomentParams, fx: f64) -> f64 {
    let r = fx / params.lambda1;
    r.powf(1.0 + params.eta) + params.m * r + params.m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ReflectedWalk, Translation};
    use crate::dist::FiniteDist;

    #[test]
    fn first_return_examples() {
        let id = DriftFunction::identity();
        let down = Translation::new(-1.0);
        assert_eq!(first_return_time(&down, &id, 10.0, &15.0, 0, 100), ReturnTime::Returned(5));
        let stay = Translation::new(0.0);
        assert_eq!(first_return_time(&stay, &id, 10.0, &3.0, 0, 100), ReturnTime::Returned(1));
        let up = Translation::new(1.0);
        assert_eq!(first_return_time(&up, &id, 10.0, &11.0, 0, 10), ReturnTime::Censored(10));
    }

    #[test]
    fn tail_profile_examples() {
        let id = DriftFunction::identity();
        let down = Translation::new(-1.0);
        let p = return_tail_profile(&down, &id, 10.0, &[5.0, 8.0], 10, 5, 1, 3.0).unwrap();
        assert_eq!(p.rows[0].tail, 1.0);
        assert_eq!(p.rows[1].tail, 0.0);
        assert_eq!(p.censored_fraction, 0.0);

        let w = ReflectedWalk::new(FiniteDist::uniform(&[-2.0, 1.0]).unwrap()).unwrap();
        let f = DriftFunction::integer_identity();
        let small = return_tail_profile(&w, &f, 0.0, &[0], 1_000, 20, 5, 1.0).unwrap();
        let big = return_tail_profile(&w, &f, 0.0, &[0], 16_000, 20, 5, 1.0).unwrap();
        let (a, b) = (small.rows[2].half_width, big.rows[2].half_width);
        let (pa, pb) = (small.rows[2].tail, big.rows[2].tail);
        // half-widths scale like trials^{-1/2} once the proportion is pinned
        let ratio = (a / (pa * (1.0 - pa)).sqrt()) / (b / (pb * (1.0 - pb)).sqrt());
        assert!((ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn foster_examples() {
        let id = DriftFunction::identity();
        let down = Translation::new(-1.0);
        let spec = DriftSpec::from_laws(10.0, FiniteDist::point(0.0), FiniteDist::point(-1.0)).unwrap();
        let r = foster_bound_check(&down, &id, &spec, &15.0, 100, 1000, 0, 0.05, 3.0).unwrap();
        assert_eq!(r.mean, 5.0);
        assert_eq!(r.bound, 15.0);
        assert!(r.pass);

        let up = Translation::new(1.0);
        assert!(matches!(
            foster_bound_check(&up, &id, &spec, &15.0, 100, 50, 0, 0.05, 3.0),
            Err(Error::Censoring { .. })
        ));
    }

    #[test]
    fn moment_bound_examples() {
        let p = MomentParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(p.m1(), 9.0);
        assert_eq!(moment_bound_m1(&p, 0.0), 9.0);
        assert_eq!(moment_bound_m1(&p, 2.0), 15.0);
        let q = MomentParams::new(2.5, 0.5, 3.0, 0.7).unwrap();
        assert_eq!(moment_bound_m1(&q, 0.0), q.m1());
        assert!(MomentParams::new(1.0, 0.0, 0.0, 1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn moment_bound_monotonicity(
            m in 0.1f64..10.0, eta in 0.1f64..3.0, r0 in 0.0f64..10.0, l in 0.1f64..5.0,
            fx in 0.0f64..50.0, bump in 0.01f64..2.0,
        ) {
            let base = MomentParams::new(m, eta, r0, l).unwrap();
            let b = moment_bound_m1(&base, fx);
            proptest::prop_assert!(moment_bound_m1(&base, fx + bump) > b);
            let more_m = MomentParams { m: m + bump, ..base };
            let more_r0 = MomentParams { r0: r0 + bump, ..base };
            let more_l = MomentParams { lambda1: l + bump, ..base };
            proptest::prop_assert!(moment_bound_m1(&more_m, fx) > b);
            proptest::prop_assert!(moment_bound_m1(&more_r0, fx) > b);
            proptest::prop_assert!(moment_bound_m1(&more_l, fx) < b);
        }
    }
}
