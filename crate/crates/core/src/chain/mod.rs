//! Markov chains given by a sampler, plus the Monte Carlo diagnostics built
//! on them.
//!
//! Every trajectory draws from its own [`StreamRng`](crate::rng::StreamRng)
//! stream, so results are reproducible bit for bit and independent of how
//! rayon schedules the work.

mod mass;
mod returns;
mod sd;

use std::fmt;
use std::sync::Arc;

use rand::Rng;

pub use mass::{
    mass_escape_profile, occupation_fraction, rec_law_calibration, renewal_window, trajectory_stats, MassProfile,
    MassRow, RecLawCalibration, RenewalWindow, TrajectoryStats,
};
pub use returns::{
    first_return_time, foster_bound_check, moment_bound_m1, return_tail_profile, FosterReport, MomentParams,
    ReturnTime, TailProfile, TailRow,
};
pub use sd::{dkw_epsilon, verify_sd, SdProbe, SdReport};

use crate::dist::FiniteDist;
use crate::rng::{stream, StreamRng};

/// One-step transition sampler.
pub trait ChainKernel: Sync {
    type State: Clone + Send + Sync + 'static;

    /// Draw `X_1` given `X_0 = x`. Must depend only on `x` and the stream.
    fn step(&self, x: &Self::State, rng: &mut StreamRng) -> Self::State;
}

/// A kernel whose transition law is available in closed form.
pub trait ExactKernel: ChainKernel {
    /// Next-state atoms with their probabilities.
    fn law(&self, x: &Self::State) -> Vec<(Self::State, f64)>;
}

impl<K: ChainKernel + Send> ChainKernel for &K {
    type State = K::State;
    fn step(&self, x: &Self::State, rng: &mut StreamRng) -> Self::State {
        (**self).step(x, rng)
    }
}

/// Kernel from a closure.
pub struct FnKernel<S, F> {
    f: F,
    _state: std::marker::PhantomData<fn() -> S>,
}

impl<S, F> FnKernel<S, F>
where
    S: Clone + Send + Sync + 'static,
    F: Fn(&S, &mut StreamRng) -> S + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f, _state: std::marker::PhantomData }
    }
}

impl<S, F> ChainKernel for FnKernel<S, F>
where
    S: Clone + Send + Sync + 'static,
    F: Fn(&S, &mut StreamRng) -> S + Sync,
{
    type State = S;
    fn step(&self, x: &S, rng: &mut StreamRng) -> S {
        (self.f)(x, rng)
    }
}

/// Deterministic `x -> x + shift` on the reals, optionally clamped below.
#[derive(Clone, Copy, Debug)]
pub struct Translation {
    pub shift: f64,
    pub floor: Option<f64>,
}

impl Translation {
    pub fn new(shift: f64) -> Self {
        Self { shift, floor: None }
    }

    /// Stops at `level`: states never go below it.
    pub fn absorbed_at(shift: f64, level: f64) -> Self {
        Self { shift, floor: Some(level) }
    }
}

impl ChainKernel for Translation {
    type State = f64;
    fn step(&self, x: &f64, _rng: &mut StreamRng) -> f64 {
        self.law(x)[0].0
    }
}

impl ExactKernel for Translation {
    fn law(&self, x: &f64) -> Vec<(f64, f64)> {
        let y = x + self.shift;
        vec![(self.floor.map_or(y, |f| y.max(f)), 1.0)]
    }
}

/// Integer walk `x -> max(0, x + Z)` with i.i.d. integer increments `Z`.
#[derive(Clone, Debug)]
pub struct ReflectedWalk {
    increments: FiniteDist<f64>,
    steps: Vec<i64>,
}

impl ReflectedWalk {
    pub fn new(increments: FiniteDist<f64>) -> crate::Result<Self> {
        let steps = increments
            .values()
            .iter()
            .map(|&v| {
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    Ok(v as i64)
                } else {
                    Err(crate::Error::InvalidDistribution(format!("increment {v} is not an integer")))
                }
            })
            .collect::<crate::Result<Vec<i64>>>()?;
        Ok(Self { increments, steps })
    }

    pub fn increments(&self) -> &FiniteDist<f64> {
        &self.increments
    }
}

impl ChainKernel for ReflectedWalk {
    type State = i64;
    fn step(&self, x: &i64, rng: &mut StreamRng) -> i64 {
        (x + self.increments.sample(rng) as i64).max(0)
    }
}

impl ExactKernel for ReflectedWalk {
    fn law(&self, x: &i64) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        for (&s, &w) in self.steps.iter().zip(self.increments.weights()) {
            let y = (x + s).max(0);
            match out.iter_mut().find(|(z, _)| *z == y) {
                Some(e) => e.1 += w,
                None => out.push((y, w)),
            }
        }
        out
    }
}

/// Kernel that follows `inner` but jumps to `reset` whenever the drift
/// function is at most `level`.
pub struct ResetBelow<K: ChainKernel> {
    pub inner: K,
    pub f: DriftFunction<K::State>,
    pub level: f64,
    pub reset: K::State,
}

impl<K: ChainKernel> ChainKernel for ResetBelow<K> {
    type State = K::State;
    fn step(&self, x: &K::State, rng: &mut StreamRng) -> K::State {
        if self.f.eval(x) <= self.level {
            self.reset.clone()
        } else {
            self.inner.step(x, rng)
        }
    }
}

/// A drift function `f: states -> [0, +inf]` with a label for reports.
pub struct DriftFunction<S> {
    label: String,
    f: Arc<dyn Fn(&S) -> f64 + Send + Sync>,
}

impl<S> Clone for DriftFunction<S> {
    fn clone(&self) -> Self {
        Self { label: self.label.clone(), f: Arc::clone(&self.f) }
    }
}

impl<S> fmt::Debug for DriftFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftFunction").field("label", &self.label).finish()
    }
}

impl<S: 'static> DriftFunction<S> {
    pub fn new(label: impl Into<String>, f: impl Fn(&S) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &S) -> f64 {
        (self.f)(x)
    }

    /// Pointwise maximum.
    pub fn max(f0: &Self, f1: &Self) -> Self {
        let (a, b) = (f0.clone(), f1.clone());
        Self::new(format!("max({}, {})", f0.label, f1.label), move |x| a.eval(x).max(b.eval(x)))
    }

    /// `x -> c_x f0(x) + f1(x)` with `c_x = 0` below `t0`, `c` above `t1`
    /// and affine in between.
    pub fn glue(f0: &Self, f1: &Self, c: f64, t0: f64, t1: f64) -> crate::Result<Self> {
        if !(c > 1.0) {
            return Err(crate::Error::InvalidParams(format!("glue factor must exceed 1, got {c}")));
        }
        if !(t1 > t0) {
            return Err(crate::Error::InvalidParams(format!("need T' > T0, got {t1} <= {t0}")));
        }
        let (a, b) = (f0.clone(), f1.clone());
        let label = format!("glue({}, {}; c={c}, T0={t0}, T'={t1})", f0.label, f1.label);
        Ok(Self::new(label, move |x| {
            let v0 = a.eval(x);
            glue_weight(v0, c, t0, t1) * v0 + b.eval(x)
        }))
    }
}

impl DriftFunction<f64> {
    pub fn identity() -> Self {
        Self::new("id", |x: &f64| *x)
    }
}

impl DriftFunction<i64> {
    pub fn integer_identity() -> Self {
        Self::new("id", |x: &i64| *x as f64)
    }
}

/// The piecewise-affine factor `c_x` as a function of `f0(x)`.
pub fn glue_weight(f0: f64, c: f64, t0: f64, t1: f64) -> f64 {
    if f0 >= t1 {
        c
    } else if f0 <= t0 {
        0.0
    } else {
        c * (f0 - t0) / (t1 - t0)
    }
}

/// `[x0, X_1, ..., X_n]`, drawn from stream 0 of `seed`.
pub fn simulate<K: ChainKernel>(kernel: &K, x0: &K::State, n: usize, seed: u64) -> Vec<K::State> {
    simulate_with(kernel, x0, n, &mut stream(seed, 0))
}

pub(crate) fn simulate_with<K: ChainKernel>(kernel: &K, x0: &K::State, n: usize, rng: &mut StreamRng) -> Vec<K::State> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(x0.clone());
    for k in 0..n {
        let next = kernel.step(&out[k], rng);
        out.push(next);
    }
    out
}

/// Wald half-width of a binomial proportion.
pub fn binomial_half_width(p: f64, n: usize, z: f64) -> f64 {
    z * (p * (1.0 - p) / n as f64).sqrt()
}

pub(crate) fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
