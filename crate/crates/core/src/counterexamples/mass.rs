//! Escape of mass: a chain on `[0, inf)` with drift `-1` above 1 and
//! increments bounded in `L^1`, whose time-`n` laws still put mass `>= 1/2`
//! above any fixed level.
//!
//! Only the reachable states are modelled. From `x_i = 2^{-i-1}` the chain
//! stays with probability `1 - alpha_i` and otherwise jumps to
//! `1/alpha_i = N_i + x_{i+1}`, then walks down by 1 until it lands on
//! `x_{i+1}`. The last return point of a truncated schedule is absorbing.

use std::io::Write;

use rayon::prelude::*;

use crate::chain::{binomial_half_width, uniform01, ChainKernel, DriftFunction, ExactKernel};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, probe_stream, stream, StreamRng};
use crate::scalar::fmt17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MassState {
    Zero,
    /// At the return point `x_i`.
    Return(usize),
    /// At `k + x_target` with `k >= 1`, walking down.
    Descent { target: usize, k: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    /// Time maximising `P(X_n = x_i)`.
    pub n: u64,
    pub required: f64,
    /// Monte Carlo `P(X_n = x_i)` at that time.
    pub achieved: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassEscapeSchedule {
    x: Vec<f64>,
    jumps: Vec<u64>,
    checkpoints: Vec<Checkpoint>,
}

/// Parameters of the greedy schedule search.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleParams {
    /// Number of return points with a positive rate.
    pub levels: usize,
    /// `N_0`.
    pub first_jump: u64,
    /// `N_i` is searched over `N_{i-1} * growth^k`, `k = 1, 2, ...`.
    pub growth: u64,
    /// Checkpoint `i` must reach `max(1 - 1/i, min_confidence)`.
    pub min_confidence: f64,
    pub trials: usize,
    pub max_jump: u64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self { levels: 4, first_jump: 1, growth: 2, min_confidence: 0.0, trials: 10_000, max_jump: 1 << 40 }
    }
}

fn return_point(i: usize) -> f64 {
    0.5f64.powi(i as i32 + 1)
}

/// Failures before the first success for success probability `alpha`,
/// by inversion of `u in (0, 1]`.
fn geometric_failures(alpha: f64, u: f64) -> u64 {
    if alpha >= 1.0 {
        return 0;
    }
    (u.ln() / (-alpha).ln_1p()).floor() as u64
}

fn draw_stay<R: rand::Rng + ?Sized>(alpha: f64, rng: &mut R) -> u64 {
    geometric_failures(alpha, 1.0 - uniform01(rng))
}

impl MassEscapeSchedule {
    /// Greedy search: each `N_i` grows geometrically until the checkpoint
    /// for `x_i` validates.
    pub fn greedy(params: &ScheduleParams, seed: u64) -> Result<Self> {
        if params.levels == 0 || params.first_jump == 0 || params.growth < 2 {
            return Err(Error::InvalidParams("need levels >= 1, first_jump >= 1 and growth >= 2".into()));
        }
        let x: Vec<f64> = (0..=params.levels).map(return_point).collect();
        let mut jumps = vec![params.first_jump];
        let mut checkpoints = vec![Checkpoint { n: 0, required: 1.0, achieved: 1.0 }];
        for i in 1..params.levels {
            let required = required_confidence(i, params.min_confidence);
            let mut n_i = jumps[i - 1];
            loop {
                n_i = n_i
                    .checked_mul(params.growth)
                    .filter(|&v| v <= params.max_jump)
                    .ok_or(Error::ScheduleValidation { level: i, achieved: f64::NAN, required })?;
                jumps.push(n_i);
                let (n, achieved) = occupancy_peak(&x, &jumps, i, params.trials, seed);
                if achieved >= required {
                    checkpoints.push(Checkpoint { n, required, achieved });
                    break;
                }
                jumps.pop();
                if n_i.saturating_mul(params.growth) > params.max_jump {
                    return Err(Error::ScheduleValidation { level: i, achieved, required });
                }
            }
        }
        Ok(Self { x, jumps, checkpoints })
    }

    /// Schedule with prescribed `N_i`; every checkpoint is validated.
    pub fn from_jumps(jumps: &[u64], min_confidence: f64, trials: usize, seed: u64) -> Result<Self> {
        if jumps.is_empty() || jumps[0] == 0 || jumps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("jumps must be positive and strictly increasing".into()));
        }
        let x: Vec<f64> = (0..=jumps.len()).map(return_point).collect();
        let mut checkpoints = vec![Checkpoint { n: 0, required: 1.0, achieved: 1.0 }];
        for i in 1..jumps.len() {
            let required = required_confidence(i, min_confidence);
            let (n, achieved) = occupancy_peak(&x, &jumps[..=i], i, trials, seed);
            if achieved < required {
                return Err(Error::ScheduleValidation { level: i, achieved, required });
            }
            checkpoints.push(Checkpoint { n, required, achieved });
        }
        Ok(Self { x, jumps: jumps.to_vec(), checkpoints })
    }

    /// Number of return points with a positive rate.
    pub fn levels(&self) -> usize {
        self.jumps.len()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x[i]
    }

    pub fn jump(&self, i: usize) -> u64 {
        self.jumps[i]
    }

    /// `alpha_i`, zero at the absorbing last point.
    pub fn alpha(&self, i: usize) -> f64 {
        if i < self.jumps.len() {
            1.0 / (self.jumps[i] as f64 + self.x[i + 1])
        } else {
            0.0
        }
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &str) -> Result<()> {
        write!(out, "{preamble}")?;
        writeln!(out, "i,x_i,alpha_i,n_i")?;
        for (i, c) in self.checkpoints.iter().enumerate() {
            writeln!(out, "{i},{},{},{}", fmt17(self.x[i]), fmt17(self.alpha(i)), c.n)?;
        }
        Ok(())
    }
}

fn required_confidence(i: usize, floor: f64) -> f64 {
    (1.0 - 1.0 / i as f64).max(floor)
}

/// `max_n P(X_n = x_i)` from `x_0`, using the first `i + 1` jumps.
fn occupancy_peak(x: &[f64], jumps: &[u64], i: usize, trials: usize, seed: u64) -> (u64, f64) {
    let alpha = |j: usize| 1.0 / (jumps[j] as f64 + x[j + 1]);
    let level_seed = derive_seed(seed, i as u64);
    let mut events: Vec<(u64, i64)> = (0..trials)
        .into_par_iter()
        .flat_map_iter(|t| {
            let mut rng = stream(level_seed, t as u64);
            let mut arrive = 0u64;
            for j in 0..i {
                arrive += draw_stay(alpha(j), &mut rng) + 1 + jumps[j];
            }
            let leave = arrive + draw_stay(alpha(i), &mut rng) + 1;
            [(arrive, 1i64), (leave, -1i64)]
        })
        .collect();
    events.sort_unstable();
    let (mut best_n, mut best, mut count) = (0u64, 0i64, 0i64);
    let mut k = 0;
    while k < events.len() {
        let n = events[k].0;
        while k < events.len() && events[k].0 == n {
            count += events[k].1;
            k += 1;
        }
        if count > best {
            best = count;
            best_n = n;
        }
    }
    (best_n, best as f64 / trials as f64)
}

/// The escape-of-mass kernel for a schedule.
#[derive(Clone, Debug)]
pub struct MassEscapeChain {
    schedule: MassEscapeSchedule,
}

pub fn build_mass_escape_chain(schedule: MassEscapeSchedule) -> MassEscapeChain {
    MassEscapeChain { schedule }
}

impl MassEscapeChain {
    pub fn schedule(&self) -> &MassEscapeSchedule {
        &self.schedule
    }

    pub fn start(&self) -> MassState {
        MassState::Return(0)
    }

    /// Position on `[0, inf)`.
    pub fn value(&self, s: &MassState) -> f64 {
        match *s {
            MassState::Zero => 0.0,
            MassState::Return(i) => self.schedule.x[i],
            MassState::Descent { target, k } => k as f64 + self.schedule.x[target],
        }
    }

    /// `f = Id`.
    pub fn drift_function(&self) -> DriftFunction<MassState> {
        let x = self.schedule.x.clone();
        DriftFunction::new("identity", move |s: &MassState| match *s {
            MassState::Zero => 0.0,
            MassState::Return(i) => x[i],
            MassState::Descent { target, k } => k as f64 + x[target],
        })
    }

    /// `X_n` given `X_0 = s`, skipping through stays and descents.
    pub fn advance(&self, s: MassState, n: u64, rng: &mut StreamRng) -> MassState {
        let mut state = s;
        let mut left = n;
        while left > 0 {
            state = match state {
                MassState::Zero => return state,
                MassState::Return(i) if i >= self.schedule.levels() => return state,
                MassState::Return(i) => {
                    let stay = draw_stay(self.schedule.alpha(i), rng);
                    if stay >= left {
                        return state;
                    }
                    left -= stay + 1;
                    MassState::Descent { target: i + 1, k: self.schedule.jumps[i] }
                }
                MassState::Descent { target, k } => {
                    let s = k.min(left);
                    left -= s;
                    if s == k {
                        MassState::Return(target)
                    } else {
                        MassState::Descent { target, k: k - s }
                    }
                }
            };
        }
        state
    }
}

impl ChainKernel for MassEscapeChain {
    type State = MassState;
    fn step(&self, s: &MassState, rng: &mut StreamRng) -> MassState {
        match *s {
            MassState::Return(i) if i < self.schedule.levels() => {
                if uniform01(rng) < self.schedule.alpha(i) {
                    MassState::Descent { target: i + 1, k: self.schedule.jumps[i] }
                } else {
                    *s
                }
            }
            _ => self.law(s)[0].0,
        }
    }
}

impl ExactKernel for MassEscapeChain {
    fn law(&self, s: &MassState) -> Vec<(MassState, f64)> {
        match *s {
            MassState::Zero => vec![(MassState::Zero, 1.0)],
            MassState::Return(i) if i >= self.schedule.levels() => vec![(*s, 1.0)],
            MassState::Return(i) => {
                let a = self.schedule.alpha(i);
                vec![(*s, 1.0 - a), (MassState::Descent { target: i + 1, k: self.schedule.jumps[i] }, a)]
            }
            MassState::Descent { target, k: 1 } => vec![(MassState::Return(target), 1.0)],
            MassState::Descent { target, k } => vec![(MassState::Descent { target, k: k - 1 }, 1.0)],
        }
    }
}

/// `(1 - alpha)^k` with `k = floor(1/alpha - r)`: the chance of sitting at a
/// return point for `k` steps, after which any jump is still above `r`.
pub fn stay_probability(alpha: f64, r: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if 1.0 / alpha <= r {
        return Err(Error::Domain(format!("1/alpha = {} does not exceed R = {r}", 1.0 / alpha)));
    }
    let k = (1.0 / alpha - r).floor();
    Ok((k * (-alpha).ln_1p()).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassEscapeRow {
    pub i: usize,
    pub alpha: f64,
    pub n: u64,
    pub k: u64,
    /// `P^(X_{n+k} <= R)`.
    pub estimate: f64,
    pub half_width: f64,
    /// `(1 - alpha)^k`.
    pub analytic: f64,
    /// Checkpoint confidence `P^(X_n = x_i)`.
    pub confidence: f64,
    /// `estimate` lies in `[analytic * confidence, analytic + 1 - confidence]`
    /// up to the half width.
    pub consistent: bool,
    /// `P^(X_{n+k} > R) >= 1/2`.
    pub escaped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassEscapeReport {
    pub r: f64,
    pub trials: usize,
    pub rows: Vec<MassEscapeRow>,
    pub first_escape: Option<usize>,
}

impl MassEscapeReport {
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &str) -> Result<()> {
        write!(out, "{preamble}")?;
        writeln!(out, "i,alpha_i,n_i,k_i,estimate,half_width,analytic,confidence,escaped")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.i,
                fmt17(r.alpha),
                r.n,
                r.k,
                fmt17(r.estimate),
                fmt17(r.half_width),
                fmt17(r.analytic),
                fmt17(r.confidence),
                u8::from(r.escaped)
            )?;
        }
        Ok(())
    }
}

/// For every checkpoint `i >= 1` with `1/alpha_i > r`, estimate
/// `P_{x_0}(X_{n_i + k_i} <= r)` and compare with `(1 - alpha_i)^{k_i}`.
pub fn demonstrate_mass_escape(chain: &MassEscapeChain, r: f64, trials: usize, seed: u64, z: f64) -> Result<MassEscapeReport> {
    if trials < 10_000 {
        return Err(Error::InvalidParams(format!("need at least 10^4 trials, got {trials}")));
    }
    let s = &chain.schedule;
    let mut rows = Vec::new();
    for (i, cp) in s.checkpoints.iter().enumerate().skip(1) {
        let alpha = s.alpha(i);
        if 1.0 / alpha <= r {
            continue;
        }
        let analytic = stay_probability(alpha, r)?;
        let k = (1.0 / alpha - r).floor() as u64;
        let low = (0..trials)
            .into_par_iter()
            .filter(|&t| {
                let mut rng = stream(seed, probe_stream(i, t));
                chain.value(&chain.advance(chain.start(), cp.n + k, &mut rng)) <= r
            })
            .count();
        let estimate = low as f64 / trials as f64;
        let half_width = binomial_half_width(estimate, trials, z);
        let consistent = estimate + half_width >= analytic * cp.achieved
            && estimate - half_width <= analytic + (1.0 - cp.achieved);
        rows.push(MassEscapeRow {
            i,
            alpha,
            n: cp.n,
            k,
            estimate,
            half_width,
            analytic,
            confidence: cp.achieved,
            consistent,
            escaped: 1.0 - estimate >= 0.5,
        });
    }
    let first_escape = rows.iter().find(|r| r.escaped).map(|r| r.i);
    Ok(MassEscapeReport { r, trials, rows, first_escape })
}
