//! Escape of empirical measures: from `x_i = 1/i` the chain moves to
//! `x_{i+1}`, except that with probability `1/(i log i)` it first climbs
//! `floor(i sqrt(log i))` above it and walks back down. Excursions become
//! long often enough that the fraction of time spent below any level `R`
//! drops under any `epsilon` infinitely often.

use std::io::Write;

use rayon::prelude::*;

use crate::chain::{uniform01, ChainKernel, DriftFunction, ExactKernel};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};
use crate::scalar::fmt17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmpiricalState {
    Zero,
    /// At `x_i = 1/i`, `i >= 3`.
    Point(u64),
    /// At `k + x_target`, `k >= 1`.
    Above { target: u64, k: u64 },
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EmpiricalEscapeChain;

pub fn build_empirical_escape_chain() -> EmpiricalEscapeChain {
    EmpiricalEscapeChain
}

impl EmpiricalEscapeChain {
    pub fn start(&self) -> EmpiricalState {
        EmpiricalState::Point(3)
    }

    pub fn point(i: u64) -> f64 {
        1.0 / i as f64
    }

    /// `1/(i log i)`.
    pub fn long_jump_probability(i: u64) -> f64 {
        let i = i as f64;
        1.0 / (i * i.ln())
    }

    /// `floor(i sqrt(log i))`.
    pub fn jump_length(i: u64) -> u64 {
        let x = i as f64;
        (x * x.ln().sqrt()).floor() as u64
    }

    /// Law of the `j`-th excursion length `tau_j - tau_{j-1}` from `x_3`.
    pub fn excursion_law(j: u64) -> Vec<(u64, f64)> {
        let p = Self::long_jump_probability(j + 2);
        vec![(1, 1.0 - p), (Self::jump_length(j + 2) + 1, p)]
    }

    pub fn value(s: &EmpiricalState) -> f64 {
        match *s {
            EmpiricalState::Zero => 0.0,
            EmpiricalState::Point(i) => Self::point(i),
            EmpiricalState::Above { target, k } => k as f64 + Self::point(target),
        }
    }

    pub fn drift_function(&self) -> DriftFunction<EmpiricalState> {
        DriftFunction::new("identity", Self::value)
    }

    fn long(i: u64) -> EmpiricalState {
        match Self::jump_length(i) {
            0 => EmpiricalState::Point(i + 1),
            k => EmpiricalState::Above { target: i + 1, k },
        }
    }
}

impl ChainKernel for EmpiricalEscapeChain {
    type State = EmpiricalState;
    fn step(&self, s: &EmpiricalState, rng: &mut StreamRng) -> EmpiricalState {
        match *s {
            EmpiricalState::Point(i) => {
                if uniform01(rng) < Self::long_jump_probability(i) {
                    Self::long(i)
                } else {
                    EmpiricalState::Point(i + 1)
                }
            }
            _ => self.law(s)[0].0,
        }
    }
}

impl ExactKernel for EmpiricalEscapeChain {
    fn law(&self, s: &EmpiricalState) -> Vec<(EmpiricalState, f64)> {
        match *s {
            EmpiricalState::Zero => vec![(EmpiricalState::Zero, 1.0)],
            EmpiricalState::Point(i) => {
                let p = Self::long_jump_probability(i);
                vec![(EmpiricalState::Point(i + 1), 1.0 - p), (Self::long(i), p)]
            }
            EmpiricalState::Above { target, k: 1 } => vec![(EmpiricalState::Point(target), 1.0)],
            EmpiricalState::Above { target, k } => vec![(EmpiricalState::Above { target, k: k - 1 }, 1.0)],
        }
    }
}

/// Smallest `n >= 1` with `#{k in 1..=n : values[k] <= r} < epsilon n`;
/// `values[0]` is the starting point.
pub fn first_sparse_time(values: &[f64], epsilon: f64, r: f64) -> Option<usize> {
    let mut low = 0usize;
    for (n, &v) in values.iter().enumerate().skip(1) {
        if v <= r {
            low += 1;
        }
        if (low as f64) < epsilon * n as f64 {
            return Some(n);
        }
    }
    None
}

/// `sum_{i=3}^{n} 1/(i log i)`.
pub fn divergence_partial_sum(n: u64) -> f64 {
    (3..=n).map(EmpiricalEscapeChain::long_jump_probability).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeTrajectory {
    pub n0: Option<usize>,
    /// Returns to `[0, 1]` within the horizon.
    pub excursions: u64,
    /// `max_j (tau_j - tau_{j-1}) / j`.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalEscapeReport {
    pub epsilon: f64,
    pub r: f64,
    pub horizon: usize,
    pub trajectories: Vec<EscapeTrajectory>,
    pub found_fraction: f64,
    /// `sum_{i=3}^{horizon+2} 1/(i log i)`.
    pub divergence: f64,
}

impl EmpiricalEscapeReport {
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &str) -> Result<()> {
        write!(out, "{preamble}")?;
        writeln!(out, "trajectory,n0,excursions,max_ratio")?;
        for (t, tr) in self.trajectories.iter().enumerate() {
            let n0 = tr.n0.map_or_else(String::new, |n| n.to_string());
            writeln!(out, "{t},{n0},{},{}", tr.excursions, fmt17(tr.max_ratio))?;
        }
        Ok(())
    }
}

pub fn demonstrate_empirical_escape(
    epsilon: f64,
    r: f64,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<EmpiricalEscapeReport> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParams(format!("epsilon must lie in (0,1], got {epsilon}")));
    }
    if horizon < 1000 || trials == 0 {
        return Err(Error::InvalidParams("need horizon >= 1000 and trials >= 1".into()));
    }
    let chain = EmpiricalEscapeChain;
    let trajectories: Vec<EscapeTrajectory> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t as u64);
            let mut s = chain.start();
            let (mut low, mut n0) = (0usize, None);
            let (mut last, mut excursions, mut max_ratio) = (0usize, 0u64, 0.0f64);
            for n in 1..=horizon {
                s = chain.step(&s, &mut rng);
                let v = EmpiricalEscapeChain::value(&s);
                if v <= r {
                    low += 1;
                }
                if n0.is_none() && (low as f64) < epsilon * n as f64 {
                    n0 = Some(n);
                }
                if v <= 1.0 {
                    excursions += 1;
                    max_ratio = max_ratio.max((n - last) as f64 / excursions as f64);
                    last = n;
                }
            }
            EscapeTrajectory { n0, excursions, max_ratio }
        })
        .collect();
    let found = trajectories.iter().filter(|t| t.n0.is_some()).count();
    Ok(EmpiricalEscapeReport {
        epsilon,
        r,
        horizon,
        found_fraction: found as f64 / trials as f64,
        divergence: divergence_partial_sum(horizon as u64 + 2),
        trajectories,
    })
}
