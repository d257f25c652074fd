use rayon::prelude::*;

use crate::dist::{DriftSpec, FiniteDist};
use crate::error::{Error, Result};
use crate::rng::{probe_stream, stream};

use super::{ChainKernel, DriftFunction};

/// Half width of the DKW band for `n` samples at confidence `conf`.
pub fn dkw_epsilon(n: usize, conf: f64) -> f64 {
    ((2.0 / (1.0 - conf)).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdProbe {
    pub fx: f64,
    pub in_k: bool,
    /// Empirical law of the finite increments `f(X_1) - f(x)`.
    pub increments: Option<FiniteDist<f64>>,
    /// Share of steps with `f(X_1) = +inf`.
    pub escaped: f64,
    pub dkw_eps: f64,
    /// `sup_t (P^(f(X_1) - f(x) > t) - P(Z > t))`.
    pub worst_gap: f64,
    /// Where `worst_gap` is attained.
    pub worst_t: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdReport {
    pub probes: Vec<SdProbe>,
    pub pass: bool,
}

/// Test the dominance condition at each probe state: the empirical tail of
/// the one-step increment may exceed the tail of `Z_0` (inside `K`) or `Z_1`
/// (outside) by at most the DKW half width.
pub fn verify_sd<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    spec: &DriftSpec<f64>,
    probes: &[K::State],
    trials: usize,
    seed: u64,
    confidence: f64,
) -> Result<SdReport> {
    if trials < 100 {
        return Err(Error::InvalidParams(format!("need at least 100 trials, got {trials}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParams(format!("confidence must lie in (0,1), got {confidence}")));
    }
    let eps = dkw_epsilon(trials, confidence);
    let mut out = Vec::with_capacity(probes.len());
    for (p, x) in probes.iter().enumerate() {
        let fx = f.eval(x);
        if !fx.is_finite() {
            return Err(Error::Domain(format!("probe {p} has f = {fx}")));
        }
        let mut incs: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(seed, probe_stream(p, t));
                f.eval(&kernel.step(x, &mut rng)) - fx
            })
            .collect();
        let escaped_count = incs.iter().filter(|v| !v.is_finite()).count();
        incs.retain(|v| v.is_finite());
        incs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let in_k = fx <= spec.r0();
        let reference = spec.reference_for(fx);
        let n = trials as f64;
        let escaped = escaped_count as f64 / n;
        // both tails are right-continuous steps, so the sup sits at an atom
        // of either law or just below the smallest one
        let mut ts: Vec<f64> = incs.iter().copied().chain(reference.values().iter().copied()).collect();
        ts.push(ts.iter().copied().fold(f64::INFINITY, f64::min) - 1.0);
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        let (mut worst_gap, mut worst_t) = (f64::NEG_INFINITY, f64::NAN);
        for &t in &ts {
            let above = incs.len() - incs.partition_point(|&v| v <= t);
            let gap = (above + escaped_count) as f64 / n - reference.tail_gt(t);
            if gap > worst_gap {
                worst_gap = gap;
                worst_t = t;
            }
        }
        let increments = if incs.is_empty() { None } else { Some(FiniteDist::empirical(&incs)?) };
        out.push(SdProbe { fx, in_k, increments, escaped, dkw_eps: eps, worst_gap, worst_t, pass: worst_gap <= eps });
    }
    let pass = out.iter().all(|p| p.pass);
    Ok(SdReport { probes: out, pass })
}
