use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm, Mat};
use crate::rng::stream;
use crate::scalar::{fmt17, Real};

use super::MatrixMeasure;

/// Normal quantile used for reported confidence half widths.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovEstimate {
    pub estimate: f64,
    /// 95% half width from the spread across trials.
    pub ci: f64,
}

/// Top exponent of `wedge^i` for the walk: the trial mean of
/// `(1/n) log ||wedge^i(g_n ... g_1) v||` over random unit `v`.
pub fn estimate_lyapunov<T: Real>(
    mu: &MatrixMeasure<T>,
    i: usize,
    steps: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    let d = mu.dim();
    if i == 0 || i >= d {
        return Err(Error::InvalidParams(format!("rank must lie in 1..{d}, got {i}")));
    }
    if steps == 0 || trials == 0 {
        return Err(Error::InvalidParams("need steps >= 1 and trials >= 1".into()));
    }
    let wedges: Vec<Mat<T>> = mu.atoms().iter().map(|(g, _)| g.compound(i)).collect();
    let rates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t as u64);
            let dim = wedges[0].rows();
            let mut v: Vec<T> = (0..dim).map(|_| T::lit(StandardNormal.sample(&mut rng))).collect();
            let n0 = norm(&v);
            v.iter_mut().for_each(|x| *x /= n0);
            let mut acc = 0.0;
            for _ in 0..steps {
                v = wedges[mu.sample_index(&mut rng)].mul_vec(&v);
                let nv = norm(&v);
                acc += nv.as_f64().ln();
                v.iter_mut().for_each(|x| *x /= nv);
            }
            acc / steps as f64
        })
        .collect();
    let mean = rates.iter().sum::<f64>() / trials as f64;
    let ci = if trials > 1 {
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        Z95 * (var / trials as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(LyapunovEstimate { estimate: mean, ci })
}

/// Estimates for every rank `1..d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentTable {
    pub rows: Vec<(usize, LyapunovEstimate)>,
}

impl ExponentTable {
    pub fn estimate<T: Real>(mu: &MatrixMeasure<T>, steps: usize, trials: usize, seed: u64) -> Result<Self> {
        let rows = (1..mu.dim())
            .map(|i| Ok((i, estimate_lyapunov(mu, i, steps, trials, crate::rng::derive_seed(seed, i as u64))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.rows.iter().map(|(_, e)| e.estimate).collect()
    }

    /// `max_i |lambda^(i) - lambda^(d-i)| / (ci_i + ci_{d-i})`.
    pub fn duality_ratio(&self) -> f64 {
        let n = self.rows.len();
        (0..n)
            .map(|k| {
                let (a, b) = (self.rows[k].1, self.rows[n - 1 - k].1);
                (a.estimate - b.estimate).abs() / (a.ci + b.ci)
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &str) -> Result<()> {
        write!(out, "{preamble}")?;
        writeln!(out, "i,lambda,ci")?;
        for (i, e) in &self.rows {
            writeln!(out, "{i},{},{}", fmt17(e.estimate), fmt17(e.ci))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse("exponent rows need i,lambda,ci".into()));
            }
            let num = |k: usize| rec[k].parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {:?}", &rec[k])));
            let i = rec[0].parse::<usize>().map_err(|_| Error::Parse(format!("bad rank {:?}", &rec[0])))?;
            rows.push((i, LyapunovEstimate { estimate: num(1)?, ci: num(2)? }));
        }
        if rows.is_empty() || rows.iter().enumerate().any(|(k, (i, _))| *i != k + 1) {
            return Err(Error::Parse("exponent table must list ranks 1, 2, ... in order".into()));
        }
        Ok(Self { rows })
    }
}
