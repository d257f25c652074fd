use std::io::Write;

use rayon::prelude::*;

use crate::chain::{simulate, ChainKernel, DriftFunction};
use crate::drift::{LatticeWalk, MatrixMeasure};
use crate::error::{Error, Result};
use crate::lattice::{LatticeBasis, ENUMERATION_CAP};
use crate::rng::stream;
use crate::scalar::fmt17;

use super::constants::siegel_reference_d2;

/// Occupation of `{f <= R}` along one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationTable {
    pub steps: usize,
    /// `(R, share of k in 1..=steps with f(X_k) <= R)`, `R` increasing.
    pub rows: Vec<(f64, f64)>,
}

impl OccupationTable {
    /// Smallest `R` whose complement `{f > R}` is occupied less than `eps`
    /// of the time.
    pub fn first_below(&self, eps: f64) -> Option<f64> {
        self.rows.iter().find(|(_, frac)| 1.0 - frac < eps).map(|(r, _)| *r)
    }

    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &str) -> Result<()> {
        write!(out, "{preamble}")?;
        writeln!(out, "r,fraction")?;
        for (r, frac) in &self.rows {
            writeln!(out, "{},{}", fmt17(*r), fmt17(*frac))?;
        }
        Ok(())
    }
}

pub fn occupation_experiment<K: ChainKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    x0: &K::State,
    steps: usize,
    r_grid: &[f64],
    seed: u64,
) -> Result<OccupationTable> {
    if steps < 1000 {
        return Err(Error::InvalidParams(format!("need at least 1000 steps, got {steps}")));
    }
    if r_grid.iter().any(|r| r.is_nan()) {
        return Err(Error::InvalidParams("NaN in R grid".into()));
    }
    let mut values: Vec<f64> = simulate(kernel, x0, steps, seed)[1..].iter().map(|x| f.eval(x)).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    let mut grid = r_grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    let rows: Vec<(f64, f64)> =
        grid.iter().map(|&r| (r, values.partition_point(|&v| v <= r) as f64 / steps as f64)).collect();
    if rows.windows(2).any(|w| w[1].1 < w[0].1) {
        return Err(Error::Domain("occupation fractions are not monotone in R".into()));
    }
    Ok(OccupationTable { steps, rows })
}

/// `S_r(x) = #{primitive v in x : |v| <= r}`, both signs counted.
pub fn primitive_ball_count(x: &LatticeBasis<f64>, r: f64) -> Result<usize> {
    if r <= 0.0 {
        return Ok(0);
    }
    Ok(2 * x.primitive_short_vectors(r, ENUMERATION_CAP)?.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiegelReport {
    pub r: f64,
    pub steps: usize,
    /// Cesaro average of `S_r` per trajectory.
    pub per_trial: Vec<f64>,
    pub average: f64,
    /// Haar mean `6 r^2 / pi`.
    pub reference: f64,
    /// `|average - reference| / reference`.
    pub relative_error: f64,
}

impl SiegelReport {
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &str) -> Result<()> {
        write!(out, "{preamble}")?;
        writeln!(out, "trial,average")?;
        for (t, a) in self.per_trial.iter().enumerate() {
            writeln!(out, "{t},{}", fmt17(*a))?;
        }
        Ok(())
    }
}

/// Average `S_r(X_k)`, `k = 0..steps-1`, over `trials` walks from `x0`
/// and compare with the Haar mean.
pub fn siegel_equidistribution(
    mu: &MatrixMeasure<f64>,
    x0: &LatticeBasis<f64>,
    steps: usize,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<SiegelReport> {
    if mu.dim() != 2 || x0.dim() != 2 {
        return Err(Error::InvalidParams("the ball-count reference is implemented for d = 2".into()));
    }
    if !(r > 0.0) || steps == 0 || trials == 0 {
        return Err(Error::InvalidParams(format!("need r > 0, steps >= 1, trials >= 1; got r = {r}")));
    }
    let walk = LatticeWalk::new(mu.clone());
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t as u64);
            let mut x = x0.clone();
            let mut total = 0usize;
            for _ in 0..steps {
                total += primitive_ball_count(&x, r)?;
                x = walk.step(&x, &mut rng);
            }
            Ok(total as f64 / steps as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let average = per_trial.iter().sum::<f64>() / trials as f64;
    let reference = siegel_reference_d2(r);
    Ok(SiegelReport { r, steps, per_trial, average, reference, relative_error: (average - reference).abs() / reference })
}
