use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{fmt17, Real};

/// Finitely supported probability measure on `SL_d^±(R)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixMeasure<T> {
    d: usize,
    atoms: Vec<(Mat<T>, T)>,
    cumulative: Vec<f64>,
}

impl<T: Real> MatrixMeasure<T> {
    pub fn new(atoms: Vec<(Mat<T>, T)>) -> Result<Self> {
        let Some(d) = atoms.first().map(|(g, _)| g.rows()) else {
            return Err(Error::InvalidMeasure("no atoms".into()));
        };
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(atoms.len());
        for (k, (g, w)) in atoms.iter().enumerate() {
            if g.rows() != d || g.cols() != d {
                return Err(Error::InvalidMeasure(format!("atom {k} is not {d}x{d}")));
            }
            if !g.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom {k} has a non-finite entry")));
            }
            let det = g.det().as_f64();
            if (det.abs() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidMeasure(format!("atom {k} has det {det}")));
            }
            let w = w.as_f64();
            if !(w > 0.0) {
                return Err(Error::InvalidMeasure(format!("atom {k} has weight {w}")));
            }
            total += w;
            cumulative.push(total);
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { d, atoms, cumulative })
    }

    pub fn point(g: Mat<T>) -> Result<Self> {
        Self::new(vec![(g, T::one())])
    }

    pub fn uniform(gs: Vec<Mat<T>>) -> Result<Self> {
        let w = T::one() / T::lit(gs.len() as f64);
        Self::new(gs.into_iter().map(|g| (g, w)).collect())
    }

    /// Uniform on the elementary unipotents `I + s E_jk` (`j != k`) and their
    /// inverses. For `d = 2` these are `L, R, L^-1, R^-1`.
    pub fn elementary_unipotents(d: usize, s: T) -> Result<Self> {
        let mut gs = Vec::new();
        for j in 0..d {
            for k in 0..d {
                if j == k {
                    continue;
                }
                for sign in [T::one(), -T::one()] {
                    let mut g = Mat::identity(d);
                    g[(j, k)] = sign * s;
                    gs.push(g);
                }
            }
        }
        Self::uniform(gs)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> &[(Mat<T>, T)] {
        &self.atoms
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Mat<T> {
        &self.atoms[self.sample_index(rng)].0
    }

    /// `g_n ... g_1` with `g_k` i.i.d. from the measure.
    pub fn sample_product<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Mat<T> {
        let mut p = Mat::identity(self.d);
        for _ in 0..n {
            p = self.sample(rng) * &p;
        }
        p
    }

    /// Invariance under `g -> (g^T)^-1` with matching weights.
    pub fn is_symmetric(&self) -> bool {
        self.atoms.iter().all(|(g, w)| {
            let Ok(inv) = g.inverse() else { return false };
            let dual = inv.transpose();
            let mass: f64 = self
                .atoms
                .iter()
                .filter(|(h, _)| mat_close(h, &dual))
                .map(|(_, v)| v.as_f64())
                .sum();
            (mass - w.as_f64()).abs() <= 1e-12
        })
    }

    /// Blocks of `d` comma-separated rows followed by a `weight=` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (g, w) in &self.atoms {
            for i in 0..self.d {
                let row: Vec<String> = g.row(i).iter().map(|x| fmt17(x.as_f64())).collect();
                writeln!(out, "{}", row.join(","))?;
            }
            writeln!(out, "weight={}", fmt17(w.as_f64()))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (lineno, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
            if let Some(w) = line.strip_prefix("weight=") {
                let w: f64 = w.trim().parse().map_err(|_| bad("bad weight"))?;
                if rows.is_empty() || rows.iter().any(|r| r.len() != rows.len()) {
                    return Err(bad("weight must follow a square block of rows"));
                }
                atoms.push((Mat::from_rows(&rows), T::lit(w)));
                rows.clear();
            } else {
                let row = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map(T::lit).map_err(|_| bad("not a number")))
                    .collect::<Result<Vec<T>>>()?;
                rows.push(row);
            }
        }
        if !rows.is_empty() {
            return Err(Error::Parse("trailing rows without a weight line".into()));
        }
        Self::new(atoms)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn mat_close<T: Real>(a: &Mat<T>, b: &Mat<T>) -> bool {
    (0..a.rows()).all(|i| (0..a.cols()).all(|j| (a[(i, j)] - b[(i, j)]).abs().as_f64() <= 1e-12))
}
