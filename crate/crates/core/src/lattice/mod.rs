//! Unimodular lattices in `R^d` and their primitive sublattices.
//!
//! A [`LatticeBasis`] holds basis vectors as matrix *columns*. Sublattices are
//! described by integer coefficient rows relative to that basis, so a row `c`
//! stands for the vector `B c`.

mod enumerate;
pub mod integer;
mod reduce;

use std::io::{Read, Write};
use std::path::Path;

pub use enumerate::{enumerate_small_sublattices, small_sublattices, ENUMERATION_CAP};
pub use integer::{gcd, gcd_all, hnf_canonicalize, Saturation, Span, Sublattice};
pub use reduce::Reduced;

use crate::error::{Error, Result};
use crate::linalg::{norm, wedge_norm, Mat};
use crate::scalar::{fmt17, Real};

/// Condition numbers above this are rejected at construction.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeBasis<T> {
    m: Mat<T>,
}

impl<T: Real> LatticeBasis<T> {
    /// Checked constructor: square, `d >= 2`, `|det| = 1` and condition
    /// number at most [`MAX_CONDITION`].
    pub fn new(m: Mat<T>) -> Result<Self> {
        if !m.is_square() || m.rows() < 2 {
            return Err(Error::InvalidParams(format!("basis must be d x d with d >= 2, got {}x{}", m.rows(), m.cols())));
        }
        if !m.is_finite() {
            return Err(Error::NumericalRank("non-finite entry".into()));
        }
        let cond = m.cond();
        if !(cond.as_f64() <= MAX_CONDITION) {
            return Err(Error::IllConditioned { cond: cond.as_f64() });
        }
        let det = m.det();
        if (det.abs() - T::one()).abs() > T::lit(T::GEOM_TOL) {
            return Err(Error::NotUnimodular { det: det.as_f64() });
        }
        Ok(Self { m })
    }

    /// Rescale `m` to `|det| = 1`, then check as in [`new`](Self::new).
    pub fn normalized(m: Mat<T>) -> Result<Self> {
        let det = m.det().abs();
        if !(det > T::zero()) {
            return Err(Error::NumericalRank("singular basis".into()));
        }
        let d = m.rows();
        Self::new(m.scale(det.powf(-T::one() / T::lit(d as f64))))
    }

    /// No checks; used along random walks where the input is already a
    /// reduced unimodular basis.
    pub(crate) fn raw(m: Mat<T>) -> Self {
        Self { m }
    }

    /// The standard lattice `Z^d`.
    pub fn standard(d: usize) -> Self {
        Self { m: Mat::identity(d) }
    }

    pub fn diag(entries: &[T]) -> Result<Self> {
        Self::new(Mat::diag(entries))
    }

    pub fn from_columns(cols: &[Vec<T>]) -> Result<Self> {
        Self::new(Mat::from_cols(cols))
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.m
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.m.col(j)
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.dim()).map(|j| self.m.col(j)).collect()
    }

    pub fn condition_number(&self) -> T {
        self.m.cond()
    }

    /// The lattice vector `B c`.
    pub fn vector(&self, coeffs: &[i64]) -> Vec<T> {
        let c: Vec<T> = coeffs.iter().map(|&x| T::of_i64(x)).collect();
        self.m.mul_vec(&c)
    }

    /// Basis `g B` of the lattice `g x` (unchecked).
    pub fn transformed(&self, g: &Mat<T>) -> Self {
        Self { m: g * &self.m }
    }

    /// Same lattice, basis `B U` for an integer matrix `U` (rows of `u`).
    pub fn change_basis(&self, u: &[Vec<i64>]) -> Self {
        let d = self.dim();
        let um = Mat::from_fn(d, d, |i, j| T::of_i64(u[i][j]));
        Self { m: &self.m * &um }
    }

    /// `||a_1 ^ ... ^ a_i||` for the generators `a_k = B c_k` of `sub`.
    pub fn covolume(&self, sub: &Sublattice) -> T {
        self.covolume_of_rows(sub.rows())
    }

    pub(crate) fn covolume_of_rows(&self, rows: &[Vec<i64>]) -> T {
        let vecs: Vec<Vec<T>> = rows.iter().map(|c| self.vector(c)).collect();
        wedge_norm(&vecs)
    }

    /// Shortest nonzero vector length.
    pub fn first_minimum(&self) -> Result<T> {
        let red = self.lll_reduce()?;
        let bound = norm(&red.basis.column(0));
        let short = red.basis.short_vectors(bound * (T::one() + T::lit(1e-9)), ENUMERATION_CAP)?;
        Ok(short.iter().map(|(_, n)| *n).fold(bound, T::min))
    }

    /// All nonzero lattice vectors of norm at most `bound`, one per `±`
    /// pair, as `(coefficients, norm)` sorted by norm. The representative
    /// of each pair has its first nonzero coefficient positive.
    pub fn short_vectors(&self, bound: T, cap: usize) -> Result<Vec<(Vec<i64>, T)>> {
        if !(bound > T::zero()) {
            return Err(Error::InvalidParams(format!("bound must be positive, got {bound}")));
        }
        reduce::short_vectors(&self.columns(), bound, cap)
    }

    /// As [`short_vectors`](Self::short_vectors), primitive vectors only.
    pub fn primitive_short_vectors(&self, bound: T, cap: usize) -> Result<Vec<(Vec<i64>, T)>> {
        if !(bound > T::zero()) {
            return Err(Error::InvalidParams(format!("bound must be positive, got {bound}")));
        }
        reduce::primitive_short_vectors(&self.columns(), bound, cap)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for i in 0..self.dim() {
            w.write_record(self.m.row(i).iter().map(|x| fmt17(x.as_f64())))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `d` rows of `d` reals; the basis vectors are the columns.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map(T::lit).map_err(|_| Error::Parse(format!("not a number: {s:?}"))))
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        let d = rows.len();
        if d < 2 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Parse("lattice basis must be d rows of d numbers".into()));
        }
        Self::new(Mat::from_rows(&rows))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_short(basis: &LatticeBasis<f64>, bound: f64, k: i64) -> Vec<Vec<i64>> {
        let d = basis.dim();
        let mut out = Vec::new();
        let mut c = vec![-k; d];
        loop {
            if c.iter().any(|&x| x != 0) && c.iter().find(|&&x| x != 0).unwrap() > &0 {
                let v = basis.vector(&c);
                if v.iter().map(|x| x * x).sum::<f64>() <= bound * bound * (1.0 + 1e-12) {
                    out.push(c.clone());
                }
            }
            let mut j = 0;
            while j < d {
                c[j] += 1;
                if c[j] <= k {
                    break;
                }
                c[j] = -k;
                j += 1;
            }
            if j == d {
                break;
            }
        }
        out.sort();
        out
    }

    #[test]
    fn construction_checks() {
        assert!(LatticeBasis::<f64>::diag(&[2.0, 2.0]).is_err());
        assert!(matches!(LatticeBasis::<f64>::diag(&[1e-7, 1e7]), Err(Error::IllConditioned { .. })));
        assert!(LatticeBasis::<f64>::diag(&[0.1, 10.0]).is_ok());
        let n = LatticeBasis::<f64>::normalized(Mat::diag(&[2.0, 8.0])).unwrap();
        assert!((n.matrix().det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covolume_examples() {
        let z3 = LatticeBasis::<f64>::standard(3);
        assert_eq!(z3.covolume(&Sublattice::new(vec![vec![1, 0, 0]]).unwrap()), 1.0);
        let d = LatticeBasis::<f64>::diag(&[0.1, 10.0]).unwrap();
        assert!((d.covolume(&Sublattice::new(vec![vec![1, 0]]).unwrap()) - 0.1).abs() < 1e-15);
        let z2 = LatticeBasis::<f64>::standard(2);
        assert!((z2.covolume(&Sublattice::new(vec![vec![1, 1]]).unwrap()) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn short_vector_examples() {
        let z2 = LatticeBasis::<f64>::standard(2);
        let got: Vec<Vec<i64>> = z2.short_vectors(2f64.sqrt(), 100).unwrap().into_iter().map(|p| p.0).collect();
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(sorted, brute_short(&z2, 2f64.sqrt(), 2));
        assert_eq!(got.len(), 4);
        assert!(z2.short_vectors(0.5, 100).unwrap().is_empty());
        let d = LatticeBasis::<f64>::diag(&[0.1, 10.0]).unwrap();
        let got: Vec<Vec<i64>> = d.short_vectors(0.5, 100).unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(got, vec![vec![1, 0], vec![2, 0], vec![3, 0], vec![4, 0], vec![5, 0]]);
        assert!(matches!(z2.short_vectors(10.0, 20), Err(Error::Explosion { .. })));
    }

    #[test]
    fn short_vectors_match_box_on_skewed_basis() {
        let b = LatticeBasis::<f64>::normalized(Mat::from_rows(&[
            vec![1.0, 0.3, 2.2],
            vec![0.1, 1.7, -0.4],
            vec![0.5, 0.2, 0.9],
        ]))
        .unwrap();
        let mut got: Vec<Vec<i64>> = b.short_vectors(2.5, 10_000).unwrap().into_iter().map(|p| p.0).collect();
        got.sort();
        assert_eq!(got, brute_short(&b, 2.5, 25));
    }

    #[test]
    fn csv_round_trip() {
        let b = LatticeBasis::<f64>::normalized(Mat::from_rows(&[vec![1.0, 0.25], vec![0.0, 3.0]])).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        assert_eq!(LatticeBasis::<f64>::read_csv(&buf[..]).unwrap(), b);
        assert!(LatticeBasis::<f64>::read_csv("1,0\n0,2\n".as_bytes()).is_err());
    }
}
