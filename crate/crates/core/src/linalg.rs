//! Small dense matrices.
//!
//! Dimensions here never exceed the number of `i`-subsets of a 6-element set,
//! so everything is plain `O(n^3)` code over a row-major `Vec`.

use std::ops::{Index, IndexMut, Mul};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Self { rows: r, cols: c, data: rows.concat() }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<T>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        assert!(cols.iter().all(|col| col.len() == r), "ragged matrix columns");
        Self::from_fn(r, c, |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[T]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Mat<U> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> T {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap()).unwrap();
            if a[(p, k)] == T::zero() {
                return T::zero();
            }
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let pivot = a[(k, k)];
            det *= pivot;
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        det
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap()).unwrap();
            if !(a[(p, k)].abs() > scale * T::epsilon()) {
                return Err(Error::NumericalRank(format!("pivot {k} vanishes")));
            }
            a.swap_rows(p, k);
            inv.swap_rows(p, k);
            let pivot = a[(k, k)];
            for j in 0..n {
                a[(k, j)] /= pivot;
                inv[(k, j)] /= pivot;
            }
            for i in 0..n {
                if i != k {
                    let f = a[(i, k)];
                    if f != T::zero() {
                        for j in 0..n {
                            let (akj, ikj) = (a[(k, j)], inv[(k, j)]);
                            a[(i, j)] -= f * akj;
                            inv[(i, j)] -= f * ikj;
                        }
                    }
                }
            }
        }
        Ok(inv)
    }

    /// Singular values in decreasing order (one-sided Jacobi).
    pub fn singular_values(&self) -> Vec<T> {
        let mut a = if self.rows >= self.cols { self.clone() } else { self.transpose() };
        let n = a.cols;
        let tol = T::epsilon();
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for i in 0..a.rows {
                        let (x, y) = (a[(i, p)], a[(i, q)]);
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == T::zero() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for i in 0..a.rows {
                        let (x, y) = (a[(i, p)], a[(i, q)]);
                        a[(i, p)] = c * x - s * y;
                        a[(i, q)] = s * x + c * y;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<T> = (0..n).map(|j| norm(&a.col(j))).collect();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        sv
    }

    /// Operator 2-norm.
    pub fn op_norm(&self) -> T {
        self.singular_values().first().copied().unwrap_or_else(T::zero)
    }

    /// 2-norm condition number; infinite when singular.
    pub fn cond(&self) -> T {
        let sv = self.singular_values();
        let smin = *sv.last().unwrap();
        if smin == T::zero() {
            T::infinity()
        } else {
            sv[0] / smin
        }
    }

    /// `k`-th compound matrix: the matrix of `k x k` minors, rows and columns
    /// indexed by `k`-subsets in lexicographic order. This is the matrix of
    /// the induced action on the `k`-th exterior power.
    pub fn compound(&self, k: usize) -> Self {
        let rs = subsets(self.rows, k);
        let cs = subsets(self.cols, k);
        Self::from_fn(rs.len(), cs.len(), |a, b| {
            Self::from_fn(k, k, |i, j| self[(rs[a][i], cs[b][j])]).det()
        })
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Real> Mul for Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: Mat<T>) -> Mat<T> {
        &self * &rhs
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    // scaled to dodge overflow for very long lattice vectors
    let m = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if m == T::zero() || !m.is_finite() {
        return m;
    }
    m * a.iter().map(|&x| (x / m) * (x / m)).sum::<T>().sqrt()
}

/// `sqrt(det Gram)` of the given vectors, i.e. the norm of their wedge,
/// via modified Gram-Schmidt.
pub fn wedge_norm<T: Real>(vectors: &[Vec<T>]) -> T {
    let mut q: Vec<Vec<T>> = Vec::with_capacity(vectors.len());
    let mut vol = T::one();
    for v in vectors {
        let mut w = v.clone();
        // two passes keep the orthogonalisation accurate for skewed inputs
        for _ in 0..2 {
            for u in &q {
                let c = dot(&w, u);
                for (wi, &ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
        }
        let n = norm(&w);
        if n == T::zero() {
            return T::zero();
        }
        vol *= n;
        q.push(w.into_iter().map(|x| x / n).collect());
    }
    vol
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn determinant_and_inverse() {
        let a = m(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        assert!((a.det() - 18.0).abs() < 1e-12);
        let p = &a * &a.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((p[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(m(&[&[1.0, 2.0], &[2.0, 4.0]]).inverse().is_err());
    }

    #[test]
    fn singular_values_of_shear() {
        // [[1,1],[0,1]] has singular values golden ratio and its inverse
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let sv = m(&[&[1.0, 1.0], &[0.0, 1.0]]).singular_values();
        assert!((sv[0] - phi).abs() < 1e-12 && (sv[1] - 1.0 / phi).abs() < 1e-12);
        assert!((Mat::<f64>::diag(&[3.0, 0.5, 2.0]).cond() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn compound_is_multiplicative() {
        let a = m(&[&[1.0, 2.0, 0.5], &[0.0, 1.0, -1.0], &[3.0, 0.0, 1.0]]);
        let b = m(&[&[0.0, 1.0, 1.0], &[2.0, 1.0, 0.0], &[1.0, -1.0, 2.0]]);
        let lhs = (&a * &b).compound(2);
        let rhs = &a.compound(2) * &b.compound(2);
        for i in 0..3 {
            for j in 0..3 {
                assert!((lhs[(i, j)] - rhs[(i, j)]).abs() < 1e-10);
            }
        }
        assert!((a.compound(3)[(0, 0)] - a.det()).abs() < 1e-12);
    }

    #[test]
    fn wedge_norm_matches_gram() {
        let u: Vec<f64> = vec![1.0, 1.0, 0.0];
        let v = vec![0.0, 1.0, 2.0];
        // Gram = [[2,1],[1,5]], det 9
        assert!((wedge_norm(&[u.clone(), v]) - 3.0).abs() < 1e-12);
        assert!((wedge_norm(&[u]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn subset_counts() {
        assert_eq!(subsets(4, 2).len(), binomial(4, 2));
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(binomial(6, 3), 20);
    }
}
