//! Exact integer arithmetic on subgroups of `Z^d`.
//!
//! All intermediate entries are `i128` with checked operations; inputs and
//! outputs are `i64`.

use std::io::{Read, Write};

use crate::error::{Error, Result};

type Int = i128;
type Rows = Vec<Vec<Int>>;

fn add(a: Int, b: Int) -> Result<Int> {
    a.checked_add(b).ok_or(Error::Overflow)
}

fn mul(a: Int, b: Int) -> Result<Int> {
    a.checked_mul(b).ok_or(Error::Overflow)
}

/// `a*x + b*y` with overflow checks.
fn lin(x: Int, a: Int, y: Int, b: Int) -> Result<Int> {
    add(mul(x, a)?, mul(y, b)?)
}

/// `(g, x, y)` with `g = gcd(a, b) >= 0` and `a x + b y = g`.
pub(crate) fn ext_gcd(a: Int, b: Int) -> (Int, Int, Int) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1, 0);
    let (mut t0, mut t1) = (0, 1);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

pub fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0, |g, &x| gcd(g, x))
}

fn widen(rows: &[Vec<i64>]) -> Rows {
    rows.iter().map(|r| r.iter().map(|&x| x as Int).collect()).collect()
}

fn narrow(rows: &[Vec<Int>]) -> Result<Vec<Vec<i64>>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| i64::try_from(x).map_err(|_| Error::Overflow)).collect())
        .collect()
}

fn row_sub_mul(m: &mut Rows, target: usize, src: usize, q: Int) -> Result<()> {
    if q == 0 {
        return Ok(());
    }
    for j in 0..m[target].len() {
        m[target][j] = add(m[target][j], mul(-q, m[src][j])?)?;
    }
    Ok(())
}

/// Row-style Hermite normal form of the row lattice; zero rows are dropped,
/// so the result has exactly `rank` rows.
fn hnf_rows(rows: &[Vec<Int>]) -> Result<Rows> {
    let mut m: Rows = rows.to_vec();
    let n = m.len();
    let d = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..d {
        if r == n {
            break;
        }
        loop {
            let pivot = (r..n).filter(|&k| m[k][c] != 0).min_by_key(|&k| m[k][c].unsigned_abs());
            let Some(p) = pivot else { break };
            m.swap(r, p);
            let mut done = true;
            for k in r + 1..n {
                if m[k][c] != 0 {
                    let q = m[k][c] / m[r][c];
                    row_sub_mul(&mut m, k, r, q)?;
                    if m[k][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if m[r][c] == 0 {
            continue;
        }
        if m[r][c] < 0 {
            for x in m[r].iter_mut() {
                *x = -*x;
            }
        }
        for k in 0..r {
            let q = m[k][c].div_euclid(m[r][c]);
            row_sub_mul(&mut m, k, r, q)?;
        }
        r += 1;
    }
    m.truncate(r);
    Ok(m)
}

/// Unique row-style Hermite normal form of a full-row-rank integer matrix:
/// upper echelon, positive pivots, entries above each pivot in `[0, pivot)`.
pub fn hnf_canonicalize(coeffs: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    check_shape(coeffs)?;
    let h = hnf_rows(&widen(coeffs))?;
    if h.len() < coeffs.len() {
        return Err(Error::Rank { expected: coeffs.len(), found: h.len() });
    }
    narrow(&h)
}

fn check_shape(rows: &[Vec<i64>]) -> Result<usize> {
    let d = rows.first().map(Vec::len).ok_or(Error::Rank { expected: 1, found: 0 })?;
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Parse("ragged or empty coefficient matrix".into()));
    }
    Ok(d)
}

struct ColEchelon {
    rank: usize,
    /// `m * v`, with columns `rank..` identically zero.
    reduced: Rows,
    v: Rows,
    v_inv: Rows,
}

/// Column-reduce `m` by unimodular `v`, tracking `v^{-1}`.
fn col_echelon(m: &[Vec<Int>]) -> Result<ColEchelon> {
    let rows = m.len();
    let d = m.first().map_or(0, Vec::len);
    let mut a: Rows = m.to_vec();
    let mut v: Rows = (0..d).map(|i| (0..d).map(|j| Int::from(i == j)).collect()).collect();
    let mut w = v.clone();
    let mut k = 0;
    for r in 0..rows {
        if k == d {
            break;
        }
        for c in k + 1..d {
            let (x0, y0) = (a[r][k], a[r][c]);
            if y0 == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(x0, y0);
            let (ag, bg) = (x0 / g, y0 / g);
            for row in a.iter_mut().chain(v.iter_mut()) {
                let (p, q) = (row[k], row[c]);
                row[k] = lin(x, p, y, q)?;
                row[c] = lin(-bg, p, ag, q)?;
            }
            for j in 0..d {
                let (p, q) = (w[k][j], w[c][j]);
                w[k][j] = lin(ag, p, bg, q)?;
                w[c][j] = lin(-y, p, x, q)?;
            }
        }
        if a[r][k] != 0 {
            k += 1;
        }
    }
    Ok(ColEchelon { rank: k, reduced: a, v, v_inv: w })
}

/// Basis of the integer right kernel `{x in Z^d : m x = 0}`, as rows.
pub(crate) fn integer_kernel(m: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let e = col_echelon(&widen(m))?;
    let d = e.v.len();
    let cols: Rows = (e.rank..d).map(|j| e.v.iter().map(|row| row[j]).collect()).collect();
    narrow(&cols)
}

/// A subgroup of `Z^d` of rank `1..=d`, stored as its row-style HNF.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sublattice {
    rows: Vec<Vec<i64>>,
}

/// A subgroup that may also be trivial or of full rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Span {
    Zero,
    Proper(Sublattice),
    Full,
}

impl Span {
    pub fn proper(&self) -> Option<&Sublattice> {
        match self {
            Span::Proper(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Saturation {
    pub span: Span,
    /// `[sat(sub) : sub]`.
    pub index: u128,
}

impl Sublattice {
    /// Subgroup generated by the given independent rows.
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        Ok(Self { rows: hnf_canonicalize(&rows)? })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn is_primitive(&self) -> Result<bool> {
        Ok(self.saturate()?.index == 1)
    }

    /// Smallest primitive subgroup containing `self`, with the index.
    pub fn saturate(&self) -> Result<Saturation> {
        let e = col_echelon(&widen(&self.rows))?;
        let i = self.rank();
        let mut index: Int = 1;
        for k in 0..i {
            index = mul(index, e.reduced[k][k])?;
        }
        let index = index.unsigned_abs();
        if i == self.ambient_dim() {
            return Ok(Saturation { span: Span::Full, index });
        }
        let sat = hnf_rows(&e.v_inv[..i])?;
        Ok(Saturation { span: Span::Proper(Sublattice { rows: narrow(&sat)? }), index })
    }

    /// `(sat(self + other), self ∩ other)`.
    pub fn sum_and_intersection(&self, other: &Sublattice) -> Result<(Span, Span)> {
        let d = self.ambient_dim();
        if other.ambient_dim() != d {
            return Err(Error::InvalidParams("sublattices live in different dimensions".into()));
        }
        let stacked: Vec<Vec<i64>> = self.rows.iter().chain(other.rows.iter()).cloned().collect();
        let h = hnf_rows(&widen(&stacked))?;
        let sum = if h.len() == d {
            Span::Full
        } else {
            Sublattice { rows: narrow(&h)? }.saturate()?.span
        };

        // u A = w B  <=>  (u, -w) lies in the left kernel of [A; B]
        let p = self.rank();
        let transposed: Vec<Vec<i64>> = (0..d).map(|j| stacked.iter().map(|r| r[j]).collect()).collect();
        let kernel = integer_kernel(&transposed)?;
        let inter = if kernel.is_empty() {
            Span::Zero
        } else {
            let a = widen(&self.rows);
            let mut rows = Vec::with_capacity(kernel.len());
            for k in &kernel {
                let mut v = vec![0 as Int; d];
                for (t, &u) in k[..p].iter().enumerate() {
                    for j in 0..d {
                        v[j] = add(v[j], mul(u as Int, a[t][j])?)?;
                    }
                }
                rows.push(v);
            }
            let h = hnf_rows(&rows)?;
            if h.len() == d {
                Span::Full
            } else {
                Span::Proper(Sublattice { rows: narrow(&h)? })
            }
        };
        Ok((sum, inter))
    }

    /// Plücker coordinates: the `i x i` minors of the coefficient rows, over
    /// column subsets in lexicographic order.
    pub fn plucker(&self) -> Result<Vec<i64>> {
        let i = self.rank();
        let rows = widen(&self.rows);
        crate::linalg::subsets(self.ambient_dim(), i)
            .into_iter()
            .map(|cols| {
                let sub: Rows = rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
                i64::try_from(int_det(sub)?).map_err(|_| Error::Overflow)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for r in &self.rows {
            w.write_record(r.iter().map(i64::to_string))?;
        }
        w.flush()?;
        Ok(())
    }

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
                .map(|s| s.parse::<i64>().map_err(|_| Error::Parse(format!("not an integer: {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        check_shape(&rows)?;
        let sub = Self::new(rows.clone())?;
        if sub.rows != rows {
            return Err(Error::Parse("sublattice rows are not in Hermite normal form".into()));
        }
        Ok(sub)
    }
}

/// Exact determinant by fraction-free (Bareiss) elimination.
fn int_det(mut m: Rows) -> Result<Int> {
    let n = m.len();
    let mut sign = 1;
    let mut prev: Int = 1;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| m[r][k] != 0) else { return Ok(0) };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = add(mul(m[i][j], m[k][k])?, mul(-m[i][k], m[k][j])?)?;
                m[i][j] = num / prev;
            }
        }
        prev = m[k][k];
    }
    Ok(sign * m[n - 1][n - 1])
}
