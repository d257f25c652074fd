//! LLL reduction and Fincke-Pohst enumeration on arbitrary full-rank square
//! bases given as column lists.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::scalar::Real;

use super::integer::gcd_all;
use super::LatticeBasis;

const LLL_DELTA: f64 = 0.99;
const MAX_LLL_SWAPS: usize = 1_000_000;

/// A reduced basis `B U` together with the integer transform `U`.
#[derive(Clone, Debug)]
pub struct Reduced<T> {
    pub basis: LatticeBasis<T>,
    /// Rows of `U`; column `k` holds the coefficients of reduced vector `k`.
    pub transform: Vec<Vec<i64>>,
}

impl<T: Real> LatticeBasis<T> {
    /// LLL with `delta = 0.99`.
    pub fn lll_reduce(&self) -> Result<Reduced<T>> {
        let (cols, u) = lll(&self.columns())?;
        let basis = LatticeBasis::raw(crate::linalg::Mat::from_cols(&cols));
        Ok(Reduced { basis, transform: transpose(&u) })
    }

    /// Whether the columns satisfy size reduction (`|mu| <= 1/2`) and the
    /// Lovász condition with `delta`, up to `slack`.
    pub fn is_lll_reduced(&self, delta: T, slack: T) -> bool {
        let cols = self.columns();
        let Some(gs) = GramSchmidt::new(&cols) else { return false };
        let d = cols.len();
        let half = T::lit(0.5) + slack;
        for k in 1..d {
            if (0..k).any(|j| gs.mu[k][j].abs() > half) {
                return false;
            }
            let lhs = gs.bn[k];
            let rhs = (delta - gs.mu[k][k - 1] * gs.mu[k][k - 1]) * gs.bn[k - 1];
            if lhs < rhs * (T::one() - slack) {
                return false;
            }
        }
        true
    }
}

fn transpose(cols: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let d = cols.len();
    (0..d).map(|i| (0..d).map(|j| cols[j][i]).collect()).collect()
}

struct GramSchmidt<T> {
    /// squared norms of the orthogonalised vectors
    bn: Vec<T>,
    mu: Vec<Vec<T>>,
}

impl<T: Real> GramSchmidt<T> {
    fn new(b: &[Vec<T>]) -> Option<Self> {
        let d = b.len();
        let mut star: Vec<Vec<T>> = Vec::with_capacity(d);
        let mut bn = Vec::with_capacity(d);
        let mut mu = vec![vec![T::zero(); d]; d];
        for i in 0..d {
            let mut v = b[i].clone();
            for j in 0..i {
                let m = dot(&b[i], &star[j]) / bn[j];
                mu[i][j] = m;
                for (vk, &sk) in v.iter_mut().zip(&star[j]) {
                    *vk -= m * sk;
                }
            }
            // re-orthogonalise once for accuracy on skewed inputs
            for j in 0..i {
                let c = dot(&v, &star[j]) / bn[j];
                mu[i][j] += c;
                for (vk, &sk) in v.iter_mut().zip(&star[j]) {
                    *vk -= c * sk;
                }
            }
            let n2 = dot(&v, &v);
            if !(n2.sqrt() > norm(&b[i]) * T::epsilon() * T::lit(64.0)) {
                return None;
            }
            mu[i][i] = T::one();
            bn.push(n2);
            star.push(v);
        }
        Some(Self { bn, mu })
    }
}

fn round_i64<T: Real>(x: T) -> Result<i64> {
    let r = x.round();
    if !(r.abs() < T::lit(9.0e15)) {
        return Err(Error::Overflow);
    }
    Ok(r.as_f64() as i64)
}

/// Returns reduced columns and `U` as columns (`b'_k = sum_j U[k][j] b_j`).
pub(crate) fn lll<T: Real>(input: &[Vec<T>]) -> Result<(Vec<Vec<T>>, Vec<Vec<i64>>)> {
    let d = input.len();
    let mut b = input.to_vec();
    let mut u: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
    let rank_err = || Error::NumericalRank("basis is numerically singular".into());
    let mut gs = GramSchmidt::new(&b).ok_or_else(rank_err)?;
    let delta = T::lit(LLL_DELTA);
    let mut k = 1;
    let mut swaps = 0;
    while k < d {
        let mut changed = false;
        for j in (0..k).rev() {
            let q = round_i64(gs.mu[k][j])?;
            if q == 0 {
                continue;
            }
            changed = true;
            let qt = T::of_i64(q);
            for t in 0..b[k].len() {
                let v = b[j][t];
                b[k][t] -= qt * v;
            }
            for t in 0..d {
                let v = u[j][t].checked_mul(q).ok_or(Error::Overflow)?;
                u[k][t] = u[k][t].checked_sub(v).ok_or(Error::Overflow)?;
            }
            for l in 0..j {
                let m = gs.mu[j][l];
                gs.mu[k][l] -= qt * m;
            }
            gs.mu[k][j] -= qt;
        }
        if changed {
            // keep the floating Gram-Schmidt data exact for the new vector
            gs = GramSchmidt::new(&b).ok_or_else(rank_err)?;
        }
        let m = gs.mu[k][k - 1];
        if gs.bn[k] >= (delta - m * m) * gs.bn[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            gs = GramSchmidt::new(&b).ok_or_else(rank_err)?;
            k = (k - 1).max(1);
            swaps += 1;
            if swaps > MAX_LLL_SWAPS {
                return Err(Error::NumericalRank("LLL did not terminate".into()));
            }
        }
    }
    Ok((b, u))
}

/// Fincke-Pohst on the LLL-reduced version of `cols`. Coefficients are
/// returned relative to the *input* columns.
pub(crate) fn short_vectors<T: Real>(cols: &[Vec<T>], bound: T, cap: usize) -> Result<Vec<(Vec<i64>, T)>> {
    fincke_pohst(cols, bound, cap, false)
}

/// As [`short_vectors`], keeping primitive vectors only. Multiples of a
/// primitive vector are never visited, so a tiny basis vector costs nothing.
pub(crate) fn primitive_short_vectors<T: Real>(cols: &[Vec<T>], bound: T, cap: usize) -> Result<Vec<(Vec<i64>, T)>> {
    fincke_pohst(cols, bound, cap, true)
}

fn fincke_pohst<T: Real>(cols: &[Vec<T>], bound: T, cap: usize, primitive: bool) -> Result<Vec<(Vec<i64>, T)>> {
    let d = cols.len();
    let (red, u) = lll(cols)?;
    let gs = GramSchmidt::new(&red).ok_or_else(|| Error::NumericalRank("reduced basis degenerate".into()))?;
    let b2 = bound * bound;
    let search = b2 * (T::one() + T::lit(1e-9));
    let accept = b2 * (T::one() + T::epsilon() * T::lit(16.0));

    let mut found: Vec<(Vec<i64>, T)> = Vec::new();
    let mut x = vec![0i64; d];
    let mut visited = 0usize;
    let node_cap = cap.saturating_mul(64).max(1 << 20);

    struct Ctx<'a, T> {
        gs: &'a GramSchmidt<T>,
        red: &'a [Vec<T>],
        u: &'a [Vec<i64>],
        search: T,
        accept: T,
        cap: usize,
        node_cap: usize,
        primitive: bool,
    }

    fn rec<T: Real>(
        ctx: &Ctx<'_, T>,
        k: usize,
        acc: T,
        top_zero: bool,
        x: &mut Vec<i64>,
        found: &mut Vec<(Vec<i64>, T)>,
        visited: &mut usize,
    ) -> Result<()> {
        let d = x.len();
        let mut c = T::zero();
        for l in k + 1..d {
            c += ctx.gs.mu[l][k] * T::of_i64(x[l]);
        }
        let room = ctx.search - acc;
        if room < T::zero() {
            return Ok(());
        }
        let r = (room / ctx.gs.bn[k]).sqrt();
        let lo = (-c - r).ceil();
        let hi = (-c + r).floor();
        if !(lo.abs() < T::lit(1e15) && hi.abs() < T::lit(1e15)) {
            return Err(Error::Explosion { count: usize::MAX, cap: ctx.cap });
        }
        let mut lo = lo.as_f64() as i64;
        let mut hi = hi.as_f64() as i64;
        if top_zero {
            lo = lo.max(0);
        }
        if top_zero && k == 0 && ctx.primitive {
            // every higher coefficient is zero: only the basis vector itself
            lo = lo.max(1);
            hi = hi.min(1);
        }
        for xk in lo..=hi {
            *visited += 1;
            if *visited > ctx.node_cap {
                return Err(Error::Explosion { count: *visited, cap: ctx.node_cap });
            }
            x[k] = xk;
            let y = T::of_i64(xk) + c;
            let acc2 = acc + ctx.gs.bn[k] * y * y;
            if acc2 > ctx.search {
                continue;
            }
            if k == 0 {
                if top_zero && xk == 0 {
                    continue;
                }
                record(ctx, x, found)?;
                if found.len() > ctx.cap {
                    return Err(Error::Explosion { count: found.len(), cap: ctx.cap });
                }
            } else {
                rec(ctx, k - 1, acc2, top_zero && xk == 0, x, found, visited)?;
            }
        }
        x[k] = 0;
        Ok(())
    }

    fn record<T: Real>(ctx: &Ctx<'_, T>, x: &[i64], found: &mut Vec<(Vec<i64>, T)>) -> Result<()> {
        let d = x.len();
        if ctx.primitive && gcd_all(x) != 1 {
            return Ok(());
        }
        let mut v = vec![T::zero(); ctx.red[0].len()];
        for (k, &xk) in x.iter().enumerate() {
            if xk != 0 {
                let xt = T::of_i64(xk);
                for (vi, &bi) in v.iter_mut().zip(&ctx.red[k]) {
                    *vi += xt * bi;
                }
            }
        }
        let n2 = dot(&v, &v);
        if n2 > ctx.accept {
            return Ok(());
        }
        let mut coeffs = vec![0i64; d];
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0 {
                continue;
            }
            for j in 0..d {
                let t = ctx.u[k][j].checked_mul(xk).ok_or(Error::Overflow)?;
                coeffs[j] = coeffs[j].checked_add(t).ok_or(Error::Overflow)?;
            }
        }
        if coeffs.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
            coeffs.iter_mut().for_each(|c| *c = -*c);
        }
        found.push((coeffs, n2.sqrt()));
        Ok(())
    }

    let ctx = Ctx { gs: &gs, red: &red, u: &u, search, accept, cap, node_cap, primitive };
    rec(&ctx, d - 1, T::zero(), true, &mut x, &mut found, &mut visited)?;
    found.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(found)
}
