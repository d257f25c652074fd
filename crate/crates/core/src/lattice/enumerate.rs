//! Primitive sublattices of small covolume.
//!
//! A rank-`i` primitive sublattice `Δ` corresponds to a primitive decomposable
//! vector `p` of the lattice `∧^i x`, and `covol(Δ) = ||p||`. Enumerating
//! `∧^i x` by Fincke-Pohst up to the covolume bound is therefore exhaustive;
//! each primitive hit is decoded back into `Δ = {v : v ∧ p = 0}`.

use crate::error::{Error, Result};
use crate::linalg::subsets;
use crate::scalar::Real;

use super::integer::integer_kernel;
use super::{reduce, LatticeBasis, Sublattice};

/// Default cap on the number of enumerated lattice vectors.
pub const ENUMERATION_CAP: usize = 1_000_000;

/// Primitive rank-`rank` sublattices of covolume at most `bound`.
pub fn enumerate_small_sublattices<T: Real>(basis: &LatticeBasis<T>, rank: usize, bound: T) -> Result<Vec<Sublattice>> {
    Ok(small_sublattices(basis, rank, bound, ENUMERATION_CAP)?.into_iter().map(|(s, _)| s).collect())
}

/// As [`enumerate_small_sublattices`], with covolumes, sorted by covolume.
pub fn small_sublattices<T: Real>(
    basis: &LatticeBasis<T>,
    rank: usize,
    bound: T,
    cap: usize,
) -> Result<Vec<(Sublattice, T)>> {
    let d = basis.dim();
    if rank == 0 || rank >= d {
        return Err(Error::InvalidParams(format!("rank must lie in 1..{d}, got {rank}")));
    }
    if !(bound > T::zero()) {
        return Err(Error::InvalidParams(format!("covolume bound must be positive, got {bound}")));
    }
    let mut out = Vec::new();
    if rank == 1 {
        for (c, _) in basis.primitive_short_vectors(bound, cap)? {
            let sub = Sublattice::new(vec![c])?;
            let covol = basis.covolume(&sub);
            out.push((sub, covol));
        }
    } else {
        let red = basis.lll_reduce()?;
        let wedge = red.basis.matrix().compound(rank);
        let cols: Vec<Vec<T>> = (0..wedge.cols()).map(|j| wedge.col(j)).collect();
        let index = subsets(d, rank);
        let upper = subsets(d, rank + 1);
        for (p, _) in reduce::primitive_short_vectors(&cols, bound, cap)? {
            let Some(rows) = decode(&p, d, &index, &upper)? else { continue };
            if rows.len() != rank {
                continue;
            }
            let original = apply_transform(&red.transform, &rows)?;
            let sub = Sublattice::new(original)?;
            let covol = basis.covolume(&sub);
            out.push((sub, covol));
        }
    }
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Kernel of `v -> v ∧ p`; has rank `i` exactly when `p` is decomposable.
fn decode(p: &[i64], d: usize, index: &[Vec<usize>], upper: &[Vec<usize>]) -> Result<Option<Vec<Vec<i64>>>> {
    let mut m = vec![vec![0i64; d]; upper.len()];
    for (r, big) in upper.iter().enumerate() {
        for (pos, &k) in big.iter().enumerate() {
            let rest: Vec<usize> = big.iter().copied().filter(|&s| s != k).collect();
            let s = index.iter().position(|x| *x == rest).expect("subset present");
            let sign = if pos % 2 == 0 { 1 } else { -1 };
            m[r][k] = sign * p[s];
        }
    }
    let ker = integer_kernel(&m)?;
    Ok(if ker.is_empty() { None } else { Some(ker) })
}

/// Rows `c` (reduced coordinates) to `U c` (original coordinates).
fn apply_transform(u: &[Vec<i64>], rows: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let d = u.len();
    rows.iter()
        .map(|c| {
            (0..d)
                .map(|i| {
                    c.iter().enumerate().try_fold(0i64, |acc, (j, &cj)| {
                        u[i][j].checked_mul(cj).and_then(|t| acc.checked_add(t)).ok_or(Error::Overflow)
                    })
                })
                .collect()
        })
        .collect()
}
