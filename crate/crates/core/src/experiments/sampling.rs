use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::LatticeBasis;
use crate::linalg::{dot, norm, Mat};

/// Haar-random orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat<f64> {
    loop {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
        for _ in 0..d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            for c in &cols {
                let p = dot(&v, c);
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= p * y);
            }
            let n = norm(&v);
            if n < 1e-8 {
                break;
            }
            v.iter_mut().for_each(|x| *x /= n);
            cols.push(v);
        }
        if cols.len() == d {
            return Mat::from_cols(&cols);
        }
    }
}

/// A unimodular lattice with a vector of length about `e^-t`,
/// `t ~ U[t_min, t_max)`: `k diag(e^-t, e^(t w_2), ..) n` with `k` orthogonal,
/// random weights `w` summing to 1 and `n` unipotent upper triangular with
/// entries in `[0, 1)`. The basis is LLL-reduced.
pub fn sample_high_lattice<R: Rng + ?Sized>(d: usize, t_min: f64, t_max: f64, rng: &mut R) -> Result<LatticeBasis<f64>> {
    if d < 2 || !(t_min >= 0.0 && t_max > t_min) {
        return Err(Error::InvalidParams(format!("need d >= 2 and 0 <= t_min < t_max, got d = {d}, [{t_min}, {t_max})")));
    }
    let t = rng.random_range(t_min..t_max);
    let w: Vec<f64> = (1..d).map(|_| 0.5 + rng.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let mut scales = vec![(-t).exp()];
    scales.extend(w.iter().map(|x| (t * x / total).exp()));
    let k = random_orthogonal(d, rng);
    let n = Mat::from_fn(d, d, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => rng.random::<f64>(),
        std::cmp::Ordering::Greater => 0.0,
    });
    let m = &(&k * &Mat::diag(&scales)) * &n;
    Ok(LatticeBasis::normalized(m)?.lll_reduce()?.basis)
}
