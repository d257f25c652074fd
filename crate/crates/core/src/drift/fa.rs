use crate::error::{Error, Result};
use crate::lattice::{small_sublattices, LatticeBasis, Sublattice, ENUMERATION_CAP};
use crate::scalar::Real;

/// `d`, the correction `A` and the exponents `lambda^(i)` of `wedge^i`,
/// `i = 1..d-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiNormParams<T> {
    d: usize,
    a: T,
    exponents: Vec<T>,
}

impl<T: Real> QuasiNormParams<T> {
    pub fn new(d: usize, a: T, exponents: Vec<T>) -> Result<Self> {
        if d < 2 || exponents.len() != d - 1 {
            return Err(Error::InvalidParams(format!("need d >= 2 and d - 1 exponents, got d = {d}, {}", exponents.len())));
        }
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::InvalidParams(format!("A must be positive, got {a}")));
        }
        if let Some(l) = exponents.iter().find(|l| !(**l > T::zero()) || !l.is_finite()) {
            return Err(Error::InvalidParams(format!("exponents must be positive, got {l}")));
        }
        Ok(Self { d, a, exponents })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn exponents(&self) -> &[T] {
        &self.exponents
    }

    /// `lambda^(i)`.
    pub fn exponent(&self, i: usize) -> T {
        self.exponents[i - 1]
    }

    pub fn with_a(&self, a: T) -> Result<Self> {
        Self::new(self.d, a, self.exponents.clone())
    }

    /// `A i (d - i)`.
    pub fn shift(&self, i: usize) -> T {
        self.a * T::lit((i * (self.d - i)) as f64)
    }

    /// Covolume below which a rank-`i` sublattice has positive `phi_A`.
    pub fn threshold(&self, i: usize) -> T {
        (-self.shift(i)).exp()
    }

    /// `max_i |lambda^(i) - lambda^(d-i)|`.
    pub fn duality_gap(&self) -> T {
        let n = self.exponents.len();
        (0..n).map(|k| (self.exponents[k] - self.exponents[n - 1 - k]).abs()).fold(T::zero(), T::max)
    }
}

/// `|Delta| = covol^(1/lambda^(i))`.
pub fn quasi_norm<T: Real>(covolume: T, rank: usize, params: &QuasiNormParams<T>) -> T {
    covolume.powf(T::one() / params.exponent(rank))
}

/// `|Delta|_A = e^(A i (d-i) / lambda^(i)) |Delta|`.
pub fn corrected_quasi_norm<T: Real>(covolume: T, rank: usize, params: &QuasiNormParams<T>) -> T {
    (params.shift(rank) / params.exponent(rank)).exp() * quasi_norm(covolume, rank, params)
}

/// `phi_A = log(1/|Delta|_A) = -(A i (d-i) + log covol) / lambda^(i)`.
pub fn phi_a_covolume<T: Real>(covolume: T, rank: usize, params: &QuasiNormParams<T>) -> T {
    -(params.shift(rank) + covolume.ln()) / params.exponent(rank)
}

pub fn phi_a<T: Real>(sub: &Sublattice, basis: &LatticeBasis<T>, params: &QuasiNormParams<T>) -> T {
    phi_a_covolume(basis.covolume(sub), sub.rank(), params)
}

/// `f_A(x)` with the sublattice attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftValue<T> {
    pub value: T,
    /// `None` when no sublattice clears its threshold and `f_A = 0`.
    pub maximizer: Option<Sublattice>,
}

/// Sublattices with positive `phi_A`, as `(sublattice, phi_A)` sorted by
/// decreasing `phi_A`, then rank, then HNF.
pub fn positive_sublattices<T: Real>(
    basis: &LatticeBasis<T>,
    params: &QuasiNormParams<T>,
) -> Result<Vec<(Sublattice, T)>> {
    check_dim(basis, params)?;
    let mut out = Vec::new();
    for i in 1..params.d {
        let bound = params.threshold(i);
        if !(bound > T::zero()) {
            continue;
        }
        for (sub, covol) in small_sublattices(basis, i, bound, ENUMERATION_CAP)? {
            if covol < bound {
                out.push((sub, phi_a_covolume(covol, i, params)));
            }
        }
    }
    sort_by_phi(&mut out);
    Ok(out)
}

pub(crate) fn sort_by_phi<T: Real>(v: &mut [(Sublattice, T)]) {
    v.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.rank().cmp(&b.0.rank()))
            .then_with(|| a.0.cmp(&b.0))
    });
}

/// `f_A(x) = max(0, max_Delta phi_A(Delta))` over proper primitive
/// sublattices.
pub fn f_a<T: Real>(basis: &LatticeBasis<T>, params: &QuasiNormParams<T>) -> Result<DriftValue<T>> {
    let subs = positive_sublattices(basis, params)?;
    Ok(match subs.into_iter().next() {
        Some((sub, v)) if v > T::zero() => DriftValue { value: v, maximizer: Some(sub) },
        _ => DriftValue { value: T::zero(), maximizer: None },
    })
}

/// `C = max_i i (d - 1) / lambda^(i)`, from `||wedge^i g^-1|| <= ||g||^(i(d-1))`.
pub fn variation_constant<T: Real>(params: &QuasiNormParams<T>) -> T {
    (1..params.d)
        .map(|i| T::lit((i * (params.d - 1)) as f64) / params.exponent(i))
        .fold(T::zero(), T::max)
}

fn check_dim<T: Real>(basis: &LatticeBasis<T>, params: &QuasiNormParams<T>) -> Result<()> {
    if basis.dim() != params.d {
        return Err(Error::InvalidParams(format!("basis has d = {}, params have d = {}", basis.dim(), params.d)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn p2(a: f64) -> QuasiNormParams<f64> {
        QuasiNormParams::new(2, a, vec![1.0]).unwrap()
    }

    #[test]
    fn phi_examples() {
        let p = p2(1.0);
        assert!((phi_a_covolume((-3.0f64).exp(), 1, &p) - 2.0).abs() < 1e-15);
        assert!(phi_a_covolume((-1.0f64).exp(), 1, &p).abs() < 1e-15);
        assert!(phi_a_covolume(1.0, 1, &p) <= -1.0);
        // |Delta|_A = e^(-phi)
        let c = 0.01;
        assert!((corrected_quasi_norm(c, 1, &p).ln() + phi_a_covolume(c, 1, &p)).abs() < 1e-12);
    }

    #[test]
    fn f_a_examples() {
        for d in 2..4 {
            let p = QuasiNormParams::new(d, 0.1, vec![1.0; d - 1]).unwrap();
            assert_eq!(f_a(&LatticeBasis::<f64>::standard(d), &p).unwrap(), DriftValue { value: 0.0, maximizer: None });
        }
        let b = LatticeBasis::diag(&[(-4.0f64).exp(), 4.0f64.exp()]).unwrap();
        let v = f_a(&b, &p2(1.0)).unwrap();
        assert!((v.value - 3.0).abs() < 1e-12);
        assert_eq!(v.maximizer.unwrap().rows(), &[vec![1, 0]]);
        assert_eq!(f_a(&b, &p2(10.0)).unwrap().value, 0.0);
    }

    #[test]
    fn variation_constant_examples() {
        assert_eq!(variation_constant(&p2(1.0)), 1.0);
        let p3 = QuasiNormParams::new(3, 1.0, vec![1.0, 1.0]).unwrap();
        assert_eq!(variation_constant(&p3), 4.0);
        let p3b = QuasiNormParams::new(3, 1.0, vec![2.0, 2.0]).unwrap();
        assert_eq!(variation_constant(&p3b), 2.0);
    }

    #[test]
    fn params_validation() {
        assert!(QuasiNormParams::new(3, 1.0, vec![1.0]).is_err());
        assert!(QuasiNormParams::new(2, 0.0, vec![1.0]).is_err());
        assert!(QuasiNormParams::new(2, 1.0, vec![-1.0]).is_err());
        let p = QuasiNormParams::new(3, 1.0, vec![1.0, 1.5]).unwrap();
        assert_eq!(p.duality_gap(), 0.5);
        assert!((p.threshold(1) - E.powi(-2)).abs() < 1e-15);
    }

    #[test]
    fn rank_two_candidate_in_dimension_three() {
        let b = LatticeBasis::diag(&[0.05, 0.05, 400.0]).unwrap();
        let p = QuasiNormParams::new(3, 0.5, vec![1.0, 1.0]).unwrap();
        let v = f_a(&b, &p).unwrap();
        // the plane of the two short vectors: -(1 + log 0.0025)
        assert!((v.value - (-(1.0 + 0.0025f64.ln()))).abs() < 1e-12);
        assert_eq!(v.maximizer.unwrap().rank(), 2);
    }
}
