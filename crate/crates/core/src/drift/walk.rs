use crate::chain::{ChainKernel, DriftFunction};
use crate::lattice::LatticeBasis;
use crate::rng::StreamRng;
use crate::scalar::Real;

use super::fa::{f_a, QuasiNormParams};
use super::MatrixMeasure;

/// The walk `x -> g x`, `g ~ mu`, on unimodular lattices. States are kept
/// LLL-reduced and rescaled to determinant `±1`.
#[derive(Clone, Debug)]
pub struct LatticeWalk<T> {
    mu: MatrixMeasure<T>,
}

impl<T: Real> LatticeWalk<T> {
    pub fn new(mu: MatrixMeasure<T>) -> Self {
        Self { mu }
    }

    pub fn measure(&self) -> &MatrixMeasure<T> {
        &self.mu
    }

    pub fn apply(&self, x: &LatticeBasis<T>, g: &crate::linalg::Mat<T>) -> LatticeBasis<T> {
        let moved = x.transformed(g);
        let reduced = moved.lll_reduce().map(|r| r.basis).unwrap_or(moved);
        let d = reduced.dim();
        let det = reduced.matrix().det().abs();
        if det > T::zero() && (det - T::one()).abs() > T::epsilon() {
            LatticeBasis::raw(reduced.matrix().scale(det.powf(-T::one() / T::lit(d as f64))))
        } else {
            reduced
        }
    }
}

impl<T: Real> ChainKernel for LatticeWalk<T> {
    type State = LatticeBasis<T>;
    fn step(&self, x: &LatticeBasis<T>, rng: &mut StreamRng) -> LatticeBasis<T> {
        self.apply(x, self.mu.sample(rng))
    }
}

/// `f_A` as a chain drift function; enumeration failures count as `+inf`.
pub fn fa_drift_function<T: Real>(params: QuasiNormParams<T>) -> DriftFunction<LatticeBasis<T>> {
    let label = format!("f_A(A={})", params.a());
    DriftFunction::new(label, move |x: &LatticeBasis<T>| match f_a(x, &params) {
        Ok(v) => v.value.as_f64(),
        Err(_) => f64::INFINITY,
    })
}
