//! Chains with negative drift and `L^1`-bounded increments that are not
//! recurrent in law or along trajectories.

mod empirical;
mod mass;

pub use empirical::{
    build_empirical_escape_chain, demonstrate_empirical_escape, divergence_partial_sum, first_sparse_time,
    EmpiricalEscapeChain, EmpiricalEscapeReport, EmpiricalState, EscapeTrajectory,
};
pub use mass::{
    build_mass_escape_chain, demonstrate_mass_escape, stay_probability, Checkpoint, MassEscapeChain,
    MassEscapeReport, MassEscapeRow, MassEscapeSchedule, MassState, ScheduleParams,
};

use crate::chain::{DriftFunction, ExactKernel};

/// Exact one-step increment moments over a set of states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncrementMoments {
    /// `max_x E_x|f(X_1) - f(x)|`.
    pub sup_abs: f64,
    /// `min` and `max` of `E_x[f(X_1) - f(x)]` over states with `f(x) > 1`.
    pub drift_above_one: Option<(f64, f64)>,
}

pub fn increment_moments<K: ExactKernel>(
    kernel: &K,
    f: &DriftFunction<K::State>,
    states: &[K::State],
) -> IncrementMoments {
    let mut sup_abs = 0.0f64;
    let mut drift: Option<(f64, f64)> = None;
    for x in states {
        let fx = f.eval(x);
        let law = kernel.law(x);
        let abs: f64 = law.iter().map(|(y, p)| p * (f.eval(y) - fx).abs()).sum();
        sup_abs = sup_abs.max(abs);
        if fx > 1.0 {
            let m: f64 = law.iter().map(|(y, p)| p * (f.eval(y) - fx)).sum();
            drift = Some(drift.map_or((m, m), |(lo, hi)| (lo.min(m), hi.max(m))));
        }
    }
    IncrementMoments { sup_abs, drift_above_one: drift }
}
