//! The Benoist-Quint drift function `f_A` on `SL_d(R)/SL_d(Z)`, Lyapunov
//! exponents of the walk, and the checks behind its controlled drift.
//!
//! For walks Zariski dense in `SL_d` the relevant representations are the
//! exterior powers `wedge^i R^d`, `0 < i < d`, each with a single top
//! exponent `lambda^(i)`. A rank-`i` primitive sublattice `Delta` has
//! `phi_A(Delta) = -(A i (d-i) + log covol(Delta)) / lambda^(i)`.

mod checks;
mod fa;
mod lyapunov;
mod measure;
mod walk;

pub use checks::{
    calibrate_uniqueness, check_probable_decrease, check_uniform_expansion, check_uniqueness_at_top, check_variation,
    default_decrease_rate, log_norm, sd_certificate, truncated_log_norm_expectation, CalibrationStep, ControlledDrift,
    DecreaseReport, DecreaseRow, ExpansionReport, Representation, UniquenessCalibration, VariationReport,
};
pub use fa::{
    corrected_quasi_norm, f_a, phi_a, phi_a_covolume, positive_sublattices, quasi_norm, variation_constant,
    DriftValue, QuasiNormParams,
};
pub use lyapunov::{estimate_lyapunov, ExponentTable, LyapunovEstimate, Z95};
pub use measure::MatrixMeasure;
pub use walk::{fa_drift_function, LatticeWalk};

use crate::chain::DriftFunction;

/// `x -> max(f0(x), f1(x))`.
pub fn max_drift<S: 'static>(f0: &DriftFunction<S>, f1: &DriftFunction<S>) -> DriftFunction<S> {
    DriftFunction::max(f0, f1)
}

/// `x -> c_x f0(x) + f1(x)`, with `c_x` rising affinely from 0 at
/// `f0 = t0` to `c` at `f0 = t1`.
pub fn glue_drift<S: 'static>(
    f0: &DriftFunction<S>,
    f1: &DriftFunction<S>,
    c: f64,
    t0: f64,
    t1: f64,
) -> crate::Result<DriftFunction<S>> {
    DriftFunction::glue(f0, f1, c, t0, t1)
}
