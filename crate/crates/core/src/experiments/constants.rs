//! Reference values for the equidistribution statistic.
//!
//! The Haar averages below were produced by `scripts/siegel_reference.py`
//! (200000 exact Haar samples from the modular fundamental domain with
//! measure `dx dy / y^2`, numpy seed 20240611):
//!
//! ```text
//! python3 scripts/siegel_reference.py 200000 20240611
//! ```
//!
//! Each row is `(r, mean of S_r, standard error)` with
//! `S_r = #{primitive v : |v| <= r}`, both signs counted.

/// Monte Carlo Haar averages of `S_r` on unimodular lattices in `R^2`.
pub const SIEGEL_ORACLE_D2: [(f64, f64, f64); 3] = [
    (0.5, 0.476530, 0.001905),
    (1.0, 1.908990, 0.000932),
    (1.5, 4.294500, 0.004775),
];

/// `vol(B_r) / zeta(2) = 6 r^2 / pi`, the Haar mean of `S_r` in dimension 2.
pub fn siegel_reference_d2(r: f64) -> f64 {
    6.0 * r * r / std::f64::consts::PI
}
