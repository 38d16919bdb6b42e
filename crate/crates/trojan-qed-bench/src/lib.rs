//! Shared fixtures for the criterion benchmarks.

use trojan_qed::dynamics::SystemParams;
use trojan_qed::quantum::QuadraticParams;

/// Reference dimensionless classical parameters (cavity R = 0.32 cm,
/// L = 1 cm, r₀ = 3600 a₀ rounded to the quoted q).
pub fn reference_classical() -> SystemParams {
    SystemParams::from_q_gamma(0.95625, 3.244_784e-7, 458.6475).expect("reference is valid")
}

/// Reference quantum parameters pinned to the published values.
pub fn reference_quantum() -> QuadraticParams {
    QuadraticParams::from_q_kappa_m1_gbar(0.95625, 2e-11, 0.295_799_884_775_272_9)
        .expect("reference is valid")
}
