//! Shared fixtures for the criterion benchmarks in `benches/`.

use cvqkd_core::SystemParams;

/// Channel and detector settings of the reference asymptotic scenario.
pub fn reference_params(variance: f64, distance_km: f64) -> SystemParams {
    SystemParams {
        variance,
        transmittance: 1.0,
        eps_c: 0.01,
        eta_d: 0.6,
        v_ele: 0.01,
        v_rin: 0.0,
        beta: 0.956,
    }
    .at_distance(distance_km)
}
