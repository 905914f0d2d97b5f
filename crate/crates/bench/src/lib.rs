//! Fixtures shared by the propagation benchmarks.

use oatsim_core::{
    atomic_coherent_state, build_h2, build_oat_uniform, Basis, BlochDirection, DeviceConfig,
    OatFrame, OperatorHandle, PureState, Result,
};

/// Dispersive model over the first `n` bundled device qubits at Δ = −470 MHz, with
/// the starting coherent state (π/2, −π/2).
pub fn dispersive_fixture(n: usize) -> Result<(OperatorHandle, PureState)> {
    let cfg = DeviceConfig::table_s1();
    let subset = cfg.leading_subset(n)?;
    let op = build_h2(&cfg, &subset, -470.0, true)?;
    let start = atomic_coherent_state(n, equator(), Basis::Full(n))?;
    Ok((op, start))
}

/// Ideal twisting ladder of `n` qubits with the same starting state.
pub fn ladder_fixture(n: usize, lambda_mhz: f64) -> Result<(OperatorHandle, PureState)> {
    let op = build_oat_uniform(n, lambda_mhz, OatFrame::Exchange)?;
    let start = atomic_coherent_state(n, equator(), Basis::Dicke(n))?;
    Ok((op, start))
}

fn equator() -> BlochDirection {
    BlochDirection::new(std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2)
}
