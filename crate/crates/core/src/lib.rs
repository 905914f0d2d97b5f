//! One-axis-twisting simulator for qubit arrays coupled through a bus
//! resonator: device parameters, coherent and cat states, the qubit-resonator,
//! dispersive and ideal twisting Hamiltonians, Krylov propagation, Q-functions,
//! parity fringes and a readout post-processing pipeline.

pub mod device;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod hamiltonian;
pub mod krylov;
pub mod measurement;
pub mod observables;
pub mod rng;
pub mod sectors;
pub mod sparse;
pub mod states;
pub mod units;
pub mod validation;

pub use device::{
    cat_time, effective_coupling_matrix, load_device_config, DeviceConfig, DispersiveParams,
    QubitParams,
};
pub use error::{Error, Result};
pub use evolution::{
    evolve, fit_uniform_frame_phase, frame_phases, snapshot_series, PropagationReport, Schedule,
    DEFAULT_TOL,
};
pub use experiment::{run_ghz_experiment, GhzExperiment, GhzModel, GhzReport, Shots};
pub use hamiltonian::{
    build_h1, build_h2, build_oat_uniform, conserved_excitation_check, H1Spec, OatFrame,
    OperatorHandle, ResonatorSpec,
};
pub use measurement::{
    apply_confusion, correct_readout, mle_project, parity_from_probs, sample, subgroup_errorbars,
    ConfusionModel, CountTable, ProbTag, ProbVector,
};
pub use observables::{
    collective_moments, corner_populations, equatorial_lobe_count, fit_fringe, ghz_fidelity,
    husimi_q, parity_expectation, q_protocol, FringeFit, GridSpec, ParityCurve, QGrid,
};
pub use states::{
    apply_local_rotations, atomic_coherent_state, dicke_embed, dicke_project,
    ghz_reference_state, overlap, Basis, BlochDirection, PureState, QubitRotation,
};
