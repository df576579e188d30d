//! Weak-measurement phase amplification.
//!
//! A small longitudinal phase `θ` is coupled to a pointer qubit through a
//! controlled phase on a system qubit. Post-selecting the system on a state
//! nearly orthogonal to its preparation turns `θ` into a larger pointer
//! rotation `κ`, which is read out as `⟨σ̂x⟩ = cos κ` from photon counts and
//! inverted back to `θ`.
//!
//! - [`qstate`]: pure states on system ⊗ pointer
//! - [`protocol`]: the abstract protocol and the `θ ↔ κ` algebra
//! - [`optics`]: Jones-calculus model of the beam-displacer interferometer
//! - [`montecarlo`]: seeded photon-counting simulation
//! - [`estimation`]: calibration, phase inference and the unamplified baseline

pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod optics;
pub mod protocol;
pub mod qstate;

pub use error::{Error, Result};
pub use estimation::{
    analytic_sensitivity, calibrate_r, compare_protocols, conventional_baseline, estimate_phase,
    BaselineEstimate, Budget, BudgetMode, CalibrationResult, ComparisonReport, ComparisonRow,
    ArmSummary, PhaseEstimate,
};
pub use montecarlo::{
    sigma_x_from_counts, simulate_counts, simulate_counts_with, CountData, CountRecord, NoiseModel,
    PointerStatistics,
};
pub use optics::{
    apply_bd, build_figure1_train, figure1_stages, hwp_jones, lcvr_jones, postselect_middle_rail,
    simulate_train, Figure1Stages, JonesMatrix, Mode, ModeState, OpticalElement, OpticalTrain,
    Polarization, Rails,
};
pub use protocol::{
    amplified_phase_exact, amplified_pointer_first_order, controlled_phase_unitary, exact_pointer,
    invert_amplification, magnification, run_protocol, AmplificationParams, ProtocolConfig,
    ProtocolOutcome,
};
pub use qstate::{
    apply_unitary, fidelity, project_system, sigma_x_expectation, tensor, Amplitude, JointState,
    PureState2, Unitary4, UnnormalizedState2,
};
