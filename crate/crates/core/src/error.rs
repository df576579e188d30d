use thiserror::Error;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("state is not normalized (norm^2 = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(&'static str),

    /// Pre- and post-selected states are orthogonal: the signal is a pure
    /// global phase on the pointer and cannot be read out.
    #[error("pre- and post-selection are orthogonal (|<psi_f|psi_i>| = {overlap:e}); the phase signal is global")]
    GlobalPhaseDegenerate { overlap: f64 },

    #[error("no coupling between signal and pointer (beta*eta = 0)")]
    NoSignalCoupling,

    #[error("amplified phase undefined at theta = {theta}, r = {r}")]
    UndefinedPhase { theta: f64, r: f64 },

    #[error("magnification diverges at r = {r}")]
    DivergentMagnification { r: f64 },

    #[error("kappa = {kappa} is inconsistent with r = {r} (|r sin kappa| > 1)")]
    NoInversion { kappa: f64, r: f64 },

    #[error("rail {rail} outside the working range {min}..={max}")]
    RailOverflow { rail: i32, min: i32, max: i32 },

    #[error("post-selection probability {p} is on the boundary of (0, 1)")]
    CalibrationBoundary { p: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    #[error("sensitivity undefined: sin(h*theta) = 0 (h = {h}, theta = {theta})")]
    UndefinedSensitivity { h: f64, theta: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
