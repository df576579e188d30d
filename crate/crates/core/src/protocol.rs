//! Prepare → controlled phase → post-select, and the amplified-phase algebra.
//!
//! The system qubit is pre-selected in `α|0⟩ + β|1⟩`, the pointer in
//! `μ|↑⟩ + ν|↓⟩`. The signal `θ` is applied to `|1↓⟩` only, and the system
//! is post-selected on `γ|0⟩ + η|1⟩`. The pointer left behind is
//!
//! ```text
//! μ(αγ + βη)|↑⟩ + ν(αγ + βη e^{iθ})|↓⟩
//! ```
//!
//! whose relative phase `κ` satisfies `tan κ = sin θ / (cos θ + r)` with
//! `r = αγ/(βη)`. Near-orthogonal selection (`r → −1`) magnifies the phase
//! by `h = 1/(1 + r)` for small `θ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{Amplitude, PureState2, Unitary4, UnnormalizedState2, NORM_TOL};

/// Below this `|αγ + βη|` the signal is treated as a pure global phase.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Real pre-selection, pointer and post-selection coefficients plus the
/// signal phase (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    pub eta: f64,
    pub theta: f64,
}

impl ProtocolConfig {
    pub fn new(alpha: f64, beta: f64, mu: f64, nu: f64, gamma: f64, eta: f64, theta: f64) -> Result<Self> {
        let cfg = Self { alpha, beta, mu, nu, gamma, eta, theta };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The table-top setting: `α = β = μ = ν = 1/√2` and
    /// `|ψ_f⟩ = sin(45° − 2δ)|0⟩ − cos(45° − 2δ)|1⟩`.
    pub fn from_delta(delta_deg: f64, theta: f64) -> Result<Self> {
        if !delta_deg.is_finite() {
            return Err(Error::Validation("delta must be finite".into()));
        }
        let x = (45.0 - 2.0 * delta_deg).to_radians();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(s, s, s, s, x.sin(), -x.cos(), theta)
    }

    /// Equal-weight pre-selection and pointer with the post-selection chosen
    /// so that `αγ/(βη) = r`.
    pub fn from_ratio(r: f64, theta: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::Validation("r must be finite".into()));
        }
        let x = (-r).atan();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(s, s, s, s, x.sin(), -x.cos(), theta)
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.alpha, self.beta, self.mu, self.nu, self.gamma, self.eta, self.theta];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("protocol parameters must be finite".into()));
        }
        for (name, a, b) in [
            ("alpha^2 + beta^2", self.alpha, self.beta),
            ("mu^2 + nu^2", self.mu, self.nu),
            ("gamma^2 + eta^2", self.gamma, self.eta),
        ] {
            let n = a * a + b * b;
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::Validation(format!("{name} = {n}, expected 1")));
            }
        }
        Ok(())
    }

    pub fn pre_selection(&self) -> Result<PureState2> {
        PureState2::from_real(self.alpha, self.beta)
    }

    pub fn pointer(&self) -> Result<PureState2> {
        PureState2::from_real(self.mu, self.nu)
    }

    pub fn post_selection(&self) -> Result<PureState2> {
        PureState2::from_real(self.gamma, self.eta)
    }

    /// `⟨ψ_f|ψ_i⟩ = αγ + βη`.
    pub fn overlap(&self) -> f64 {
        self.alpha * self.gamma + self.beta * self.eta
    }

    /// `r = αγ/(βη)`.
    pub fn ratio(&self) -> Result<f64> {
        let be = self.beta * self.eta;
        if be == 0.0 {
            return Err(Error::NoSignalCoupling);
        }
        Ok(self.alpha * self.gamma / be)
    }
}

/// The selection ratio `r` and the small-signal magnification `h = 1/(1+r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplificationParams {
    pub r: f64,
    pub h: f64,
}

impl AmplificationParams {
    pub fn from_ratio(r: f64) -> Result<Self> {
        Ok(Self { r, h: magnification(r)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub success_prob: f64,
    pub pointer: UnnormalizedState2,
    /// Relative phase of the exact post-selected pointer.
    pub kappa_exact: f64,
    /// `h·θ`.
    pub kappa_first_order: f64,
    pub params: AmplificationParams,
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ (|↑⟩⟨↑| + e^{iθ}|↓⟩⟨↓|)`
pub fn controlled_phase_unitary(theta: f64) -> Unitary4 {
    let one = Amplitude::new(1.0, 0.0);
    Unitary4::diagonal([one, one, one, Amplitude::from_polar(1.0, theta)])
}

/// Unnormalized post-selected pointer in closed form. Unlike
/// [`run_protocol`] this does not reject the orthogonal-selection case.
pub fn exact_pointer(cfg: &ProtocolConfig) -> UnnormalizedState2 {
    let ag = Amplitude::new(cfg.alpha * cfg.gamma, 0.0);
    let be = cfg.beta * cfg.eta;
    UnnormalizedState2 {
        a0: cfg.mu * (ag + be),
        a1: cfg.nu * (ag + be * Amplitude::from_polar(1.0, cfg.theta)),
    }
}

pub fn run_protocol(cfg: &ProtocolConfig) -> Result<ProtocolOutcome> {
    cfg.validate()?;
    let overlap = cfg.overlap();
    if overlap.abs() < DEGENERACY_TOL {
        return Err(Error::GlobalPhaseDegenerate { overlap: overlap.abs() });
    }
    let params = AmplificationParams::from_ratio(cfg.ratio()?)?;
    let pointer = exact_pointer(cfg);

    // arg(d / c) with c = αγ + βη real and d = αγ + βη e^{iθ}.
    let d = Amplitude::new(cfg.alpha * cfg.gamma, 0.0) + cfg.beta * cfg.eta * Amplitude::from_polar(1.0, cfg.theta);
    let kappa_exact = (d * overlap).arg();

    Ok(ProtocolOutcome {
        success_prob: pointer.norm_sq(),
        pointer,
        kappa_exact,
        kappa_first_order: params.h * cfg.theta,
        params,
    })
}

/// `κ = atan2(sin θ, cos θ + r)`, continuous through `κ = π/2`.
pub fn amplified_phase_exact(theta: f64, r: f64) -> Result<f64> {
    let (s, c) = (theta.sin(), theta.cos() + r);
    if s.abs() < NORM_TOL && c.abs() < NORM_TOL {
        return Err(Error::UndefinedPhase { theta, r });
    }
    Ok(s.atan2(c))
}

/// Small-signal gain `dκ/dθ` at `θ = 0`.
pub fn magnification(r: f64) -> Result<f64> {
    if !r.is_finite() || (1.0 + r).abs() < NORM_TOL {
        return Err(Error::DivergentMagnification { r });
    }
    Ok(1.0 / (1.0 + r))
}

/// Solves `tan κ = sin θ / (cos θ + r)` for `θ` on the branch through the
/// origin: `sin(θ − κ) = r sin κ`, so `θ = κ + asin(r sin κ)`.
pub fn invert_amplification(kappa: f64, r: f64) -> Result<f64> {
    let s = r * kappa.sin();
    if !s.is_finite() || s.abs() > 1.0 + NORM_TOL {
        return Err(Error::NoInversion { kappa, r });
    }
    Ok(kappa + s.clamp(-1.0, 1.0).asin())
}

/// The first-order pointer `μ|↑⟩ + ν e^{iκ}|↓⟩`.
pub fn amplified_pointer_first_order(cfg: &ProtocolConfig) -> Result<PureState2> {
    let outcome = run_protocol(cfg)?;
    PureState2::new(
        Amplitude::new(cfg.mu, 0.0),
        cfg.nu * Amplitude::from_polar(1.0, outcome.kappa_exact),
    )
}
