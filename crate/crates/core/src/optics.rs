//! Jones-calculus model of the beam-displacer interferometer.
//!
//! A photon occupies a (rail, polarization) mode: rails are the parallel beam
//! lines a calcite displacer produces, indexed upward from the input line.
//! Path `|0⟩` is rail 0 (down), path `|1⟩` is rail 1 (up). Elements act
//! linearly on the amplitude over all modes in the working range
//! `RAIL_MIN..=RAIL_MAX`.
//!
//! After the second displacer the post-selected light leaves on
//! [`MIDDLE_RAIL`]: its H component comes from the up path and its V
//! component from the down path, so path and polarization have traded
//! roles. [`pointer_from_middle_rail`] undoes that exchange. `σ̂x` is
//! invariant under it, which is why the analyser reads the same
//! `⟨σ̂x⟩` either way.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{Amplitude, UnnormalizedState2, NORM_TOL};

pub const RAIL_MIN: i32 = -2;
pub const RAIL_MAX: i32 = 2;
const NUM_RAILS: usize = (RAIL_MAX - RAIL_MIN + 1) as usize;

/// Output line of the second displacer that carries post-selected photons.
pub const MIDDLE_RAIL: i32 = 1;

/// Calcite displacer length. Not used by the mode model.
pub const BD_LENGTH_MM: f64 = 39.70;
/// Transverse walk-off of V light in the displacer. Not used by the mode model.
pub const BD_WALK_OFF_MM: f64 = 4.21;

pub type JonesMatrix = [[Amplitude; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub rail: i32,
    pub pol: Polarization,
}

impl Mode {
    pub fn new(rail: i32, pol: Polarization) -> Self {
        Self { rail, pol }
    }
}

fn check_rail(rail: i32) -> Result<()> {
    if (RAIL_MIN..=RAIL_MAX).contains(&rail) {
        Ok(())
    } else {
        Err(Error::RailOverflow { rail, min: RAIL_MIN, max: RAIL_MAX })
    }
}

/// Amplitudes over every mode of the working range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    amps: [[Amplitude; 2]; NUM_RAILS],
}

impl Default for ModeState {
    fn default() -> Self {
        Self { amps: [[Amplitude::new(0.0, 0.0); 2]; NUM_RAILS] }
    }
}

impl ModeState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// A single photon in `mode`.
    pub fn single(mode: Mode) -> Result<Self> {
        let mut s = Self::default();
        s.set(mode, Amplitude::new(1.0, 0.0))?;
        Ok(s)
    }

    pub fn from_modes(modes: impl IntoIterator<Item = (Mode, Amplitude)>) -> Result<Self> {
        let mut s = Self::default();
        for (m, a) in modes {
            s.set(m, a)?;
        }
        Ok(s)
    }

    fn slot(rail: i32) -> usize {
        (rail - RAIL_MIN) as usize
    }

    pub fn get(&self, mode: Mode) -> Amplitude {
        if check_rail(mode.rail).is_err() {
            return Amplitude::new(0.0, 0.0);
        }
        self.amps[Self::slot(mode.rail)][mode.pol.index()]
    }

    pub fn set(&mut self, mode: Mode, amp: Amplitude) -> Result<()> {
        check_rail(mode.rail)?;
        self.amps[Self::slot(mode.rail)][mode.pol.index()] = amp;
        Ok(())
    }

    /// `(H, V)` amplitudes on one rail.
    pub fn rail(&self, rail: i32) -> [Amplitude; 2] {
        if check_rail(rail).is_err() {
            return [Amplitude::new(0.0, 0.0); 2];
        }
        self.amps[Self::slot(rail)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    /// Non-zero modes in (rail, polarization) order.
    pub fn iter(&self) -> impl Iterator<Item = (Mode, Amplitude)> + '_ {
        (RAIL_MIN..=RAIL_MAX).flat_map(move |rail| {
            [Polarization::H, Polarization::V]
                .into_iter()
                .map(move |pol| (Mode::new(rail, pol), self.get(Mode::new(rail, pol))))
        })
        .filter(|(_, a)| *a != Amplitude::new(0.0, 0.0))
    }

    /// `|⟨self|other⟩|² / (‖self‖²‖other‖²)` over the full mode space.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let overlap: Amplitude = self
            .amps
            .iter()
            .flatten()
            .zip(other.amps.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum();
        overlap.norm_sqr() / (self.norm_sq() * other.norm_sq())
    }
}

/// Rail selector for an element: every rail, or an explicit list.
///
/// In a train document an omitted `rails` key means every rail.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Option<Vec<i32>>", into = "Option<Vec<i32>>")]
pub enum Rails {
    #[default]
    All,
    Only(Vec<i32>),
}

impl Rails {
    pub fn one(rail: i32) -> Self {
        Rails::Only(vec![rail])
    }

    pub fn contains(&self, rail: i32) -> bool {
        match self {
            Rails::All => true,
            Rails::Only(v) => v.contains(&rail),
        }
    }

    pub fn is_all(&self) -> bool {
        matches!(self, Rails::All)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Rails::All => Ok(()),
            Rails::Only(v) => v.iter().try_for_each(|&r| check_rail(r)),
        }
    }
}

impl From<Option<Vec<i32>>> for Rails {
    fn from(v: Option<Vec<i32>>) -> Self {
        v.map_or(Rails::All, Rails::Only)
    }
}

impl From<Rails> for Option<Vec<i32>> {
    fn from(r: Rails) -> Self {
        match r {
            Rails::All => None,
            Rails::Only(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OpticalElement {
    /// Half-wave plate with its fast axis at `angle_deg` from H.
    Hwp {
        angle_deg: f64,
        #[serde(default, skip_serializing_if = "Rails::is_all")]
        rails: Rails,
    },
    /// Variable retarder adding `retardance` (radians) to V relative to H.
    Lcvr {
        retardance: f64,
        #[serde(default, skip_serializing_if = "Rails::is_all")]
        rails: Rails,
    },
    /// Beam displacer: H passes, V walks up one rail.
    Bd,
    /// Polarizing beam splitter: H is transmitted, V reflected. The two
    /// output ports are labelled by polarization, so the action on the
    /// mode space is the identity.
    Pbs,
    /// Absorbs everything on the listed rails.
    Block {
        #[serde(default, skip_serializing_if = "Rails::is_all")]
        rails: Rails,
    },
}

impl OpticalElement {
    pub fn hwp(angle_deg: f64, rails: Rails) -> Self {
        OpticalElement::Hwp { angle_deg, rails }
    }

    /// Retarder; `retardance` is wrapped into `[0, 2π)`.
    pub fn lcvr(retardance: f64, rails: Rails) -> Self {
        OpticalElement::Lcvr { retardance: wrap_phase(retardance), rails }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OpticalElement::Hwp { angle_deg, rails } => {
                if !angle_deg.is_finite() {
                    return Err(Error::Validation("HWP angle must be finite".into()));
                }
                rails.validate()
            }
            OpticalElement::Lcvr { retardance, rails } => {
                if !(0.0..TAU).contains(retardance) {
                    return Err(Error::Validation(format!(
                        "LCVR retardance {retardance} outside [0, 2pi)"
                    )));
                }
                rails.validate()
            }
            OpticalElement::Block { rails } => rails.validate(),
            OpticalElement::Bd | OpticalElement::Pbs => Ok(()),
        }
    }

    /// Blocking elements discard amplitude; everything else is unitary.
    pub fn is_lossless(&self) -> bool {
        !matches!(self, OpticalElement::Block { .. })
    }

    pub fn apply(&self, s: &ModeState) -> Result<ModeState> {
        match self {
            OpticalElement::Hwp { angle_deg, rails } => Ok(apply_local(s, &hwp_jones(*angle_deg), rails)),
            OpticalElement::Lcvr { retardance, rails } => Ok(apply_local(s, &lcvr_jones(*retardance), rails)),
            OpticalElement::Bd => apply_bd(s),
            OpticalElement::Pbs => Ok(*s),
            OpticalElement::Block { rails } => {
                let mut out = *s;
                for rail in RAIL_MIN..=RAIL_MAX {
                    if rails.contains(rail) {
                        out.amps[ModeState::slot(rail)] = [Amplitude::new(0.0, 0.0); 2];
                    }
                }
                Ok(out)
            }
        }
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn apply_local(s: &ModeState, m: &JonesMatrix, rails: &Rails) -> ModeState {
    let mut out = *s;
    for rail in RAIL_MIN..=RAIL_MAX {
        if rails.contains(rail) {
            let [h, v] = s.amps[ModeState::slot(rail)];
            out.amps[ModeState::slot(rail)] = [m[0][0] * h + m[0][1] * v, m[1][0] * h + m[1][1] * v];
        }
    }
    out
}

/// `[[cos 2φ, sin 2φ], [sin 2φ, −cos 2φ]]` for a fast axis at `φ` degrees.
pub fn hwp_jones(angle_deg: f64) -> JonesMatrix {
    let two_phi = (2.0 * angle_deg).to_radians();
    let (s, c) = two_phi.sin_cos();
    [
        [Amplitude::new(c, 0.0), Amplitude::new(s, 0.0)],
        [Amplitude::new(s, 0.0), Amplitude::new(-c, 0.0)],
    ]
}

/// `diag(1, e^{iθ})`.
pub fn lcvr_jones(retardance: f64) -> JonesMatrix {
    [
        [Amplitude::new(1.0, 0.0), Amplitude::new(0.0, 0.0)],
        [Amplitude::new(0.0, 0.0), Amplitude::from_polar(1.0, retardance)],
    ]
}

/// Moves every V amplitude up one rail; H is untouched.
pub fn apply_bd(s: &ModeState) -> Result<ModeState> {
    let top = s.get(Mode::new(RAIL_MAX, Polarization::V));
    if top != Amplitude::new(0.0, 0.0) {
        return Err(Error::RailOverflow { rail: RAIL_MAX + 1, min: RAIL_MIN, max: RAIL_MAX });
    }
    let mut out = ModeState::default();
    for rail in RAIL_MIN..=RAIL_MAX {
        let [h, v] = s.rail(rail);
        out.amps[ModeState::slot(rail)][0] = h;
        if rail < RAIL_MAX {
            out.amps[ModeState::slot(rail + 1)][1] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OpticalTrain {
    pub elements: Vec<OpticalElement>,
}

impl OpticalTrain {
    pub fn new(elements: Vec<OpticalElement>) -> Result<Self> {
        let t = Self { elements };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        self.elements.iter().try_for_each(OpticalElement::validate)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn then(mut self, other: &OpticalTrain) -> Self {
        self.elements.extend(other.elements.iter().cloned());
        self
    }
}

/// Applies the elements left to right.
pub fn simulate_train(train: &OpticalTrain, input: &ModeState) -> Result<ModeState> {
    train.validate()?;
    train.elements.iter().try_fold(*input, |s, e| e.apply(&s))
}

/// Keeps [`MIDDLE_RAIL`] and returns its weight with its `(H, V)` amplitudes.
pub fn postselect_middle_rail(s: &ModeState) -> Result<(f64, UnnormalizedState2)> {
    let [h, v] = s.rail(MIDDLE_RAIL);
    let pol = UnnormalizedState2::new(h, v)?;
    let prob = pol.norm_sq();
    if prob <= NORM_TOL * NORM_TOL {
        return Err(Error::DegenerateState("no amplitude on the middle rail"));
    }
    Ok((prob, pol))
}

/// Pointer `(↑, ↓)` amplitudes from the middle-rail `(H, V)` amplitudes:
/// `↑` rides on V (down path), `↓` on H (up path).
pub fn pointer_from_middle_rail(pol: &UnnormalizedState2) -> UnnormalizedState2 {
    pol.swapped()
}

/// The beam-displacer setup split into its functional stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Stages {
    /// HWP at 22.5° turning the H input into `|+⟩`.
    pub source: OpticalTrain,
    /// Displacer plus one HWP per path: `(|0⟩ ± |1⟩)/√2 ⊗ |+⟩`.
    pub preparation: OpticalTrain,
    /// Signal retarder on the up path, compensating retarder on the down path.
    pub signal: OpticalTrain,
    /// Tilted HWPs, second displacer, and the block on the outer rails.
    pub postselection: OpticalTrain,
    /// HWP at 22.5° and PBS: `|±⟩` onto the two detectors.
    pub analysis: OpticalTrain,
}

impl Figure1Stages {
    pub fn full(&self) -> OpticalTrain {
        self.source
            .clone()
            .then(&self.preparation)
            .then(&self.signal)
            .then(&self.postselection)
            .then(&self.analysis)
    }

    /// Everything up to and including the rail block, before the analyser.
    pub fn until_postselection(&self) -> OpticalTrain {
        self.source.clone().then(&self.preparation).then(&self.signal).then(&self.postselection)
    }
}

/// Stages of the setup for tilt `δ` (degrees, `0 < δ < 22.5`) and signal
/// `θ` (radians). Post-selection angles follow `67.5° − δ` on the up path
/// and `22.5° − δ` on the down path.
pub fn figure1_stages(delta_deg: f64, theta: f64) -> Result<Figure1Stages> {
    if !(delta_deg > 0.0 && delta_deg < 22.5) {
        return Err(Error::Validation(format!("delta = {delta_deg} deg outside (0, 22.5)")));
    }
    if !theta.is_finite() {
        return Err(Error::Validation("theta must be finite".into()));
    }
    let blocked: Vec<i32> = (RAIL_MIN..=RAIL_MAX).filter(|&r| r != MIDDLE_RAIL).collect();
    let stages = Figure1Stages {
        source: OpticalTrain::new(vec![OpticalElement::hwp(22.5, Rails::All)])?,
        preparation: OpticalTrain::new(vec![
            OpticalElement::Bd,
            OpticalElement::hwp(22.5, Rails::one(0)),
            OpticalElement::hwp(-22.5, Rails::one(1)),
        ])?,
        signal: OpticalTrain::new(vec![
            OpticalElement::lcvr(theta, Rails::one(1)),
            OpticalElement::lcvr(0.0, Rails::one(0)),
        ])?,
        postselection: OpticalTrain::new(vec![
            OpticalElement::hwp(67.5 - delta_deg, Rails::one(1)),
            OpticalElement::hwp(22.5 - delta_deg, Rails::one(0)),
            OpticalElement::Bd,
            OpticalElement::Block { rails: Rails::Only(blocked) },
        ])?,
        analysis: OpticalTrain::new(vec![
            OpticalElement::hwp(22.5, Rails::one(MIDDLE_RAIL)),
            OpticalElement::Pbs,
        ])?,
    };
    Ok(stages)
}

pub fn build_figure1_train(delta_deg: f64, theta: f64) -> Result<OpticalTrain> {
    Ok(figure1_stages(delta_deg, theta)?.full())
}

/// Horizontally polarized photon on the input rail.
pub fn figure1_input() -> ModeState {
    ModeState::single(Mode::new(0, Polarization::H)).expect("rail 0 is in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{fidelity, sigma_x_expectation};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2 as S;

    fn c(re: f64) -> Amplitude {
        Amplitude::new(re, 0.0)
    }

    fn mat_close(a: &JonesMatrix, b: &JonesMatrix, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).norm() <= tol))
    }

    fn mul(a: &JonesMatrix, b: &JonesMatrix) -> JonesMatrix {
        let mut m = [[c(0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        m
    }

    const H: Polarization = Polarization::H;
    const V: Polarization = Polarization::V;

    #[test]
    fn hwp_cases() {
        let m = hwp_jones(22.5);
        assert_abs_diff_eq!(m[0][0].re, S, epsilon = 1e-15);
        assert_abs_diff_eq!(m[1][0].re, S, epsilon = 1e-15);
        assert!(mat_close(&hwp_jones(0.0), &[[c(1.0), c(0.0)], [c(0.0), c(-1.0)]], 0.0));
        let swap = hwp_jones(45.0);
        assert!(mat_close(&swap, &[[c(0.0), c(1.0)], [c(1.0), c(0.0)]], 1e-15));
        // 67.5°: H -> (-H + V)/√2
        let m = hwp_jones(67.5);
        assert_abs_diff_eq!(m[0][0].re, -S, epsilon = 1e-15);
        assert_abs_diff_eq!(m[1][0].re, S, epsilon = 1e-15);
    }

    #[test]
    fn lcvr_cases() {
        let id = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
        assert!(mat_close(&lcvr_jones(0.0), &id, 0.0));
        assert!(mat_close(&lcvr_jones(std::f64::consts::PI), &[[c(1.0), c(0.0)], [c(0.0), c(-1.0)]], 1e-15));
        assert_eq!(lcvr_jones(0.05)[1][1], Amplitude::new(0.05f64.cos(), 0.05f64.sin()));
    }

    #[test]
    fn bd_cases() {
        let s = ModeState::single(Mode::new(0, H)).unwrap();
        assert_eq!(apply_bd(&s).unwrap(), s);
        let s = ModeState::single(Mode::new(0, V)).unwrap();
        assert_eq!(apply_bd(&s).unwrap(), ModeState::single(Mode::new(1, V)).unwrap());
        let s = ModeState::from_modes([(Mode::new(0, H), c(S)), (Mode::new(0, V), c(S))]).unwrap();
        let expected = ModeState::from_modes([(Mode::new(0, H), c(S)), (Mode::new(1, V), c(S))]).unwrap();
        assert_eq!(apply_bd(&s).unwrap(), expected);
    }

    #[test]
    fn bd_overflow_is_an_error() {
        let s = ModeState::single(Mode::new(RAIL_MAX, V)).unwrap();
        assert!(matches!(apply_bd(&s), Err(Error::RailOverflow { .. })));
        assert!(ModeState::single(Mode::new(3, H)).is_err());
    }

    #[test]
    fn element_validation() {
        assert!(OpticalElement::Lcvr { retardance: 7.0, rails: Rails::All }.validate().is_err());
        assert!(OpticalElement::Hwp { angle_deg: f64::NAN, rails: Rails::All }.validate().is_err());
        assert!(OpticalElement::Block { rails: Rails::one(5) }.validate().is_err());
        assert_eq!(OpticalElement::lcvr(-0.1, Rails::All), OpticalElement::Lcvr {
            retardance: TAU - 0.1,
            rails: Rails::All
        });
        assert!(figure1_stages(0.0, 0.0).is_err());
        assert!(figure1_stages(22.5, 0.0).is_err());
    }

    #[test]
    fn empty_train_is_identity() {
        let s = figure1_input();
        assert_eq!(simulate_train(&OpticalTrain::default(), &s).unwrap(), s);
    }

    #[test]
    fn preparation_gives_uniform_four_mode_state() {
        let st = figure1_stages(2.0, 0.05).unwrap();
        let s = simulate_train(&st.source.clone().then(&st.preparation), &figure1_input()).unwrap();
        // (|0⟩ − |1⟩)/√2 ⊗ |+⟩: HWP at −22.5° on the up path carries a sign.
        let expected = [(0, H, 0.5), (0, V, 0.5), (1, H, -0.5), (1, V, -0.5)];
        for (rail, pol, a) in expected {
            assert!((s.get(Mode::new(rail, pol)) - c(a)).norm() < 1e-15);
        }
        assert_abs_diff_eq!(s.norm_sq(), 1.0, epsilon = 1e-15);

        // With the caption's 67.5° plate on the up path the sign disappears.
        let alt = OpticalTrain::new(vec![
            OpticalElement::hwp(22.5, Rails::All),
            OpticalElement::Bd,
            OpticalElement::hwp(22.5, Rails::one(0)),
            OpticalElement::hwp(67.5, Rails::one(1)),
        ])
        .unwrap();
        let s = simulate_train(&alt, &figure1_input()).unwrap();
        for (rail, pol, _) in expected {
            assert!((s.get(Mode::new(rail, pol)) - c(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn signal_stage_matches_phase_coupled_state_and_dof_exchange() {
        let theta = 0.05;
        let st = figure1_stages(2.0, theta).unwrap();
        let train = st.source.clone().then(&st.preparation).then(&st.signal);
        let s = simulate_train(&train, &figure1_input()).unwrap();
        let e = Amplitude::from_polar(1.0, theta);
        // ½[|0⟩⊗(H + V) − |1⟩⊗(H + e^{iθ}V)]
        assert!((s.get(Mode::new(0, H)) - c(0.5)).norm() < 1e-15);
        assert!((s.get(Mode::new(0, V)) - c(0.5)).norm() < 1e-15);
        assert!((s.get(Mode::new(1, H)) - c(-0.5)).norm() < 1e-15);
        assert!((s.get(Mode::new(1, V)) + 0.5 * e).norm() < 1e-15);

        // Polarization-major regrouping: H ⊗ (|0⟩ − |1⟩)/2 + V ⊗ (|0⟩ − e^{iθ}|1⟩)/2
        let h_branch = [s.get(Mode::new(0, H)), s.get(Mode::new(1, H))];
        let v_branch = [s.get(Mode::new(0, V)), s.get(Mode::new(1, V))];
        assert!((h_branch[0] - c(0.5)).norm() < 1e-15 && (h_branch[1] - c(-0.5)).norm() < 1e-15);
        assert!((v_branch[0] - c(0.5)).norm() < 1e-15 && (v_branch[1] + 0.5 * e).norm() < 1e-15);
    }

    #[test]
    fn zero_signal_postselects_plus_state() {
        let st = figure1_stages(2.0, 0.0).unwrap();
        let s = simulate_train(&st.until_postselection(), &figure1_input()).unwrap();
        let (prob, pol) = postselect_middle_rail(&s).unwrap();
        let sin4 = 4f64.to_radians().sin();
        assert_abs_diff_eq!(prob, sin4 * sin4, epsilon = 1e-15);
        assert_abs_diff_eq!(prob, 0.004_865_965_629_214_842, epsilon = 1e-15);
        let plus = crate::qstate::PureState2::plus().as_unnormalized();
        assert_abs_diff_eq!(fidelity(&pol, &plus).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn postselection_cases() {
        let s = ModeState::single(Mode::new(MIDDLE_RAIL, V)).unwrap();
        assert_eq!(postselect_middle_rail(&s).unwrap().0, 1.0);
        let s = ModeState::from_modes([
            (Mode::new(MIDDLE_RAIL, H), c(S)),
            (Mode::new(0, H), c(S)),
        ])
        .unwrap();
        assert_abs_diff_eq!(postselect_middle_rail(&s).unwrap().0, 0.5, epsilon = 1e-15);
        assert!(postselect_middle_rail(&figure1_input()).is_err());
    }

    #[test]
    fn full_train_matches_protocol_sigma_x() {
        use crate::protocol::{run_protocol, ProtocolConfig};
        let (delta, theta) = (2.0, 0.05);
        let st = figure1_stages(delta, theta).unwrap();
        let s = simulate_train(&st.until_postselection(), &figure1_input()).unwrap();
        let (prob, pol) = postselect_middle_rail(&s).unwrap();
        let out = run_protocol(&ProtocolConfig::from_delta(delta, theta).unwrap()).unwrap();
        assert_abs_diff_eq!(prob, out.success_prob, epsilon = 1e-14);
        assert_abs_diff_eq!(
            sigma_x_expectation(&pol).unwrap(),
            sigma_x_expectation(&out.pointer).unwrap(),
            epsilon = 1e-12
        );
        let ptr = pointer_from_middle_rail(&pol);
        assert_abs_diff_eq!((ptr.a1 * ptr.a0.conj()).arg(), out.kappa_exact, epsilon = 1e-12);
    }

    #[test]
    fn analyser_routes_plus_to_h() {
        // |+⟩ on the middle rail must land entirely on H after the analyser.
        let st = figure1_stages(2.0, 0.0).unwrap();
        let s = ModeState::from_modes([
            (Mode::new(MIDDLE_RAIL, H), c(S)),
            (Mode::new(MIDDLE_RAIL, V), c(S)),
        ])
        .unwrap();
        let out = simulate_train(&st.analysis, &s).unwrap();
        assert_abs_diff_eq!(out.get(Mode::new(MIDDLE_RAIL, H)).norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn train_document_round_trip() {
        let train = build_figure1_train(5.0, 0.08).unwrap();
        let json = serde_json::to_string(&train).unwrap();
        let back: OpticalTrain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, train);

        let doc = r#"
            [[elements]]
            kind = "hwp"
            angle_deg = 22.5

            [[elements]]
            kind = "bd"

            [[elements]]
            kind = "lcvr"
            retardance = 0.1
            rails = [1]
        "#;
        let t: OpticalTrain = toml::from_str(doc).unwrap();
        assert_eq!(t.elements[0], OpticalElement::hwp(22.5, Rails::All));
        assert_eq!(t.elements[2], OpticalElement::lcvr(0.1, Rails::one(1)));
    }

    fn element() -> impl Strategy<Value = OpticalElement> {
        let rails = prop_oneof![
            Just(Rails::All),
            proptest::collection::vec(RAIL_MIN..=RAIL_MAX, 0..3).prop_map(Rails::Only)
        ];
        prop_oneof![
            (-180.0..180.0f64, rails.clone()).prop_map(|(a, r)| OpticalElement::hwp(a, r)),
            (0.0..TAU, rails.clone()).prop_map(|(t, r)| OpticalElement::lcvr(t, r)),
            Just(OpticalElement::Pbs),
            Just(OpticalElement::Bd),
            rails.prop_map(|r| OpticalElement::Block { rails: r }),
        ]
    }

    fn bounded_state() -> impl Strategy<Value = ModeState> {
        // keep the top rail empty so one displacer never overflows
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8).prop_filter_map("nonzero", |v| {
            let norm: f64 = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            if norm < 1e-3 {
                return None;
            }
            let mut s = ModeState::default();
            for (k, (re, im)) in v.into_iter().enumerate() {
                let rail = RAIL_MIN + (k / 2) as i32;
                let pol = if k % 2 == 0 { H } else { V };
                s.set(Mode::new(rail, pol), Amplitude::new(re, im) / norm).unwrap();
            }
            Some(s)
        })
    }

    proptest! {
        #[test]
        fn lossless_elements_preserve_norm(e in element(), s in bounded_state()) {
            let out = e.apply(&s).unwrap();
            if e.is_lossless() {
                prop_assert!((out.norm_sq() - 1.0).abs() < 1e-12);
            } else {
                prop_assert!(out.norm_sq() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn hwp_is_involutory(angle in -360.0..360.0f64) {
            let m = hwp_jones(angle);
            let id = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
            prop_assert!(mat_close(&mul(&m, &m), &id, 1e-14));
        }

        #[test]
        fn bd_permutes_modes(s in bounded_state()) {
            let out = apply_bd(&s).unwrap();
            let mut before: Vec<f64> = s.iter().map(|(_, a)| a.norm_sqr()).collect();
            let mut after: Vec<f64> = out.iter().map(|(_, a)| a.norm_sqr()).collect();
            before.sort_by(f64::total_cmp);
            after.sort_by(f64::total_cmp);
            prop_assert_eq!(before, after);
        }
    }
}
