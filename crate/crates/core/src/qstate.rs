//! Pure states on a qubit system and a qubit pointer.
//!
//! Joint states live in the fixed product basis `|0↑⟩, |0↓⟩, |1↑⟩, |1↓⟩`
//! (system index major, pointer index minor). Every routine in the crate
//! that reads or writes a [`JointState`] uses this order via [`joint_index`].
//!
//! Global phases are never stripped; compare states with [`fidelity`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex probability amplitude.
pub type Amplitude = Complex64;

/// Tolerance for normalization and unitarity checks.
pub const NORM_TOL: f64 = 1e-12;

/// Position of `|system, pointer⟩` in the joint amplitude vector.
#[inline]
pub const fn joint_index(system: usize, pointer: usize) -> usize {
    2 * system + pointer
}

fn check_finite(amps: &[Amplitude]) -> Result<()> {
    if amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation("amplitude is not finite".into()))
    }
}

/// Normalized qubit state `a0|0⟩ + a1|1⟩`.
///
/// Used for the pre-selected system state, the pointer, and the
/// post-selection target. For the pointer `|0⟩ = |↑⟩ = |H⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureState2 {
    a0: Amplitude,
    a1: Amplitude,
}

impl PureState2 {
    /// Builds a state, rejecting inputs whose norm differs from one by more
    /// than [`NORM_TOL`].
    pub fn new(a0: Amplitude, a1: Amplitude) -> Result<Self> {
        check_finite(&[a0, a1])?;
        let norm_sq = a0.norm_sqr() + a1.norm_sqr();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { a0, a1 })
    }

    pub fn from_real(a0: f64, a1: f64) -> Result<Self> {
        Self::new(Amplitude::new(a0, 0.0), Amplitude::new(a1, 0.0))
    }

    /// Rescales `(a0, a1)` to unit norm.
    pub fn normalized(a0: Amplitude, a1: Amplitude) -> Result<Self> {
        check_finite(&[a0, a1])?;
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if norm <= NORM_TOL {
            return Err(Error::DegenerateState("cannot normalize the zero vector"));
        }
        Ok(Self { a0: a0 / norm, a1: a1 / norm })
    }

    pub fn zero() -> Self {
        Self { a0: Amplitude::new(1.0, 0.0), a1: Amplitude::new(0.0, 0.0) }
    }

    pub fn one() -> Self {
        Self { a0: Amplitude::new(0.0, 0.0), a1: Amplitude::new(1.0, 0.0) }
    }

    /// `(|0⟩ + |1⟩)/√2`
    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { a0: Amplitude::new(s, 0.0), a1: Amplitude::new(s, 0.0) }
    }

    /// `(|0⟩ − |1⟩)/√2`
    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { a0: Amplitude::new(s, 0.0), a1: Amplitude::new(-s, 0.0) }
    }

    pub fn a0(&self) -> Amplitude {
        self.a0
    }

    pub fn a1(&self) -> Amplitude {
        self.a1
    }

    /// The orthogonal complement `(−a1*, a0*)`.
    pub fn orthogonal(&self) -> Self {
        Self { a0: -self.a1.conj(), a1: self.a0.conj() }
    }

    pub fn inner(&self, other: &Self) -> Amplitude {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    pub fn as_unnormalized(&self) -> UnnormalizedState2 {
        UnnormalizedState2 { a0: self.a0, a1: self.a1 }
    }
}

/// Qubit vector with norm at most one, e.g. a pointer after post-selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnnormalizedState2 {
    pub a0: Amplitude,
    pub a1: Amplitude,
}

impl UnnormalizedState2 {
    pub fn new(a0: Amplitude, a1: Amplitude) -> Result<Self> {
        check_finite(&[a0, a1])?;
        let s = Self { a0, a1 };
        if s.norm_sq() > 1.0 + NORM_TOL {
            return Err(Error::Validation(format!(
                "unnormalized state has norm^2 {} > 1",
                s.norm_sq()
            )));
        }
        Ok(s)
    }

    pub fn norm_sq(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    /// `2 Re(a0* a1)`, the σ̂x coherence before normalization.
    pub fn coherence(&self) -> f64 {
        2.0 * (self.a0.conj() * self.a1).re
    }

    pub fn normalize(&self) -> Result<PureState2> {
        PureState2::normalized(self.a0, self.a1)
    }

    /// Same vector with the basis labels exchanged.
    pub fn swapped(&self) -> Self {
        Self { a0: self.a1, a1: self.a0 }
    }
}

/// Normalized state of the system ⊗ pointer pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    amps: [Amplitude; 4],
}

impl JointState {
    pub fn new(amps: [Amplitude; 4]) -> Result<Self> {
        check_finite(&amps)?;
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amps })
    }

    pub fn amps(&self) -> &[Amplitude; 4] {
        &self.amps
    }

    pub fn amp(&self, system: usize, pointer: usize) -> Amplitude {
        self.amps[joint_index(system, pointer)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// 4×4 unitary acting on [`JointState`], row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary4 {
    m: [[Amplitude; 4]; 4],
}

impl Unitary4 {
    /// Wraps `m` after checking `U†U = I` entry-wise within [`NORM_TOL`].
    pub fn new(m: [[Amplitude; 4]; 4]) -> Result<Self> {
        for row in &m {
            check_finite(row)?;
        }
        let deviation = unitarity_deviation(&m);
        if deviation > NORM_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self::diagonal([Amplitude::new(1.0, 0.0); 4])
    }

    /// Diagonal matrix. Entries must have unit modulus for the result to be
    /// unitary; this is not checked here.
    pub(crate) fn diagonal(d: [Amplitude; 4]) -> Self {
        let mut m = [[Amplitude::new(0.0, 0.0); 4]; 4];
        for (i, v) in d.into_iter().enumerate() {
            m[i][i] = v;
        }
        Self { m }
    }

    pub fn entry(&self, row: usize, col: usize) -> Amplitude {
        self.m[row][col]
    }

    pub fn matrix(&self) -> &[[Amplitude; 4]; 4] {
        &self.m
    }

    /// Largest entry-wise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.m)
    }
}

fn unitarity_deviation(m: &[[Amplitude; 4]; 4]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Amplitude::new(0.0, 0.0);
            for row in m {
                acc += row[i].conj() * row[j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

/// `system ⊗ pointer` in the fixed joint basis.
pub fn tensor(system: &PureState2, pointer: &PureState2) -> Result<JointState> {
    // Re-validate: the fields are private but deserialization bypasses `new`.
    let system = PureState2::new(system.a0, system.a1)?;
    let pointer = PureState2::new(pointer.a0, pointer.a1)?;
    let s = [system.a0, system.a1];
    let p = [pointer.a0, pointer.a1];
    let mut amps = [Amplitude::new(0.0, 0.0); 4];
    for (i, si) in s.iter().enumerate() {
        for (j, pj) in p.iter().enumerate() {
            amps[joint_index(i, j)] = si * pj;
        }
    }
    JointState::new(amps)
}

pub fn apply_unitary(u: &Unitary4, s: &JointState) -> Result<JointState> {
    let deviation = u.unitarity_deviation();
    if deviation > NORM_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let mut out = [Amplitude::new(0.0, 0.0); 4];
    for (o, row) in out.iter_mut().zip(u.m.iter()) {
        *o = row.iter().zip(s.amps.iter()).map(|(a, b)| a * b).sum();
    }
    JointState::new(out)
}

/// Projects the system factor onto `target` and returns the success
/// probability with the (unnormalized) conditional pointer `⟨target|s⟩`.
pub fn project_system(s: &JointState, target: &PureState2) -> Result<(f64, UnnormalizedState2)> {
    let target = PureState2::new(target.a0, target.a1)?;
    let t = [target.a0.conj(), target.a1.conj()];
    let pointer_amp = |p: usize| t[0] * s.amp(0, p) + t[1] * s.amp(1, p);
    let pointer = UnnormalizedState2::new(pointer_amp(0), pointer_amp(1))?;
    Ok((pointer.norm_sq(), pointer))
}

/// `⟨σ̂x⟩` of the normalized version of `p`.
pub fn sigma_x_expectation(p: &UnnormalizedState2) -> Result<f64> {
    let norm_sq = p.norm_sq();
    if norm_sq <= NORM_TOL {
        return Err(Error::DegenerateState("pointer has zero norm"));
    }
    Ok((p.coherence() / norm_sq).clamp(-1.0, 1.0))
}

/// `|⟨a|b⟩|² / (‖a‖²‖b‖²)`, insensitive to global phase and scale.
pub fn fidelity(a: &UnnormalizedState2, b: &UnnormalizedState2) -> Result<f64> {
    let na = a.norm_sq();
    let nb = b.norm_sq();
    if na <= NORM_TOL || nb <= NORM_TOL {
        return Err(Error::DegenerateState("fidelity with a zero vector"));
    }
    let overlap = a.a0.conj() * b.a0 + a.a1.conj() * b.a1;
    Ok(overlap.norm_sqr() / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Amplitude {
        Amplitude::new(re, im)
    }

    #[test]
    fn tensor_basis_case() {
        let s = tensor(&PureState2::zero(), &PureState2::zero()).unwrap();
        assert_eq!(s.amps(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn tensor_of_plus_states_is_uniform() {
        let s = tensor(&PureState2::plus(), &PureState2::plus()).unwrap();
        for a in s.amps() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn tensor_with_basis_pointer() {
        let sys = PureState2::from_real(0.6, 0.8).unwrap();
        let s = tensor(&sys, &PureState2::zero()).unwrap();
        let re: Vec<f64> = s.amps().iter().map(|a| a.re).collect();
        assert_eq!(re, vec![0.6, 0.0, 0.8, 0.0]);
    }

    #[test]
    fn rejects_unnormalized_input() {
        assert!(matches!(
            PureState2::from_real(0.6, 0.6),
            Err(Error::NotNormalized { .. })
        ));
        assert!(PureState2::from_real(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn rejects_non_unitary_matrix() {
        let mut m = *Unitary4::identity().matrix();
        m[0][1] = c(0.5, 0.0);
        assert!(matches!(Unitary4::new(m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let s = tensor(&PureState2::plus(), &PureState2::minus()).unwrap();
        assert_eq!(apply_unitary(&Unitary4::identity(), &s).unwrap(), s);
    }

    #[test]
    fn project_basis_and_orthogonal_targets() {
        let s = tensor(&PureState2::zero(), &PureState2::zero()).unwrap();
        let (p, ptr) = project_system(&s, &PureState2::zero()).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!((ptr.a0, ptr.a1), (c(1.0, 0.0), c(0.0, 0.0)));

        let s = tensor(&PureState2::plus(), &PureState2::plus()).unwrap();
        let (p, ptr) = project_system(&s, &PureState2::minus()).unwrap();
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ptr.a0.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ptr.a1.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sigma_x_cases() {
        let plus = PureState2::plus().as_unnormalized();
        assert_abs_diff_eq!(sigma_x_expectation(&plus).unwrap(), 1.0, epsilon = 1e-15);

        let kappa = 0.3_f64;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let st = UnnormalizedState2::new(c(s, 0.0), Amplitude::from_polar(s, kappa)).unwrap();
        assert_abs_diff_eq!(sigma_x_expectation(&st).unwrap(), 0.955_336_489_125_606, epsilon = 1e-12);

        let st = UnnormalizedState2::new(c(0.0, 0.0), c(0.3, 0.1)).unwrap();
        assert_eq!(sigma_x_expectation(&st).unwrap(), 0.0);

        let zero = UnnormalizedState2::new(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(matches!(sigma_x_expectation(&zero), Err(Error::DegenerateState(_))));
    }

    fn amp() -> impl Strategy<Value = Amplitude> {
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c(re, im))
    }

    fn state2() -> impl Strategy<Value = PureState2> {
        (amp(), amp())
            .prop_filter("nonzero", |(a, b)| a.norm_sqr() + b.norm_sqr() > 1e-3)
            .prop_map(|(a, b)| PureState2::normalized(a, b).unwrap())
    }

    /// Product of a random diagonal phase, a random 2-qubit entangling step
    /// and local rotations; unitary by construction.
    fn unitary4() -> impl Strategy<Value = Unitary4> {
        (proptest::array::uniform4(-3.2..3.2f64), state2(), state2()).prop_map(|(ph, u, v)| {
            let local = |s: &PureState2| [[s.a0(), -s.a1().conj()], [s.a1(), s.a0().conj()]];
            let (a, b) = (local(&u), local(&v));
            let mut m = [[c(0.0, 0.0); 4]; 4];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            m[2 * i + j][2 * k + l] = a[i][k] * b[j][l];
                        }
                    }
                }
            }
            // multiply on the left by a diagonal phase
            for (row, phi) in m.iter_mut().zip(ph) {
                for e in row.iter_mut() {
                    *e *= Amplitude::from_polar(1.0, phi);
                }
            }
            Unitary4::new(m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn unitaries_preserve_norm(u in unitary4(), s in state2(), p in state2()) {
            let joint = tensor(&s, &p).unwrap();
            let out = apply_unitary(&u, &joint).unwrap();
            prop_assert!((out.norm_sq() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn projection_is_complete(s in state2(), p in state2(), t in state2(), u in unitary4()) {
            let joint = apply_unitary(&u, &tensor(&s, &p).unwrap()).unwrap();
            let (p1, _) = project_system(&joint, &t).unwrap();
            let (p2, _) = project_system(&joint, &t.orthogonal()).unwrap();
            prop_assert!((p1 + p2 - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sigma_x_is_bounded(a in amp(), b in amp()) {
            prop_assume!(a.norm_sqr() + b.norm_sqr() > 1e-6);
            let p = PureState2::normalized(a, b).unwrap().as_unnormalized();
            let sx = sigma_x_expectation(&p).unwrap();
            prop_assert!((-1.0..=1.0).contains(&sx));
        }

        #[test]
        fn sigma_x_is_one_for_equal_amplitudes(a in amp(), phase in -3.2..3.2f64) {
            prop_assume!(a.norm_sqr() > 1e-6);
            let g = Amplitude::from_polar(1.0, phase);
            let p = PureState2::normalized(a * g, a * g).unwrap().as_unnormalized();
            prop_assert!((sigma_x_expectation(&p).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn project_on_preselection_recovers_pointer(s in state2(), p in state2()) {
            let joint = tensor(&s, &p).unwrap();
            let (prob, ptr) = project_system(&joint, &s).unwrap();
            prop_assert!((prob - 1.0).abs() < 1e-12);
            prop_assert!((fidelity(&ptr, &p.as_unnormalized()).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((ptr.a0 - p.a0()).norm() < 1e-12 && (ptr.a1 - p.a1()).norm() < 1e-12);
        }
    }
}
