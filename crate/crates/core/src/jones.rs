//! Jones-calculus kernel: pure polarization states, 2x2 operators, projection and
//! Born-rule measurement.
//!
//! All states are normalized complex 2-vectors on the (horizontal, vertical) axes
//! and are physically meaningful only up to a global phase, so every comparison
//! offered here is phase-insensitive. The fixed conventions used throughout the
//! crate are:
//!
//! * `H = (1, 0)`, `V = (0, 1)`, `D45 = (1, 1)/sqrt(2)`, `D135 = (-1, 1)/sqrt(2)`,
//!   `L = (1, i)/sqrt(2)`, `R = (1, -i)/sqrt(2)`;
//! * rotation by `theta` is `[[cos t, -sin t], [sin t, cos t]]`, so rotating a
//!   linear state at angle `phi` yields the linear state at `phi + theta` and
//!   circular states pick up only a phase;
//! * a half-wave plate with its fast axis at `alpha` is
//!   `[[cos 2a, sin 2a], [sin 2a, -cos 2a]]`, mirroring a linear state at `phi`
//!   to `2*alpha - phi` and swapping L and R.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Tolerance for algebraic identities expected to hold at double precision
/// (normalization, unitarity, operator identities).
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// Tolerance for orthonormality of measurement bases.
pub const BASIS_TOL: f64 = 1e-9;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarizationError {
    #[error("state label `other` has no canonical vector")]
    UnnamedState,
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("vector is not normalized: |a0|^2 + |a1|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },
    #[error("operator is not norm-preserving: output norm^2 = {norm_sq}")]
    NonUnitaryOperator { norm_sq: f64 },
    #[error("basis vectors are not orthonormal: |<b0|b1>| = {overlap}")]
    NonOrthonormalBasis { overlap: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
}

/// Comparison tolerance for phase-insensitive state equality.
///
/// Two states compare equal when `|<a|b>| >= 1 - eps`. The default of `1e-9`
/// leaves ample headroom above double-precision rounding while still rejecting
/// any pair of distinct canonical states (whose overlaps are 0 or 1/sqrt(2)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTolerance {
    eps: f64,
}

impl PhaseTolerance {
    pub fn new(eps: f64) -> Result<Self, PolarizationError> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(PolarizationError::InvalidTolerance(eps));
        }
        Ok(Self { eps })
    }

    pub fn eps(self) -> f64 {
        self.eps
    }
}

impl Default for PhaseTolerance {
    fn default() -> Self {
        Self { eps: 1e-9 }
    }
}

/// The six named polarization states plus a catch-all for everything else.
///
/// The named states form three mutually unbiased bases: {H, V}, {D45, D135}
/// and {L, R}. Any cross-basis overlap has squared magnitude 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    H,
    V,
    D45,
    D135,
    L,
    R,
    Other,
}

/// Serializes as the display name, matching CSV and config spellings.
impl Serialize for StateLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl StateLabel {
    /// The six named states, in basis order.
    pub const NAMED: [StateLabel; 6] = [
        StateLabel::H,
        StateLabel::V,
        StateLabel::D45,
        StateLabel::D135,
        StateLabel::L,
        StateLabel::R,
    ];

    /// The orthogonal partner within the same basis (`None` for `Other`).
    pub fn orthogonal(self) -> Option<StateLabel> {
        match self {
            StateLabel::H => Some(StateLabel::V),
            StateLabel::V => Some(StateLabel::H),
            StateLabel::D45 => Some(StateLabel::D135),
            StateLabel::D135 => Some(StateLabel::D45),
            StateLabel::L => Some(StateLabel::R),
            StateLabel::R => Some(StateLabel::L),
            StateLabel::Other => None,
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StateLabel::H => "H",
            StateLabel::V => "V",
            StateLabel::D45 => "D45",
            StateLabel::D135 => "D135",
            StateLabel::L => "L",
            StateLabel::R => "R",
            StateLabel::Other => "other",
        };
        f.write_str(name)
    }
}

impl FromStr for StateLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "H" | "h" => Ok(StateLabel::H),
            "V" | "v" => Ok(StateLabel::V),
            "D45" | "d45" => Ok(StateLabel::D45),
            "D135" | "d135" => Ok(StateLabel::D135),
            "L" | "l" => Ok(StateLabel::L),
            "R" | "r" => Ok(StateLabel::R),
            "other" => Ok(StateLabel::Other),
            _ => Err(format!("unknown state label `{s}`")),
        }
    }
}

/// A normalized pure polarization state: complex amplitudes on the horizontal
/// and vertical axes with `|a0|^2 + |a1|^2 = 1` (within [`ALGEBRAIC_TOL`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    a0: Complex64,
    a1: Complex64,
}

impl JonesVector {
    /// Builds a state from raw amplitudes, rejecting unnormalized input.
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self, PolarizationError> {
        let norm_sq = a0.norm_sqr() + a1.norm_sqr();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(PolarizationError::NotNormalized { norm_sq });
        }
        Ok(Self { a0, a1 })
    }

    /// The fixed convention vector for one of the six named states.
    pub fn canonical(label: StateLabel) -> Result<Self, PolarizationError> {
        let re = |x: f64, y: f64| Self {
            a0: Complex64::new(x, 0.0),
            a1: Complex64::new(y, 0.0),
        };
        match label {
            StateLabel::H => Ok(re(1.0, 0.0)),
            StateLabel::V => Ok(re(0.0, 1.0)),
            StateLabel::D45 => Ok(re(FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
            StateLabel::D135 => Ok(re(-FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
            StateLabel::L => Ok(Self {
                a0: Complex64::new(FRAC_1_SQRT_2, 0.0),
                a1: Complex64::new(0.0, FRAC_1_SQRT_2),
            }),
            StateLabel::R => Ok(Self {
                a0: Complex64::new(FRAC_1_SQRT_2, 0.0),
                a1: Complex64::new(0.0, -FRAC_1_SQRT_2),
            }),
            StateLabel::Other => Err(PolarizationError::UnnamedState),
        }
    }

    /// The linear polarization state at orientation `angle` (radians):
    /// `(cos angle, sin angle)`. `linear(0)` is `H`.
    pub fn linear(angle: f64) -> Result<Self, PolarizationError> {
        if !angle.is_finite() {
            return Err(PolarizationError::NonFiniteAngle(angle));
        }
        Ok(Self {
            a0: Complex64::new(angle.cos(), 0.0),
            a1: Complex64::new(angle.sin(), 0.0),
        })
    }

    pub fn a0(&self) -> Complex64 {
        self.a0
    }

    pub fn a1(&self) -> Complex64 {
        self.a1
    }

    /// Inner product `<self|other>` (conjugate-linear in `self`).
    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    pub fn norm_sq(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    /// Phase-insensitive equality: `|<self|other>| >= 1 - tol`.
    ///
    /// This also identifies antipodal vectors, so linear states at `phi` and
    /// `phi + pi` (the same physical orientation) compare equal.
    pub fn equal_up_to_phase(&self, other: &JonesVector, tol: PhaseTolerance) -> bool {
        self.inner(other).norm() >= 1.0 - tol.eps
    }

    /// Maps the state back to a named label when it matches one of the six
    /// canonical vectors up to phase, else `Other`.
    pub fn classify(&self, tol: PhaseTolerance) -> StateLabel {
        for label in StateLabel::NAMED {
            let canon = JonesVector::canonical(label).expect("named label");
            if self.equal_up_to_phase(&canon, tol) {
                return label;
            }
        }
        StateLabel::Other
    }

    fn renormalized(self) -> Self {
        let n = self.norm_sq().sqrt();
        Self {
            a0: self.a0 / n,
            a1: self.a1 / n,
        }
    }
}

/// Renders as `(re+im·i, re+im·i)` with 17 significant digits per component,
/// the text form used in CSV logs.
impl fmt::Display for JonesVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:.16e}{:+.16e}·i, {:.16e}{:+.16e}·i)",
            self.a0.re, self.a0.im, self.a1.re, self.a1.im
        )
    }
}

/// A 2x2 complex operator on Jones vectors.
///
/// The named constructors produce unitaries (rotations, Faraday rotations,
/// half-wave plates) or Hermitian idempotent projectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix {
    m: [[Complex64; 2]; 2],
}

impl JonesMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            m: [[one, zero], [zero, one]],
        }
    }

    pub fn from_rows(rows: [[Complex64; 2]; 2]) -> Self {
        Self { m: rows }
    }

    /// Rotation of the polarization plane by `theta` radians:
    /// `[[cos t, -sin t], [sin t, cos t]]`.
    ///
    /// Rotating the linear state at `phi` yields the linear state at
    /// `phi + theta`; circular states are fixed up to a global phase.
    pub fn rotation(theta: f64) -> Result<Self, PolarizationError> {
        if !theta.is_finite() {
            return Err(PolarizationError::NonFiniteAngle(theta));
        }
        let (s, c) = theta.sin_cos();
        let re = |x: f64| Complex64::new(x, 0.0);
        Ok(Self {
            m: [[re(c), re(-s)], [re(s), re(c)]],
        })
    }

    /// Faraday rotation by `beta` radians. Identical matrix form to
    /// [`JonesMatrix::rotation`]; kept separate so magneto-optic compensators
    /// can attach the drive-field computation to it.
    pub fn faraday(beta: f64) -> Result<Self, PolarizationError> {
        Self::rotation(beta)
    }

    /// Ideal half-wave plate with its fast axis at `axis_angle` radians:
    /// `[[cos 2a, sin 2a], [sin 2a, -cos 2a]]`.
    ///
    /// Mirrors the linear state at `phi` to `2*axis_angle - phi` (up to global
    /// phase) and swaps L and R for every axis angle.
    pub fn half_wave_plate(axis_angle: f64) -> Result<Self, PolarizationError> {
        if !axis_angle.is_finite() {
            return Err(PolarizationError::NonFiniteAngle(axis_angle));
        }
        let (s, c) = (2.0 * axis_angle).sin_cos();
        let re = |x: f64| Complex64::new(x, 0.0);
        Ok(Self {
            m: [[re(c), re(s)], [re(s), re(-c)]],
        })
    }

    /// Projector `|target><target|`: Hermitian and idempotent.
    pub fn projector(target: &JonesVector) -> Self {
        let t0 = target.a0;
        let t1 = target.a1;
        Self {
            m: [
                [t0 * t0.conj(), t0 * t1.conj()],
                [t1 * t0.conj(), t1 * t1.conj()],
            ],
        }
    }

    /// Operator product `outer * inner` (inner applied first).
    pub fn compose(outer: &JonesMatrix, inner: &JonesMatrix) -> JonesMatrix {
        let a = &outer.m;
        let b = &inner.m;
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        JonesMatrix { m }
    }

    /// Evolves a state: matrix-vector product, renormalized only to absorb
    /// rounding. Rejects operators that change the norm beyond
    /// [`ALGEBRAIC_TOL`] (projectors go through [`project`] instead).
    pub fn apply(&self, state: &JonesVector) -> Result<JonesVector, PolarizationError> {
        let a0 = self.m[0][0] * state.a0 + self.m[0][1] * state.a1;
        let a1 = self.m[1][0] * state.a0 + self.m[1][1] * state.a1;
        let out = JonesVector { a0, a1 };
        let norm_sq = out.norm_sq();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(PolarizationError::NonUnitaryOperator { norm_sq });
        }
        Ok(out.renormalized())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> JonesMatrix {
        JonesMatrix {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    /// Checks `M^dagger M = I` entrywise within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = JonesMatrix::compose(&self.dagger(), self);
        let id = JonesMatrix::identity();
        for r in 0..2 {
            for c in 0..2 {
                if (p.m[r][c] - id.m[r][c]).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Phase-insensitive equality for norm-preserving operators:
    /// `|tr(self^dagger * other)| >= 2 (1 - tol)`, which holds exactly when
    /// the two unitaries differ by a global phase.
    pub fn equal_up_to_phase(&self, other: &JonesMatrix, tol: PhaseTolerance) -> bool {
        let p = JonesMatrix::compose(&self.dagger(), other);
        let trace = p.m[0][0] + p.m[1][1];
        trace.norm() >= 2.0 * (1.0 - tol.eps)
    }
}

/// Projects `input` onto `target`: returns the click amplitude
/// `<target|input>` and the post-click state (the target itself).
/// The squared amplitude magnitude is the click probability.
pub fn project(target: &JonesVector, input: &JonesVector) -> (Complex64, JonesVector) {
    (target.inner(input), *target)
}

/// An orthonormal pair of states defining a two-outcome measurement.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementBasis {
    b0: JonesVector,
    b1: JonesVector,
}

impl MeasurementBasis {
    /// Rejects pairs that are not orthonormal within [`BASIS_TOL`].
    pub fn new(b0: JonesVector, b1: JonesVector) -> Result<Self, PolarizationError> {
        let overlap = b0.inner(&b1).norm();
        if overlap > BASIS_TOL {
            return Err(PolarizationError::NonOrthonormalBasis { overlap });
        }
        Ok(Self { b0, b1 })
    }

    pub fn b0(&self) -> &JonesVector {
        &self.b0
    }

    pub fn b1(&self) -> &JonesVector {
        &self.b1
    }
}

/// Born-rule measurement in an orthonormal basis: returns 0 with probability
/// `|<b0|state>|^2`, else 1. Deterministic given the rng state.
pub fn measure_in_basis<R: Rng + ?Sized>(
    basis: &MeasurementBasis,
    state: &JonesVector,
    rng: &mut R,
) -> usize {
    let p0 = basis.b0.inner(state).norm_sqr();
    if rng.random::<f64>() < p0 {
        0
    } else {
        1
    }
}

/// Single-projector click: `true` with probability `|<target|state>|^2`.
pub fn measure_projector<R: Rng + ?Sized>(
    target: &JonesVector,
    state: &JonesVector,
    rng: &mut R,
) -> bool {
    let p = target.inner(state).norm_sqr();
    rng.random::<f64>() < p
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn canon(label: StateLabel) -> JonesVector {
        JonesVector::canonical(label).unwrap()
    }

    fn tol() -> PhaseTolerance {
        PhaseTolerance::default()
    }

    #[test]
    fn canonical_vectors_match_convention() {
        let h = canon(StateLabel::H);
        assert_eq!(h.a0(), Complex64::new(1.0, 0.0));
        assert_eq!(h.a1(), Complex64::new(0.0, 0.0));

        let d45 = canon(StateLabel::D45);
        assert!((d45.a0().re - FRAC_1_SQRT_2).abs() < ALGEBRAIC_TOL);
        assert!((d45.a1().re - FRAC_1_SQRT_2).abs() < ALGEBRAIC_TOL);

        let l = canon(StateLabel::L);
        assert!((l.a0() - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < ALGEBRAIC_TOL);
        assert!((l.a1() - Complex64::new(0.0, FRAC_1_SQRT_2)).norm() < ALGEBRAIC_TOL);
    }

    #[test]
    fn canonical_rejects_other() {
        assert_eq!(
            JonesVector::canonical(StateLabel::Other),
            Err(PolarizationError::UnnamedState)
        );
    }

    #[test]
    fn diagonal_overlaps_horizontal_at_inverse_sqrt_two() {
        let amp = canon(StateLabel::D45).inner(&canon(StateLabel::H));
        assert!((amp - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < ALGEBRAIC_TOL);
    }

    #[test]
    fn named_states_are_distinct_and_bases_conjugate() {
        for a in StateLabel::NAMED {
            for b in StateLabel::NAMED {
                let overlap_sq = canon(a).inner(&canon(b)).norm_sqr();
                if a == b {
                    assert!((overlap_sq - 1.0).abs() < ALGEBRAIC_TOL);
                } else if a.orthogonal() == Some(b) {
                    assert!(overlap_sq < ALGEBRAIC_TOL);
                } else {
                    assert!((overlap_sq - 0.5).abs() < ALGEBRAIC_TOL, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn linear_state_values() {
        assert!(JonesVector::linear(0.0)
            .unwrap()
            .equal_up_to_phase(&canon(StateLabel::H), tol()));
        let v = JonesVector::linear(FRAC_PI_2).unwrap();
        assert!(v.a0().norm() < ALGEBRAIC_TOL);
        assert!((v.a1().re - 1.0).abs() < ALGEBRAIC_TOL);
        let d135 = JonesVector::linear(3.0 * FRAC_PI_4).unwrap();
        assert!((d135.a0().re + FRAC_1_SQRT_2).abs() < ALGEBRAIC_TOL);
        assert!((d135.a1().re - FRAC_1_SQRT_2).abs() < ALGEBRAIC_TOL);
    }

    #[test]
    fn linear_rejects_non_finite() {
        assert!(JonesVector::linear(f64::NAN).is_err());
        assert!(JonesVector::linear(f64::INFINITY).is_err());
    }

    #[test]
    fn new_rejects_unnormalized() {
        let err = JonesVector::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        assert!(matches!(err, Err(PolarizationError::NotNormalized { .. })));
    }

    #[test]
    fn rotation_at_zero_is_identity() {
        let d0 = JonesMatrix::rotation(0.0).unwrap();
        assert_eq!(d0, JonesMatrix::identity());
    }

    #[test]
    fn rotation_quarter_pi_sends_h_to_d45() {
        let d = JonesMatrix::rotation(FRAC_PI_4).unwrap();
        let out = d.apply(&canon(StateLabel::H)).unwrap();
        let expect = JonesVector::linear(FRAC_PI_4).unwrap();
        assert!((out.a0() - expect.a0()).norm() < ALGEBRAIC_TOL);
        assert!((out.a1() - expect.a1()).norm() < ALGEBRAIC_TOL);
    }

    #[test]
    fn rotation_fixes_circular_states() {
        let d = JonesMatrix::rotation(0.8).unwrap();
        let l = canon(StateLabel::L);
        let r = canon(StateLabel::R);
        assert!(d.apply(&l).unwrap().equal_up_to_phase(&l, tol()));
        assert!(d.apply(&r).unwrap().equal_up_to_phase(&r, tol()));
    }

    #[test]
    fn rotation_rejects_non_finite() {
        assert!(JonesMatrix::rotation(f64::NAN).is_err());
        assert!(JonesMatrix::half_wave_plate(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn faraday_at_zero_is_identity() {
        assert_eq!(JonesMatrix::faraday(0.0).unwrap(), JonesMatrix::identity());
    }

    #[test]
    fn faraday_undoes_rotation() {
        let theta = 1.234;
        let undo = JonesMatrix::compose(
            &JonesMatrix::faraday(-theta).unwrap(),
            &JonesMatrix::rotation(theta).unwrap(),
        );
        assert!(undo.equal_up_to_phase(&JonesMatrix::identity(), tol()));
        let phi = 0.37;
        let restored = undo.apply(&JonesVector::linear(phi).unwrap()).unwrap();
        assert!(restored.equal_up_to_phase(&JonesVector::linear(phi).unwrap(), tol()));
    }

    #[test]
    fn hwp_on_axis_state_is_fixed() {
        let hwp = JonesMatrix::half_wave_plate(0.0).unwrap();
        let h = canon(StateLabel::H);
        assert!(hwp.apply(&h).unwrap().equal_up_to_phase(&h, tol()));
    }

    #[test]
    fn hwp_after_rotation_maps_d45_to_d135_and_l_to_r() {
        let theta = 0.93;
        let map = JonesMatrix::compose(
            &JonesMatrix::half_wave_plate(theta / 2.0).unwrap(),
            &JonesMatrix::rotation(theta).unwrap(),
        );
        let d45 = canon(StateLabel::D45);
        let out = map.apply(&d45).unwrap();
        assert!(out.equal_up_to_phase(&canon(StateLabel::D135), tol()));
        let out = map.apply(&canon(StateLabel::L)).unwrap();
        assert!(out.equal_up_to_phase(&canon(StateLabel::R), tol()));
        let v = canon(StateLabel::V);
        assert!(map.apply(&v).unwrap().equal_up_to_phase(&v, tol()));
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let m = JonesMatrix::half_wave_plate(0.4).unwrap();
        assert_eq!(JonesMatrix::compose(&JonesMatrix::identity(), &m), m);
    }

    #[test]
    fn hwp_tracking_map_is_theta_independent() {
        let reference = JonesMatrix::compose(
            &JonesMatrix::half_wave_plate(0.0).unwrap(),
            &JonesMatrix::rotation(0.0).unwrap(),
        );
        for theta in [0.0, 0.3, 1.7] {
            let map = JonesMatrix::compose(
                &JonesMatrix::half_wave_plate(theta / 2.0).unwrap(),
                &JonesMatrix::rotation(theta).unwrap(),
            );
            assert!(map.equal_up_to_phase(&reference, tol()), "theta = {theta}");
        }
    }

    #[test]
    fn apply_rejects_projector() {
        let p = JonesMatrix::projector(&canon(StateLabel::D45));
        let err = p.apply(&canon(StateLabel::H));
        assert!(matches!(
            err,
            Err(PolarizationError::NonUnitaryOperator { .. })
        ));
    }

    #[test]
    fn projector_is_hermitian_and_idempotent() {
        for label in StateLabel::NAMED {
            let p = JonesMatrix::projector(&canon(label));
            let pp = JonesMatrix::compose(&p, &p);
            let pd = p.dagger();
            for r in 0..2 {
                for c in 0..2 {
                    assert!((pp.entry(r, c) - p.entry(r, c)).norm() < ALGEBRAIC_TOL);
                    assert!((pd.entry(r, c) - p.entry(r, c)).norm() < ALGEBRAIC_TOL);
                }
            }
        }
    }

    #[test]
    fn project_gives_amplitude_and_target_state() {
        let (amp, out) = project(&canon(StateLabel::D45), &canon(StateLabel::H));
        assert!((amp.norm() - FRAC_1_SQRT_2).abs() < ALGEBRAIC_TOL);
        assert_eq!(out, canon(StateLabel::D45));

        let (amp, out) = project(&canon(StateLabel::V), &canon(StateLabel::D135));
        assert!((amp.norm() - FRAC_1_SQRT_2).abs() < ALGEBRAIC_TOL);
        assert_eq!(out, canon(StateLabel::V));

        let (amp, _) = project(&canon(StateLabel::H), &canon(StateLabel::V));
        assert!(amp.norm() < ALGEBRAIC_TOL);
    }

    #[test]
    fn measurement_basis_rejects_non_orthonormal_pairs() {
        let err = MeasurementBasis::new(canon(StateLabel::H), canon(StateLabel::D45));
        assert!(matches!(
            err,
            Err(PolarizationError::NonOrthonormalBasis { .. })
        ));
    }

    #[test]
    fn measuring_an_eigenstate_is_deterministic() {
        let basis = MeasurementBasis::new(canon(StateLabel::H), canon(StateLabel::V)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            assert_eq!(measure_in_basis(&basis, &canon(StateLabel::H), &mut rng), 0);
            assert_eq!(measure_in_basis(&basis, &canon(StateLabel::V), &mut rng), 1);
        }
    }

    #[test]
    fn conjugate_basis_measurement_is_balanced() {
        // Born rule gives p = 1/2 for H measured in the diagonal basis; the
        // empirical frequency over n trials must sit within 3 sigma.
        let n = 100_000u32;
        let basis = MeasurementBasis::new(canon(StateLabel::D45), canon(StateLabel::D135)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let zeros = (0..n)
            .filter(|_| measure_in_basis(&basis, &canon(StateLabel::H), &mut rng) == 0)
            .count();
        let freq = zeros as f64 / n as f64;
        let three_sigma = 3.0 * (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < three_sigma, "freq = {freq}");
    }

    #[test]
    fn tracked_left_circular_always_measures_as_right() {
        let theta = 2.1;
        let map = JonesMatrix::compose(
            &JonesMatrix::half_wave_plate(theta / 2.0).unwrap(),
            &JonesMatrix::rotation(theta).unwrap(),
        );
        let tracked = map.apply(&canon(StateLabel::L)).unwrap();
        let basis = MeasurementBasis::new(canon(StateLabel::L), canon(StateLabel::R)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            assert_eq!(measure_in_basis(&basis, &tracked, &mut rng), 1);
        }
    }

    #[test]
    fn projector_click_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d45 = canon(StateLabel::D45);
        let d135 = canon(StateLabel::D135);
        let h = canon(StateLabel::H);
        let v = canon(StateLabel::V);
        for _ in 0..200 {
            assert!(!measure_projector(&d45, &d135, &mut rng));
            assert!(!measure_projector(&v, &h, &mut rng));
        }
        let n = 100_000u32;
        let clicks = (0..n)
            .filter(|_| measure_projector(&d45, &h, &mut rng))
            .count();
        let freq = clicks as f64 / n as f64;
        let three_sigma = 3.0 * (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < three_sigma, "freq = {freq}");
    }

    #[test]
    fn phase_equality_identifies_antipodal_linear_states() {
        let a = JonesVector::linear(-FRAC_PI_4).unwrap();
        let b = JonesVector::linear(3.0 * FRAC_PI_4).unwrap();
        assert!(a.equal_up_to_phase(&b, tol()));
        assert!(a.equal_up_to_phase(&a, tol()));
        assert!(!canon(StateLabel::H).equal_up_to_phase(&canon(StateLabel::V), tol()));
    }

    #[test]
    fn classify_recovers_labels() {
        assert_eq!(canon(StateLabel::H).classify(tol()), StateLabel::H);
        let theta = 1.9;
        let map = JonesMatrix::compose(
            &JonesMatrix::half_wave_plate(theta / 2.0).unwrap(),
            &JonesMatrix::rotation(theta).unwrap(),
        );
        let out = map.apply(&canon(StateLabel::R)).unwrap();
        assert_eq!(out.classify(tol()), StateLabel::L);
        assert_eq!(
            JonesVector::linear(0.3).unwrap().classify(tol()),
            StateLabel::Other
        );
    }

    #[test]
    fn classify_treats_orientation_modulo_pi() {
        let flipped = JonesVector::linear(FRAC_PI_4 + PI).unwrap();
        assert_eq!(flipped.classify(tol()), StateLabel::D45);
    }

    #[test]
    fn display_uses_seventeen_significant_digits() {
        let s = canon(StateLabel::L).to_string();
        assert_eq!(s, "(7.0710678118654757e-1+0.0000000000000000e0·i, 0.0000000000000000e0+7.0710678118654757e-1·i)");
    }

    #[test]
    fn phase_tolerance_validation() {
        assert!(PhaseTolerance::new(0.0).is_err());
        assert!(PhaseTolerance::new(-1e-9).is_err());
        assert!(PhaseTolerance::new(f64::NAN).is_err());
        assert_eq!(PhaseTolerance::default().eps(), 1e-9);
    }

    #[test]
    fn state_label_round_trips_through_strings() {
        for label in StateLabel::NAMED {
            assert_eq!(label.to_string().parse::<StateLabel>().unwrap(), label);
        }
    }

    proptest! {
        #[test]
        fn constructed_operators_are_unitary(angle in 0.0..std::f64::consts::TAU) {
            prop_assert!(JonesMatrix::rotation(angle).unwrap().is_unitary(ALGEBRAIC_TOL));
            prop_assert!(JonesMatrix::faraday(angle).unwrap().is_unitary(ALGEBRAIC_TOL));
            prop_assert!(JonesMatrix::half_wave_plate(angle).unwrap().is_unitary(ALGEBRAIC_TOL));
        }

        #[test]
        fn rotations_add(a in -6.0..6.0f64, b in -6.0..6.0f64) {
            let lhs = JonesMatrix::compose(
                &JonesMatrix::rotation(a).unwrap(),
                &JonesMatrix::rotation(b).unwrap(),
            );
            let rhs = JonesMatrix::rotation(a + b).unwrap();
            for r in 0..2 {
                for c in 0..2 {
                    prop_assert!((lhs.entry(r, c) - rhs.entry(r, c)).norm() < 1e-11);
                }
            }
        }

        #[test]
        fn rotation_shifts_linear_orientation(phi in -6.0..6.0f64, theta in -6.0..6.0f64) {
            let rotated = JonesMatrix::rotation(theta)
                .unwrap()
                .apply(&JonesVector::linear(phi).unwrap())
                .unwrap();
            prop_assert!(rotated.equal_up_to_phase(&JonesVector::linear(phi + theta).unwrap(), tol()));
        }

        #[test]
        fn circular_states_are_rotation_invariant(theta in 0.0..std::f64::consts::TAU) {
            let d = JonesMatrix::rotation(theta).unwrap();
            for label in [StateLabel::L, StateLabel::R] {
                let s = canon(label);
                prop_assert!(d.apply(&s).unwrap().equal_up_to_phase(&s, tol()));
            }
        }

        #[test]
        fn hwp_is_an_involution(alpha in 0.0..std::f64::consts::TAU) {
            let hwp = JonesMatrix::half_wave_plate(alpha).unwrap();
            let twice = JonesMatrix::compose(&hwp, &hwp);
            prop_assert!(twice.equal_up_to_phase(&JonesMatrix::identity(), tol()));
        }

        #[test]
        fn hwp_swaps_circular_handedness(alpha in 0.0..std::f64::consts::TAU) {
            let hwp = JonesMatrix::half_wave_plate(alpha).unwrap();
            let l = canon(StateLabel::L);
            let r = canon(StateLabel::R);
            prop_assert!(hwp.apply(&l).unwrap().equal_up_to_phase(&r, tol()));
            prop_assert!(hwp.apply(&r).unwrap().equal_up_to_phase(&l, tol()));
        }

        #[test]
        fn mirror_law(phi in -6.0..6.0f64, theta in -6.0..6.0f64) {
            let map = JonesMatrix::compose(
                &JonesMatrix::half_wave_plate(theta / 2.0).unwrap(),
                &JonesMatrix::rotation(theta).unwrap(),
            );
            let out = map.apply(&JonesVector::linear(phi).unwrap()).unwrap();
            prop_assert!(out.equal_up_to_phase(&JonesVector::linear(-phi).unwrap(), tol()));
        }

        #[test]
        fn born_probabilities_are_complete(
            re0 in -1.0..1.0f64, im0 in -1.0..1.0f64,
            re1 in -1.0..1.0f64, im1 in -1.0..1.0f64,
            basis_angle in 0.0..std::f64::consts::TAU,
        ) {
            let a0 = Complex64::new(re0, im0);
            let a1 = Complex64::new(re1, im1);
            let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
            prop_assume!(norm > 1e-3);
            let state = JonesVector::new(a0 / norm, a1 / norm).unwrap();
            let b0 = JonesVector::linear(basis_angle).unwrap();
            let b1 = JonesVector::linear(basis_angle + FRAC_PI_2).unwrap();
            let basis = MeasurementBasis::new(b0, b1).unwrap();
            let total = basis.b0().inner(&state).norm_sqr() + basis.b1().inner(&state).norm_sqr();
            prop_assert!((total - 1.0).abs() < ALGEBRAIC_TOL);
        }

        #[test]
        fn six_state_table_under_hwp_tracking(theta in 0.0..std::f64::consts::TAU) {
            let map = JonesMatrix::compose(
                &JonesMatrix::half_wave_plate(theta / 2.0).unwrap(),
                &JonesMatrix::rotation(theta).unwrap(),
            );
            let expected = [
                (StateLabel::H, StateLabel::H),
                (StateLabel::V, StateLabel::V),
                (StateLabel::D45, StateLabel::D135),
                (StateLabel::D135, StateLabel::D45),
                (StateLabel::L, StateLabel::R),
                (StateLabel::R, StateLabel::L),
            ];
            for (input, output) in expected {
                let got = map.apply(&canon(input)).unwrap().classify(tol());
                prop_assert_eq!(got, output);
            }
        }
    }
}
