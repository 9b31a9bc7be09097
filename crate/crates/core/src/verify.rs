//! Self-check battery: re-derives the algebraic identities the simulator
//! rests on and reports each as pass or fail.
//!
//! The battery is deliberately redundant with the unit tests so it can run
//! in a deployed binary (`verify` subcommand) without a test harness. It
//! ends with a mutation control: a deliberately wrong wave-plate operator is
//! fed to the mirror-law checker, which must flag it. A checker that cannot
//! fail proves nothing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use num_complex::Complex64;

use crate::jones::{
    JonesMatrix, JonesVector, MeasurementBasis, PhaseTolerance, StateLabel, ALGEBRAIC_TOL,
};
use crate::protocol::{
    b92_encode, b92_receiver_projectors, bb84_encode, bb84_receiver_table, B92Scheme, Bb84Basis,
};
use crate::tracking::{composed_tracking_map, faraday_compensator, TrackingMode, VerdetMedium};

/// Outcome of one named invariant check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    /// Empty on success; a counterexample or explanation on failure.
    pub detail: String,
}

const ANGLE_GRID: [f64; 9] = [-3.6, -2.2, -1.1, -0.4, 0.0, 0.4, 1.1, 2.7, 3.6];

fn tol() -> PhaseTolerance {
    PhaseTolerance::default()
}

fn canon(label: StateLabel) -> JonesVector {
    JonesVector::canonical(label).expect("named label")
}

fn medium() -> VerdetMedium {
    VerdetMedium::new(40.0, 0.1).expect("valid medium")
}

type CheckResult = Result<(), String>;

fn check_operators_unitary() -> CheckResult {
    for &a in &ANGLE_GRID {
        let ops = [
            ("rotation", JonesMatrix::rotation(a)),
            ("faraday", JonesMatrix::faraday(a)),
            ("half-wave plate", JonesMatrix::half_wave_plate(a)),
        ];
        for (name, op) in ops {
            let op = op.map_err(|e| e.to_string())?;
            if !op.is_unitary(ALGEBRAIC_TOL) {
                return Err(format!("{name}({a}) is not unitary"));
            }
        }
    }
    Ok(())
}

fn check_rotation_additivity() -> CheckResult {
    for &a in &ANGLE_GRID {
        for &b in &ANGLE_GRID {
            let composed = JonesMatrix::compose(
                &JonesMatrix::rotation(a).map_err(|e| e.to_string())?,
                &JonesMatrix::rotation(b).map_err(|e| e.to_string())?,
            );
            let direct = JonesMatrix::rotation(a + b).map_err(|e| e.to_string())?;
            for r in 0..2 {
                for c in 0..2 {
                    if (composed.entry(r, c) - direct.entry(r, c)).norm() > 1e-11 {
                        return Err(format!(
                            "rotation({a}) * rotation({b}) != rotation({})",
                            a + b
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_circular_rotation_invariance() -> CheckResult {
    for &a in &ANGLE_GRID {
        let d = JonesMatrix::rotation(a).map_err(|e| e.to_string())?;
        for label in [StateLabel::L, StateLabel::R] {
            let s = canon(label);
            let out = d.apply(&s).map_err(|e| e.to_string())?;
            if !out.equal_up_to_phase(&s, tol()) {
                return Err(format!("rotation({a}) moved {label}"));
            }
        }
    }
    Ok(())
}

fn check_hwp_involution() -> CheckResult {
    for &a in &ANGLE_GRID {
        let hwp = JonesMatrix::half_wave_plate(a).map_err(|e| e.to_string())?;
        let twice = JonesMatrix::compose(&hwp, &hwp);
        if !twice.equal_up_to_phase(&JonesMatrix::identity(), tol()) {
            return Err(format!(
                "half-wave plate at {a} applied twice is not identity"
            ));
        }
    }
    Ok(())
}

fn check_hwp_handedness_swap() -> CheckResult {
    for &a in &ANGLE_GRID {
        let hwp = JonesMatrix::half_wave_plate(a).map_err(|e| e.to_string())?;
        let l_out = hwp
            .apply(&canon(StateLabel::L))
            .map_err(|e| e.to_string())?;
        let r_out = hwp
            .apply(&canon(StateLabel::R))
            .map_err(|e| e.to_string())?;
        if !l_out.equal_up_to_phase(&canon(StateLabel::R), tol())
            || !r_out.equal_up_to_phase(&canon(StateLabel::L), tol())
        {
            return Err(format!("half-wave plate at {a} did not swap L and R"));
        }
    }
    Ok(())
}

/// Core of the mirror-law check, parameterized over the wave-plate
/// constructor so the mutation control can feed it a corrupted one.
fn mirror_law_with(
    plate: &dyn Fn(f64) -> Result<JonesMatrix, crate::jones::PolarizationError>,
) -> CheckResult {
    for &theta in &ANGLE_GRID {
        let map = JonesMatrix::compose(
            &plate(theta / 2.0).map_err(|e| e.to_string())?,
            &JonesMatrix::rotation(theta).map_err(|e| e.to_string())?,
        );
        for &phi in &[-1.9, -0.7, 0.0, 0.3, 1.2, 2.5] {
            let out = map
                .apply(&JonesVector::linear(phi).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let mirror = JonesVector::linear(-phi).map_err(|e| e.to_string())?;
            if !out.equal_up_to_phase(&mirror, tol()) {
                return Err(format!(
                    "tracked linear state at {phi} did not land on {} for theta {theta}",
                    -phi
                ));
            }
        }
    }
    Ok(())
}

fn check_tracked_mirror_law() -> CheckResult {
    mirror_law_with(&JonesMatrix::half_wave_plate)
}

fn check_six_state_transform_totality() -> CheckResult {
    let medium = medium();
    for mode in [TrackingMode::Faraday, TrackingMode::HalfWavePlate] {
        let medium_opt = match mode {
            TrackingMode::Faraday => Some(&medium),
            _ => None,
        };
        for &theta in &ANGLE_GRID {
            let map = composed_tracking_map(mode, theta, medium_opt).map_err(|e| e.to_string())?;
            for input in StateLabel::NAMED {
                let out = map.apply(&canon(input)).map_err(|e| e.to_string())?;
                let label = out.classify(tol());
                if label == StateLabel::Other {
                    return Err(format!(
                        "{mode} tracking at {theta} mapped {input} outside the named states"
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_faraday_compensation_identity() -> CheckResult {
    let medium = medium();
    for &theta in &ANGLE_GRID {
        let map = composed_tracking_map(TrackingMode::Faraday, theta, Some(&medium))
            .map_err(|e| e.to_string())?;
        if !map.equal_up_to_phase(&JonesMatrix::identity(), tol()) {
            return Err(format!("compensated channel at {theta} is not identity"));
        }
    }
    Ok(())
}

fn check_faraday_residual_rotation() -> CheckResult {
    // With an imperfect estimate the net effect must be a pure rotation by
    // the estimation error.
    let medium = medium();
    for &theta in &ANGLE_GRID {
        for delta in [-0.3, -0.05, 0.02, 0.4] {
            let comp = faraday_compensator(theta + delta, &medium).map_err(|e| e.to_string())?;
            let net = JonesMatrix::compose(
                &comp.operator,
                &JonesMatrix::rotation(theta).map_err(|e| e.to_string())?,
            );
            let residual = JonesMatrix::rotation(-delta).map_err(|e| e.to_string())?;
            if !net.equal_up_to_phase(&residual, tol()) {
                return Err(format!(
                    "estimate error {delta} at {theta} left a non-rotation residual"
                ));
            }
        }
    }
    Ok(())
}

fn check_verdet_round_trip() -> CheckResult {
    let medium = medium();
    for beta in [-2.0, -0.3, 0.0, 0.7, 3.0] {
        let field = medium.field_for_angle(beta);
        let back = medium.angle_for_field(field);
        if (back - beta).abs() > ALGEBRAIC_TOL {
            return Err(format!("field round trip for {beta} gave {back}"));
        }
    }
    Ok(())
}

fn check_born_completeness() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let raw = [
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
        ];
        let norm = (raw[0].norm_sqr() + raw[1].norm_sqr()).sqrt();
        if norm < 1e-3 {
            continue;
        }
        let state = JonesVector::new(raw[0] / norm, raw[1] / norm).map_err(|e| e.to_string())?;
        let angle = rng.random::<f64>() * std::f64::consts::TAU;
        let basis = MeasurementBasis::new(
            JonesVector::linear(angle).map_err(|e| e.to_string())?,
            JonesVector::linear(angle + std::f64::consts::FRAC_PI_2).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let total = basis.b0().inner(&state).norm_sqr() + basis.b1().inner(&state).norm_sqr();
        if (total - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(format!("outcome probabilities sum to {total}"));
        }
    }
    Ok(())
}

fn check_receiver_table_decoding() -> CheckResult {
    let medium = medium();
    for mode in [TrackingMode::Faraday, TrackingMode::HalfWavePlate] {
        let medium_opt = match mode {
            TrackingMode::Faraday => Some(&medium),
            _ => None,
        };
        for &theta in &ANGLE_GRID {
            let map = composed_tracking_map(mode, theta, medium_opt).map_err(|e| e.to_string())?;
            for basis in Bb84Basis::ALL {
                let table = bb84_receiver_table(basis, mode).map_err(|e| e.to_string())?;
                for bit in [0u8, 1u8] {
                    let sent = bb84_encode(basis, bit).map_err(|e| e.to_string())?;
                    let arrived = map.apply(&canon(sent)).map_err(|e| e.to_string())?;
                    if table.decode(arrived.classify(tol())) != Some(bit) {
                        return Err(format!(
                            "{mode} receiver misdecoded {basis} bit {bit} at theta {theta}"
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_b92_projector_exclusion() -> CheckResult {
    let medium = medium();
    for mode in [TrackingMode::Faraday, TrackingMode::HalfWavePlate] {
        let medium_opt = match mode {
            TrackingMode::Faraday => Some(&medium),
            _ => None,
        };
        for scheme in B92Scheme::ALL {
            let projectors = b92_receiver_projectors(scheme, mode).map_err(|e| e.to_string())?;
            for &theta in &ANGLE_GRID {
                let map =
                    composed_tracking_map(mode, theta, medium_opt).map_err(|e| e.to_string())?;
                for p in projectors {
                    let target = canon(p.target);
                    let opposite = map
                        .apply(&canon(
                            b92_encode(scheme, 1 - p.bit).map_err(|e| e.to_string())?,
                        ))
                        .map_err(|e| e.to_string())?;
                    if target.inner(&opposite).norm_sqr() > 1e-12 {
                        return Err(format!(
                            "{mode} {scheme} projector for bit {} is not dark at theta {theta}",
                            p.bit
                        ));
                    }
                    let same = map
                        .apply(&canon(
                            b92_encode(scheme, p.bit).map_err(|e| e.to_string())?,
                        ))
                        .map_err(|e| e.to_string())?;
                    if (target.inner(&same).norm_sqr() - 0.5).abs() > 1e-9 {
                        return Err(format!(
                            "{mode} {scheme} projector for bit {} lost its half brightness",
                            p.bit
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_mutation_control() -> CheckResult {
    // A plate that rotates by twice its axis angle instead of mirroring is
    // unitary and wrong; the mirror-law checker must reject it.
    let corrupted = |axis: f64| JonesMatrix::rotation(2.0 * axis);
    match mirror_law_with(&corrupted) {
        Err(_) => Ok(()),
        Ok(()) => Err("mirror-law checker accepted a corrupted wave plate".to_string()),
    }
}

type NamedCheck = (&'static str, fn() -> CheckResult);

/// Runs every invariant check and returns one report per check, in a fixed
/// order.
pub fn run_invariant_checks() -> Vec<CheckReport> {
    let checks: [NamedCheck; 14] = [
        ("operators_unitary", check_operators_unitary),
        ("rotation_additivity", check_rotation_additivity),
        (
            "circular_rotation_invariance",
            check_circular_rotation_invariance,
        ),
        ("hwp_involution", check_hwp_involution),
        ("hwp_handedness_swap", check_hwp_handedness_swap),
        ("tracked_mirror_law", check_tracked_mirror_law),
        (
            "six_state_transform_totality",
            check_six_state_transform_totality,
        ),
        (
            "faraday_compensation_identity",
            check_faraday_compensation_identity,
        ),
        ("faraday_residual_rotation", check_faraday_residual_rotation),
        ("verdet_round_trip", check_verdet_round_trip),
        ("born_completeness", check_born_completeness),
        ("receiver_table_decoding", check_receiver_table_decoding),
        ("b92_projector_exclusion", check_b92_projector_exclusion),
        ("mutation_control_rejects_bad_plate", check_mutation_control),
    ];
    checks
        .into_iter()
        .map(|(name, run)| match run() {
            Ok(()) => CheckReport {
                name,
                passed: true,
                detail: String::new(),
            },
            Err(detail) => CheckReport {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}

/// True when every report passed.
pub fn all_passed(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_invariant_check_passes() {
        let reports = run_invariant_checks();
        assert_eq!(reports.len(), 14);
        for r in &reports {
            assert!(r.passed, "{} failed: {}", r.name, r.detail);
            assert!(r.detail.is_empty());
        }
        assert!(all_passed(&reports));
    }

    #[test]
    fn checker_rejects_a_corrupted_plate_directly() {
        let corrupted = |axis: f64| JonesMatrix::rotation(2.0 * axis);
        assert!(mirror_law_with(&corrupted).is_err());
    }

    #[test]
    fn all_passed_is_false_on_any_failure() {
        let mut reports = run_invariant_checks();
        reports[0].passed = false;
        assert!(!all_passed(&reports));
    }
}
