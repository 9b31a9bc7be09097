//! End-to-end key-distribution sessions over the rotating channel.
//!
//! A session freezes a protocol, a tracking arrangement and a channel, then
//! simulates a pulse train, sifts the per-pulse records and reports the
//! sifted-key error rate. Determinism contract: every random draw comes from
//! a counter-mode generator seeded once per session, with one independent
//! stream per pulse index, so results are identical bit for bit across runs
//! and across the sequential and data-parallel execution paths.
//!
//! Per pulse, draws are consumed in a fixed order and only when their
//! parameter makes them relevant:
//!
//! 1. the transmitted bit;
//! 2. the transmitted basis (four-state coding only);
//! 3. the loss coin, only if the loss probability is positive (a lost pulse
//!    stops here);
//! 4. the channel angle jitter, only if its sigma is positive;
//! 5. the tracker's angle-estimate error, only if its sigma is positive;
//! 6. the receiver's choice (basis index, or which conclusive projector);
//! 7. the measurement draw.
//!
//! The compensator is driven by the *estimated* profile angle; the channel
//! applies the profile angle plus jitter. Jitter is therefore invisible to
//! the tracker and survives as residual misalignment, while a nonzero
//! estimate-error sigma models an imperfect tracking loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::channel::{ChannelError, ThetaProfile};
use crate::config::{
    CompensatorLocation, ConfigError, ProtocolConfig, ReceiverTablePolicy, SessionConfig,
};
use crate::jones::{
    measure_in_basis, measure_projector, JonesMatrix, JonesVector, MeasurementBasis,
    PolarizationError, StateLabel,
};
use crate::protocol::{
    b92_encode, b92_receiver_projectors, bb84_encode, bb84_receiver_table, qber, sift,
    B92Projector, B92Scheme, Bb84Basis, Bb84ReceiverTable, ProtocolError, SiftRules, SiftedKeys,
};
use crate::tracking::{
    faraday_compensator, hwp_compensator, TrackingError, TrackingMode, VerdetMedium,
};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
}

/// Alice's per-pulse encoding choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceChoice {
    Basis(Bb84Basis),
    Scheme(B92Scheme),
}

impl AliceChoice {
    pub fn basis(&self) -> Option<Bb84Basis> {
        match self {
            AliceChoice::Basis(b) => Some(*b),
            AliceChoice::Scheme(_) => None,
        }
    }

    pub fn scheme(&self) -> Option<B92Scheme> {
        match self {
            AliceChoice::Basis(_) => None,
            AliceChoice::Scheme(s) => Some(*s),
        }
    }
}

impl std::fmt::Display for AliceChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AliceChoice::Basis(b) => write!(f, "{b}"),
            AliceChoice::Scheme(s) => write!(f, "{s}"),
        }
    }
}

/// What happened at the receiver for one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reception {
    /// Never arrived; no receiver draws were consumed.
    Lost,
    /// Four-state coding: measured in `basis`, collapsing to `outcome`.
    BasisMeasurement {
        basis: Bb84Basis,
        outcome: StateLabel,
    },
    /// Two-state coding: armed `projector`, which clicked or stayed dark.
    ProjectorMeasurement {
        projector: B92Projector,
        clicked: bool,
    },
}

/// Full log of one pulse. `theta_radians` is the profile angle at emission
/// (the trajectory a tracker estimates); jitter on top of it is receiver
/// noise and is not logged separately.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseRecord {
    pub index: u64,
    pub time_seconds: f64,
    pub theta_radians: f64,
    pub alice_bit: u8,
    pub alice_choice: AliceChoice,
    pub sent_label: StateLabel,
    pub reception: Reception,
    pub sifted: bool,
    pub bob_bit: Option<u8>,
}

/// Per-basis sifted-key breakdown for four-state sessions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisStats {
    pub basis: Bb84Basis,
    pub sifted: u64,
    pub errors: u64,
    pub qber: Option<f64>,
}

/// Protocol-specific session statistics. Rates are relative to *received*
/// pulses, so loss does not dilute them; they are `None` when no pulse was
/// received.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "protocol")]
pub enum ProtocolStats {
    #[serde(rename = "bb84")]
    Bb84 {
        /// Fraction of received pulses where both basis choices agreed.
        sift_rate: Option<f64>,
        per_basis: Vec<BasisStats>,
    },
    #[serde(rename = "b92")]
    B92 {
        /// Fraction of received pulses with a conclusive click.
        conclusive_rate: Option<f64>,
        /// Among received pulses where the armed projector tested the bit
        /// actually sent, the fraction that clicked.
        matching_click_rate: Option<f64>,
        conclusive_errors: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionStats {
    pub pulses: u64,
    pub received: u64,
    pub lost: u64,
    pub sifted: u64,
    /// Error rate over the whole sifted key; `None` when nothing was sifted.
    pub qber_overall: Option<f64>,
    #[serde(flatten)]
    pub protocol: ProtocolStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub records: Vec<PulseRecord>,
    pub keys: SiftedKeys,
    pub stats: SessionStats,
}

/// Everything `simulate_pulse` needs, resolved once per session.
struct SessionPlan {
    protocol: ResolvedProtocol,
    mode: TrackingMode,
    location: CompensatorLocation,
    medium: Option<VerdetMedium>,
    profile: ThetaProfile,
    pulse_rate_hz: f64,
    loss_probability: f64,
    jitter: Option<Normal<f64>>,
    estimate_error: Option<Normal<f64>>,
}

enum ResolvedProtocol {
    Bb84 {
        bases: [Bb84Basis; 2],
        /// Receiver tables and their realizing measurements, aligned with
        /// `bases`.
        tables: Vec<Bb84ReceiverTable>,
        measurements: Vec<MeasurementBasis>,
    },
    B92 {
        scheme: B92Scheme,
        /// `[bit-1 projector, bit-0 projector]` with their target vectors.
        projectors: [B92Projector; 2],
        targets: [JonesVector; 2],
        one_projector_bias: f64,
    },
}

/// The tracking mode whose arrival map the receiver tables assume. The
/// encoder-table policy decodes as if states arrived unchanged, which is the
/// magneto-optic arrival map.
pub(crate) fn table_mode(policy: ReceiverTablePolicy, mode: TrackingMode) -> TrackingMode {
    match policy {
        ReceiverTablePolicy::TrackedRemap => mode,
        ReceiverTablePolicy::EncoderTable => TrackingMode::Faraday,
    }
}

impl SessionPlan {
    fn new(config: &SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        let eff = table_mode(config.receiver_table, config.tracking.mode);
        let protocol = match &config.protocol {
            ProtocolConfig::Bb84 { bases } => {
                let tables = bases
                    .iter()
                    .map(|&b| bb84_receiver_table(b, eff))
                    .collect::<Result<Vec<_>, _>>()?;
                let measurements = tables
                    .iter()
                    .map(|t| t.measurement_basis())
                    .collect::<Result<Vec<_>, _>>()?;
                ResolvedProtocol::Bb84 {
                    bases: *bases,
                    tables,
                    measurements,
                }
            }
            ProtocolConfig::B92 {
                scheme,
                one_projector_bias,
            } => {
                let projectors = b92_receiver_projectors(*scheme, eff)?;
                let targets = [
                    JonesVector::canonical(projectors[0].target)?,
                    JonesVector::canonical(projectors[1].target)?,
                ];
                ResolvedProtocol::B92 {
                    scheme: *scheme,
                    projectors,
                    targets,
                    one_projector_bias: *one_projector_bias,
                }
            }
        };
        let sigma_normal =
            |sigma: f64| (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma validated"));
        Ok(Self {
            protocol,
            mode: config.tracking.mode,
            location: config.tracking.location,
            medium: config.medium,
            profile: config.channel.profile.clone(),
            pulse_rate_hz: config.channel.pulse_rate_hz,
            loss_probability: config.channel.loss_probability,
            jitter: sigma_normal(config.channel.angle_jitter_sigma),
            estimate_error: sigma_normal(config.tracking.theta_error_sigma),
        })
    }

    /// Compensator operator for an estimated angle, or `None` when untracked.
    /// The magneto-optic counter-rotation is placement-independent; a
    /// transmitter-side wave plate pre-mirrors about `-theta/2` so that the
    /// channel rotation completes the same overall mirror.
    fn compensator(&self, theta_estimate: f64) -> Result<Option<JonesMatrix>, SessionError> {
        match self.mode {
            TrackingMode::Faraday => {
                let medium = self.medium.as_ref().expect("medium validated");
                Ok(Some(faraday_compensator(theta_estimate, medium)?.operator))
            }
            TrackingMode::HalfWavePlate => {
                let angle = match self.location {
                    CompensatorLocation::Receiver => theta_estimate,
                    CompensatorLocation::Transmitter => -theta_estimate,
                };
                Ok(Some(hwp_compensator(angle)?.operator))
            }
            TrackingMode::None => Ok(None),
        }
    }
}

/// Simulates pulse `index` on its own random stream. Shared verbatim by the
/// sequential and parallel drivers, which is what makes them agree exactly.
fn simulate_pulse(
    plan: &SessionPlan,
    base: &ChaCha8Rng,
    index: u64,
) -> Result<PulseRecord, SessionError> {
    let mut rng = base.clone();
    rng.set_stream(index);

    let time_seconds = index as f64 / plan.pulse_rate_hz;
    let theta_radians = plan.profile.theta_at(time_seconds)?;

    let alice_bit: u8 = rng.random_range(0..2);
    let (alice_choice, sent_label) = match &plan.protocol {
        ResolvedProtocol::Bb84 { bases, .. } => {
            let basis = bases[rng.random_range(0..2usize)];
            (AliceChoice::Basis(basis), bb84_encode(basis, alice_bit)?)
        }
        ResolvedProtocol::B92 { scheme, .. } => (
            AliceChoice::Scheme(*scheme),
            b92_encode(*scheme, alice_bit)?,
        ),
    };

    let record = |reception| PulseRecord {
        index,
        time_seconds,
        theta_radians,
        alice_bit,
        alice_choice,
        sent_label,
        reception,
        sifted: false,
        bob_bit: None,
    };

    if plan.loss_probability > 0.0 && rng.random::<f64>() < plan.loss_probability {
        return Ok(record(Reception::Lost));
    }

    let jitter = plan.jitter.map_or(0.0, |n| n.sample(&mut rng));
    let estimate_error = plan.estimate_error.map_or(0.0, |n| n.sample(&mut rng));

    let channel_op = JonesMatrix::rotation(theta_radians + jitter)?;
    let end_to_end = match plan.compensator(theta_radians + estimate_error)? {
        Some(comp) => match plan.location {
            CompensatorLocation::Receiver => JonesMatrix::compose(&comp, &channel_op),
            CompensatorLocation::Transmitter => JonesMatrix::compose(&channel_op, &comp),
        },
        None => channel_op,
    };
    let arrived = end_to_end.apply(&JonesVector::canonical(sent_label)?)?;

    let reception = match &plan.protocol {
        ResolvedProtocol::Bb84 {
            bases,
            tables,
            measurements,
        } => {
            let k = rng.random_range(0..2usize);
            let outcome_bit = measure_in_basis(&measurements[k], &arrived, &mut rng);
            let outcome = if outcome_bit == 1 {
                tables[k].one()
            } else {
                tables[k].zero()
            };
            Reception::BasisMeasurement {
                basis: bases[k],
                outcome,
            }
        }
        ResolvedProtocol::B92 {
            projectors,
            targets,
            one_projector_bias,
            ..
        } => {
            let j = if rng.random::<f64>() < *one_projector_bias {
                0
            } else {
                1
            };
            let clicked = measure_projector(&targets[j], &arrived, &mut rng);
            Reception::ProjectorMeasurement {
                projector: projectors[j],
                clicked,
            }
        }
    };
    Ok(record(reception))
}

fn finish(
    plan: &SessionPlan,
    mut records: Vec<PulseRecord>,
) -> Result<SessionResult, SessionError> {
    let rules = match &plan.protocol {
        ResolvedProtocol::Bb84 { tables, .. } => SiftRules::Bb84 {
            tables: tables.clone(),
        },
        ResolvedProtocol::B92 { .. } => SiftRules::B92,
    };
    let keys = sift(&mut records, &rules)?;
    let stats = compute_stats(plan, &records, &keys)?;
    Ok(SessionResult {
        records,
        keys,
        stats,
    })
}

fn compute_stats(
    plan: &SessionPlan,
    records: &[PulseRecord],
    keys: &SiftedKeys,
) -> Result<SessionStats, SessionError> {
    let pulses = records.len() as u64;
    let received = records
        .iter()
        .filter(|r| r.reception != Reception::Lost)
        .count() as u64;
    let lost = pulses - received;
    let sifted = keys.alice.len() as u64;
    let qber_overall = if keys.alice.is_empty() {
        None
    } else {
        Some(qber(&keys.alice, &keys.bob)?)
    };
    let rate = |count: u64| (received > 0).then(|| count as f64 / received as f64);

    let protocol = match &plan.protocol {
        ResolvedProtocol::Bb84 { bases, .. } => {
            let per_basis = bases
                .iter()
                .map(|&basis| {
                    let in_basis = records
                        .iter()
                        .filter(|r| r.sifted && r.alice_choice.basis() == Some(basis));
                    let mut count = 0u64;
                    let mut errors = 0u64;
                    for r in in_basis {
                        count += 1;
                        if r.bob_bit != Some(r.alice_bit) {
                            errors += 1;
                        }
                    }
                    BasisStats {
                        basis,
                        sifted: count,
                        errors,
                        qber: (count > 0).then(|| errors as f64 / count as f64),
                    }
                })
                .collect();
            ProtocolStats::Bb84 {
                sift_rate: rate(sifted),
                per_basis,
            }
        }
        ResolvedProtocol::B92 { .. } => {
            let mut matching = 0u64;
            let mut matching_clicks = 0u64;
            let mut conclusive_errors = 0u64;
            for r in records {
                if let Reception::ProjectorMeasurement { projector, clicked } = r.reception {
                    if projector.bit == r.alice_bit {
                        matching += 1;
                        if clicked {
                            matching_clicks += 1;
                        }
                    }
                    if r.sifted && r.bob_bit != Some(r.alice_bit) {
                        conclusive_errors += 1;
                    }
                }
            }
            ProtocolStats::B92 {
                conclusive_rate: rate(sifted),
                matching_click_rate: (matching > 0)
                    .then(|| matching_clicks as f64 / matching as f64),
                conclusive_errors,
            }
        }
    };
    Ok(SessionStats {
        pulses,
        received,
        lost,
        sifted,
        qber_overall,
        protocol,
    })
}

/// Runs a session on the default execution path: data-parallel when the
/// `parallel` feature is enabled, sequential otherwise. Both paths produce
/// identical results for the same configuration.
pub fn run_session(config: &SessionConfig) -> Result<SessionResult, SessionError> {
    #[cfg(feature = "parallel")]
    {
        run_session_parallel(config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_session_sequential(config)
    }
}

/// Single-threaded driver, always available.
pub fn run_session_sequential(config: &SessionConfig) -> Result<SessionResult, SessionError> {
    let plan = SessionPlan::new(config)?;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let records = (0..config.pulses)
        .map(|i| simulate_pulse(&plan, &base, i))
        .collect::<Result<Vec<_>, _>>()?;
    finish(&plan, records)
}

/// Data-parallel driver. Pulse streams are indexed, so work-stealing order
/// cannot change any draw; the collected records are in pulse order.
#[cfg(feature = "parallel")]
pub fn run_session_parallel(config: &SessionConfig) -> Result<SessionResult, SessionError> {
    use rayon::prelude::*;

    let plan = SessionPlan::new(config)?;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let records = (0..usize::try_from(config.pulses).expect("pulse count fits in memory"))
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| simulate_pulse(&plan, &base, i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    finish(&plan, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelConfig;
    use crate::config::TrackingConfig;

    fn faraday_config() -> SessionConfig {
        SessionConfig {
            protocol: ProtocolConfig::Bb84 {
                bases: [Bb84Basis::Rectilinear, Bb84Basis::Diagonal],
            },
            tracking: TrackingConfig {
                mode: TrackingMode::Faraday,
                theta_error_sigma: 0.0,
                location: CompensatorLocation::Receiver,
            },
            medium: Some(VerdetMedium::new(40.0, 0.1).unwrap()),
            channel: ChannelConfig {
                profile: ThetaProfile::LinearRamp {
                    start: 0.0,
                    rate: 0.35,
                },
                pulse_rate_hz: 1000.0,
                loss_probability: 0.0,
                angle_jitter_sigma: 0.0,
            },
            pulses: 4000,
            seed: 7,
            receiver_table: ReceiverTablePolicy::TrackedRemap,
        }
    }

    fn hwp_config() -> SessionConfig {
        let mut config = faraday_config();
        config.tracking.mode = TrackingMode::HalfWavePlate;
        config.medium = None;
        config
    }

    fn three_sigma_window(p: f64, n: u64) -> f64 {
        3.0 * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn ideal_faraday_session_is_error_free() {
        let result = run_session_sequential(&faraday_config()).unwrap();
        assert_eq!(result.stats.pulses, 4000);
        assert_eq!(result.stats.received, 4000);
        assert_eq!(result.stats.qber_overall, Some(0.0));
        match &result.stats.protocol {
            ProtocolStats::Bb84 {
                sift_rate,
                per_basis,
            } => {
                let rate = sift_rate.unwrap();
                assert!((rate - 0.5).abs() < three_sigma_window(0.5, 4000));
                for b in per_basis {
                    assert_eq!(b.errors, 0);
                    assert_eq!(b.qber, Some(0.0));
                    assert!(b.sifted > 0);
                }
            }
            other => panic!("unexpected stats {other:?}"),
        }
    }

    #[test]
    fn ideal_hwp_session_is_error_free_including_swapped_bases() {
        let mut config = hwp_config();
        config.protocol = ProtocolConfig::Bb84 {
            bases: [Bb84Basis::Diagonal, Bb84Basis::Circular],
        };
        let result = run_session_sequential(&config).unwrap();
        assert_eq!(result.stats.qber_overall, Some(0.0));
    }

    #[test]
    fn encoder_tables_under_hwp_flip_the_mirrored_basis() {
        // Negative control: decoding with the encoder's own tables while a
        // wave plate mirrors the diagonal pair must flip every diagonal bit
        // and leave the rectilinear bits intact.
        let mut config = hwp_config();
        config.receiver_table = ReceiverTablePolicy::EncoderTable;
        let result = run_session_sequential(&config).unwrap();
        match &result.stats.protocol {
            ProtocolStats::Bb84 { per_basis, .. } => {
                let rect = per_basis
                    .iter()
                    .find(|b| b.basis == Bb84Basis::Rectilinear)
                    .unwrap();
                let diag = per_basis
                    .iter()
                    .find(|b| b.basis == Bb84Basis::Diagonal)
                    .unwrap();
                assert_eq!(rect.qber, Some(0.0));
                assert_eq!(diag.qber, Some(1.0));
            }
            other => panic!("unexpected stats {other:?}"),
        }
    }

    #[test]
    fn b92_sessions_click_conclusively_at_a_quarter() {
        for (mode, medium) in [
            (
                TrackingMode::Faraday,
                Some(VerdetMedium::new(40.0, 0.1).unwrap()),
            ),
            (TrackingMode::HalfWavePlate, None),
        ] {
            let mut config = faraday_config();
            config.protocol = ProtocolConfig::B92 {
                scheme: B92Scheme::HorizontalCircular,
                one_projector_bias: 0.5,
            };
            config.tracking.mode = mode;
            config.medium = medium;
            config.pulses = 20_000;
            let result = run_session_sequential(&config).unwrap();
            assert_eq!(result.stats.qber_overall, Some(0.0), "{mode}");
            match result.stats.protocol {
                ProtocolStats::B92 {
                    conclusive_rate,
                    matching_click_rate,
                    conclusive_errors,
                } => {
                    assert_eq!(conclusive_errors, 0);
                    let c = conclusive_rate.unwrap();
                    assert!(
                        (c - 0.25).abs() < three_sigma_window(0.25, 20_000),
                        "{mode}: conclusive {c}"
                    );
                    let m = matching_click_rate.unwrap();
                    assert!(
                        (m - 0.5).abs() < three_sigma_window(0.5, 10_000),
                        "{mode}: matching {m}"
                    );
                }
                other => panic!("unexpected stats {other:?}"),
            }
        }
    }

    #[test]
    fn seeded_replay_is_bit_identical() {
        let config = {
            let mut c = faraday_config();
            c.channel.loss_probability = 0.2;
            c.channel.angle_jitter_sigma = 0.02;
            c.tracking.theta_error_sigma = 0.01;
            c
        };
        let a = run_session_sequential(&config).unwrap();
        let b = run_session_sequential(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let mut config = faraday_config();
        let a = run_session_sequential(&config).unwrap();
        config.seed = 8;
        let b = run_session_sequential(&config).unwrap();
        assert_ne!(a.records, b.records);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_paths_agree_exactly() {
        let config = {
            let mut c = faraday_config();
            c.channel.loss_probability = 0.15;
            c.channel.angle_jitter_sigma = 0.03;
            c.tracking.theta_error_sigma = 0.02;
            c.pulses = 10_000;
            c
        };
        let seq = run_session_sequential(&config).unwrap();
        let par = run_session_parallel(&config).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn loss_reduces_received_within_binomial_bounds() {
        let mut config = faraday_config();
        config.channel.loss_probability = 0.4;
        config.pulses = 10_000;
        let result = run_session_sequential(&config).unwrap();
        let received_rate = result.stats.received as f64 / 10_000.0;
        assert!((received_rate - 0.6).abs() < three_sigma_window(0.6, 10_000));
        let lost_records = result
            .records
            .iter()
            .filter(|r| r.reception == Reception::Lost)
            .count() as u64;
        assert_eq!(lost_records, result.stats.lost);
    }

    #[test]
    fn faraday_placement_is_irrelevant_bit_for_bit() {
        // The counter-rotation commutes with the channel rotation, so moving
        // it to the transmitter changes nothing, draw for draw.
        let mut config = faraday_config();
        config.channel.angle_jitter_sigma = 0.05;
        config.tracking.theta_error_sigma = 0.03;
        let receiver_side = run_session_sequential(&config).unwrap();
        config.tracking.location = CompensatorLocation::Transmitter;
        let transmitter_side = run_session_sequential(&config).unwrap();
        assert_eq!(receiver_side, transmitter_side);
    }

    #[test]
    fn hwp_placement_is_irrelevant_under_ideal_tracking() {
        let mut config = hwp_config();
        config.protocol = ProtocolConfig::Bb84 {
            bases: [Bb84Basis::Rectilinear, Bb84Basis::Circular],
        };
        let receiver_side = run_session_sequential(&config).unwrap();
        config.tracking.location = CompensatorLocation::Transmitter;
        let transmitter_side = run_session_sequential(&config).unwrap();
        assert_eq!(receiver_side, transmitter_side);
    }

    #[test]
    fn untracked_quarter_turn_flips_every_sifted_bit() {
        let mut config = faraday_config();
        config.tracking.mode = TrackingMode::None;
        config.medium = None;
        config.receiver_table = ReceiverTablePolicy::EncoderTable;
        config.channel.profile = ThetaProfile::Constant {
            value: std::f64::consts::FRAC_PI_2,
        };
        let result = run_session_sequential(&config).unwrap();
        assert_eq!(result.stats.qber_overall, Some(1.0));
    }

    #[test]
    fn estimate_error_degrades_the_key() {
        let mut config = faraday_config();
        config.tracking.theta_error_sigma = 0.2;
        config.pulses = 20_000;
        let result = run_session_sequential(&config).unwrap();
        let q = result.stats.qber_overall.unwrap();
        // E[sin^2(delta)] with delta ~ N(0, 0.2) is about 0.038; demand a
        // clearly positive rate below 0.5.
        assert!(q > 0.01 && q < 0.5, "qber = {q}");
    }

    #[test]
    fn all_lost_session_reports_empty_key() {
        let mut config = faraday_config();
        config.channel.loss_probability = 0.999_999;
        config.pulses = 50;
        let result = run_session_sequential(&config).unwrap();
        assert_eq!(result.stats.received, 0);
        assert_eq!(result.stats.sifted, 0);
        assert_eq!(result.stats.qber_overall, None);
        match result.stats.protocol {
            ProtocolStats::Bb84 { sift_rate, .. } => assert_eq!(sift_rate, None),
            other => panic!("unexpected stats {other:?}"),
        }
    }

    #[test]
    fn records_carry_profile_angles_and_times() {
        let mut config = faraday_config();
        config.pulses = 5;
        let result = run_session_sequential(&config).unwrap();
        for (i, r) in result.records.iter().enumerate() {
            assert_eq!(r.index, i as u64);
            assert_eq!(r.time_seconds, i as f64 / 1000.0);
            assert_eq!(r.theta_radians, 0.35 * r.time_seconds);
        }
    }

    #[test]
    fn invalid_configurations_are_rejected_before_running() {
        let mut no_medium = faraday_config();
        no_medium.medium = None;
        assert!(matches!(
            run_session_sequential(&no_medium),
            Err(SessionError::Config(_))
        ));

        let mut untracked_b92 = faraday_config();
        untracked_b92.tracking.mode = TrackingMode::None;
        untracked_b92.medium = None;
        untracked_b92.receiver_table = ReceiverTablePolicy::EncoderTable;
        untracked_b92.protocol = ProtocolConfig::B92 {
            scheme: B92Scheme::HorizontalDiagonal,
            one_projector_bias: 0.5,
        };
        assert!(matches!(
            run_session_sequential(&untracked_b92),
            Err(SessionError::Config(_))
        ));

        let mut untracked_remap = faraday_config();
        untracked_remap.tracking.mode = TrackingMode::None;
        untracked_remap.medium = None;
        assert!(matches!(
            run_session_sequential(&untracked_remap),
            Err(SessionError::Config(_))
        ));
    }
}
