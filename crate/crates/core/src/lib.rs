//! Polarization tracking and quantum key distribution over a rotating
//! free-space channel.
//!
//! The channel between a moving transmitter and a ground receiver rotates
//! the polarization plane by a slowly varying angle. This crate models that
//! situation end to end in Jones calculus:
//!
//! * [`jones`]: normalized polarization states, the six named states over
//!   three conjugate bases, rotation / Faraday / half-wave-plate operators,
//!   projection and Born-rule measurement;
//! * [`tracking`]: the two compensator designs, a magneto-optic
//!   counter-rotation (restores every state; drive field from the Verdet
//!   relation) and a rotating half-wave plate at half the channel angle
//!   (restores H and V, mirrors the diagonal pair, swaps circular
//!   handedness);
//! * [`protocol`]: four-state and two-state prepare-and-measure coding with
//!   receiver tables remapped per tracking mode, sifting and the sifted-key
//!   error rate;
//! * [`channel`]: channel-angle profiles, pulse loss and angle jitter;
//! * [`session`]: reproducible Monte Carlo key-distribution sessions, with
//!   sequential and data-parallel drivers that agree bit for bit;
//! * [`config`]: the session description, its validation rules and a flat
//!   key = value file format;
//! * [`report`]: the per-pulse CSV log, the JSON run summary and the
//!   six-state transform table;
//! * [`verify`]: a self-check battery over the algebraic invariants,
//!   including a mutation control.
//!
//! # Conventions
//!
//! States are column vectors on the (horizontal, vertical) axes, compared up
//! to global phase. `H = (1, 0)`, `V = (0, 1)`, `D45 = (1, 1)/sqrt(2)`,
//! `D135 = (-1, 1)/sqrt(2)`, `L = (1, i)/sqrt(2)`, `R = (1, -i)/sqrt(2)`.
//! Rotation by `theta` is counterclockwise, `[[cos, -sin], [sin, cos]]`; a
//! half-wave plate at axis `alpha` is `[[cos 2a, sin 2a], [sin 2a, -cos 2a]]`.
//! Bit 1 rides the first state of each basis pair (H, D45, L), bit 0 the
//! second (V, D135, R).
//!
//! # Determinism
//!
//! A session is a pure function of its configuration (seed included). Each
//! pulse uses its own counter-mode random stream, so the parallel driver
//! (feature `parallel`, on by default) reproduces the sequential results
//! exactly.
//!
//! ```
//! use poltrack::config::parse_config;
//! use poltrack::session::run_session;
//!
//! let text = "\
//! protocol.kind = bb84
//! protocol.bases = rect,circ
//! tracking.mode = faraday
//! medium.verdet = 40.0
//! medium.length_m = 0.1
//! channel.profile = ramp
//! channel.rate_rad_per_s = 0.35
//! channel.pulse_rate_hz = 1000
//! run.pulses = 2000
//! run.seed = 1
//! ";
//! let config = parse_config(text, None, &[]).unwrap();
//! let result = run_session(&config).unwrap();
//! assert_eq!(result.stats.qber_overall, Some(0.0));
//! ```

pub mod channel;
pub mod config;
pub mod jones;
pub mod protocol;
pub mod report;
pub mod session;
pub mod tracking;
pub mod verify;

pub use channel::{ChannelConfig, ChannelError, ChannelOutput, ThetaProfile};
pub use config::{
    load_config, parse_config, parse_overrides, CompensatorLocation, ConfigError, ProtocolConfig,
    ReceiverTablePolicy, SessionConfig, TrackingConfig,
};
pub use jones::{
    measure_in_basis, measure_projector, project, JonesMatrix, JonesVector, MeasurementBasis,
    PhaseTolerance, PolarizationError, StateLabel,
};
pub use protocol::{
    b92_decode, b92_encode, b92_receiver_projectors, bb84_encode, bb84_receiver_table, qber, sift,
    B92Projector, B92Scheme, Bb84Basis, Bb84ReceiverTable, ProtocolError, SiftRules, SiftedKeys,
};
pub use report::{
    render_transform_table, summary_json, transform_table, transform_table_csv, write_outputs,
    write_pulses_csv, ReportError, TransformEntry, DEFAULT_TABLE_ANGLES,
};
#[cfg(feature = "parallel")]
pub use session::run_session_parallel;
pub use session::{
    run_session, run_session_sequential, AliceChoice, ProtocolStats, PulseRecord, Reception,
    SessionError, SessionResult, SessionStats,
};
pub use tracking::{
    composed_tracking_map, faraday_compensator, hwp_compensator, wrap_angle, Compensator,
    CompensatorState, TrackingError, TrackingMode, VerdetMedium,
};
pub use verify::{all_passed, run_invariant_checks, CheckReport};
