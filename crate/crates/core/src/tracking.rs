//! Polarization-tracking compensators for a channel that rotates the
//! polarization plane by a slowly varying angle `theta`.
//!
//! Two hardware strategies are modeled. A magneto-optic (Faraday) compensator
//! applies a counter-rotation by `-theta`, driven by a magnetic field computed
//! from the Verdet constant of its medium; it restores every input state. A
//! rotating half-wave plate with its fast axis at `theta / 2` cancels the
//! rotation for the basis states H and V but mirrors the diagonal states and
//! swaps circular handedness, so downstream decoding must remap those bases.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::jones::{JonesMatrix, PolarizationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackingError {
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
    #[error("Verdet constant must be finite and nonzero, got {0}")]
    InvalidVerdetConstant(f64),
    #[error("medium length must be finite and positive, got {0}")]
    InvalidMediumLength(f64),
    #[error("tracking mode {mode} does not use a magneto-optic medium")]
    UnexpectedMedium { mode: TrackingMode },
    #[error("Faraday tracking requires a magneto-optic medium")]
    MissingMedium,
}

/// A magneto-optic rod characterized by its Verdet constant (rad/(T*m)) and
/// length (m). The rotation it imparts under a uniform axial field B is
/// `beta = verdet * B * length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdetMedium {
    verdet_rad_per_tesla_meter: f64,
    length_meters: f64,
}

impl VerdetMedium {
    pub fn new(verdet_rad_per_tesla_meter: f64, length_meters: f64) -> Result<Self, TrackingError> {
        if !verdet_rad_per_tesla_meter.is_finite() || verdet_rad_per_tesla_meter == 0.0 {
            return Err(TrackingError::InvalidVerdetConstant(
                verdet_rad_per_tesla_meter,
            ));
        }
        if !(length_meters.is_finite() && length_meters > 0.0) {
            return Err(TrackingError::InvalidMediumLength(length_meters));
        }
        Ok(Self {
            verdet_rad_per_tesla_meter,
            length_meters,
        })
    }

    pub fn verdet(&self) -> f64 {
        self.verdet_rad_per_tesla_meter
    }

    pub fn length(&self) -> f64 {
        self.length_meters
    }

    /// Rotation angle produced by drive field `field_tesla`.
    pub fn angle_for_field(&self, field_tesla: f64) -> f64 {
        self.verdet_rad_per_tesla_meter * field_tesla * self.length_meters
    }

    /// Drive field required to produce rotation `beta`.
    pub fn field_for_angle(&self, beta: f64) -> f64 {
        beta / (self.verdet_rad_per_tesla_meter * self.length_meters)
    }
}

/// Which compensation hardware the receiver (or transmitter) runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrackingMode {
    /// Magneto-optic counter-rotation; restores all six named states.
    Faraday,
    /// Rotating half-wave plate at half the channel angle; restores H and V,
    /// mirrors the diagonal pair, swaps L and R.
    HalfWavePlate,
    /// No compensation at all.
    None,
}

impl std::fmt::Display for TrackingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            TrackingMode::Faraday => "faraday",
            TrackingMode::HalfWavePlate => "hwp",
            TrackingMode::None => "none",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for TrackingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "faraday" => Ok(TrackingMode::Faraday),
            "hwp" | "half_wave_plate" => Ok(TrackingMode::HalfWavePlate),
            "none" => Ok(TrackingMode::None),
            _ => Err(format!("unknown tracking mode `{s}`")),
        }
    }
}

/// Serializes as the display name, matching config spellings.
impl Serialize for TrackingMode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Hardware settings a compensator would need to realize its operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CompensatorState {
    Faraday {
        /// Channel angle the controller believes it is canceling (radians).
        theta_estimate: f64,
        /// Drive field for the counter-rotation, from the medium's Verdet
        /// relation (tesla).
        field_tesla: f64,
    },
    HalfWavePlate {
        theta_estimate: f64,
        /// Fast-axis orientation, `theta_estimate / 2` (radians).
        axis_radians: f64,
    },
    Inactive,
}

/// A compensator operator paired with the hardware state that realizes it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensator {
    pub operator: JonesMatrix,
    pub state: CompensatorState,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let wrapped = theta.rem_euclid(tau);
    if wrapped > std::f64::consts::PI {
        wrapped - tau
    } else {
        wrapped
    }
}

/// Faraday compensator for an estimated channel angle: counter-rotation by
/// `-theta_estimate`, with the angle wrapped into `(-pi, pi]` before the
/// drive field is computed so the field stays bounded as the channel winds.
pub fn faraday_compensator(
    theta_estimate: f64,
    medium: &VerdetMedium,
) -> Result<Compensator, TrackingError> {
    if !theta_estimate.is_finite() {
        return Err(PolarizationError::NonFiniteAngle(theta_estimate).into());
    }
    let beta = -wrap_angle(theta_estimate);
    Ok(Compensator {
        operator: JonesMatrix::faraday(beta)?,
        state: CompensatorState::Faraday {
            theta_estimate,
            field_tesla: medium.field_for_angle(beta),
        },
    })
}

/// Half-wave-plate compensator: fast axis at `theta_estimate / 2`.
pub fn hwp_compensator(theta_estimate: f64) -> Result<Compensator, TrackingError> {
    let axis_radians = theta_estimate / 2.0;
    Ok(Compensator {
        operator: JonesMatrix::half_wave_plate(axis_radians)?,
        state: CompensatorState::HalfWavePlate {
            theta_estimate,
            axis_radians,
        },
    })
}

/// The end-to-end transform seen by a state: channel rotation by `theta`
/// followed by the mode's compensator set to the same angle.
///
/// `medium` must be present exactly when `mode` is [`TrackingMode::Faraday`];
/// a medium supplied to the other modes is rejected rather than ignored.
pub fn composed_tracking_map(
    mode: TrackingMode,
    theta: f64,
    medium: Option<&VerdetMedium>,
) -> Result<JonesMatrix, TrackingError> {
    let channel = JonesMatrix::rotation(theta)?;
    let compensator = match (mode, medium) {
        (TrackingMode::Faraday, Some(m)) => faraday_compensator(theta, m)?.operator,
        (TrackingMode::Faraday, None) => return Err(TrackingError::MissingMedium),
        (TrackingMode::HalfWavePlate, None) => hwp_compensator(theta)?.operator,
        (TrackingMode::None, None) => JonesMatrix::identity(),
        (mode, Some(_)) => return Err(TrackingError::UnexpectedMedium { mode }),
    };
    Ok(JonesMatrix::compose(&compensator, &channel))
}
