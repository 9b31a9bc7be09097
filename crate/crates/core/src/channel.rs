//! The rotating free-space channel: a time-dependent rotation of the
//! polarization plane, pulse loss, and pointing jitter on the angle.
//!
//! The channel angle `theta(t)` follows a configured profile. Each pulse is
//! either lost (with a fixed probability) or delivered rotated by
//! `theta(t) + jitter`, where the jitter is a fresh zero-mean Gaussian draw
//! per pulse. Trackers estimate `theta(t)`, never the jitter, so jitter is
//! what residual misalignment is made of.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::jones::{JonesMatrix, JonesVector, PolarizationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
    #[error("time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("time {t} is outside the tabulated span [{start}, {end}]")]
    OutsideTable { t: f64, start: f64, end: f64 },
    #[error("angle table needs at least two rows, got {0}")]
    TableTooShort(usize),
    #[error("angle table times must be finite and strictly increasing at row {row}")]
    TableNotMonotonic { row: usize },
    #[error("angle table values must be finite at row {row}")]
    TableValueNotFinite { row: usize },
    #[error("loss probability must lie in [0, 1], got {0}")]
    InvalidLossProbability(f64),
    #[error("{name} must be finite, got {value}")]
    NonFiniteParameter { name: &'static str, value: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
}

/// Deterministic channel-angle trajectory `theta(t)` in radians.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaProfile {
    /// `theta(t) = value`.
    Constant { value: f64 },
    /// `theta(t) = start + rate * t`.
    LinearRamp { start: f64, rate: f64 },
    /// `theta(t) = amplitude * sin(2 pi t / period + phase)`.
    Sinusoid {
        amplitude: f64,
        period_seconds: f64,
        phase: f64,
    },
    /// Piecewise-linear interpolation through `(t, theta)` rows with strictly
    /// increasing times. Queries outside the tabulated span are errors, not
    /// extrapolations.
    Table { rows: Vec<(f64, f64)> },
}

impl ThetaProfile {
    /// Validates the profile parameters once, ahead of sampling.
    pub fn validate(&self) -> Result<(), ChannelError> {
        let finite = |name: &'static str, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(ChannelError::NonFiniteParameter { name, value })
            }
        };
        match self {
            ThetaProfile::Constant { value } => finite("constant angle", *value),
            ThetaProfile::LinearRamp { start, rate } => {
                finite("ramp start", *start)?;
                finite("ramp rate", *rate)
            }
            ThetaProfile::Sinusoid {
                amplitude,
                period_seconds,
                phase,
            } => {
                finite("sinusoid amplitude", *amplitude)?;
                finite("sinusoid phase", *phase)?;
                if !(period_seconds.is_finite() && *period_seconds > 0.0) {
                    return Err(ChannelError::NonPositiveParameter {
                        name: "sinusoid period",
                        value: *period_seconds,
                    });
                }
                Ok(())
            }
            ThetaProfile::Table { rows } => {
                if rows.len() < 2 {
                    return Err(ChannelError::TableTooShort(rows.len()));
                }
                for (row, (t, theta)) in rows.iter().enumerate() {
                    if !theta.is_finite() {
                        return Err(ChannelError::TableValueNotFinite { row });
                    }
                    if !t.is_finite() || (row > 0 && *t <= rows[row - 1].0) {
                        return Err(ChannelError::TableNotMonotonic { row });
                    }
                }
                Ok(())
            }
        }
    }

    /// Samples `theta(t)`. Time must be finite and non-negative, and inside
    /// the tabulated span for table profiles.
    pub fn theta_at(&self, t: f64) -> Result<f64, ChannelError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(ChannelError::InvalidTime(t));
        }
        match self {
            ThetaProfile::Constant { value } => Ok(*value),
            ThetaProfile::LinearRamp { start, rate } => Ok(start + rate * t),
            ThetaProfile::Sinusoid {
                amplitude,
                period_seconds,
                phase,
            } => Ok(amplitude * (std::f64::consts::TAU * t / period_seconds + phase).sin()),
            ThetaProfile::Table { rows } => {
                let start = rows.first().map(|r| r.0).unwrap_or(0.0);
                let end = rows.last().map(|r| r.0).unwrap_or(0.0);
                if t < start || t > end {
                    return Err(ChannelError::OutsideTable { t, start, end });
                }
                let hi = rows.partition_point(|r| r.0 < t);
                if hi == 0 {
                    return Ok(rows[0].1);
                }
                let (t1, v1) = rows[hi.min(rows.len() - 1)];
                let (t0, v0) = rows[hi - 1];
                if t1 == t0 {
                    return Ok(v1);
                }
                Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
            }
        }
    }
}

/// Channel parameters shared by every pulse of a session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelConfig {
    pub profile: ThetaProfile,
    /// Pulse emission rate; pulse `i` is sent at `t = i / rate`.
    pub pulse_rate_hz: f64,
    /// Probability a pulse never reaches the receiver.
    pub loss_probability: f64,
    /// Standard deviation of the per-pulse Gaussian angle jitter (radians);
    /// zero disables jitter.
    pub angle_jitter_sigma: f64,
}

impl ChannelConfig {
    /// Validates every parameter. Loss must lie in `[0, 1)` for a session
    /// (a lossless-to-lossy range that can still deliver pulses); the raw
    /// [`transmit`] operation itself accepts the degenerate `1.0`.
    pub fn validate(&self) -> Result<(), ChannelError> {
        self.profile.validate()?;
        if !(self.pulse_rate_hz.is_finite() && self.pulse_rate_hz > 0.0) {
            return Err(ChannelError::NonPositiveParameter {
                name: "pulse rate",
                value: self.pulse_rate_hz,
            });
        }
        if !(self.loss_probability >= 0.0 && self.loss_probability < 1.0) {
            return Err(ChannelError::InvalidLossProbability(self.loss_probability));
        }
        if !(self.angle_jitter_sigma.is_finite() && self.angle_jitter_sigma >= 0.0) {
            return Err(ChannelError::NonFiniteParameter {
                name: "angle jitter sigma",
                value: self.angle_jitter_sigma,
            });
        }
        Ok(())
    }

    pub fn time_of_pulse(&self, index: u64) -> f64 {
        index as f64 / self.pulse_rate_hz
    }
}

/// What the channel delivered for one pulse.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelOutput {
    /// The pulse was absorbed or missed the aperture.
    Lost,
    /// The pulse arrived rotated by `applied_theta` (profile angle plus the
    /// jitter draw actually used).
    Received {
        state: JonesVector,
        applied_theta: f64,
    },
}

/// Sends one pulse through the rotating channel.
///
/// Draw order is fixed and consumed only when relevant: the loss coin is
/// drawn only if `loss_probability > 0`, then the jitter normal only if
/// `jitter_sigma > 0` and the pulse survived. `loss_probability` may be
/// `1.0` here, in which case the pulse is always lost.
pub fn transmit<R: Rng + ?Sized>(
    state: &JonesVector,
    theta: f64,
    loss_probability: f64,
    jitter_sigma: f64,
    rng: &mut R,
) -> Result<ChannelOutput, ChannelError> {
    if !(0.0..=1.0).contains(&loss_probability) {
        return Err(ChannelError::InvalidLossProbability(loss_probability));
    }
    if !(jitter_sigma.is_finite() && jitter_sigma >= 0.0) {
        return Err(ChannelError::NonFiniteParameter {
            name: "angle jitter sigma",
            value: jitter_sigma,
        });
    }
    if loss_probability > 0.0 && rng.random::<f64>() < loss_probability {
        return Ok(ChannelOutput::Lost);
    }
    let jitter = if jitter_sigma > 0.0 {
        let normal = Normal::new(0.0, jitter_sigma).expect("validated sigma");
        normal.sample(rng)
    } else {
        0.0
    };
    let applied_theta = theta + jitter;
    let rotated = JonesMatrix::rotation(applied_theta)?.apply(state)?;
    Ok(ChannelOutput::Received {
        state: rotated,
        applied_theta,
    })
}
