//! Session configuration: the typed description of a run, its validation
//! rules, and a flat `key = value` file format with command-line overrides.
//!
//! File format: one `section.key = value` pair per line, `#` starts a
//! comment (full-line or trailing), blank lines are ignored. Keys are
//! consumed strictly; unknown or duplicate keys are errors rather than
//! silently dropped. Overrides are `KEY=VALUE` strings applied after the
//! file, replacing its values.
//!
//! ```text
//! protocol.kind = bb84
//! protocol.bases = rect,circ
//! tracking.mode = faraday
//! medium.verdet = 40.0
//! medium.length_m = 0.1
//! channel.profile = ramp
//! channel.theta0_rad = 0.0
//! channel.rate_rad_per_s = 0.35
//! run.pulses = 100000
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::channel::{ChannelConfig, ChannelError, ThetaProfile};
use crate::protocol::{B92Scheme, Bb84Basis};
use crate::tracking::{TrackingError, TrackingMode, VerdetMedium};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {detail}")]
    Io { path: String, detail: String },
    #[error("config line {line}: {detail}")]
    Syntax { line: usize, detail: String },
    #[error("duplicate key `{key}`")]
    DuplicateKey { key: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("invalid value for `{key}`: {detail}")]
    InvalidValue { key: String, detail: String },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error("tracking mode `faraday` requires medium.verdet and medium.length_m")]
    MissingMediumForFaraday,
    #[error("a magneto-optic medium is only meaningful with tracking mode `faraday`")]
    MediumWithoutFaraday,
    #[error("tracking mode `none` has no decoding tables; set receiver.table = encoder")]
    UntrackedNeedsEncoderTable,
    #[error("two-state coding cannot run without tracking")]
    UntrackedNeedsFourState,
    #[error("tracking.theta_error_sigma must be 0 when tracking mode is `none`")]
    UntrackedNeedsPerfectEstimate,
    #[error("protocol.bases must name two distinct bases")]
    DuplicateBases,
    #[error("protocol.one_projector_bias must lie in [0, 1], got {0}")]
    InvalidBias(f64),
    #[error("run.pulses must be at least 1")]
    NoPulses,
    #[error("angle table spans [{start}, {end}] s but the session needs [0, {needed}] s")]
    TableDoesNotCoverSession { needed: f64, start: f64, end: f64 },
}

/// Which side of the channel hosts the compensator. The composed transform
/// is the same either way; the knob exists to check exactly that.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompensatorLocation {
    Receiver,
    Transmitter,
}

impl std::fmt::Display for CompensatorLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CompensatorLocation::Receiver => "receiver",
            CompensatorLocation::Transmitter => "transmitter",
        })
    }
}

impl std::str::FromStr for CompensatorLocation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "receiver" => Ok(CompensatorLocation::Receiver),
            "transmitter" => Ok(CompensatorLocation::Transmitter),
            _ => Err(format!("unknown compensator location `{s}`")),
        }
    }
}

impl Serialize for CompensatorLocation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Where the receiver's decoding tables come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverTablePolicy {
    /// Derive tables from the tracking mode's arrival map (the correct
    /// choice for tracked sessions).
    TrackedRemap,
    /// Reuse the encoder's own tables unconditionally. Required for
    /// untracked sessions; under wave-plate tracking it deliberately decodes
    /// the mirrored bases wrongly, which is useful as a control.
    EncoderTable,
}

impl std::fmt::Display for ReceiverTablePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReceiverTablePolicy::TrackedRemap => "remap",
            ReceiverTablePolicy::EncoderTable => "encoder",
        })
    }
}

impl std::str::FromStr for ReceiverTablePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remap" => Ok(ReceiverTablePolicy::TrackedRemap),
            "encoder" => Ok(ReceiverTablePolicy::EncoderTable),
            _ => Err(format!("unknown receiver table policy `{s}`")),
        }
    }
}

impl Serialize for ReceiverTablePolicy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Protocol selection plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum ProtocolConfig {
    #[serde(rename = "bb84")]
    Bb84 { bases: [Bb84Basis; 2] },
    #[serde(rename = "b92")]
    B92 {
        scheme: B92Scheme,
        /// Probability the receiver arms the bit-1 projector on a pulse.
        one_projector_bias: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackingConfig {
    pub mode: TrackingMode,
    /// Standard deviation of the Gaussian error on the tracker's estimate of
    /// the channel angle (radians); zero models a perfect tracking loop.
    pub theta_error_sigma: f64,
    pub location: CompensatorLocation,
}

/// Complete description of a session. `validate` must pass before running.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionConfig {
    pub protocol: ProtocolConfig,
    pub tracking: TrackingConfig,
    pub medium: Option<VerdetMedium>,
    pub channel: ChannelConfig,
    pub pulses: u64,
    pub seed: u64,
    pub receiver_table: ReceiverTablePolicy,
}

impl SessionConfig {
    /// Cross-field validation: channel ranges, medium presence matching the
    /// tracking mode, untracked-mode restrictions, protocol parameters, and
    /// table coverage of the session span.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.channel.validate()?;
        if self.pulses == 0 {
            return Err(ConfigError::NoPulses);
        }
        if !(self.tracking.theta_error_sigma.is_finite() && self.tracking.theta_error_sigma >= 0.0)
        {
            return Err(ConfigError::InvalidValue {
                key: "tracking.theta_error_sigma".into(),
                detail: format!(
                    "must be finite and non-negative, got {}",
                    self.tracking.theta_error_sigma
                ),
            });
        }
        match (self.tracking.mode, &self.medium) {
            (TrackingMode::Faraday, None) => return Err(ConfigError::MissingMediumForFaraday),
            (TrackingMode::Faraday, Some(_)) => {}
            (_, Some(_)) => return Err(ConfigError::MediumWithoutFaraday),
            (_, None) => {}
        }
        if self.tracking.mode == TrackingMode::None {
            if self.receiver_table != ReceiverTablePolicy::EncoderTable {
                return Err(ConfigError::UntrackedNeedsEncoderTable);
            }
            if !matches!(self.protocol, ProtocolConfig::Bb84 { .. }) {
                return Err(ConfigError::UntrackedNeedsFourState);
            }
            if self.tracking.theta_error_sigma != 0.0 {
                return Err(ConfigError::UntrackedNeedsPerfectEstimate);
            }
        }
        match &self.protocol {
            ProtocolConfig::Bb84 { bases } => {
                if bases[0] == bases[1] {
                    return Err(ConfigError::DuplicateBases);
                }
            }
            ProtocolConfig::B92 {
                one_projector_bias, ..
            } => {
                if !(one_projector_bias.is_finite() && (0.0..=1.0).contains(one_projector_bias)) {
                    return Err(ConfigError::InvalidBias(*one_projector_bias));
                }
            }
        }
        if let ThetaProfile::Table { rows } = &self.channel.profile {
            let needed = (self.pulses - 1) as f64 / self.channel.pulse_rate_hz;
            let start = rows.first().map(|r| r.0).unwrap_or(0.0);
            let end = rows.last().map(|r| r.0).unwrap_or(0.0);
            if start > 0.0 || end < needed {
                return Err(ConfigError::TableDoesNotCoverSession { needed, start, end });
            }
        }
        Ok(())
    }
}

/// Splits `KEY=VALUE` override arguments.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    args.iter()
        .map(|arg| {
            let (key, value) = arg.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: 0,
                detail: format!("override `{arg}` is not KEY=VALUE"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line: 0,
                    detail: format!("override `{arg}` has an empty key or value"),
                });
            }
            Ok((key.to_string(), value.to_string()))
        })
        .collect()
}

/// Reads and parses a config file; relative `channel.table_path` values are
/// resolved against the file's directory.
pub fn load_config(
    path: &Path,
    overrides: &[(String, String)],
) -> Result<SessionConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_config(&text, path.parent(), overrides)
}

/// Parses config text, applies overrides, loads any referenced angle table,
/// and validates the result.
pub fn parse_config(
    text: &str,
    base_dir: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<SessionConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (line_index, raw_line) in text.lines().enumerate() {
        let line = line_index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            detail: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                detail: "empty key or value".into(),
            });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey { key });
        }
    }
    for (key, value) in overrides {
        map.insert(key.clone(), value.clone());
    }
    build_config(map, base_dir)
}

struct KeyBag {
    map: BTreeMap<String, String>,
}

impl KeyBag {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::MissingKey {
            key: key.to_string(),
        })
    }

    fn f64_required(&mut self, key: &str) -> Result<f64, ConfigError> {
        let raw = self.require(key)?;
        parse_f64(key, &raw)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.take(key) {
            Some(raw) => parse_f64(key, &raw),
            None => Ok(default),
        }
    }

    fn u64_required(&mut self, key: &str) -> Result<u64, ConfigError> {
        let raw = self.require(key)?;
        parse_u64(key, &raw)
    }

    fn u64_or(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.take(key) {
            Some(raw) => parse_u64(key, &raw),
            None => Ok(default),
        }
    }

    fn enum_required<T>(&mut self, key: &str) -> Result<T, ConfigError>
    where
        T: std::str::FromStr<Err = String>,
    {
        let raw = self.require(key)?;
        raw.parse().map_err(|detail| ConfigError::InvalidValue {
            key: key.to_string(),
            detail,
        })
    }

    fn enum_or<T>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: std::str::FromStr<Err = String>,
    {
        match self.take(key) {
            Some(raw) => raw.parse().map_err(|detail| ConfigError::InvalidValue {
                key: key.to_string(),
                detail,
            }),
            None => Ok(default),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(key) = self.map.into_keys().next() {
            return Err(ConfigError::UnknownKey { key });
        }
        Ok(())
    }
}

fn parse_f64(key: &str, raw: &str) -> Result<f64, ConfigError> {
    raw.parse::<f64>().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        detail: format!("`{raw}` is not a number: {e}"),
    })
}

fn parse_u64(key: &str, raw: &str) -> Result<u64, ConfigError> {
    raw.parse::<u64>().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        detail: format!("`{raw}` is not a non-negative integer: {e}"),
    })
}

fn build_config(
    map: BTreeMap<String, String>,
    base_dir: Option<&Path>,
) -> Result<SessionConfig, ConfigError> {
    let mut bag = KeyBag { map };

    let kind = bag.require("protocol.kind")?;
    let protocol = match kind.as_str() {
        "bb84" => {
            let raw = bag.require("protocol.bases")?;
            let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(ConfigError::InvalidValue {
                    key: "protocol.bases".into(),
                    detail: format!("expected two comma-separated bases, got `{raw}`"),
                });
            }
            let parse_basis = |s: &str| {
                s.parse::<Bb84Basis>()
                    .map_err(|detail| ConfigError::InvalidValue {
                        key: "protocol.bases".into(),
                        detail,
                    })
            };
            ProtocolConfig::Bb84 {
                bases: [parse_basis(parts[0])?, parse_basis(parts[1])?],
            }
        }
        "b92" => ProtocolConfig::B92 {
            scheme: bag.enum_required::<B92Scheme>("protocol.scheme")?,
            one_projector_bias: bag.f64_or("protocol.one_projector_bias", 0.5)?,
        },
        other => {
            return Err(ConfigError::InvalidValue {
                key: "protocol.kind".into(),
                detail: format!("expected `bb84` or `b92`, got `{other}`"),
            })
        }
    };

    let tracking = TrackingConfig {
        mode: bag.enum_required::<TrackingMode>("tracking.mode")?,
        theta_error_sigma: bag.f64_or("tracking.theta_error_sigma", 0.0)?,
        location: bag.enum_or("tracking.location", CompensatorLocation::Receiver)?,
    };

    let medium = match (bag.take("medium.verdet"), bag.take("medium.length_m")) {
        (None, None) => None,
        (Some(v), Some(l)) => Some(VerdetMedium::new(
            parse_f64("medium.verdet", &v)?,
            parse_f64("medium.length_m", &l)?,
        )?),
        (Some(_), None) => {
            return Err(ConfigError::MissingKey {
                key: "medium.length_m".into(),
            })
        }
        (None, Some(_)) => {
            return Err(ConfigError::MissingKey {
                key: "medium.verdet".into(),
            })
        }
    };

    let profile_kind = bag.require("channel.profile")?;
    let profile = match profile_kind.as_str() {
        "constant" => ThetaProfile::Constant {
            value: bag.f64_required("channel.theta0_rad")?,
        },
        "ramp" => ThetaProfile::LinearRamp {
            start: bag.f64_or("channel.theta0_rad", 0.0)?,
            rate: bag.f64_required("channel.rate_rad_per_s")?,
        },
        "sinusoid" => ThetaProfile::Sinusoid {
            amplitude: bag.f64_required("channel.amplitude_rad")?,
            period_seconds: bag.f64_required("channel.period_s")?,
            phase: bag.f64_or("channel.phase_rad", 0.0)?,
        },
        "table" => {
            let raw_path = bag.require("channel.table_path")?;
            let mut path = PathBuf::from(&raw_path);
            if path.is_relative() {
                if let Some(dir) = base_dir {
                    path = dir.join(path);
                }
            }
            ThetaProfile::Table {
                rows: load_theta_table(&path)?,
            }
        }
        other => {
            return Err(ConfigError::InvalidValue {
                key: "channel.profile".into(),
                detail: format!(
                    "expected `constant`, `ramp`, `sinusoid` or `table`, got `{other}`"
                ),
            })
        }
    };

    let channel = ChannelConfig {
        profile,
        pulse_rate_hz: bag.f64_or("channel.pulse_rate_hz", 1_000_000.0)?,
        loss_probability: bag.f64_or("channel.loss_probability", 0.0)?,
        angle_jitter_sigma: bag.f64_or("channel.jitter_sigma_rad", 0.0)?,
    };

    let config = SessionConfig {
        protocol,
        tracking,
        medium,
        channel,
        pulses: bag.u64_required("run.pulses")?,
        seed: bag.u64_or("run.seed", 0)?,
        receiver_table: bag.enum_or("receiver.table", ReceiverTablePolicy::TrackedRemap)?,
    };
    bag.finish()?;
    config.validate()?;
    Ok(config)
}

/// Loads a two-column `t_seconds,theta_radians` table. A first line that
/// does not parse as numbers is treated as a header; `#` comments and blank
/// lines are skipped.
fn load_theta_table(path: &Path) -> Result<Vec<(f64, f64)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let key = format!("channel.table_path ({})", path.display());
    let mut rows = Vec::new();
    let mut saw_data = false;
    for (line_index, raw_line) in text.lines().enumerate() {
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parts: Vec<&str> = content.split(',').map(str::trim).collect();
        let parsed = (parts.len() == 2)
            .then(|| Some((parts[0].parse::<f64>().ok()?, parts[1].parse::<f64>().ok()?)))
            .flatten();
        match parsed {
            Some(row) => {
                rows.push(row);
                saw_data = true;
            }
            None if !saw_data && rows.is_empty() => {
                // Header line; skip it once.
                saw_data = true;
            }
            None => {
                return Err(ConfigError::InvalidValue {
                    key,
                    detail: format!(
                        "line {}: expected `t_seconds,theta_radians`, got `{content}`",
                        line_index + 1
                    ),
                });
            }
        }
    }
    Ok(rows)
}
