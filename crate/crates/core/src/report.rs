//! Run artifacts: the per-pulse CSV log, the JSON run summary, and the
//! six-state transform table for the tracked modes.
//!
//! Both artifact writers are deterministic functions of their inputs, so a
//! replayed session produces byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{ProtocolConfig, SessionConfig};
use crate::jones::{JonesVector, PhaseTolerance, PolarizationError, StateLabel};
use crate::protocol::{
    b92_receiver_projectors, bb84_encoder_table, bb84_receiver_table, B92Projector, Bb84Basis,
    ProtocolError,
};
use crate::session::{table_mode, PulseRecord, Reception, SessionResult, SessionStats};
use crate::tracking::{composed_tracking_map, TrackingError, TrackingMode, VerdetMedium};

/// Channel angles (radians) sampled by the default transform table.
pub const DEFAULT_TABLE_ANGLES: [f64; 3] = [0.4, 1.1, 2.7];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {detail}")]
    Io { path: String, detail: String },
    #[error("cannot serialize summary: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
}

/// Exact column set of the pulse log, in order.
pub const CSV_HEADER: &str = "index,t_seconds,theta_radians,alice_bit,alice_basis_or_scheme,\
sent_label,lost,bob_choice,outcome,sifted,bob_bit";

/// Writes the pulse log. Receiver columns are empty for lost pulses and
/// `bob_bit` is empty for unsifted ones; two-state outcomes render as
/// `click` / `no_click`.
pub fn write_pulses_csv<W: Write>(w: &mut W, records: &[PulseRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let (lost, bob_choice, outcome) = match &r.reception {
            Reception::Lost => (true, String::new(), String::new()),
            Reception::BasisMeasurement { basis, outcome } => {
                (false, basis.to_string(), outcome.to_string())
            }
            Reception::ProjectorMeasurement { projector, clicked } => (
                false,
                projector.target.to_string(),
                if *clicked { "click" } else { "no_click" }.to_string(),
            ),
        };
        let bob_bit = r.bob_bit.map(|b| b.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.time_seconds,
            r.theta_radians,
            r.alice_bit,
            r.alice_choice,
            r.sent_label,
            lost,
            bob_choice,
            outcome,
            r.sifted,
            bob_bit,
        )?;
    }
    Ok(())
}

/// The encode and decode mapping a session actually used, for the summary.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "protocol")]
pub enum CodingDoc {
    #[serde(rename = "bb84")]
    Bb84 { bases: Vec<BasisCodingDoc> },
    #[serde(rename = "b92")]
    B92 {
        one_state: StateLabel,
        zero_state: StateLabel,
        projectors: Vec<ProjectorDoc>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisCodingDoc {
    pub basis: Bb84Basis,
    pub encode_one: StateLabel,
    pub encode_zero: StateLabel,
    pub receive_one: StateLabel,
    pub receive_zero: StateLabel,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectorDoc {
    pub target: StateLabel,
    pub announces_bit: u8,
}

/// Derives the coding tables a validated config resolves to.
pub fn coding_doc(config: &SessionConfig) -> Result<CodingDoc, ReportError> {
    let eff = table_mode(config.receiver_table, config.tracking.mode);
    match &config.protocol {
        ProtocolConfig::Bb84 { bases } => {
            let bases = bases
                .iter()
                .map(|&basis| {
                    let tx = bb84_encoder_table(basis);
                    let rx = bb84_receiver_table(basis, eff)?;
                    Ok(BasisCodingDoc {
                        basis,
                        encode_one: tx.one(),
                        encode_zero: tx.zero(),
                        receive_one: rx.one(),
                        receive_zero: rx.zero(),
                    })
                })
                .collect::<Result<Vec<_>, ReportError>>()?;
            Ok(CodingDoc::Bb84 { bases })
        }
        ProtocolConfig::B92 { scheme, .. } => {
            let projectors = b92_receiver_projectors(*scheme, eff)?
                .iter()
                .map(|p: &B92Projector| ProjectorDoc {
                    target: p.target,
                    announces_bit: p.bit,
                })
                .collect();
            Ok(CodingDoc::B92 {
                one_state: scheme.one_state(),
                zero_state: scheme.zero_state(),
                projectors,
            })
        }
    }
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    seed: u64,
    config: &'a SessionConfig,
    coding: CodingDoc,
    stats: &'a SessionStats,
}

/// Renders the JSON run summary: seed, config echo, resolved coding tables,
/// and the session statistics (rates and error breakdown).
pub fn summary_json(config: &SessionConfig, stats: &SessionStats) -> Result<String, ReportError> {
    let doc = SummaryDoc {
        seed: config.seed,
        config,
        coding: coding_doc(config)?,
        stats,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Writes `pulses.csv` and `summary.json` under `dir` (created if absent);
/// returns the two paths.
pub fn write_outputs(
    dir: &Path,
    config: &SessionConfig,
    result: &SessionResult,
) -> Result<(PathBuf, PathBuf), ReportError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |e: std::io::Error| ReportError::Io {
            path,
            detail: e.to_string(),
        }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    let csv_path = dir.join("pulses.csv");
    let mut csv = Vec::new();
    write_pulses_csv(&mut csv, &result.records).expect("writing to memory cannot fail");
    std::fs::write(&csv_path, csv).map_err(io_err(&csv_path))?;

    let json_path = dir.join("summary.json");
    std::fs::write(&json_path, summary_json(config, &result.stats)?).map_err(io_err(&json_path))?;
    Ok((csv_path, json_path))
}

/// One row of the six-state transform table: where a named input state ends
/// up after the channel plus an ideal compensator.
#[derive(Debug, Clone)]
pub struct TransformEntry {
    pub mode: TrackingMode,
    pub theta: f64,
    pub input: StateLabel,
    pub output_state: JonesVector,
    pub output_label: StateLabel,
}

/// Tabulates both tracked modes over the given channel angles for all six
/// named states.
pub fn transform_table(
    thetas: &[f64],
    medium: &VerdetMedium,
) -> Result<Vec<TransformEntry>, ReportError> {
    let mut entries = Vec::new();
    for mode in [TrackingMode::Faraday, TrackingMode::HalfWavePlate] {
        let medium_opt = match mode {
            TrackingMode::Faraday => Some(medium),
            _ => None,
        };
        for &theta in thetas {
            let map = composed_tracking_map(mode, theta, medium_opt)?;
            for input in StateLabel::NAMED {
                let output_state = map.apply(&JonesVector::canonical(input)?)?;
                entries.push(TransformEntry {
                    mode,
                    theta,
                    input,
                    output_state,
                    output_label: output_state.classify(PhaseTolerance::default()),
                });
            }
        }
    }
    Ok(entries)
}

/// Fixed-width text rendering of the transform table.
pub fn render_transform_table(entries: &[TransformEntry]) -> String {
    let mut out = String::from("mode     theta    input  output\n");
    for e in entries {
        out.push_str(&format!(
            "{:<8} {:<8} {:<6} {}\n",
            e.mode.to_string(),
            format!("{:.4}", e.theta),
            e.input.to_string(),
            e.output_label,
        ));
    }
    out
}

/// CSV rendering including the full output Jones vector (quoted, since its
/// text form contains a comma).
pub fn transform_table_csv(entries: &[TransformEntry]) -> String {
    let mut out = String::from("mode,theta_radians,input,output,output_jones\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{},\"{}\"\n",
            e.mode, e.theta, e.input, e.output_label, e.output_state,
        ));
    }
    out
}
