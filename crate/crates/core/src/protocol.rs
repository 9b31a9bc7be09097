//! Prepare-and-measure coding on the six named states, with decoding tables
//! that account for the receiver's tracking hardware.
//!
//! Encoding always follows the fixed bit convention below. What changes with
//! the tracking mode is the *receiver* side: a magneto-optic compensator
//! delivers each state unchanged, so the receiver reuses the encoder's table,
//! while a half-wave-plate compensator delivers the mirror image of each
//! state (H and V fixed, D45 and D135 exchanged, L and R exchanged), so the
//! receiver's table swaps those pairs. Uncompensated operation has no
//! angle-independent table at all and is rejected here.
//!
//! Four-state coding uses two of the three conjugate bases per session and
//! sifts on matching basis choices. Two-state coding sends one of two
//! non-orthogonal states and sifts on conclusive projector clicks: the
//! projector for bit `b` is chosen orthogonal to the *arrival* image of the
//! opposite bit, so a click can only come from `b`.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::jones::{JonesVector, MeasurementBasis, PolarizationError, StateLabel};
use crate::session::{PulseRecord, Reception};
use crate::tracking::TrackingMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("bit value must be 0 or 1, got {0}")]
    InvalidBit(u8),
    #[error("tracking mode `none` has no angle-independent decoding table")]
    UntrackedDecoding,
    #[error("no receiver table registered for basis {0}")]
    MissingReceiverTable(Bb84Basis),
    #[error("outcome {outcome} is not a state of the {basis} receiver table")]
    ForeignOutcome {
        basis: Bb84Basis,
        outcome: StateLabel,
    },
    #[error("record {index} does not match the sift rules in use")]
    MixedRecords { index: u64 },
    #[error("cannot compute an error rate over empty keys")]
    EmptyKeys,
    #[error("key lengths differ: {alice} vs {bob}")]
    KeyLengthMismatch { alice: usize, bob: usize },
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
}

/// The three conjugate bases available to four-state coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bb84Basis {
    Rectilinear,
    Diagonal,
    Circular,
}

impl Bb84Basis {
    pub const ALL: [Bb84Basis; 3] = [
        Bb84Basis::Rectilinear,
        Bb84Basis::Diagonal,
        Bb84Basis::Circular,
    ];

    /// Encoder states as `(one, zero)`.
    pub fn states(self) -> (StateLabel, StateLabel) {
        match self {
            Bb84Basis::Rectilinear => (StateLabel::H, StateLabel::V),
            Bb84Basis::Diagonal => (StateLabel::D45, StateLabel::D135),
            Bb84Basis::Circular => (StateLabel::L, StateLabel::R),
        }
    }
}

impl std::fmt::Display for Bb84Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Bb84Basis::Rectilinear => "rectilinear",
            Bb84Basis::Diagonal => "diagonal",
            Bb84Basis::Circular => "circular",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Bb84Basis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rectilinear" | "rect" => Ok(Bb84Basis::Rectilinear),
            "diagonal" | "diag" => Ok(Bb84Basis::Diagonal),
            "circular" | "circ" => Ok(Bb84Basis::Circular),
            _ => Err(format!("unknown basis `{s}`")),
        }
    }
}

/// Serializes as the display name, matching config spellings.
impl Serialize for Bb84Basis {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn check_bit(bit: u8) -> Result<(), ProtocolError> {
    if bit > 1 {
        return Err(ProtocolError::InvalidBit(bit));
    }
    Ok(())
}

/// Encoder mapping for four-state coding: bit 1 on the first basis state,
/// bit 0 on its orthogonal partner.
pub fn bb84_encode(basis: Bb84Basis, bit: u8) -> Result<StateLabel, ProtocolError> {
    check_bit(bit)?;
    let (one, zero) = basis.states();
    Ok(if bit == 1 { one } else { zero })
}

/// The state a transmitted label arrives as after the channel plus an ideal
/// compensator of the given mode. Only tracked modes have an
/// angle-independent answer.
fn tracked_arrival(mode: TrackingMode, sent: StateLabel) -> Result<StateLabel, ProtocolError> {
    match mode {
        TrackingMode::Faraday => Ok(sent),
        TrackingMode::HalfWavePlate => Ok(match sent {
            StateLabel::H => StateLabel::H,
            StateLabel::V => StateLabel::V,
            StateLabel::D45 => StateLabel::D135,
            StateLabel::D135 => StateLabel::D45,
            StateLabel::L => StateLabel::R,
            StateLabel::R => StateLabel::L,
            StateLabel::Other => return Err(PolarizationError::UnnamedState.into()),
        }),
        TrackingMode::None => Err(ProtocolError::UntrackedDecoding),
    }
}

/// Bit assignment a receiver uses for one basis: which arriving state means
/// 1 and which means 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bb84ReceiverTable {
    basis: Bb84Basis,
    one: StateLabel,
    zero: StateLabel,
}

impl Bb84ReceiverTable {
    pub fn basis(&self) -> Bb84Basis {
        self.basis
    }

    pub fn one(&self) -> StateLabel {
        self.one
    }

    pub fn zero(&self) -> StateLabel {
        self.zero
    }

    /// Maps a measured state back to a bit; `None` if the state does not
    /// belong to this table.
    pub fn decode(&self, outcome: StateLabel) -> Option<u8> {
        if outcome == self.one {
            Some(1)
        } else if outcome == self.zero {
            Some(0)
        } else {
            None
        }
    }

    /// The two-outcome measurement realizing this table, ordered so the
    /// outcome index is the bit value.
    pub fn measurement_basis(&self) -> Result<MeasurementBasis, ProtocolError> {
        let b0 = JonesVector::canonical(self.zero)?;
        let b1 = JonesVector::canonical(self.one)?;
        Ok(MeasurementBasis::new(b0, b1)?)
    }
}

/// The encoder's own bit assignment, as a table.
pub fn bb84_encoder_table(basis: Bb84Basis) -> Bb84ReceiverTable {
    let (one, zero) = basis.states();
    Bb84ReceiverTable { basis, one, zero }
}

/// Receiver bit assignment for a basis under a tracking mode. Magneto-optic
/// tracking reuses the encoder table; half-wave-plate tracking swaps the
/// diagonal and circular pairs; mode `none` is rejected.
pub fn bb84_receiver_table(
    basis: Bb84Basis,
    mode: TrackingMode,
) -> Result<Bb84ReceiverTable, ProtocolError> {
    let (one, zero) = basis.states();
    Ok(Bb84ReceiverTable {
        basis,
        one: tracked_arrival(mode, one)?,
        zero: tracked_arrival(mode, zero)?,
    })
}

/// The three two-state signal pairs, named by their `(one, zero)` states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum B92Scheme {
    HorizontalDiagonal,
    HorizontalCircular,
    DiagonalCircular,
}

impl B92Scheme {
    pub const ALL: [B92Scheme; 3] = [
        B92Scheme::HorizontalDiagonal,
        B92Scheme::HorizontalCircular,
        B92Scheme::DiagonalCircular,
    ];

    pub fn one_state(self) -> StateLabel {
        match self {
            B92Scheme::HorizontalDiagonal | B92Scheme::HorizontalCircular => StateLabel::H,
            B92Scheme::DiagonalCircular => StateLabel::D45,
        }
    }

    pub fn zero_state(self) -> StateLabel {
        match self {
            B92Scheme::HorizontalDiagonal => StateLabel::D45,
            B92Scheme::HorizontalCircular | B92Scheme::DiagonalCircular => StateLabel::L,
        }
    }
}

impl std::fmt::Display for B92Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            B92Scheme::HorizontalDiagonal => "h_d45",
            B92Scheme::HorizontalCircular => "h_l",
            B92Scheme::DiagonalCircular => "d45_l",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for B92Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "h_d45" | "h-d45" => Ok(B92Scheme::HorizontalDiagonal),
            "h_l" | "h-l" => Ok(B92Scheme::HorizontalCircular),
            "d45_l" | "d45-l" => Ok(B92Scheme::DiagonalCircular),
            _ => Err(format!("unknown two-state scheme `{s}`")),
        }
    }
}

/// Serializes as the display name, matching config spellings.
impl Serialize for B92Scheme {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Encoder mapping for two-state coding.
pub fn b92_encode(scheme: B92Scheme, bit: u8) -> Result<StateLabel, ProtocolError> {
    check_bit(bit)?;
    Ok(if bit == 1 {
        scheme.one_state()
    } else {
        scheme.zero_state()
    })
}

/// A conclusive detector: a click on `target` announces `bit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct B92Projector {
    pub target: StateLabel,
    pub bit: u8,
}

/// Receiver projectors for a scheme under a tracking mode, ordered
/// `[bit-1 projector, bit-0 projector]`.
///
/// The projector announcing bit `b` targets the state orthogonal to the
/// arrival image of the opposite bit, so it never clicks on that bit and
/// clicks on `b` with probability 1/2.
pub fn b92_receiver_projectors(
    scheme: B92Scheme,
    mode: TrackingMode,
) -> Result<[B92Projector; 2], ProtocolError> {
    let mut projectors = [B92Projector {
        target: StateLabel::Other,
        bit: 0,
    }; 2];
    for (slot, bit) in projectors.iter_mut().zip([1u8, 0u8]) {
        let opposite = b92_encode(scheme, 1 - bit)?;
        let arrival = tracked_arrival(mode, opposite)?;
        let target = arrival
            .orthogonal()
            .ok_or(PolarizationError::UnnamedState)?;
        *slot = B92Projector { target, bit };
    }
    Ok(projectors)
}

/// Conclusive decoding: a click announces the projector's bit, no click is
/// inconclusive.
pub fn b92_decode(projector: &B92Projector, clicked: bool) -> Option<u8> {
    clicked.then_some(projector.bit)
}

/// How to sift a batch of pulse records into matching key bits.
#[derive(Debug, Clone, PartialEq)]
pub enum SiftRules {
    /// Keep basis measurements where both sides chose the same basis; decode
    /// with that basis's receiver table.
    Bb84 { tables: Vec<Bb84ReceiverTable> },
    /// Keep projector measurements that clicked.
    B92,
}

impl SiftRules {
    /// Builds the four-state rules for a set of session bases under one
    /// tracking mode.
    pub fn for_bb84(bases: &[Bb84Basis], mode: TrackingMode) -> Result<Self, ProtocolError> {
        let tables = bases
            .iter()
            .map(|&b| bb84_receiver_table(b, mode))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SiftRules::Bb84 { tables })
    }
}

/// The retained key material after sifting, index-aligned.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKeys {
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
}

/// Marks each record as sifted or not, fills in the decoded receiver bit for
/// sifted records, and returns both key strings.
///
/// Lost pulses are never sifted. Four-state records are sifted when the two
/// basis choices agree; two-state records when the projector clicked.
pub fn sift(records: &mut [PulseRecord], rules: &SiftRules) -> Result<SiftedKeys, ProtocolError> {
    let mut keys = SiftedKeys::default();
    for record in records.iter_mut() {
        record.sifted = false;
        record.bob_bit = None;
        match (&record.reception, rules) {
            (Reception::Lost, _) => {}
            (Reception::BasisMeasurement { basis, outcome }, SiftRules::Bb84 { tables }) => {
                let alice_basis =
                    record
                        .alice_choice
                        .basis()
                        .ok_or(ProtocolError::MixedRecords {
                            index: record.index,
                        })?;
                if alice_basis != *basis {
                    continue;
                }
                let table = tables
                    .iter()
                    .find(|t| t.basis() == *basis)
                    .ok_or(ProtocolError::MissingReceiverTable(*basis))?;
                let bit = table
                    .decode(*outcome)
                    .ok_or(ProtocolError::ForeignOutcome {
                        basis: *basis,
                        outcome: *outcome,
                    })?;
                record.sifted = true;
                record.bob_bit = Some(bit);
                keys.alice.push(record.alice_bit);
                keys.bob.push(bit);
            }
            (Reception::ProjectorMeasurement { projector, clicked }, SiftRules::B92) => {
                if let Some(bit) = b92_decode(projector, *clicked) {
                    record.sifted = true;
                    record.bob_bit = Some(bit);
                    keys.alice.push(record.alice_bit);
                    keys.bob.push(bit);
                }
            }
            _ => {
                return Err(ProtocolError::MixedRecords {
                    index: record.index,
                })
            }
        }
    }
    Ok(keys)
}

/// Fraction of positions where the two sifted keys disagree.
pub fn qber(alice: &[u8], bob: &[u8]) -> Result<f64, ProtocolError> {
    if alice.len() != bob.len() {
        return Err(ProtocolError::KeyLengthMismatch {
            alice: alice.len(),
            bob: bob.len(),
        });
    }
    if alice.is_empty() {
        return Err(ProtocolError::EmptyKeys);
    }
    let errors = alice.iter().zip(bob).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / alice.len() as f64)
}
