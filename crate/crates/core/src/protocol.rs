//! The two-party round trip.
//!
//! Alice prepares `|0>` or `|φ0>` and sends it to Bob. Bob either encodes a
//! message bit with `I` / `iσ_y` (message mode) or swaps in a random BB84
//! state (control mode) and sends the qubit back. Alice measures in her
//! preparation basis. In control mode Bob announces what he sent, and a
//! mismatch in a matching basis means Eve was caught and the session stops.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::{guess_bob_bit, intervene, EveEvent, EveKind, EveMemory, EveStrategySpec, Leg};
use crate::qstate::{self, apply, prepare, BasisLabel, BasisSpec, Operator, StateLabel, StateVector};
use crate::seed::{self, Party, Stream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("round cap of {max_rounds} reached after delivering {delivered} bit(s); raise the cap or lower c")]
    MaxRoundsExceeded { max_rounds: u64, delivered: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    /// Probability that Bob turns a round into a control round.
    pub c: f64,
    /// Number of bits Bob sends.
    pub message_bits: usize,
    pub master_seed: u64,
    pub eve: EveStrategySpec,
    pub max_rounds: u64,
}

impl ProtocolConfig {
    /// Config with a round cap generous enough for any `c` up to 0.99.
    pub fn new(c: f64, message_bits: usize, master_seed: u64, eve: EveStrategySpec) -> Self {
        ProtocolConfig { c, message_bits, master_seed, eve, max_rounds: default_max_rounds(message_bits) }
    }

    pub fn with_max_rounds(mut self, max_rounds: u64) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(0.0..=1.0).contains(&self.c) {
            return Err(ProtocolError::InvalidConfig(format!("c must lie in [0, 1], got {}", self.c)));
        }
        if self.message_bits == 0 {
            return Err(ProtocolError::InvalidConfig("message_bits must be at least 1".into()));
        }
        if self.max_rounds < self.message_bits as u64 {
            return Err(ProtocolError::InvalidConfig(format!(
                "max_rounds ({}) must be at least message_bits ({})",
                self.max_rounds, self.message_bits
            )));
        }
        Ok(())
    }
}

pub fn default_max_rounds(message_bits: usize) -> u64 {
    (message_bits as u64).saturating_mul(1000).max(10_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Message,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BobAction {
    EncodeI,
    #[serde(rename = "encode_iy")]
    EncodeIY,
    ControlSubstitute(StateLabel),
}

impl BobAction {
    /// The bit Bob encoded, for message rounds.
    pub fn encoded_bit(self) -> Option<u8> {
        match self {
            BobAction::EncodeI => Some(0),
            BobAction::EncodeIY => Some(1),
            BobAction::ControlSubstitute(_) => None,
        }
    }
}

/// Messages on the authenticated public channel, in the order they are sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PublicMessage {
    /// Alice confirms she received and measured the returning qubit.
    AliceReceipt,
    /// Bob reveals that the round was a control run and which state he sent.
    ControlAnnouncement { prepared: StateLabel },
    /// Alice reports a detection and stops the session.
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTranscript {
    pub round_index: u64,
    pub mode: Mode,
    pub alice_prep: StateLabel,
    pub bob_action: BobAction,
    pub eve_events: Vec<EveEvent>,
    pub alice_outcome: u8,
    pub alice_basis: BasisLabel,
    /// Control rounds only: Alice measured in the basis Bob prepared in.
    pub sifted: bool,
    pub detected: bool,
    pub decoded_bit: Option<u8>,
    pub eve_guess: Option<u8>,
    pub public_messages: Vec<PublicMessage>,
}

impl RoundTranscript {
    pub fn bob_bit(&self) -> Option<u8> {
        self.bob_action.encoded_bit()
    }

    /// True when a message round decoded to something other than Bob's bit.
    pub fn bit_error(&self) -> bool {
        matches!((self.bob_bit(), self.decoded_bit), (Some(sent), Some(got)) if sent != got)
    }

    pub fn eve_guessed_correctly(&self) -> bool {
        matches!((self.bob_bit(), self.eve_guess), (Some(sent), Some(guess)) if sent == guess)
    }
}

/// Random choices made before the qubit moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundPlan {
    pub alice_prep: StateLabel,
    pub mode: Mode,
    /// Used only in control mode.
    pub control_state: StateLabel,
}

impl RoundPlan {
    /// Alice picks `|0>` or `|φ0>` with probability ½ each; Bob picks control
    /// mode with probability `c` and, if so, one of the four BB84 states.
    pub fn draw<R: Rng + ?Sized>(c: f64, alice: &mut R, bob: &mut R) -> Self {
        let alice_prep = if alice.random::<f64>() < 0.5 { StateLabel::Z0 } else { StateLabel::X0 };
        let mode = if bob.random::<f64>() < c { Mode::Control } else { Mode::Message };
        let control_state = match mode {
            Mode::Control => StateLabel::ALL[bob.random_range(0..4)],
            Mode::Message => StateLabel::Z0,
        };
        RoundPlan { alice_prep, mode, control_state }
    }
}

/// One independent random stream per party for a single round.
pub struct RoundStreams {
    pub alice: Stream,
    pub bob: Stream,
    pub eve: Stream,
}

impl RoundStreams {
    pub fn derive(master_seed: u64, round_index: u64) -> Self {
        RoundStreams {
            alice: seed::stream(master_seed, round_index, Party::Alice),
            bob: seed::stream(master_seed, round_index, Party::Bob),
            eve: seed::stream(master_seed, round_index, Party::Eve),
        }
    }
}

/// Alice's decoding: 0 if she finds the state she prepared, 1 if she finds its partner.
pub fn decode(alice_prep: StateLabel, alice_outcome: u8) -> u8 {
    (alice_outcome ^ alice_prep.outcome()) & 1
}

/// Runs one round with every random choice drawn from `streams`.
pub fn run_round(
    config: &ProtocolConfig,
    round_index: u64,
    bob_pending_bit: u8,
    streams: &mut RoundStreams,
) -> RoundTranscript {
    let plan = RoundPlan::draw(config.c, &mut streams.alice, &mut streams.bob);
    run_planned_round(&config.eve, round_index, bob_pending_bit, plan, streams)
}

/// Runs one round with Alice's and Bob's choices fixed by `plan`.
/// Eve's randomness and all measurement outcomes still come from `streams`.
pub fn run_planned_round(
    eve: &EveStrategySpec,
    round_index: u64,
    bob_pending_bit: u8,
    plan: RoundPlan,
    streams: &mut RoundStreams,
) -> RoundTranscript {
    let mut memory = EveMemory::default();
    let mut eve_events = Vec::new();

    let outbound = prepare(plan.alice_prep);
    let at_bob = intervene(eve, Leg::AtoB, &outbound, &mut memory, round_index, &mut streams.eve);
    eve_events.extend(at_bob.events);

    let (bob_action, returning) = match plan.mode {
        Mode::Message => {
            let (action, op) = if bob_pending_bit & 1 == 0 {
                (BobAction::EncodeI, Operator::identity())
            } else {
                (BobAction::EncodeIY, Operator::i_sigma_y())
            };
            // Bob has nothing to encode if Eve swallowed the qubit; he sends vacuum back.
            let returning = at_bob
                .qubit
                .map(|q| apply(&op, &q).expect("protocol operators are unitary"));
            (action, returning)
        }
        // the incoming qubit is discarded either way
        Mode::Control => (BobAction::ControlSubstitute(plan.control_state), Some(prepare(plan.control_state))),
    };

    let at_alice = returning.map(|q| {
        let step = intervene(eve, Leg::BtoA, &q, &mut memory, round_index, &mut streams.eve);
        eve_events.extend(step.events);
        step.qubit
    });

    let eve_guess = match plan.mode {
        Mode::Message if eve.kind != EveKind::None => guess_bob_bit(eve, &memory, round_index).guessed_bob_bit,
        _ => None,
    };

    let alice_basis = plan.alice_prep.basis();
    let basis = BasisSpec::standard(alice_basis).expect("Alice prepares in Z or X");
    let alice_outcome = match at_alice.flatten() {
        Some(q) => qstate::measure(&q, &basis, &mut streams.alice).0,
        None => lost_qubit_click(&mut streams.alice),
    };

    let mut public_messages = vec![PublicMessage::AliceReceipt];
    let (sifted, detected, decoded_bit) = match plan.mode {
        Mode::Message => (false, false, Some(decode(plan.alice_prep, alice_outcome))),
        Mode::Control => {
            public_messages.push(PublicMessage::ControlAnnouncement { prepared: plan.control_state });
            let sifted = plan.control_state.basis() == alice_basis;
            let detected = sifted && alice_outcome != plan.control_state.outcome();
            if detected {
                public_messages.push(PublicMessage::Abort);
            }
            (sifted, detected, None)
        }
    };

    RoundTranscript {
        round_index,
        mode: plan.mode,
        alice_prep: plan.alice_prep,
        bob_action,
        eve_events,
        alice_outcome,
        alice_basis,
        sifted,
        detected,
        decoded_bit,
        eve_guess,
        public_messages,
    }
}

// An empty detector slot reads as a fair coin.
fn lost_qubit_click<R: Rng + ?Sized>(rng: &mut R) -> u8 {
    u8::from(rng.random::<f64>() >= 0.5)
}

/// Aggregated counters over one or many sessions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SessionStats {
    pub sessions: u64,
    pub rounds: u64,
    pub message_rounds: u64,
    pub control_rounds: u64,
    pub sifted_control_rounds: u64,
    pub aborts: u64,
    pub delivered_bits: u64,
    pub bit_errors: u64,
    pub eve_guesses: u64,
    pub eve_correct_guesses: u64,
    pub qubits_used: u64,
}

impl SessionStats {
    pub fn record_round(&mut self, t: &RoundTranscript) {
        self.rounds += 1;
        self.qubits_used += 1;
        match t.mode {
            Mode::Message => {
                self.message_rounds += 1;
                self.delivered_bits += 1;
                self.bit_errors += u64::from(t.bit_error());
                self.eve_guesses += u64::from(t.eve_guess.is_some());
                self.eve_correct_guesses += u64::from(t.eve_guessed_correctly());
            }
            Mode::Control => {
                self.control_rounds += 1;
                self.sifted_control_rounds += u64::from(t.sifted);
                self.aborts += u64::from(t.detected);
            }
        }
    }

    pub fn merge(&mut self, other: &SessionStats) {
        self.sessions += other.sessions;
        self.rounds += other.rounds;
        self.message_rounds += other.message_rounds;
        self.control_rounds += other.control_rounds;
        self.sifted_control_rounds += other.sifted_control_rounds;
        self.aborts += other.aborts;
        self.delivered_bits += other.delivered_bits;
        self.bit_errors += other.bit_errors;
        self.eve_guesses += other.eve_guesses;
        self.eve_correct_guesses += other.eve_correct_guesses;
        self.qubits_used += other.qubits_used;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionResult {
    pub transcripts: Vec<RoundTranscript>,
    pub aborted: bool,
    pub abort_round: Option<u64>,
    /// `(bob_bit, alice_decoded_bit)` for every message round.
    pub delivered_bits: Vec<(u8, u8)>,
    /// Travel qubits Alice prepared, one per round.
    pub qubits_used: u64,
}

impl SessionResult {
    pub fn stats(&self) -> SessionStats {
        let mut stats = SessionStats { sessions: 1, ..SessionStats::default() };
        for t in &self.transcripts {
            stats.record_round(t);
        }
        stats
    }

    pub fn completed(&self) -> bool {
        !self.aborted
    }

    pub fn alice_bits(&self) -> Vec<u8> {
        self.delivered_bits.iter().map(|&(_, a)| a).collect()
    }
}

/// Bob's message for a session, drawn from the session's source stream.
pub fn random_message(master_seed: u64, bits: usize) -> Vec<u8> {
    let mut rng = seed::stream(master_seed, 0, Party::BobSource);
    (0..bits).map(|_| u8::from(rng.random::<bool>())).collect()
}

/// Runs a full session sending a random `message_bits`-bit message.
pub fn run_session(config: &ProtocolConfig) -> Result<SessionResult, ProtocolError> {
    config.validate()?;
    let message = random_message(config.master_seed, config.message_bits);
    run_session_with_message(config, &message)
}

/// Runs rounds until `message` is delivered, Eve is detected, or the round cap is hit.
///
/// Control rounds consume no message bits; the k-th message round carries
/// `message[k]`. Round `i` draws from streams keyed by `(master_seed, i)`.
pub fn run_session_with_message(config: &ProtocolConfig, message: &[u8]) -> Result<SessionResult, ProtocolError> {
    let config = ProtocolConfig { message_bits: message.len(), ..config.clone() };
    config.validate()?;

    let mut transcripts = Vec::new();
    let mut delivered_bits = Vec::with_capacity(message.len());
    let mut abort_round = None;
    let mut round_index = 0u64;

    while delivered_bits.len() < message.len() {
        if round_index >= config.max_rounds {
            return Err(ProtocolError::MaxRoundsExceeded {
                max_rounds: config.max_rounds,
                delivered: delivered_bits.len(),
            });
        }
        let pending = message[delivered_bits.len()];
        let mut streams = RoundStreams::derive(config.master_seed, round_index);
        let transcript = run_round(&config, round_index, pending, &mut streams);
        if let Some(decoded) = transcript.decoded_bit {
            delivered_bits.push((pending, decoded));
        }
        let detected = transcript.detected;
        transcripts.push(transcript);
        if detected {
            abort_round = Some(round_index);
            break;
        }
        round_index += 1;
    }

    let qubits_used = transcripts.len() as u64;
    Ok(SessionResult {
        transcripts,
        aborted: abort_round.is_some(),
        abort_round,
        delivered_bits,
        qubits_used,
    })
}

/// The state that reaches Alice when nobody interferes, for checking passthrough.
pub fn undisturbed_return(plan: &RoundPlan, bob_bit: u8) -> StateVector {
    match plan.mode {
        Mode::Message => {
            let op = if bob_bit & 1 == 0 { Operator::identity() } else { Operator::i_sigma_y() };
            apply(&op, &prepare(plan.alice_prep)).expect("protocol operators are unitary")
        }
        Mode::Control => prepare(plan.control_state),
    }
}
