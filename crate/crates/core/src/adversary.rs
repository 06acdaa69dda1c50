//! Eavesdropping strategies on the two legs of the travel qubit's round trip.
//!
//! Eve sees the qubit once on its way from Alice to Bob (`AtoB`) and once on
//! the way back (`BtoA`). Each [`EveStrategySpec`] decides what she does on
//! each leg; [`intervene`] applies it and [`guess_bob_bit`] turns her
//! per-round observations into a guess of Bob's encoded bit.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::qstate::{self, breidbart_basis, BasisSpec, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EveKind {
    None,
    /// Measure and resend on the way to Bob only.
    #[serde(rename = "intercept_resend_ab")]
    InterceptResendAB,
    /// Measure and resend on the way back to Alice only.
    #[serde(rename = "intercept_resend_ba")]
    InterceptResendBA,
    /// Measure and resend on both legs, reusing the first leg's basis on the second.
    InterceptResendBoth,
    /// Leave the outbound qubit alone; measure the returning one.
    #[serde(rename = "measure_only_ba")]
    MeasureOnlyBA,
    /// Random-basis disturbance of the outbound qubit.
    #[serde(rename = "dos_ab")]
    DoSAB,
}

impl EveKind {
    pub const ALL: [EveKind; 6] = [
        EveKind::None,
        EveKind::InterceptResendAB,
        EveKind::InterceptResendBA,
        EveKind::InterceptResendBoth,
        EveKind::MeasureOnlyBA,
        EveKind::DoSAB,
    ];

    /// Policy used when the caller does not pick one.
    pub fn default_policy(self) -> BasisPolicy {
        match self {
            EveKind::MeasureOnlyBA => BasisPolicy::Breidbart,
            _ => BasisPolicy::RandomZX,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EveKind::None => "none",
            EveKind::InterceptResendAB => "intercept-ab",
            EveKind::InterceptResendBA => "intercept-ba",
            EveKind::InterceptResendBoth => "intercept-both",
            EveKind::MeasureOnlyBA => "measure-ba",
            EveKind::DoSAB => "dos-ab",
        }
    }

    fn uses_policy(self) -> bool {
        !matches!(self, EveKind::None | EveKind::DoSAB)
    }
}

impl FromStr for EveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                format!("unknown eavesdropper '{s}' (expected none|intercept-ab|intercept-ba|intercept-both|measure-ba|dos-ab)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisPolicy {
    FixedZ,
    FixedX,
    #[serde(rename = "random_zx")]
    RandomZX,
    Breidbart,
}

impl BasisPolicy {
    pub const ALL: [BasisPolicy; 4] =
        [BasisPolicy::FixedZ, BasisPolicy::FixedX, BasisPolicy::RandomZX, BasisPolicy::Breidbart];

    pub fn name(self) -> &'static str {
        match self {
            BasisPolicy::FixedZ => "z",
            BasisPolicy::FixedX => "x",
            BasisPolicy::RandomZX => "random-zx",
            BasisPolicy::Breidbart => "breidbart",
        }
    }

    /// The bases this policy can pick, with their probabilities.
    pub fn distribution(self) -> &'static [(EveBasis, f64)] {
        match self {
            BasisPolicy::FixedZ => &[(EveBasis::Z, 1.0)],
            BasisPolicy::FixedX => &[(EveBasis::X, 1.0)],
            BasisPolicy::RandomZX => &[(EveBasis::Z, 0.5), (EveBasis::X, 0.5)],
            BasisPolicy::Breidbart => &[(EveBasis::Breidbart, 1.0)],
        }
    }

    fn choose<R: Rng + ?Sized>(self, rng: &mut R) -> EveBasis {
        match self {
            BasisPolicy::FixedZ => EveBasis::Z,
            BasisPolicy::FixedX => EveBasis::X,
            BasisPolicy::RandomZX => {
                if rng.random::<f64>() < 0.5 {
                    EveBasis::Z
                } else {
                    EveBasis::X
                }
            }
            BasisPolicy::Breidbart => EveBasis::Breidbart,
        }
    }
}

impl FromStr for BasisPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BasisPolicy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown basis policy '{s}' (expected z|x|random-zx|breidbart)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct EveStrategySpec {
    pub kind: EveKind,
    pub basis_policy: BasisPolicy,
}

impl EveStrategySpec {
    pub const NONE: EveStrategySpec =
        EveStrategySpec { kind: EveKind::None, basis_policy: BasisPolicy::RandomZX };

    pub fn new(kind: EveKind, basis_policy: BasisPolicy) -> Self {
        EveStrategySpec { kind, basis_policy }
    }

    pub fn with_default_policy(kind: EveKind) -> Self {
        EveStrategySpec { kind, basis_policy: kind.default_policy() }
    }

    /// Stable identifier such as `intercept-ba/random-zx`, or just `none`.
    pub fn label(&self) -> String {
        if self.kind.uses_policy() {
            format!("{}/{}", self.kind.name(), self.basis_policy.name())
        } else {
            self.kind.name().to_owned()
        }
    }

    /// Whether this strategy touches the qubit on `leg`.
    pub fn acts_on(&self, leg: Leg) -> bool {
        match (self.kind, leg) {
            (EveKind::None, _) => false,
            (EveKind::InterceptResendAB | EveKind::DoSAB, Leg::AtoB) => true,
            (EveKind::InterceptResendAB | EveKind::DoSAB, Leg::BtoA) => false,
            (EveKind::InterceptResendBA | EveKind::MeasureOnlyBA, Leg::AtoB) => false,
            (EveKind::InterceptResendBA | EveKind::MeasureOnlyBA, Leg::BtoA) => true,
            (EveKind::InterceptResendBoth, _) => true,
        }
    }
}

impl Default for EveStrategySpec {
    fn default() -> Self {
        Self::NONE
    }
}

impl fmt::Display for EveStrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    #[serde(rename = "a_to_b")]
    AtoB,
    #[serde(rename = "b_to_a")]
    BtoA,
}

/// A basis Eve may measure in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EveBasis {
    Z,
    X,
    Breidbart,
}

impl EveBasis {
    pub fn spec(self) -> BasisSpec {
        match self {
            EveBasis::Z => BasisSpec::z(),
            EveBasis::X => BasisSpec::x(),
            EveBasis::Breidbart => breidbart_basis(),
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            EveBasis::Z => "z",
            EveBasis::X => "x",
            EveBasis::Breidbart => "b",
        }
    }
}

/// One eigenstate of an [`EveBasis`]; serializes as `z0`, `x1`, `b0`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Eigenstate {
    pub basis: EveBasis,
    pub outcome: u8,
}

impl Eigenstate {
    pub fn state(&self) -> StateVector {
        self.basis.spec().state(self.outcome)
    }
}

impl fmt::Display for Eigenstate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.basis.prefix(), self.outcome)
    }
}

impl Serialize for Eigenstate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EveAction {
    Measured { basis: EveBasis, outcome: u8 },
    Resent(Eigenstate),
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EveEvent {
    pub leg: Leg,
    pub action: EveAction,
    pub round_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EveGuess {
    pub round_index: u64,
    pub guessed_bob_bit: Option<u8>,
}

/// Eve's observations within a single round. Nothing carries across rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EveMemory {
    pub outbound: Option<Eigenstate>,
    pub inbound: Option<Eigenstate>,
}

/// Result of Eve acting on one leg.
#[derive(Debug, Clone, PartialEq)]
pub struct Intervention {
    /// `None` means the qubit never arrives. No shipped strategy blocks.
    pub qubit: Option<StateVector>,
    pub events: Vec<EveEvent>,
}

impl Intervention {
    fn passthrough(qubit: &StateVector) -> Self {
        Intervention { qubit: Some(*qubit), events: Vec::new() }
    }
}

/// Lets Eve act on `qubit` as it crosses `leg`.
///
/// All of Eve's randomness (basis choice and measurement outcome) comes from
/// `rng`, which should be her own per-round stream.
pub fn intervene<R: Rng + ?Sized>(
    spec: &EveStrategySpec,
    leg: Leg,
    qubit: &StateVector,
    memory: &mut EveMemory,
    round_index: u64,
    rng: &mut R,
) -> Intervention {
    if !spec.acts_on(leg) {
        return Intervention::passthrough(qubit);
    }
    let basis = match (spec.kind, leg) {
        (EveKind::DoSAB, _) => BasisPolicy::RandomZX.choose(rng),
        (EveKind::InterceptResendBoth, Leg::BtoA) => match memory.outbound {
            Some(prev) => prev.basis,
            None => spec.basis_policy.choose(rng),
        },
        _ => spec.basis_policy.choose(rng),
    };
    let (outcome, post) = qstate::measure(qubit, &basis.spec(), rng);
    let seen = Eigenstate { basis, outcome };
    match leg {
        Leg::AtoB => memory.outbound = Some(seen),
        Leg::BtoA => memory.inbound = Some(seen),
    }
    let mut events = vec![EveEvent {
        leg,
        action: EveAction::Measured { basis, outcome },
        round_index,
    }];
    if spec.kind != EveKind::MeasureOnlyBA {
        events.push(EveEvent { leg, action: EveAction::Resent(seen), round_index });
    }
    Intervention { qubit: Some(post), events }
}

/// Eve's guess of Bob's bit after a message round.
///
/// Measuring on both legs in the same basis reveals Bob's operation exactly,
/// since `iσ_y` maps every real state to its orthogonal partner. A single
/// measurement on the return leg guesses the bit whose mixed state lies
/// closer to the observed eigenstate on the Bloch sphere, which is the
/// Helstrom-optimal rule for the Breidbart basis.
pub fn guess_bob_bit(spec: &EveStrategySpec, memory: &EveMemory, round_index: u64) -> EveGuess {
    let guessed_bob_bit = match spec.kind {
        EveKind::InterceptResendBoth => match (memory.outbound, memory.inbound) {
            (Some(out), Some(back)) if out.basis == back.basis => Some(u8::from(out.outcome != back.outcome)),
            _ => None,
        },
        EveKind::MeasureOnlyBA => memory.inbound.map(closer_to_flipped),
        _ => None,
    };
    EveGuess { round_index, guessed_bob_bit }
}

// Bob's bit 0 leaves Alice's mixture at Bloch (½, 0, ½); bit 1 sends it to (-½, 0, -½).
fn closer_to_flipped(seen: Eigenstate) -> u8 {
    let [x, _, z] = seen.state().bloch();
    u8::from(x + z < 0.0)
}
