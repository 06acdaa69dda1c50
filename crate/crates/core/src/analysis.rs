//! Security formulas, exact branch enumeration and Monte Carlo estimators.
//!
//! The closed forms give the probability that Eve reads a message bit
//! without tripping a control round. [`enumerate_detection`] computes the
//! per-control-round detection probability `d` exactly by walking every
//! branch of a round, and the estimators check both against simulation.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::{guess_bob_bit, Eigenstate, EveKind, EveMemory, EveStrategySpec, Leg};
use crate::fmt::sig10;
use crate::protocol::{run_round, run_session, ProtocolConfig, ProtocolError, RoundStreams, SessionStats};
use crate::qstate::{apply, outcome_probability, prepare, BasisSpec, Operator, StateLabel, StateVector};
use crate::seed::{self, hash64, Party};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate parameters c = 1, d = 0: no message round ever happens")]
    DegenerateParams,
    #[error("strategy {0} has no finite branch tree")]
    UnsupportedStrategy(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecurityParams {
    /// Control-mode probability.
    pub c: f64,
    /// Unconditional detection probability per control round.
    pub d: f64,
    /// Message bits.
    pub n: u64,
    /// Bits Eve gains per eavesdropped message round.
    pub i0: f64,
}

impl SecurityParams {
    pub fn new(c: f64, d: f64, n: u64) -> Self {
        SecurityParams { c, d, n, i0: 1.0 }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(0.0..=1.0).contains(&self.c) {
            return Err(AnalysisError::InvalidParams(format!("c must lie in [0, 1], got {}", self.c)));
        }
        if !(0.0..=1.0).contains(&self.d) {
            return Err(AnalysisError::InvalidParams(format!("d must lie in [0, 1], got {}", self.d)));
        }
        if self.n == 0 {
            return Err(AnalysisError::InvalidParams("n must be at least 1".into()));
        }
        if !(self.i0 > 0.0 && self.i0.is_finite()) {
            return Err(AnalysisError::InvalidParams(format!("i0 must be positive, got {}", self.i0)));
        }
        if self.c == 1.0 && self.d == 0.0 {
            return Err(AnalysisError::DegenerateParams);
        }
        Ok(())
    }
}

/// Probability that Eve eavesdrops one message round before any control
/// round catches her: `(1 - c) / (1 - c(1 - d))`.
pub fn survival_one(params: &SecurityParams) -> Result<f64, AnalysisError> {
    params.validate()?;
    let SecurityParams { c, d, .. } = *params;
    Ok((1.0 - c) / (1.0 - c * (1.0 - d)))
}

/// Survival over a whole message: `s^(I/I0)` with `I = n·I0`, i.e. `s^n`.
pub fn survival_n(params: &SecurityParams) -> Result<f64, AnalysisError> {
    let s = survival_one(params)?;
    let information = params.n as f64 * params.i0;
    Ok(s.powf(information / params.i0))
}

/// Fraction of rounds that carry message bits.
pub fn effective_rate(c: f64) -> f64 {
    1.0 - c
}

/// Qubit budgets for sending `n` bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostComparison {
    /// Expected round trips here, `n / (1 - c)`.
    pub this_protocol_qubits: f64,
    /// The customary BB84 figure of about `4n` qubits.
    pub bb84_qubits: f64,
}

pub fn bb84_cost_comparison(n: u64, c: f64) -> CostComparison {
    let n = n as f64;
    CostComparison { this_protocol_qubits: n / effective_rate(c), bb84_qubits: 4.0 * n }
}

/// A weighted branch of Eve's action on one leg.
struct Branch {
    weight: f64,
    state: StateVector,
    memory: EveMemory,
}

// Every outcome Eve's measurement on `leg` can produce, with Born-rule weights.
fn leg_branches(spec: &EveStrategySpec, leg: Leg, state: StateVector, memory: EveMemory) -> Vec<Branch> {
    if !spec.acts_on(leg) {
        return vec![Branch { weight: 1.0, state, memory }];
    }
    let bases: Vec<_> = match (spec.kind, leg, memory.outbound) {
        (EveKind::DoSAB, _, _) => crate::adversary::BasisPolicy::RandomZX.distribution().to_vec(),
        (EveKind::InterceptResendBoth, Leg::BtoA, Some(prev)) => vec![(prev.basis, 1.0)],
        _ => spec.basis_policy.distribution().to_vec(),
    };
    let mut out = Vec::with_capacity(2 * bases.len());
    for (basis, basis_weight) in bases {
        let spec_basis = basis.spec();
        for outcome in 0..2u8 {
            let weight = basis_weight * outcome_probability(&state, &spec_basis, outcome);
            if weight == 0.0 {
                continue;
            }
            let seen = Eigenstate { basis, outcome };
            let mut memory = memory;
            match leg {
                Leg::AtoB => memory.outbound = Some(seen),
                Leg::BtoA => memory.inbound = Some(seen),
            }
            out.push(Branch { weight, state: seen.state(), memory });
        }
    }
    out
}

const ALICE_PREPS: [StateLabel; 2] = [StateLabel::Z0, StateLabel::X0];

/// Exact probability that a control round ends in detection.
///
/// Sums over Alice's preparation (½ each), Eve's outbound branches, Bob's
/// four substitute states (¼ each), Eve's return branches and Alice's
/// measurement outcome.
pub fn enumerate_detection(spec: &EveStrategySpec) -> Result<f64, AnalysisError> {
    let mut total = 0.0;
    for alice_prep in ALICE_PREPS {
        let alice_basis = BasisSpec::standard(alice_prep.basis()).expect("Z or X");
        for out in leg_branches(spec, Leg::AtoB, prepare(alice_prep), EveMemory::default()) {
            for bob_state in StateLabel::ALL {
                if bob_state.basis() != alice_prep.basis() {
                    continue;
                }
                for back in leg_branches(spec, Leg::BtoA, prepare(bob_state), out.memory) {
                    let wrong = outcome_probability(&back.state, &alice_basis, bob_state.partner().outcome());
                    total += 0.5 * out.weight * 0.25 * back.weight * wrong;
                }
            }
        }
    }
    Ok(total)
}

/// Exact per-message-round odds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MessageRoundOdds {
    /// Probability Alice decodes the wrong bit.
    pub bit_error: f64,
    /// Probability Eve produces a guess at all.
    pub guess_rate: f64,
    /// Probability her guess is right, given that she makes one.
    pub guess_accuracy: Option<f64>,
}

/// Exact message-round statistics for a uniformly random message bit.
pub fn enumerate_message_round(spec: &EveStrategySpec) -> Result<MessageRoundOdds, AnalysisError> {
    let mut bit_error = 0.0;
    let mut guessed = 0.0;
    let mut correct = 0.0;
    for alice_prep in ALICE_PREPS {
        let alice_basis = BasisSpec::standard(alice_prep.basis()).expect("Z or X");
        for bit in 0..2u8 {
            let op = if bit == 0 { Operator::identity() } else { Operator::i_sigma_y() };
            for out in leg_branches(spec, Leg::AtoB, prepare(alice_prep), EveMemory::default()) {
                let encoded = apply(&op, &out.state).expect("protocol operators are unitary");
                for back in leg_branches(spec, Leg::BtoA, encoded, out.memory) {
                    let weight = 0.5 * 0.5 * out.weight * back.weight;
                    // Alice decodes `bit` when she sees the prepared state shifted by `bit`
                    let wrong_outcome = alice_prep.outcome() ^ bit ^ 1;
                    bit_error += weight * outcome_probability(&back.state, &alice_basis, wrong_outcome);
                    if spec.kind == EveKind::None {
                        continue;
                    }
                    if let Some(guess) = guess_bob_bit(spec, &back.memory, 0).guessed_bob_bit {
                        guessed += weight;
                        if guess == bit {
                            correct += weight;
                        }
                    }
                }
            }
        }
    }
    Ok(MessageRoundOdds {
        bit_error,
        guess_rate: guessed,
        guess_accuracy: (guessed > 0.0).then(|| correct / guessed),
    })
}

/// A binomial proportion with its 95% normal-approximation half width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub half_width_95: f64,
    pub samples: u64,
}

impl EstimateWithCI {
    pub fn from_counts(successes: u64, samples: u64) -> Self {
        assert!(samples >= 1, "an estimate needs at least one sample");
        let point = successes as f64 / samples as f64;
        EstimateWithCI { point, half_width_95: Z95 * binomial_sigma(point, samples), samples }
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.point - value).abs() <= self.half_width_95
    }

    /// Whether the point lies within `k` binomial standard deviations of `p`,
    /// with the deviation computed under `p`.
    pub fn within_sigmas_of(&self, p: f64, k: f64) -> bool {
        (self.point - p).abs() <= k * binomial_sigma(p, self.samples)
    }

    /// Whether the point falls in the 95% binomial interval centred on `p`.
    /// Unlike [`contains`](Self::contains) this stays meaningful when every
    /// sample agrees and the estimate's own interval collapses to a point.
    pub fn within_ci_of(&self, p: f64) -> bool {
        self.within_sigmas_of(p, Z95)
    }
}

pub fn binomial_sigma(p: f64, samples: u64) -> f64 {
    (p * (1.0 - p) / samples as f64).sqrt()
}

/// Runs `rounds` independent rounds with control probability `c`; round `i`
/// uses streams keyed by `(master_seed, i)` and a message bit drawn from
/// Bob's source stream for that index.
pub fn simulate_rounds(eve: &EveStrategySpec, c: f64, rounds: u64, master_seed: u64) -> SessionStats {
    let config = ProtocolConfig::new(c, 1, master_seed, *eve);
    (0..rounds)
        .into_par_iter()
        .fold(SessionStats::default, |mut stats, i| {
            let bit = u8::from(rand::Rng::random::<bool>(&mut seed::stream(master_seed, i, Party::BobSource)));
            let mut streams = RoundStreams::derive(master_seed, i);
            stats.record_round(&run_round(&config, i, bit, &mut streams));
            stats
        })
        .reduce(SessionStats::default, |mut a, b| {
            a.merge(&b);
            a
        })
}

/// Monte Carlo detection frequency over `rounds` forced control rounds.
pub fn estimate_detection(eve: &EveStrategySpec, rounds: u64, master_seed: u64) -> EstimateWithCI {
    let stats = simulate_rounds(eve, 1.0, rounds, master_seed);
    EstimateWithCI::from_counts(stats.aborts, stats.control_rounds)
}

fn session_seed(master_seed: u64, trial: u64) -> u64 {
    hash64(master_seed, trial, Party::Trial as u64)
}

/// Fraction of independent sessions, each sending `config.message_bits`
/// bits, that finish without detection.
pub fn estimate_session_survival(config: &ProtocolConfig, trials: u64) -> Result<EstimateWithCI, AnalysisError> {
    if trials < 1000 {
        return Err(AnalysisError::InvalidParams(format!("need at least 1000 trials, got {trials}")));
    }
    if config.c >= 1.0 {
        return Err(AnalysisError::DegenerateParams);
    }
    config.validate()?;
    let survived = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let cfg = ProtocolConfig { master_seed: session_seed(config.master_seed, trial), ..config.clone() };
            run_session(&cfg).map(|r| u64::from(r.completed()))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(EstimateWithCI::from_counts(survived, trials))
}

/// Single-bit survival: the simulated counterpart of [`survival_one`].
pub fn estimate_survival(config: &ProtocolConfig, trials: u64) -> Result<EstimateWithCI, AnalysisError> {
    estimate_session_survival(&ProtocolConfig { message_bits: 1, ..config.clone() }, trials)
}

/// One `(c, strategy)` cell of a survival sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub d_exact: f64,
    pub strategy: String,
    pub survival_formula: f64,
    pub survival_mc: f64,
    pub ci95: f64,
    pub trials: u64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "c,d_exact,strategy,survival_formula,survival_mc,ci95,trials";

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            sig10(self.c),
            sig10(self.d_exact),
            self.strategy,
            sig10(self.survival_formula),
            sig10(self.survival_mc),
            sig10(self.ci95),
            self.trials
        )
    }

    /// Copy with every float pinned to 10 significant digits.
    pub fn pinned(&self) -> SweepRow {
        SweepRow {
            c: sig10(self.c),
            d_exact: sig10(self.d_exact),
            survival_formula: sig10(self.survival_formula),
            survival_mc: sig10(self.survival_mc),
            ci95: sig10(self.ci95),
            ..self.clone()
        }
    }
}

/// Survival sweep over every `(c, strategy)` pair, in row-major order.
/// Cells run in parallel; output does not depend on scheduling.
pub fn sweep(
    cs: &[f64],
    strategies: &[EveStrategySpec],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<SweepRow>, AnalysisError> {
    let cells: Vec<(f64, EveStrategySpec)> =
        cs.iter().flat_map(|&c| strategies.iter().map(move |&s| (c, s))).collect();
    cells
        .into_par_iter()
        .map(|(c, eve)| {
            let d = enumerate_detection(&eve)?;
            let formula = survival_one(&SecurityParams::new(c, d, 1))?;
            let mc = estimate_survival(&ProtocolConfig::new(c, 1, master_seed, eve), trials)?;
            Ok(SweepRow {
                c,
                d_exact: d,
                strategy: eve.label(),
                survival_formula: formula,
                survival_mc: mc.point,
                ci95: mc.half_width_95,
                trials,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::BasisPolicy;
    use std::f64::consts::FRAC_1_SQRT_2;

    const EXACT: f64 = 1e-12;

    fn ir(kind: EveKind, policy: BasisPolicy) -> EveStrategySpec {
        EveStrategySpec::new(kind, policy)
    }

    #[test]
    fn survival_one_values() {
        for d in [0.0, 0.3, 1.0] {
            assert_eq!(survival_one(&SecurityParams::new(0.0, d, 1)).unwrap(), 1.0);
        }
        assert!((survival_one(&SecurityParams::new(0.5, 0.5, 1)).unwrap() - 2.0 / 3.0).abs() < EXACT);
        assert!((survival_one(&SecurityParams::new(0.5, 1.0, 1)).unwrap() - 0.5).abs() < EXACT);
        assert_eq!(survival_one(&SecurityParams::new(1.0, 0.0, 1)), Err(AnalysisError::DegenerateParams));
        assert_eq!(survival_one(&SecurityParams::new(1.0, 0.5, 1)).unwrap(), 0.0);
        assert!(matches!(
            survival_one(&SecurityParams::new(1.2, 0.5, 1)),
            Err(AnalysisError::InvalidParams(_))
        ));
        assert!(matches!(
            survival_one(&SecurityParams::new(0.2, -0.5, 1)),
            Err(AnalysisError::InvalidParams(_))
        ));
    }

    #[test]
    fn survival_n_values() {
        assert!((survival_n(&SecurityParams::new(0.5, 0.5, 1)).unwrap() - 2.0 / 3.0).abs() < EXACT);
        assert_eq!(survival_n(&SecurityParams::new(0.0, 0.7, 100)).unwrap(), 1.0);
        let s = survival_one(&SecurityParams::new(0.3, 0.2, 1)).unwrap();
        let n = (1e-6f64.ln() / s.ln()).ceil() as u64;
        assert!(survival_n(&SecurityParams::new(0.3, 0.2, n)).unwrap() < 1e-6);
        assert!(survival_n(&SecurityParams::new(0.3, 0.2, n - 1)).unwrap() >= 1e-6);
        let mut i0 = SecurityParams::new(0.5, 0.5, 3);
        i0.i0 = 2.5;
        assert!((survival_n(&i0).unwrap() - (2.0f64 / 3.0).powi(3)).abs() < EXACT);
        i0.i0 = 0.0;
        assert!(survival_n(&i0).is_err());
        assert!(survival_n(&SecurityParams::new(0.5, 0.5, 0)).is_err());
    }

    #[test]
    fn survival_is_strictly_decreasing_in_c_and_d() {
        let grid: Vec<f64> = (1..20).map(|i| f64::from(i) / 20.0).collect();
        for &d in &grid {
            for w in grid.windows(2) {
                let a = survival_one(&SecurityParams::new(w[0], d, 1)).unwrap();
                let b = survival_one(&SecurityParams::new(w[1], d, 1)).unwrap();
                assert!(b < a, "c: {} -> {} at d = {d}", w[0], w[1]);
            }
        }
        for &c in &grid {
            for w in grid.windows(2) {
                let a = survival_one(&SecurityParams::new(c, w[0], 1)).unwrap();
                let b = survival_one(&SecurityParams::new(c, w[1], 1)).unwrap();
                assert!(b < a, "d: {} -> {} at c = {c}", w[0], w[1]);
            }
        }
        for n in 1..50 {
            let p = SecurityParams::new(0.4, 0.1, n);
            let q = SecurityParams::new(0.4, 0.1, n + 1);
            assert!(survival_n(&q).unwrap() < survival_n(&p).unwrap());
        }
    }

    #[test]
    fn rates_and_costs() {
        assert_eq!(effective_rate(0.0), 1.0);
        assert_eq!(effective_rate(0.25), 0.75);
        assert_eq!(effective_rate(1.0), 0.0);
        let cost = |n, c| {
            let r = bb84_cost_comparison(n, c);
            (r.this_protocol_qubits, r.bb84_qubits)
        };
        assert_eq!(cost(100, 0.0), (100.0, 400.0));
        assert_eq!(cost(100, 0.5), (200.0, 400.0));
        assert_eq!(cost(1, 0.75), (4.0, 4.0));
    }

    // Hand-derived detection values: ½ sift × P(Eve in the wrong basis) × ½
    // flip for Z/X intercept-resend, and ½ × (1 - cos⁴ - sin⁴ of π/8) = ½ × ¼
    // for the Breidbart basis.
    #[test]
    fn detection_enumeration() {
        let d = |spec| enumerate_detection(&spec).unwrap();
        assert_eq!(d(EveStrategySpec::NONE), 0.0);
        assert_eq!(d(EveStrategySpec::with_default_policy(EveKind::DoSAB)), 0.0);
        assert_eq!(d(ir(EveKind::InterceptResendAB, BasisPolicy::RandomZX)), 0.0);
        for kind in [EveKind::InterceptResendBA, EveKind::InterceptResendBoth] {
            for policy in [BasisPolicy::RandomZX, BasisPolicy::FixedZ, BasisPolicy::FixedX, BasisPolicy::Breidbart] {
                assert!((d(ir(kind, policy)) - 0.125).abs() < EXACT, "{kind:?}/{policy:?}");
            }
        }
        for policy in BasisPolicy::ALL {
            assert!((d(ir(EveKind::MeasureOnlyBA, policy)) - 0.125).abs() < EXACT);
        }
    }

    #[test]
    fn message_round_enumeration() {
        let m = |spec| enumerate_message_round(&spec).unwrap();
        let none = m(EveStrategySpec::NONE);
        assert_eq!(none.bit_error, 0.0);
        assert_eq!(none.guess_accuracy, None);

        let both = m(ir(EveKind::InterceptResendBoth, BasisPolicy::RandomZX));
        assert!((both.guess_accuracy.unwrap() - 1.0).abs() < EXACT);
        assert!((both.guess_rate - 1.0).abs() < EXACT);
        // wrong basis on the way out: Alice reads a coin flip; the return leg
        // reuses the same basis so it adds no further error
        assert!((both.bit_error - 0.25).abs() < EXACT);

        let helstrom = 0.5 * (1.0 + FRAC_1_SQRT_2);
        let mo = m(EveStrategySpec::with_default_policy(EveKind::MeasureOnlyBA));
        assert!((mo.guess_accuracy.unwrap() - helstrom).abs() < EXACT);

        let dos = m(EveStrategySpec::with_default_policy(EveKind::DoSAB));
        assert!((dos.bit_error - 0.25).abs() < EXACT);
        assert_eq!(dos.guess_accuracy, None);

        let ba = m(ir(EveKind::InterceptResendBA, BasisPolicy::RandomZX));
        assert!((ba.bit_error - 0.25).abs() < EXACT);
    }

    #[test]
    fn estimate_ci() {
        let e = EstimateWithCI::from_counts(500, 1000);
        assert_eq!(e.point, 0.5);
        assert!((e.half_width_95 - Z95 * (0.25f64 / 1000.0).sqrt()).abs() < EXACT);
        assert!(e.contains(0.52) && !e.contains(0.54));
        assert!(e.within_sigmas_of(0.5, 0.0));
        assert_eq!(EstimateWithCI::from_counts(0, 10).half_width_95, 0.0);
    }

    #[test]
    fn estimate_survival_preconditions() {
        let cfg = ProtocolConfig::new(0.5, 1, 0, EveStrategySpec::NONE);
        assert!(matches!(estimate_survival(&cfg, 10), Err(AnalysisError::InvalidParams(_))));
        let cfg = ProtocolConfig::new(1.0, 1, 0, EveStrategySpec::NONE);
        assert_eq!(estimate_survival(&cfg, 1000), Err(AnalysisError::DegenerateParams));
    }

    #[test]
    fn no_eve_always_survives() {
        for c in [0.0, 0.3, 0.9] {
            let cfg = ProtocolConfig::new(c, 1, 17, EveStrategySpec::NONE);
            assert_eq!(estimate_survival(&cfg, 1000).unwrap().point, 1.0);
        }
    }

    #[test]
    fn survival_estimate_tracks_formula() {
        let eve = ir(EveKind::InterceptResendBA, BasisPolicy::RandomZX);
        let d = enumerate_detection(&eve).unwrap();
        for (c, expected) in [(0.5, 0.8888888889), (0.25, 0.96)] {
            let formula = survival_one(&SecurityParams::new(c, d, 1)).unwrap();
            assert!((formula - expected).abs() < 1e-9);
            let est = estimate_survival(&ProtocolConfig::new(c, 1, 3, eve), 20_000).unwrap();
            assert!(est.within_sigmas_of(formula, 4.0), "c = {c}: {est:?} vs {formula}");
        }
    }

    #[test]
    fn simulate_rounds_is_schedule_independent() {
        let eve = ir(EveKind::InterceptResendBoth, BasisPolicy::RandomZX);
        let a = simulate_rounds(&eve, 0.3, 20_000, 5);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_rounds(&eve, 0.3, 20_000, 5));
        assert_eq!(a, b);
        assert_eq!(a.rounds, 20_000);
    }

    #[test]
    fn sweep_rows_and_csv() {
        let rows = sweep(&[0.0, 0.5], &[EveStrategySpec::NONE], 1000, 1).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.survival_mc == 1.0 && r.survival_formula == 1.0));
        assert_eq!(rows[1].to_csv_line(), "0.5,0,none,1,1,0,1000");
        assert!(sweep(&[1.0], &[EveStrategySpec::NONE], 1000, 1).is_err());
    }
}
