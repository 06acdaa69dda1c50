//! Reduced-size end-to-end checks, for running against a release build.
//!
//! Each check compares the implementation with an independent expectation:
//! hard-coded amplitudes, exact enumeration, or the closed-form formulas.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::adversary::{BasisPolicy, EveKind, EveStrategySpec};
use crate::analysis::{
    enumerate_detection, estimate_detection, estimate_session_survival, estimate_survival, simulate_rounds,
    survival_one, sweep, SecurityParams,
};
use crate::keyxfer::{privacy_amplify, run_key_transfer, BitString, KeySession, KeyStatus};
use crate::protocol::{run_session, ProtocolConfig};
use crate::qstate::{apply, inner_product, prepare, Operator, StateLabel, StateVector, TOLERANCE};
use crate::seed::{self, Party};

/// Statistical checks need at least this many samples to be meaningful.
pub const MIN_STATISTICAL_TRIALS: u64 = 10_000;
pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// `None` when the check was skipped.
    pub passed: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub trials: u64,
    pub warnings: Vec<String>,
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            let status = match check.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "SKIP",
            };
            out.push_str(&format!("{status}  {:<28} {}\n", check.name, check.detail));
        }
        out
    }
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed: Some(passed), detail }
}

fn skipped(name: &'static str) -> CheckOutcome {
    CheckOutcome { name, passed: None, detail: "skipped: too few trials".into() }
}

/// Runs every check with `trials` samples for the statistical ones.
pub fn run(trials: u64, master_seed: u64) -> SelftestReport {
    let statistical = trials >= MIN_STATISTICAL_TRIALS;
    let mut warnings = Vec::new();
    if !statistical {
        warnings.push(format!(
            "--trials {trials} is below the minimum of {MIN_STATISTICAL_TRIALS}; statistical checks are skipped"
        ));
    }
    let mut checks = vec![encoding_algebra(), unitarity(master_seed), no_eve_soundness(trials, master_seed)];
    if statistical {
        checks.push(detection_agreement(trials, master_seed));
        checks.push(survival_formula(trials, master_seed));
        checks.push(exponential_decay(trials, master_seed));
        checks.push(eve_information(trials, master_seed));
        checks.push(dos_demonstration(trials, master_seed));
    } else {
        for name in ["detection oracle agreement", "survival formula", "exponential decay", "eve information", "dos demonstration"] {
            checks.push(skipped(name));
        }
    }
    checks.push(key_transfer(master_seed));
    checks.push(determinism(master_seed));
    SelftestReport { trials, warnings, checks }
}

fn encoding_algebra() -> CheckOutcome {
    let h = FRAC_1_SQRT_2;
    let y = Operator::i_sigma_y();
    let real = |a0: f64, a1: f64| StateVector::new(Complex64::new(a0, 0.0), Complex64::new(a1, 0.0)).unwrap();
    let cases = [
        (StateLabel::Z0, real(0.0, -1.0)),
        (StateLabel::Z1, real(1.0, 0.0)),
        (StateLabel::X0, real(h, -h)),
        (StateLabel::X1, real(-h, -h)),
    ];
    let failures: Vec<String> = cases
        .iter()
        .filter(|(label, expected)| !apply(&y, &prepare(*label)).unwrap().approx_eq(expected, TOLERANCE))
        .map(|(label, _)| label.to_string())
        .collect();
    outcome(
        "encoding algebra",
        failures.is_empty(),
        if failures.is_empty() { "iσ_y maps all four states as expected".into() } else { format!("wrong image of {}", failures.join(", ")) },
    )
}

fn unitarity(master_seed: u64) -> CheckOutcome {
    let mut rng = seed::stream(master_seed, 0, Party::Trial);
    let mut random_state = || {
        let parts: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() - 0.5);
        StateVector::normalized(Complex64::new(parts[0], parts[1]), Complex64::new(parts[2], parts[3])).unwrap()
    };
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b) = (random_state(), random_state());
        let before = inner_product(&a, &b);
        for op in [Operator::identity(), Operator::i_sigma_y()] {
            let after = inner_product(&apply(&op, &a).unwrap(), &apply(&op, &b).unwrap());
            worst = worst.max((after - before).norm());
        }
    }
    outcome("unitarity", worst <= TOLERANCE, format!("max inner-product drift {worst:.1e} over 1000 pairs"))
}

fn no_eve_soundness(trials: u64, master_seed: u64) -> CheckOutcome {
    let sessions = (trials / 10).clamp(100, 10_000);
    let mut aborts = 0u64;
    let mut errors = 0u64;
    for i in 0..sessions {
        let config = ProtocolConfig::new(0.3, 32, seed::hash64(master_seed, i, 1), EveStrategySpec::NONE);
        match run_session(&config) {
            Ok(r) => {
                aborts += u64::from(r.aborted);
                errors += r.delivered_bits.iter().filter(|(b, a)| a != b).count() as u64;
            }
            Err(e) => return outcome("no-eve soundness", false, e.to_string()),
        }
    }
    outcome(
        "no-eve soundness",
        aborts == 0 && errors == 0,
        format!("{sessions} sessions: {aborts} aborts, {errors} bit errors"),
    )
}

fn attacking_strategies() -> [EveStrategySpec; 4] {
    [
        EveStrategySpec::new(EveKind::InterceptResendBA, BasisPolicy::RandomZX),
        EveStrategySpec::new(EveKind::InterceptResendBoth, BasisPolicy::RandomZX),
        EveStrategySpec::new(EveKind::MeasureOnlyBA, BasisPolicy::Breidbart),
        EveStrategySpec::new(EveKind::InterceptResendBA, BasisPolicy::FixedZ),
    ]
}

fn detection_agreement(trials: u64, master_seed: u64) -> CheckOutcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for eve in attacking_strategies() {
        let exact = enumerate_detection(&eve).unwrap_or(f64::NAN);
        // every shipped attack disturbs half the sifted rounds it touches in the wrong basis
        let hand = 0.125;
        let est = estimate_detection(&eve, trials, master_seed);
        let agrees = (exact - hand).abs() <= TOLERANCE && est.within_sigmas_of(exact, 4.0);
        ok &= agrees;
        parts.push(format!("{}: {:.5} vs {exact:.5}", eve.label(), est.point));
    }
    outcome("detection oracle agreement", ok, parts.join("; "))
}

fn survival_formula(trials: u64, master_seed: u64) -> CheckOutcome {
    let eve = EveStrategySpec::new(EveKind::InterceptResendBA, BasisPolicy::RandomZX);
    let d = enumerate_detection(&eve).unwrap_or(f64::NAN);
    let mut ok = true;
    let mut parts = Vec::new();
    for c in [0.1, 0.25, 0.5, 0.75] {
        let formula = survival_one(&SecurityParams::new(c, d, 1)).unwrap_or(f64::NAN);
        match estimate_survival(&ProtocolConfig::new(c, 1, master_seed, eve), trials) {
            Ok(est) => {
                ok &= est.within_sigmas_of(formula, 4.0);
                parts.push(format!("c={c}: {:.4} vs {formula:.4}", est.point));
            }
            Err(e) => return outcome("survival formula", false, e.to_string()),
        }
    }
    outcome("survival formula", ok, parts.join("; "))
}

fn exponential_decay(trials: u64, master_seed: u64) -> CheckOutcome {
    let eve = EveStrategySpec::new(EveKind::InterceptResendBA, BasisPolicy::RandomZX);
    let s = survival_one(&SecurityParams::new(0.5, enumerate_detection(&eve).unwrap_or(f64::NAN), 1)).unwrap_or(f64::NAN);
    let sessions = (trials / 10).max(MIN_STATISTICAL_TRIALS);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [1usize, 5, 20] {
        match estimate_session_survival(&ProtocolConfig::new(0.5, n, master_seed, eve), sessions) {
            Ok(est) => {
                let expected = s.powi(n as i32);
                ok &= est.within_sigmas_of(expected, 4.0);
                parts.push(format!("n={n}: {:.4} vs {expected:.4}", est.point));
            }
            Err(e) => return outcome("exponential decay", false, e.to_string()),
        }
    }
    outcome("exponential decay", ok, parts.join("; "))
}

fn eve_information(trials: u64, master_seed: u64) -> CheckOutcome {
    let both = simulate_rounds(&EveStrategySpec::new(EveKind::InterceptResendBoth, BasisPolicy::RandomZX), 0.0, trials, master_seed);
    let measure = simulate_rounds(&EveStrategySpec::new(EveKind::MeasureOnlyBA, BasisPolicy::Breidbart), 0.0, trials, master_seed);
    let helstrom = 0.5 * (1.0 + FRAC_1_SQRT_2);
    let accuracy = measure.eve_correct_guesses as f64 / measure.eve_guesses.max(1) as f64;
    let sigma = (helstrom * (1.0 - helstrom) / trials as f64).sqrt();
    let ok = both.eve_correct_guesses == both.delivered_bits && (accuracy - helstrom).abs() <= 4.0 * sigma;
    outcome(
        "eve information",
        ok,
        format!(
            "intercept-both {}/{} correct; measure-ba accuracy {accuracy:.4} vs {helstrom:.4}",
            both.eve_correct_guesses, both.delivered_bits
        ),
    )
}

fn dos_demonstration(trials: u64, master_seed: u64) -> CheckOutcome {
    let dos = EveStrategySpec::with_default_policy(EveKind::DoSAB);
    let control = simulate_rounds(&dos, 1.0, trials, master_seed);
    let message = simulate_rounds(&dos, 0.0, trials, master_seed);
    let qber = message.bit_errors as f64 / message.delivered_bits as f64;
    let sigma = (0.25 * 0.75 / trials as f64).sqrt();
    outcome(
        "dos demonstration",
        control.aborts == 0 && (qber - 0.25).abs() <= 4.0 * sigma,
        format!("{} detections in {} control rounds; message error rate {qber:.4}", control.aborts, control.control_rounds),
    )
}

fn key_transfer(master_seed: u64) -> CheckOutcome {
    let session = KeySession { raw_bits: 128, final_bits: 64, toeplitz_seed: master_seed };
    let mut mismatched = 0;
    for i in 0..100 {
        let config = ProtocolConfig::new(0.3, 128, seed::hash64(master_seed, i, 2), EveStrategySpec::NONE);
        match run_key_transfer(&config, &session) {
            Ok(out) if out.status == KeyStatus::Established && out.keys_match() => {}
            _ => mismatched += 1,
        }
    }
    let mut rng = seed::stream(master_seed, 1, Party::Trial);
    let nonlinear = (0..1000)
        .filter(|_| {
            let a = BitString::random(128, &mut rng);
            let b = BitString::random(128, &mut rng);
            let seed = rng.random();
            let lhs = privacy_amplify(&(&a ^ &b), seed, 64).ok();
            let rhs = match (privacy_amplify(&a, seed, 64), privacy_amplify(&b, seed, 64)) {
                (Ok(x), Ok(y)) => Some(&x ^ &y),
                _ => None,
            };
            lhs.is_none() || lhs != rhs
        })
        .count();
    outcome(
        "key transfer",
        mismatched == 0 && nonlinear == 0,
        format!("{mismatched}/100 ideal sessions failed; {nonlinear}/1000 linearity violations"),
    )
}

fn determinism(master_seed: u64) -> CheckOutcome {
    let strategies = [EveStrategySpec::NONE, EveStrategySpec::new(EveKind::InterceptResendBA, BasisPolicy::RandomZX)];
    let render = || {
        sweep(&[0.25, 0.5], &strategies, 2000, master_seed)
            .map(|rows| rows.iter().map(|r| r.to_csv_line()).collect::<Vec<_>>().join("\n"))
    };
    match (render(), render()) {
        (Ok(a), Ok(b)) => outcome("determinism", a == b, "two identical sweeps compared byte for byte".into()),
        (Err(e), _) | (_, Err(e)) => outcome("determinism", false, e.to_string()),
    }
}
