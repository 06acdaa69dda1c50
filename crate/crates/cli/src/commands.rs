use std::fs;
use std::io::{self, Write};
use std::path::Path;

use qsdc_core::analysis::{self, effective_rate, survival_n, survival_one, SecurityParams, SweepRow};
use qsdc_core::fmt::sig10;
use qsdc_core::keyxfer::{run_key_transfer, KeySession, KeyStatus};
use qsdc_core::protocol::{default_max_rounds, run_session, BobAction, RoundTranscript};
use qsdc_core::seed::{hash64, Party};
use qsdc_core::{selftest as checks, EveStrategySpec, ProtocolConfig};
use serde_json::{json, Value};

use crate::{FormulaArgs, Format, KeygenArgs, SelftestArgs, SimulateArgs, SweepArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DETECTED: u8 = 2;

type CmdResult = Result<u8, Box<dyn std::error::Error>>;

// Output is assembled in memory first, so a failure never leaves a partial file.
fn emit(out: Option<&Path>, content: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => io::stdout().lock().write_all(content.as_bytes()),
    }
}

fn usize_arg(value: u64, flag: &str) -> Result<usize, String> {
    usize::try_from(value).map_err(|_| format!("{flag} {value} is too large for this platform"))
}

pub fn simulate(args: SimulateArgs) -> CmdResult {
    let bits = usize_arg(args.bits, "--bits")?;
    let max_rounds = args.max_rounds.unwrap_or(default_max_rounds(bits));
    let config = ProtocolConfig::new(args.c, bits, args.seed.seed, args.eve.spec()).with_max_rounds(max_rounds);
    config.validate()?;
    let result = run_session(&config)?;
    let stats = result.stats();

    let mut text = String::new();
    match args.format {
        Format::Json => {
            for t in &result.transcripts {
                text.push_str(&serde_json::to_string(t)?);
                text.push('\n');
            }
            let summary = json!({
                "summary": {
                    "c": sig10(args.c),
                    "strategy": config.eve.label(),
                    "seed": config.master_seed,
                    "aborted": result.aborted,
                    "abort_round": result.abort_round,
                    "stats": stats,
                }
            });
            text.push_str(&serde_json::to_string(&summary)?);
            text.push('\n');
        }
        Format::Csv => {
            text.push_str("round_index,mode,alice_prep,bob_action,alice_basis,alice_outcome,sifted,detected,decoded_bit,eve_guess,eve_events\n");
            for t in &result.transcripts {
                text.push_str(&transcript_csv_row(t)?);
                text.push('\n');
            }
        }
    }
    emit(args.out.as_deref(), &text)?;
    Ok(if result.aborted { EXIT_DETECTED } else { EXIT_OK })
}

fn json_scalar(value: &impl serde::Serialize) -> Result<String, serde_json::Error> {
    Ok(match serde_json::to_value(value)? {
        Value::String(s) => s,
        Value::Null => String::new(),
        other => other.to_string(),
    })
}

fn transcript_csv_row(t: &RoundTranscript) -> Result<String, serde_json::Error> {
    let bob_action = match t.bob_action {
        BobAction::ControlSubstitute(state) => format!("control_substitute:{state}"),
        other => json_scalar(&other)?,
    };
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        t.round_index,
        json_scalar(&t.mode)?,
        t.alice_prep,
        bob_action,
        json_scalar(&t.alice_basis)?,
        t.alice_outcome,
        t.sifted,
        t.detected,
        json_scalar(&t.decoded_bit)?,
        json_scalar(&t.eve_guess)?,
        t.eve_events.len()
    ))
}

pub fn sweep(args: SweepArgs) -> CmdResult {
    let strategies: Vec<EveStrategySpec> = args
        .eve
        .iter()
        .map(|&kind| EveStrategySpec::new(kind, args.policy.unwrap_or(kind.default_policy())))
        .collect();
    let rows = analysis::sweep(&args.c, &strategies, args.trials, args.seed.seed)?;
    let mut text = String::new();
    match args.format {
        Format::Csv => {
            text.push_str(SweepRow::CSV_HEADER);
            text.push('\n');
            for row in &rows {
                text.push_str(&row.to_csv_line());
                text.push('\n');
            }
        }
        Format::Json => {
            for row in &rows {
                text.push_str(&serde_json::to_string(&row.pinned())?);
                text.push('\n');
            }
        }
    }
    emit(args.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

pub fn formula(args: FormulaArgs) -> CmdResult {
    let params = SecurityParams::new(args.c, args.d, args.n);
    let s_one = survival_one(&params)?;
    let s_n = survival_n(&params)?;
    let record = json!({
        "c": sig10(args.c),
        "d": sig10(args.d),
        "n": args.n,
        "s_one": sig10(s_one),
        "s_n": sig10(s_n),
        "rate": sig10(effective_rate(args.c)),
    });
    emit(args.out.as_deref(), &format!("{}\n", serde_json::to_string(&record)?))?;
    Ok(EXIT_OK)
}

pub fn keygen(args: KeygenArgs) -> CmdResult {
    let raw_bits = usize_arg(args.raw_bits, "--raw-bits")?;
    let final_bits = usize_arg(args.final_bits, "--final-bits")?;
    if final_bits > raw_bits {
        return Err(format!("--final-bits ({final_bits}) must not exceed --raw-bits ({raw_bits})").into());
    }
    let seed = args.seed.seed;
    let session = KeySession::new(raw_bits, final_bits, hash64(seed, 0, Party::Hash as u64))?;
    let config = ProtocolConfig::new(args.c, raw_bits, seed, args.eve.spec());
    config.validate()?;
    let outcome = run_key_transfer(&config, &session)?;
    let record = json!({
        "status": outcome.status,
        "strategy": config.eve.label(),
        "raw_bits": raw_bits,
        "final_bits": final_bits,
        "rounds": outcome.rounds,
        "keys_match": outcome.keys_match(),
        "alice_key": outcome.alice_key,
        "bob_key": outcome.bob_key,
    });
    emit(args.out.as_deref(), &format!("{}\n", serde_json::to_string(&record)?))?;
    Ok(if outcome.status == KeyStatus::Aborted { EXIT_DETECTED } else { EXIT_OK })
}

pub fn selftest(args: SelftestArgs) -> CmdResult {
    let report = checks::run(args.trials, args.seed.seed);
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    print!("{}", report.table());
    Ok(if report.all_passed() { EXIT_OK } else { 1 })
}
