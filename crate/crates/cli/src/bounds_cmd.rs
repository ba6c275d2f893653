use std::path::PathBuf;
use std::process::ExitCode;

use clap::ValueEnum;
use qkdbound::bounds::{
    guessing_bound, guessing_floor, kpa_bound, near_miss_terms, pa_guess_bound, SecurityParams,
};
use qkdbound::mathcore::parse_log2;
use qkdbound::Log2Value;
use serde::{Deserialize, Serialize};

use crate::output::emit;
use crate::CliError;

pub const BOUNDS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Security parameter as a base-2 exponent (`-50` means 2^-50; `-inf` means zero).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_log2, help_heading = "Guessing bound: 2^-|K| + eps")]
    eps: Log2Value,
    /// Final key length |K| in bits.
    #[arg(long, help_heading = "Guessing bound: 2^-|K| + eps")]
    key_bits: u64,
    /// Bit-error rate Eve may tolerate in her guess.
    #[arg(long, help_heading = "Near-miss bound: 2^(-|K|(1-h2(Q_E))) + eps 2^(|K| h2(Q_E))")]
    qe: Option<f64>,
    /// Key bits still unknown to Eve after a known-plaintext attack.
    #[arg(long, help_heading = "Known-plaintext bound: 2^-unknown + eps")]
    unknown_bits: Option<u64>,
    /// Collision probability of the hash family, base-2 exponent.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_log2, help_heading = "After privacy amplification: (1 - delta) p + delta")]
    delta: Option<Log2Value>,
    /// Eve's success probability before hashing, base-2 exponent.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_log2, help_heading = "After privacy amplification: (1 - delta) p + delta")]
    p_correct: Option<Log2Value>,
    /// Leakage factor carried in the reported parameters.
    #[arg(long, default_value_t = 1.1)]
    xi: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundLine {
    pub name: String,
    pub log2: Log2Value,
    /// Linear value capped at one.
    pub linear: f64,
    pub exceeds_one: bool,
}

impl BoundLine {
    fn new(name: &str, v: Log2Value) -> Self {
        let (linear, exceeds_one) = v.to_saturated();
        BoundLine {
            name: name.into(),
            log2: v,
            linear,
            exceeds_one,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub schema_version: u32,
    pub eps: Log2Value,
    pub key_bits: u64,
    pub xi: f64,
    pub bounds: Vec<BoundLine>,
}

fn exponent_text(v: Log2Value) -> String {
    if v.is_zero() {
        "-inf".into()
    } else {
        v.exponent().to_string()
    }
}

pub fn to_csv(report: &BoundsReport) -> String {
    let mut s = String::from("bound,log2,linear,exceeds_one\n");
    for b in &report.bounds {
        s.push_str(&format!("{},{},{},{}\n", b.name, exponent_text(b.log2), b.linear, b.exceeds_one));
    }
    s
}

pub fn to_json(report: &BoundsReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialises");
    s.push('\n');
    s
}

pub fn build(args: &Args) -> Result<BoundsReport, CliError> {
    let params = SecurityParams::new(args.eps, args.key_bits, args.xi).map_err(CliError::usage)?;
    let mut bounds = vec![
        BoundLine::new("guessing_floor", guessing_floor(args.key_bits)),
        BoundLine::new("guessing_bound", guessing_bound(&params)),
    ];
    if let Some(u) = args.unknown_bits {
        bounds.push(BoundLine::new("kpa_bound", kpa_bound(&params, u).map_err(CliError::usage)?));
    }
    if let Some(q) = args.qe {
        let t = near_miss_terms(&params, q).map_err(CliError::usage)?;
        bounds.push(BoundLine::new("near_miss_blind_term", t.blind_term));
        bounds.push(BoundLine::new("near_miss_epsilon_term", t.epsilon_term));
        bounds.push(BoundLine::new("near_miss_bound", t.total));
    }
    match (args.p_correct, args.delta) {
        (Some(p), Some(d)) => {
            bounds.push(BoundLine::new("pa_guess_bound", pa_guess_bound(p, d).map_err(CliError::usage)?));
        }
        (None, None) => {}
        _ => return Err(CliError::usage("--p-correct and --delta must be given together")),
    }
    Ok(BoundsReport {
        schema_version: BOUNDS_SCHEMA_VERSION,
        eps: args.eps,
        key_bits: args.key_bits,
        xi: args.xi,
        bounds,
    })
}

pub fn run(args: Args) -> Result<ExitCode, CliError> {
    let report = build(&args)?;
    let text = match args.format {
        Format::Csv => to_csv(&report),
        Format::Json => to_json(&report),
    };
    emit(args.out.as_deref(), text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}
