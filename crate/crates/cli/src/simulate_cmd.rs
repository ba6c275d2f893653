use std::path::PathBuf;
use std::process::ExitCode;

use clap::ValueEnum;
use qkdbound::simulator::{
    empirical_eve_guess_rate, run_session, EveStrategy, PaLength, SessionStatus, SessionTranscript, SimError,
    DEFAULT_VERIFY_BITS,
};
use qkdbound::{LeakModel, LinearCodeSpec, ProtocolConfig};

use crate::output::emit;
use crate::CliError;

pub const EXIT_ABORTED: u8 = 3;
pub const EXIT_VERIFICATION_FAILED: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LeakChoice {
    Conventional,
    Yuen,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Number of transmitted pulses. Accepts `1e5`.
    #[arg(long, default_value = "10000", value_parser = parse_pulses, help_heading = "Channel")]
    pulses: u64,
    /// Probability the channel flips Bob's bit.
    #[arg(long, default_value_t = 0.0, help_heading = "Channel")]
    flip: f64,
    /// Fraction of pulses Eve intercepts and resends.
    #[arg(long, default_value_t = 0.0, help_heading = "Channel")]
    intercept: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of sifted bits disclosed to estimate the QBER.
    #[arg(long, default_value_t = 0.2, help_heading = "Estimation")]
    sample_fraction: f64,
    /// Abort when the estimated QBER exceeds this value.
    #[arg(long, default_value_t = 0.11, help_heading = "Estimation")]
    abort_qber: f64,
    /// `hamming7`, `hamming15`, `repN`, or a file holding `n k` and the parity-check rows.
    #[arg(long, default_value = "hamming7", help_heading = "Reconciliation")]
    code: String,
    /// Largest error weight the decoder may apply; unlimited when absent.
    #[arg(long, help_heading = "Reconciliation")]
    max_decode_weight: Option<usize>,
    /// Analytic leakage model reported next to the bits actually consumed.
    #[arg(long, value_enum, default_value_t = LeakChoice::Conventional, help_heading = "Reconciliation")]
    leak_model: LeakChoice,
    #[arg(long, default_value_t = 1.1, help_heading = "Reconciliation")]
    xi: f64,
    /// Tag length for comparing the corrected keys.
    #[arg(long, default_value_t = DEFAULT_VERIFY_BITS, help_heading = "Verification and privacy amplification")]
    verify_bits: usize,
    /// Final key length, or `auto` for floor(m(1 - h2(Q))) minus the tag length.
    #[arg(long, default_value = "auto", value_parser = parse_pa_len, help_heading = "Verification and privacy amplification")]
    pa_len: PaLength,
    /// Write the full transcript as JSON.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Also score Eve's key guess over this many independent sessions.
    #[arg(long, help_heading = "Eavesdropper scoring")]
    eve_trials: Option<u64>,
}

fn parse_pulses(text: &str) -> Result<u64, String> {
    let v: f64 = text.trim().parse().map_err(|_| format!("`{text}` is not a number"))?;
    if !(v >= 1.0) || v.fract() != 0.0 || v > 1.0e12 {
        return Err(format!("`{text}` is not a positive integer"));
    }
    Ok(v as u64)
}

fn parse_pa_len(text: &str) -> Result<PaLength, String> {
    if text == "auto" {
        return Ok(PaLength::Auto);
    }
    text.parse()
        .map(PaLength::Fixed)
        .map_err(|_| format!("`{text}` is neither `auto` nor a bit count"))
}

fn load_code(arg: &str) -> Result<LinearCodeSpec, CliError> {
    if let Ok(code) = LinearCodeSpec::by_name(arg) {
        return Ok(code);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| CliError::usage(format!("`{arg}` is not a known code name or readable file: {e}")))?;
    LinearCodeSpec::from_text(&text).map_err(CliError::usage)
}

pub fn config(args: &Args) -> Result<ProtocolConfig, CliError> {
    let mut c = ProtocolConfig::new(args.pulses, load_code(&args.code)?);
    c.channel_flip_prob = args.flip;
    c.eve_intercept_fraction = args.intercept;
    c.sample_fraction = args.sample_fraction;
    c.abort_qber = args.abort_qber;
    c.leak_model = match args.leak_model {
        LeakChoice::Conventional => LeakModel::Conventional { xi: args.xi },
        LeakChoice::Yuen => LeakModel::Yuen,
    };
    c.pa_out_len = args.pa_len;
    c.verify_bits = args.verify_bits;
    c.max_decode_weight = args.max_decode_weight;
    c.rng_seed = args.seed;
    c.validate().map_err(CliError::usage)?;
    Ok(c)
}

fn status_name(s: SessionStatus) -> &'static str {
    match s {
        SessionStatus::Completed => "completed",
        SessionStatus::AbortedQber => "aborted_qber",
        SessionStatus::VerificationFailed => "verification_failed",
    }
}

pub fn summary(t: &SessionTranscript) -> String {
    format!(
        "status={} sifted={} estimated_q={:.6} leak_bits={} final_key_bits={}",
        status_name(t.status),
        t.sifted_len,
        t.estimated_q,
        t.leak_bits_consumed,
        t.final_key_alice.as_ref().map_or(0, |k| k.len()),
    )
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::InvalidConfig(_) | SimError::InsufficientKey(_) | SimError::KeyTooLong { .. } => {
            CliError::usage(e)
        }
        other => CliError::Runtime(other.into()),
    }
}

pub fn run(args: Args) -> Result<ExitCode, CliError> {
    let cfg = config(&args)?;
    let t = run_session(&cfg).map_err(sim_error)?;
    if let Some(path) = &args.transcript {
        let mut json = serde_json::to_string_pretty(&t).map_err(|e| CliError::Runtime(e.into()))?;
        json.push('\n');
        emit(Some(path), json.as_bytes())?;
    }
    println!("{}", summary(&t));
    if let Some(trials) = args.eve_trials {
        let r = empirical_eve_guess_rate(&cfg, trials, EveStrategy::InterceptResendThenBestGuess).map_err(sim_error)?;
        println!(
            "eve scored={} of {} pre_pa_rate={:.6} rate={:.6} wilson95=[{:.6}, {:.6}] bound={:.6} within_bound={}",
            r.scored_trials,
            r.trials,
            r.pre_pa_rate,
            r.rate,
            r.interval.lower,
            r.interval.upper,
            r.bound,
            r.within_bound(3.0)
        );
    }
    Ok(match t.status {
        SessionStatus::Completed => ExitCode::SUCCESS,
        SessionStatus::AbortedQber => ExitCode::from(EXIT_ABORTED),
        SessionStatus::VerificationFailed => ExitCode::from(EXIT_VERIFICATION_FAILED),
    })
}
