use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::ValueEnum;
use qkdbound::rates::{
    curve_rows, q_grid, rate_curve, write_csv, CsvRow, RateModelParams, DEFAULT_EPS_EXPONENT, DEFAULT_Q_MAX,
    DEFAULT_Q_STEP,
};
use qkdbound::LeakModel;

use crate::output::{emit, write_atomic};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// xi·k·h2(Q)
    Conventional,
    /// k·h2(Q)/(1 - h2(Q))
    Yuen,
    /// No reconciliation charge.
    None,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Sifted key length; repeat for a family of curves. Accepts `1e6`.
    #[arg(long = "sifted-len", required = true, value_parser = parse_count)]
    sifted_len: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Model::Conventional, help_heading = "Reconciliation leakage")]
    model: Model,
    /// Efficiency factor for the conventional model.
    #[arg(long, default_value_t = 1.1, help_heading = "Reconciliation leakage")]
    xi: f64,
    #[arg(long, default_value_t = DEFAULT_Q_MAX, help_heading = "QBER grid")]
    q_max: f64,
    #[arg(long, default_value_t = DEFAULT_Q_STEP, help_heading = "QBER grid")]
    q_step: f64,
    /// Parameter-estimation failure probability, base-2 exponent.
    #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_EPS_EXPONENT, help_heading = "Security split")]
    eps_pe: f64,
    /// Error-verification failure probability, base-2 exponent.
    #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_EPS_EXPONENT, help_heading = "Security split")]
    eps_ec: f64,
    /// Privacy-amplification failure probability, base-2 exponent.
    #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_EPS_EXPONENT, help_heading = "Security split")]
    eps_pa: f64,
    /// Report key bits per pulse instead of per sifted bit: rate × 1/2 × (1 - sample fraction).
    #[arg(long)]
    per_pulse: bool,
    /// Sampling fraction used by --per-pulse.
    #[arg(long, default_value_t = 0.2)]
    sample_fraction: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script plotting the CSV (requires --out).
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

fn parse_count(text: &str) -> Result<u64, String> {
    let v: f64 = text.trim().parse().map_err(|_| format!("`{text}` is not a number"))?;
    if !(v >= 1.0) || v.fract() != 0.0 || v > 9.0e15 {
        return Err(format!("`{text}` is not a positive integer"));
    }
    Ok(v as u64)
}

fn leak_model(args: &Args) -> Option<LeakModel> {
    match args.model {
        Model::Conventional => Some(LeakModel::Conventional { xi: args.xi }),
        Model::Yuen => Some(LeakModel::Yuen),
        Model::None => None,
    }
}

pub fn build_rows(args: &Args) -> Result<Vec<CsvRow>, CliError> {
    let grid = q_grid(args.q_max, args.q_step).map_err(CliError::usage)?;
    if args.per_pulse && !(args.sample_fraction > 0.0 && args.sample_fraction < 1.0) {
        return Err(CliError::usage("--sample-fraction must lie in (0, 1)"));
    }
    let scale = if args.per_pulse { 0.5 * (1.0 - args.sample_fraction) } else { 1.0 };
    let mut rows = Vec::new();
    for &k in &args.sifted_len {
        let params = RateModelParams::new(k, leak_model(args))
            .and_then(|p| p.with_eps(args.eps_pe, args.eps_ec, args.eps_pa))
            .map_err(CliError::usage)?;
        let curve = rate_curve(&params, &grid).map_err(|e| CliError::Runtime(e.into()))?;
        rows.extend(curve_rows(&curve).into_iter().map(|mut r| {
            r.rate *= scale;
            r
        }));
    }
    Ok(rows)
}

/// Convenience plotting script; one line per sifted length.
fn gnuplot_script(csv_path: &Path, lengths: &[u64]) -> String {
    let data = csv_path.display().to_string().replace('\'', "''");
    let mut s = String::new();
    s.push_str("# convenience output: plots the key-rate CSV written alongside\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set xlabel 'QBER'\nset ylabel 'secret key rate'\nset logscale y\nset key top right\n");
    let plots: Vec<String> = lengths
        .iter()
        .map(|k| format!("'{data}' skip 1 using 1:($5 == {k} && $2 > 0 ? $2 : 1/0) with lines title 'k = {k}'"))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

pub fn run(args: Args) -> Result<ExitCode, CliError> {
    if args.gnuplot.is_some() && args.out.is_none() {
        return Err(CliError::usage("--gnuplot needs --out so the script can name the data file"));
    }
    let rows = build_rows(&args)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).map_err(|e| CliError::Runtime(e.into()))?;
    emit(args.out.as_deref(), &buf)?;
    if let (Some(script), Some(data)) = (&args.gnuplot, &args.out) {
        write_atomic(script, gnuplot_script(data, &args.sifted_len).as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}
