use std::process::ExitCode;

use clap::ValueEnum;
use qkdbound::suites::{mathcore_suite, postproc_suite, qstate_suite, SuiteReport};

use crate::{CliError, EXIT_FAILURE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Exhaustive big-integer checks of the counting bounds, n <= 64.
    Mathcore,
    /// Randomized cq-state inequalities: distinguishing, guessing and known-prefix bounds.
    Qstate,
    /// Exhaustive Toeplitz collision enumeration and the code-shrinkage count.
    Postproc,
    All,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    /// Random instances for the qstate suite.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

pub fn run(args: Args) -> Result<ExitCode, CliError> {
    let mut reports: Vec<SuiteReport> = Vec::new();
    if matches!(args.suite, Suite::Mathcore | Suite::All) {
        reports.push(mathcore_suite());
    }
    if matches!(args.suite, Suite::Qstate | Suite::All) {
        reports.push(qstate_suite(args.trials, args.seed).map_err(|e| CliError::Runtime(e.into()))?);
    }
    if matches!(args.suite, Suite::Postproc | Suite::All) {
        reports.push(postproc_suite());
    }
    let mut failed = false;
    for r in &reports {
        print!("{r}");
        failed |= !r.passed();
    }
    if failed {
        let total: u64 = reports.iter().map(|r| r.violations()).sum();
        println!("FAILED: {total} violation(s); rerun with --seed {}", args.seed);
        Ok(ExitCode::from(EXIT_FAILURE))
    } else {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    }
}
