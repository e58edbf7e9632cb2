use std::path::PathBuf;
use std::process::ExitCode;

use bridgetail::{run, CliError, Command, RunConfig};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Tail law only.
    Analyze,
    /// Regime and twist point.
    Classify,
    /// Green's series by forward iteration, with a tail fit.
    Greens,
    /// Truncated stationary solve, with a tail fit.
    Steady,
    /// Tail law plus the Monte Carlo prefactor.
    EstimateF,
    /// Everything, plus the invariant suites.
    VerifyAll,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Analyze => Command::Analyze,
            Cmd::Classify => Command::Classify,
            Cmd::Greens => Command::Greens,
            Cmd::Steady => Command::Steady,
            Cmd::EstimateF => Command::EstimateF,
            Cmd::VerifyAll => Command::VerifyAll,
        }
    }
}

/// Exact tail asymptotics of two-node Markov-modulated queueing networks.
#[derive(Debug, Parser)]
#[command(name = "bridgetail", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Pretty-print the JSON report.
    #[arg(long)]
    json: bool,
    /// Suppress the summary table on standard error.
    #[arg(long)]
    quiet: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long)]
    trunc_x: Option<usize>,
    #[arg(long)]
    trunc_y: Option<usize>,
    #[arg(long)]
    replications: Option<u64>,
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let mut config = RunConfig::load(&args.config)?;
    let o = &mut config.options;
    if let Some(v) = args.seed {
        o.seed = v;
    }
    if let Some(v) = args.lmax {
        o.lmax = v;
    }
    if let Some(v) = args.trunc_x {
        o.trunc_x = v;
    }
    if let Some(v) = args.trunc_y {
        o.trunc_y = v;
    }
    if let Some(v) = args.replications {
        o.replications = v;
    }
    o.validate()?;
    let report = run(args.command.into(), &config)?;
    println!("{}", report.to_json(args.json));
    if !args.quiet {
        eprint!("{}", report.human());
    }
    let failures = report.failures();
    if failures.is_empty() {
        Ok(0)
    } else {
        let names: Vec<&str> = failures.iter().map(|s| s.name.as_str()).collect();
        let e = CliError::Verification(names.join(", "));
        eprintln!("error: {e}");
        Ok(e.exit_code())
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
