use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fene::commands::{dispatch, Command, ExitStatus, Invocation};

/// Micro-macro FENE dumbbell simulator and verification suite.
///
/// Exit codes: 0 success, 2 validation failure, 3 numerical breakdown,
/// 4 failed check. The worker thread count is read from FENE_THREADS.
#[derive(Parser)]
#[command(name = "fene", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides initial.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides outputs.directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closure constants against their closed forms.
    VerifyConstants(Common),
    /// Operator identities on random data.
    VerifyIdentities(Common),
    /// One trajectory with diagnostics.
    Run(Common),
    /// Decay exponents over a seed ensemble.
    DecayStudy(Common),
    /// Shell-averaged spectra along a trajectory.
    Spectrum(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitStatus::Validation.code() } else { 0 });
        }
    };
    if let Err(e) = fene::init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(ExitStatus::Validation.code());
    }
    let (command, common) = match cli.command {
        Cmd::VerifyConstants(c) => (Command::VerifyConstants, c),
        Cmd::VerifyIdentities(c) => (Command::VerifyIdentities, c),
        Cmd::Run(c) => (Command::Run, c),
        Cmd::DecayStudy(c) => (Command::DecayStudy, c),
        Cmd::Spectrum(c) => (Command::Spectrum, c),
    };
    let status = dispatch(&Invocation {
        command,
        config: common.config,
        seed: common.seed,
        out: common.out,
    });
    ExitCode::from(status.code())
}
