use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pir_cli::commands::{
    cmd_check, cmd_construct, cmd_simulate, cmd_tradeoff, example1, example2, sample_records, CommandError,
    ConstructArgs, SimulateArgs, EXIT_FAILED, EXIT_OK, EXIT_USAGE,
};
use pir_cli::SchemeFile;
use pir_core::{CodeKind, Rational, VKind};
use pir_sim::Transport;

#[derive(Parser)]
#[command(name = "pir", version, about = "Private information retrieval from coded storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodeArg {
    Mds,
    Uncoded,
}

#[derive(Clone, Copy, ValueEnum)]
enum VArg {
    Cyclic,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Inproc,
    Socket,
}

#[derive(Subcommand)]
enum Command {
    /// Build a scheme with R = T = K-S and L = S and write it as JSON.
    Construct {
        #[arg(long)]
        q: u64,
        #[arg(long = "K", alias = "k")]
        k: usize,
        /// Parity columns (ignored for uncoded storage).
        #[arg(long = "S", alias = "s", default_value_t = 1)]
        s: usize,
        #[arg(long = "N", alias = "n", default_value_t = 2)]
        n: usize,
        #[arg(long, value_enum, default_value = "mds")]
        code: CodeArg,
        #[arg(long, value_enum, default_value = "random")]
        v: VArg,
        #[arg(long, env = "PIR_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        max_attempts: usize,
        /// Write the scheme here and print the construction report instead.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a scheme file. Exit code 0 iff retrievable and private.
    Check { path: PathBuf },
    /// Run one retrieval session through the node simulator.
    Simulate {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long)]
        records: Option<PathBuf>,
        /// Requested record, 1-based.
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "inproc")]
        transport: TransportArg,
        /// Listen addresses for the socket transport, one per node.
        #[arg(long = "listen", value_delimiter = ',')]
        listen: Vec<SocketAddr>,
        #[arg(long, env = "PIR_SEED", default_value_t = 0)]
        seed: u64,
        /// Run schemes that fail certification.
        #[arg(long = "unsafe")]
        allow_uncertified: bool,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
    },
    /// Print random records for a scheme in records-file format.
    Records {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long, env = "PIR_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustively verify the worked examples.
    Examples {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
        which: u8,
        #[arg(long, default_value_t = 2)]
        q: u64,
        #[arg(long = "N", alias = "n", default_value_t = 2)]
        n: usize,
        #[arg(long = "K", alias = "k", default_value_t = 2)]
        k: usize,
    },
    /// Lower bound on retrieval cost at a given storage cost.
    Tradeoff {
        #[arg(long)]
        sc: Rational,
        #[arg(long = "K", alias = "k")]
        k: usize,
        /// Compare an achieved retrieval cost against the bound.
        #[arg(long)]
        rc: Option<Rational>,
    },
}

// A closed stdout (e.g. piped into `head`) is not an error worth a panic.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_json<T: Serialize>(value: &T) {
    emit(&serde_json::to_string_pretty(value).expect("reports serialise"));
}

fn run(cli: Cli) -> Result<i32, CommandError> {
    match cli.command {
        Command::Construct { q, k, s, n, code, v, seed, max_attempts, out } => {
            let code = match code {
                CodeArg::Mds => CodeKind::Mds,
                CodeArg::Uncoded => CodeKind::Uncoded,
            };
            let v = match v {
                VArg::Cyclic => VKind::Cyclic,
                VArg::Random => VKind::Random,
            };
            let (scheme, report) = cmd_construct(&ConstructArgs { q, k, s, n, code, v, seed, max_attempts })?;
            let json = SchemeFile::from_scheme(&scheme).to_json();
            match out {
                Some(path) => {
                    std::fs::write(&path, json + "\n")
                        .map_err(|e| CommandError::Usage(format!("{}: {e}", path.display())))?;
                    print_json(&report);
                }
                None => emit(&json),
            }
            eprintln!(
                "constructed after {} attempt(s): retrievable={} private={}",
                report.attempts, report.certification.retrievable, report.certification.private
            );
            Ok(EXIT_OK)
        }
        Command::Check { path } => {
            let (report, code) = cmd_check(&path)?;
            print_json(&report);
            Ok(code)
        }
        Command::Simulate { scheme, records, m, transport, listen, seed, allow_uncertified, timeout_ms } => {
            let transport = match transport {
                TransportArg::Inproc => Transport::InProcess,
                TransportArg::Socket => Transport::Socket { listen },
            };
            let args = SimulateArgs {
                scheme,
                records,
                m,
                transport,
                seed,
                allow_uncertified,
                timeout: Duration::from_millis(timeout_ms),
            };
            let (transcript, code) = cmd_simulate(&args)?;
            print_json(&transcript);
            if code != EXIT_OK {
                eprintln!("decoded record differs from the stored one");
            }
            Ok(code)
        }
        Command::Records { scheme, seed } => {
            let scheme = SchemeFile::load(&scheme)?;
            emit(sample_records(&scheme, seed)?.trim_end());
            Ok(EXIT_OK)
        }
        Command::Examples { which, q, n, k } => {
            let report = if which == 1 { example1(q, n, k)? } else { example2()? };
            print_json(&report);
            Ok(if report.pass { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Tradeoff { sc, k, rc } => {
            if k == 0 || sc <= Rational::from_integer(0) {
                return Err(CommandError::Usage("--sc must be positive and --K at least 1".into()));
            }
            print_json(&cmd_tradeoff(sc, k, rc));
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    debug_assert!([EXIT_OK, EXIT_FAILED, EXIT_USAGE].contains(&code));
    ExitCode::from(code as u8)
}
