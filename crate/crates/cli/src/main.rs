//! `helr`: table generation, enrollment, verification, DET metrics,
//! benchmarks and scripted attacks.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success (verification: match) |
//! | 1 | runtime failure (I/O, transport) |
//! | 2 | configuration error |
//! | 3 | verification completed with no match |
//! | 4 | protocol abort |
//! | 5 | attack outcome differs from the expected one |

mod commands;
mod config;
mod state;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helr::attacks::Script;
use helr::group::SecurityLevel;
use helr::protocol::Protocol;

use config::{parse_level, parse_rho_list, Config, NumberList, TransportKind};

#[derive(Parser, Debug)]
#[command(name = "helr", version, about = "Biometric verification on encrypted likelihood-ratio tables")]
struct Cli {
    /// Seed for every random choice; drawn from the OS and printed if absent.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Genuine correlation, one value for every feature or a comma-separated
    /// list of k values.
    #[arg(long, value_parser = parse_rho_list, conflicts_with_all = ["rho_range", "training"])]
    rho: Option<NumberList>,
    /// Draw each feature's correlation uniformly from `LO,HI`.
    #[arg(long, value_parser = parse_rho_list, conflicts_with = "training")]
    rho_range: Option<NumberList>,
    /// Feature file of training pairs: rows 2i and 2i+1 are two samples of
    /// the same subject.
    #[arg(long)]
    training: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build lookup tables and calibrate the threshold.
    GenTables {
        #[arg(long, default_value_t = 36)]
        k: usize,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[command(flatten)]
        model: ModelArgs,
        /// Target false match rate for the threshold.
        #[arg(long, default_value_t = 1e-3)]
        fmr: f64,
        /// Impostor pairs used to calibrate the threshold.
        #[arg(long, default_value_t = 100_000)]
        impostors: usize,
        /// Fixed threshold instead of calibration.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<i32>,
        #[arg(long, short = 'o', default_value = "tables.helr")]
        tables: PathBuf,
    },
    /// Enroll a user for one or both protocols.
    Enroll {
        #[command(flatten)]
        common: SessionArgs,
        /// Reference sample (first row of a feature file); a synthetic
        /// reference is drawn when absent.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Run one verification session.
    Verify {
        #[command(flatten)]
        common: SessionArgs,
        /// Probe sample (first row of a feature file).
        #[arg(long, conflicts_with_all = ["genuine", "impostor"])]
        probe: Option<PathBuf>,
        /// Synthetic genuine probe for a synthetically enrolled user.
        #[arg(long, conflicts_with = "impostor")]
        genuine: bool,
        /// Synthetic independent probe.
        #[arg(long)]
        impostor: bool,
        #[arg(long, default_value = "inproc")]
        transport: TransportKind,
        /// Stop scanning the comparison vector at the first zero.
        #[arg(long)]
        early_exit: bool,
    },
    /// Error-rate trade-off of the tables on synthetic pairs.
    Det {
        #[arg(long, default_value = "tables.helr")]
        tables: PathBuf,
        /// Model file written by gen-tables; defaults to `<tables>.model`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        genuine: usize,
        #[arg(long, default_value_t = 10_000)]
        impostor: usize,
        /// Write the DET points as CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also run this many genuine and impostor sessions per protocol and
        /// compare their decisions with the plaintext rule.
        #[arg(long, default_value_t = 0)]
        encrypted: usize,
        #[arg(long, default_value = "128", value_parser = parse_level)]
        level: SecurityLevel,
    },
    /// Time genuine verifications per protocol and security level.
    Bench {
        #[arg(long = "level", default_value = "128", value_parser = parse_level, num_args = 1..)]
        levels: Vec<SecurityLevel>,
        #[arg(long, default_value_t = 94)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 1.5)]
        delta: f64,
        #[arg(long, default_value_t = 0.85)]
        rho: f64,
        #[arg(long, default_value_t = 10)]
        sessions: usize,
        /// Worker threads per session; the machine default if absent.
        #[arg(long)]
        threads: Option<usize>,
        /// Restrict to one protocol.
        #[arg(long)]
        protocol: Option<Protocol>,
    },
    /// Run a scripted adversary against one protocol.
    Attack {
        #[arg(long)]
        script: Script,
        #[arg(long)]
        protocol: Protocol,
        #[arg(long, default_value = "112", value_parser = parse_level)]
        level: SecurityLevel,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        /// Feature attacked by the crafted template (all when absent).
        #[arg(long)]
        target_feature: Option<usize>,
        /// Substitute every probe feature, not just the first.
        #[arg(long)]
        substitute_all: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct SessionArgs {
    #[arg(long, default_value = "tables.helr")]
    tables: PathBuf,
    /// Store directory.
    #[arg(long, env = "HELR_STORE", default_value = "helr-store")]
    store: PathBuf,
    #[arg(long)]
    uid: String,
    #[arg(long, default_value = "both")]
    protocol: ProtocolChoice,
    #[arg(long, default_value = "128", value_parser = parse_level)]
    level: SecurityLevel,
}

#[derive(Clone, Copy, Debug)]
enum ProtocolChoice {
    One(Protocol),
    Both,
}

impl std::str::FromStr for ProtocolChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "both" {
            return Ok(Self::Both);
        }
        s.parse::<Protocol>().map(Self::One).map_err(|e| e.to_string())
    }
}

impl ProtocolChoice {
    fn list(self) -> Vec<Protocol> {
        match self {
            Self::One(p) => vec![p],
            Self::Both => Protocol::ALL.to_vec(),
        }
    }
}

impl SessionArgs {
    fn config(&self, seed: u64, transport: TransportKind) -> Config {
        Config {
            level: self.level,
            n: 2,
            k: 1,
            delta: 1.0,
            target_fmr: 0.5,
            tables: self.tables.clone(),
            store: self.store.clone(),
            transport,
            seed,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed.unwrap_or_else(rand::random);
    println!("seed={seed}");
    match run(cli.command, seed) {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code().into()
        }
    }
}

fn run(command: Command, seed: u64) -> Result<commands::Exit, commands::CliError> {
    use commands::*;
    match command {
        Command::GenTables { k, n, delta, model, fmr, impostors, theta, tables } => {
            let cfg = Config {
                level: SecurityLevel::Bits128,
                n,
                k,
                delta,
                target_fmr: fmr,
                tables,
                store: PathBuf::new(),
                transport: TransportKind::InProcess,
                seed,
            };
            let source = model_source(&model)?;
            gen_tables(&cfg, source, impostors, theta)
        }
        Command::Enroll { common, features } => {
            let cfg = common.config(seed, TransportKind::InProcess);
            enroll(&cfg, common.uid.as_bytes(), &common.protocol.list(), features.as_deref())
        }
        Command::Verify { common, probe, genuine, impostor, transport, early_exit } => {
            let cfg = common.config(seed, transport);
            let probe = match (probe, genuine, impostor) {
                (Some(p), _, _) => ProbeSource::File(p),
                (None, true, _) => ProbeSource::Genuine,
                (None, false, true) => ProbeSource::Impostor,
                _ => return Err(CliError::Config("one of --probe, --genuine, --impostor is required".into())),
            };
            verify(&cfg, common.uid.as_bytes(), &common.protocol.list(), probe, early_exit)
        }
        Command::Det { tables, model, genuine, impostor, csv, encrypted, level } => {
            let model = model.unwrap_or_else(|| model_path(&tables));
            det(&DetArgs { tables, model, genuine, impostor, csv, encrypted, level, seed })
        }
        Command::Bench { levels, k, n, delta, rho, sessions, threads, protocol } => {
            let protocols = protocol.map(|p| vec![p]).unwrap_or_else(|| Protocol::ALL.to_vec());
            bench(&levels, k, n, delta, rho, sessions, threads, protocols, seed)
        }
        Command::Attack { script, protocol, level, k, n, delta, rho, target_feature, substitute_all } => {
            let params = helr::attacks::AttackParams { k, n, delta, rho, target_feature, substitute_all };
            attack(script, protocol, level, seed, &params)
        }
    }
}

fn model_source(m: &ModelArgs) -> Result<commands::ModelSource, commands::CliError> {
    use commands::{CliError, ModelSource};
    Ok(match (&m.rho, &m.rho_range, &m.training) {
        (Some(r), None, None) => ModelSource::Rho(r.0.clone()),
        (None, Some(r), None) => match r.0.as_slice() {
            &[lo, hi] if lo <= hi => ModelSource::RhoRange(lo, hi),
            _ => return Err(CliError::Config("--rho-range takes LO,HI with LO <= HI".into())),
        },
        (None, None, Some(p)) => ModelSource::Training(p.clone()),
        (None, None, None) => ModelSource::Rho(vec![0.85]),
        _ => return Err(CliError::Config("choose one of --rho, --rho-range, --training".into())),
    })
}
