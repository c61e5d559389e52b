//! torlin: SL2(Z) torus-action toolkit.
//!
//! Every subcommand prints one JSON artifact to stdout. Artifacts embed
//! their own inputs, so `--verify FILE` can rebuild and cross-check them.
//! Exit codes: 0 ok, 2 precondition failure, 3 verification failure,
//! 64 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

mod parse;
mod run;

use run::{Built, CliError};

#[derive(Parser)]
#[command(name = "torlin", version, about = "toolkit for the SL2(Z) action on the n-torus")]
struct Cli {
    /// Seed for randomized starts; the TORLIN_SEED environment variable is
    /// the fallback, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Re-check an emitted artifact instead of producing a new one.
    #[arg(long, value_name = "FILE")]
    verify: Option<PathBuf>,

    /// Write the CSV series (when the subcommand has one) to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Symmetric-power representation of a single group element.
    Rep {
        /// Row-major 2x2 integer matrix "a,b,c,d" with det 1.
        #[arg(long)]
        matrix: Option<String>,
        /// Word in the generators s,t (uppercase for inverses).
        #[arg(long)]
        word: Option<String>,
        /// Number of torus dimensions (representation size).
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Ergodicity certificate for a hyperbolic element.
    Cert {
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Orbit closure of a lattice vector under a generating set.
    Orbit {
        /// Comma-separated integer vector.
        #[arg(long)]
        vector: Option<String>,
        /// Semicolon-separated list of 2x2 matrices "a,b,c,d;...".
        #[arg(long)]
        gens: Option<String>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Give up and report Unbounded past this many vectors.
        #[arg(long, default_value_t = 10_000)]
        cap: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Factor a binary form into projective points, or multiply one back up.
    Factor {
        /// Coefficients "re,im;re,im;..." from the leading term down.
        #[arg(long)]
        coeffs: Option<String>,
        /// Points "a_re,a_im,b_re,b_im;..." in homogeneous coordinates.
        #[arg(long)]
        points: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a measure-field pipeline from a JSON config and report defects.
    Amen {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the twisted-operator relations for a finite relation config.
    Relalg {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Betti numbers of sl2z or psl2z and the finiteness verdict.
    Betti {
        #[arg(long)]
        group: Option<String>,
        /// Scale the group by a rational t and re-run the verdict.
        #[arg(long)]
        amplify: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Iterate an orbit and report Weyl averages, periods, discrepancy.
    Simulate {
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Start point: rationals "1/7,2/7" stay exact, floats "0.3,0.4"
        /// do not; omit for a seeded random start.
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Frequency vector of the character to average.
        #[arg(long)]
        freq: Option<String>,
        /// Boxes "lo:hi,lo:hi" for the discrepancy report (repeatable).
        #[arg(long = "box")]
        boxes: Vec<String>,
        /// CSV sampling stride (default: steps/1000).
        #[arg(long)]
        stride: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Joining diagnostics for a sequence of measures on the square torus.
    #[command(name = "dicho-check")]
    DichoCheck {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Failed(format!("missing required flag {flag}")))
}

fn load_config<T: serde::de::DeserializeOwned>(path: Option<PathBuf>) -> Result<T, CliError> {
    let path = required(path, "--config")?;
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let seed = cli
        .seed
        .or_else(|| {
            std::env::var("TORLIN_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);

    let (common, built): (Common, Built) = match cli.command {
        Command::Rep { matrix, word, dim, common } => match &common.verify {
            Some(path) => return verify_and_print(path, "rep"),
            None => (common, run::rep(run::RepInputs { matrix, word, dim })?),
        },
        Command::Cert { matrix, dim, common } => match &common.verify {
            Some(path) => return verify_and_print(path, "cert"),
            None => {
                let matrix = required(matrix, "--matrix")?;
                (common, run::cert(run::CertInputs { matrix, dim })?)
            }
        },
        Command::Orbit { vector, gens, dim, cap, common } => match &common.verify {
            Some(path) => return verify_and_print(path, "orbit"),
            None => {
                let vector = required(vector, "--vector")?;
                let gens = required(gens, "--gens")?;
                (common, run::orbit(run::OrbitInputs { vector, gens, dim, cap })?)
            }
        },
        Command::Factor { coeffs, points, common } => match &common.verify {
            Some(path) => return verify_and_print(path, "factor"),
            None => (common, run::factor(run::FactorInputs { coeffs, points })?),
        },
        Command::Amen { config, common } => match &common.verify {
            Some(path) => return verify_and_print(path, "amen"),
            None => {
                let config = load_config(config)?;
                (common, run::amen(run::AmenInputs { config })?)
            }
        },
        Command::Relalg { config, common } => match &common.verify {
            Some(path) => return verify_and_print(path, "relalg"),
            None => {
                let config = load_config(config)?;
                (common, run::relalg(run::RelalgInputs { config })?)
            }
        },
        Command::Betti { group, amplify, common } => match &common.verify {
            Some(path) => return verify_and_print(path, "betti"),
            None => {
                let group = required(group, "--group")?;
                (common, run::betti(run::BettiInputs { group, amplify })?)
            }
        },
        Command::Simulate { matrix, dim, start, steps, freq, boxes, stride, common } => {
            match &common.verify {
                Some(path) => return verify_and_print(path, "simulate"),
                None => {
                    let matrix = required(matrix, "--matrix")?;
                    let freq = required(freq, "--freq")?;
                    let inputs = run::SimulateInputs {
                        matrix,
                        dim,
                        start,
                        steps,
                        freq,
                        boxes,
                        stride,
                        seed,
                    };
                    (common, run::simulate(inputs)?)
                }
            }
        }
        Command::DichoCheck { config, common } => match &common.verify {
            Some(path) => return verify_and_print(path, "dicho-check"),
            None => {
                let config = load_config(config)?;
                (common, run::dicho_check(run::DichoInputs { config })?)
            }
        },
    };

    println!("{}", run::pretty(&built.doc)?);
    if let Some(out) = &common.out {
        match &built.csv {
            Some(csv) => std::fs::write(out, csv)?,
            None => {
                return Err(CliError::Failed(
                    "this subcommand has no CSV series; drop --out".into(),
                ))
            }
        }
    }
    Ok(())
}

fn verify_and_print(path: &std::path::Path, kind: &str) -> Result<(), CliError> {
    println!("{}", run::verify_file(path, kind)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            // clap renders help to stdout and errors to stderr on its own.
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}
