use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use convexint::analytic::{l1_example, l2_example, AnalyticReport};
use convexint::format::{parse_rational_list, CertificateFile, InstanceFile};
use convexint::generate::{generate, Profile};
use convexint::render::{report_json, report_text};
use convexint::run::{run_file, verify_file, RunOptions};

#[derive(Parser)]
#[command(name = "convexint", version, about = "Exact checks of epsilon-subdifferential formulas for integral functionals")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run the queries of an instance file.
    Check {
        file: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Seed for sampled points.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated eps_k for br_run queries without their own schedule.
        #[arg(long)]
        eps_schedule: Option<String>,
        /// Comma-separated lambda_k, same length as --eps-schedule.
        #[arg(long)]
        lambda_schedule: Option<String>,
        /// Lift the dimension, atom and piece caps.
        #[arg(long)]
        override_limits: bool,
        /// Include per-query wall time.
        #[arg(long)]
        timing: bool,
    },
    /// Print a random instance with queries.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// box-domains, indicator-heavy, affine-only, kinked or restricted-subspace.
        #[arg(long, default_value = "box-domains")]
        profile: Profile,
    },
    /// Floating-point sequence-space examples.
    Examples {
        #[command(subcommand)]
        which: Example,
    },
    /// Re-check a decomposition certificate file.
    Verify {
        file: PathBuf,
        #[arg(long)]
        override_limits: bool,
    },
}

#[derive(Subcommand)]
enum Example {
    /// 2^n x_n^2 with weights 2^-n.
    L2 {
        #[arg(long, default_value_t = 8)]
        dim: usize,
        /// Comma-separated coordinates; defaults to x_n = 1/n.
        #[arg(long)]
        point: Option<String>,
    },
    /// |x_n|^(1+1/n) with unit weights.
    L1 {
        #[arg(long, default_value_t = 1000)]
        nmax: usize,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn analytic(report: AnalyticReport, format: Format) -> u8 {
    match format {
        Format::Json => emit_json(&serde_json::to_value(&report).expect("json")),
        Format::Text => println!("{}", report.text()),
    }
    u8::from(!report.passed())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check {
            file,
            jobs,
            seed,
            eps_schedule,
            lambda_schedule,
            override_limits,
            timing,
        } => {
            let parse = |s: Option<String>| s.as_deref().map(parse_rational_list).transpose();
            let opts = RunOptions {
                jobs,
                seed,
                eps_schedule: parse(eps_schedule)?,
                lambda_schedule: parse(lambda_schedule)?,
                override_limits,
                timing,
            };
            let doc = InstanceFile::parse(&read(&file)?)?;
            let report = run_file(&doc, &opts)?;
            match cli.format {
                Format::Json => emit_json(&report.to_json()),
                Format::Text => print!("{}", report.to_text()),
            }
            Ok(report.exit_code() as u8)
        }
        Command::Generate { seed, profile } => {
            print!("{}", generate(seed, profile).to_json());
            Ok(0)
        }
        Command::Examples { which } => Ok(match which {
            Example::L2 { dim, point } => {
                let x: Vec<f64> = match point {
                    Some(s) => s
                        .split(',')
                        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad coordinate {t:?}")))
                        .collect::<Result<_>>()?,
                    None => (1..=dim).map(|n| 1.0 / n as f64).collect(),
                };
                anyhow::ensure!(dim >= 1 && x.len() == dim, "--point needs {dim} coordinates");
                analytic(l2_example(dim, &x), cli.format)
            }
            Example::L1 { nmax } => {
                anyhow::ensure!(nmax >= 1, "--nmax must be positive");
                analytic(l1_example(nmax), cli.format)
            }
        }),
        Command::Verify { file, override_limits } => {
            let doc = CertificateFile::parse(&read(&file)?)?;
            let report = verify_file(&doc, override_limits)?;
            match cli.format {
                Format::Json => emit_json(&report_json(&report)),
                Format::Text => println!("{}", report_text(&report)),
            }
            Ok(u8::from(!report.passed()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
