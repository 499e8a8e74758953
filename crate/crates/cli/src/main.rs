//! `fingen`: batch driver for counting, codebook, tower, reduction, recoding
//! and oracle experiments. Each run prints one report as JSON or CSV.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use commands::{Ctx, Report};

pub const SCHEMA: &str = "1";
const DEFAULT_MAX_POINTS: usize = 2000;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed config.
    Usage(String),
    Lib(fingen::Error),
}

impl From<fingen::Error> for CliError {
    fn from(e: fingen::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use fingen::Error::*;
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(
                Capacity(_)
                | Invariant(_)
                | Decode { .. }
                | AtypicalName { .. }
                | EnumerationExhausted
                | InsufficientRoom { .. }
                | Aperiodic(_),
            ) => 1,
            CliError::Lib(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "fingen", version, about = "Generating-partition experiments on finite systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config for the subcommand; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Refuse systems with more points.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_POINTS)]
    max_points: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Typical-set counts against their entropy window.
    Count,
    /// Rational vectors as convex combinations of vectors with a common denominator.
    Decompose,
    /// d̄-separated injections from fibers into typical codewords.
    Codebook,
    /// Tower over a periodic system, with its audit.
    Tower,
    /// Alphabet reduction relative to an invariant algebra.
    Reduce,
    /// Recode a labeling into a pre-partition with prescribed masses.
    Recode,
    /// Exhaustive minimum-entropy generator search.
    Oracle,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Count => "count",
            Command::Decompose => "decompose",
            Command::Codebook => "codebook",
            Command::Tower => "tower",
            Command::Reduce => "reduce",
            Command::Recode => "recode",
            Command::Oracle => "oracle",
        }
    }
}

macro_rules! dispatch {
    ($cli:expr, $ty:ty, $run:path) => {{
        let (cfg, base): ($ty, _) = config::load($cli.config.as_deref())?;
        let seed = $cli.seed.or(cfg.seed).unwrap_or(0);
        let ctx = Ctx { seed, base, max_points: $cli.max_points };
        (seed, $run(&cfg, &ctx)?)
    }};
}

fn run(cli: &Cli) -> Result<(u64, Report), CliError> {
    Ok(match cli.command {
        Command::Count => dispatch!(cli, commands::CountConfig, commands::count),
        Command::Decompose => dispatch!(cli, commands::DecomposeConfig, commands::decompose),
        Command::Codebook => dispatch!(cli, commands::CodebookConfig, commands::codebook),
        Command::Tower => dispatch!(cli, commands::TowerConfig, commands::tower),
        Command::Reduce => dispatch!(cli, commands::ReduceConfig, commands::reduce),
        Command::Recode => dispatch!(cli, commands::RecodeConfig, commands::recode),
        Command::Oracle => dispatch!(cli, commands::OracleConfig, commands::oracle),
    })
}

fn render(cli: &Cli, seed: u64, report: Report) -> Result<Vec<u8>, CliError> {
    match cli.format {
        Format::Json => {
            let doc = json!({
                "schema": SCHEMA,
                "command": cli.command.name(),
                "seed": seed,
                "ok": report.ok,
                "report": report.body,
            });
            let mut out = serde_json::to_vec_pretty(&doc).expect("serializable");
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
            let mut header = vec!["schema", "command", "seed"];
            header.extend(&report.header);
            w.write_record(&header).map_err(io)?;
            let seed = seed.to_string();
            for row in &report.rows {
                let mut rec = vec![SCHEMA, cli.command.name(), seed.as_str()];
                rec.extend(row.iter().map(String::as_str));
                w.write_record(&rec).map_err(io)?;
            }
            w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run(&cli).and_then(|(seed, report)| {
        let ok = report.ok;
        let bytes = render(&cli, seed, report)?;
        match &cli.out {
            Some(p) => {
                std::fs::write(p, &bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?
            }
            None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Usage(format!("stdout: {e}")))?,
        }
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("fingen: invariant check failed; see report");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("fingen: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
