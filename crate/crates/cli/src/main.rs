mod commands;
mod config;
mod files;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::kv::Key;

use crate::commands::{CmdResult, OrExit};
use crate::config::{ConfigArgs, RunConfig};

/// Audit colour contrast of archived homepages.
#[derive(Parser)]
#[command(name = "crawlcontrast", version)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find each domain's homepage capture in the crawl index
    Locate,
    /// Download located records into the cache with byte-range requests
    Fetch,
    /// Extract colours, build pairings and score them
    Analyze,
    /// Aggregate results into report tables
    Report {
        /// Results file (defaults to <out>/results.jsonl)
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// locate, fetch, analyze and report in one go
    Run,
    /// Score a colour pair, or audit a local HTML or WARC file
    Check {
        /// FG BG, or a single file path
        #[arg(required = true, num_args = 1..=2)]
        inputs: Vec<String>,
        /// Character encoding for HTML files without a declaration
        #[arg(long)]
        charset: Option<String>,
    },
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("CRAWLCONTRAST_LOG", "info"))
        .format(|buf, record| {
            let target = record.target();
            let stage = target.strip_prefix("crawlcontrast::").unwrap_or(target);
            write!(buf, "level={} stage={}", record.level(), stage)?;
            if let Some(domain) = record.key_values().get(Key::from("domain")) {
                write!(buf, " domain={domain}")?;
            }
            writeln!(buf, " msg={:?}", record.args().to_string())
        })
        .init();
}

fn dispatch(cli: Cli) -> CmdResult {
    if let Command::Check { inputs, charset } = &cli.command {
        return commands::check(inputs, charset.as_deref());
    }
    let cfg = RunConfig::resolve(&cli.config).usage()?;
    match cli.command {
        Command::Locate => commands::locate(&cfg),
        Command::Fetch => commands::fetch(&cfg),
        Command::Analyze => commands::analyze(&cfg),
        Command::Report { results } => commands::report(&cfg, results.as_deref()),
        Command::Run => commands::run(&cfg),
        Command::Check { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            log::error!(target: "cli", "{failure}");
            ExitCode::from(failure.code)
        }
    }
}
