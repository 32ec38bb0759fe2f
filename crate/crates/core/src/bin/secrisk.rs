//! `secrisk scan <root>`: rank hard-coded database secrets by risk.

use clap::{error::ErrorKind, Parser, Subcommand};
use secrisk_core::config::{OutputFormat, ScanConfig, Source};
use secrisk_core::pipeline::Scanner;
use secrisk_core::report::{emit_json, emit_table};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "secrisk", version, about = "Rank hard-coded database secrets by value of asset and ease of attack")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory tree and print the ranked report.
    Scan(ScanArgs),
}

#[derive(clap::Args)]
struct ScanArgs {
    /// Repository root.
    root: PathBuf,
    /// Use fixture and rule-based providers only; no network access.
    #[arg(long)]
    offline: bool,
    #[arg(long, value_parser = ["json", "table"])]
    format: Option<String>,
    /// External secret findings (`{"schema":1,"findings":[...]}`).
    #[arg(long)]
    findings: Option<PathBuf>,
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print full secrets in JSON output.
    #[arg(long)]
    reveal_secrets: bool,
    /// Exit with status 2 when a score reaches this value.
    #[arg(long)]
    alert_threshold: Option<u32>,
    #[arg(long)]
    dns_fixture: Option<PathBuf>,
    #[arg(long)]
    scan_fixture: Option<PathBuf>,
    #[arg(long, value_parser = ["prose", "table3"])]
    ease_mapping: Option<String>,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Any configuration key, e.g. `--set cutoff.semantic=0.7`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(a: &ScanArgs) -> secrisk_core::error::Result<ScanConfig> {
    let mut c = ScanConfig::new(&a.root);
    if let Some(f) = &a.config {
        c.apply_file(f)?;
    }
    let mut cli: Vec<(&str, String)> = Vec::new();
    if a.offline {
        cli.push(("offline", "true".into()));
    }
    if let Some(f) = &a.format {
        cli.push(("format", f.clone()));
    }
    if let Some(p) = &a.findings {
        cli.push(("findings", p.display().to_string()));
    }
    if a.reveal_secrets {
        cli.push(("reveal_secrets", "true".into()));
    }
    if let Some(n) = a.alert_threshold {
        cli.push(("alert_threshold", n.to_string()));
    }
    if let Some(p) = &a.dns_fixture {
        cli.push(("dns_fixture", p.display().to_string()));
    }
    if let Some(p) = &a.scan_fixture {
        cli.push(("scan_fixture", p.display().to_string()));
    }
    if let Some(m) = &a.ease_mapping {
        cli.push(("ease_mapping", m.clone()));
    }
    for (k, v) in cli {
        c.apply(k, &v, Source::Cli, None)?;
    }
    for kv in &a.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| secrisk_core::error::Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        c.apply(k.trim(), v, Source::Cli, None)?;
    }
    Ok(c)
}

fn scan(a: &ScanArgs) -> secrisk_core::error::Result<i32> {
    let config = build_config(a)?;
    let report = Scanner::new(config.clone()).run()?;
    let text = match config.format {
        OutputFormat::Json => emit_json(&report, config.reveal_secrets),
        OutputFormat::Table => {
            if config.reveal_secrets {
                eprintln!("secrisk: --reveal-secrets applies to JSON output only");
            }
            emit_table(&report)
        }
    };
    match &a.output {
        Some(p) => std::fs::write(p, text).map_err(|source| secrisk_core::error::Error::Io { path: p.clone(), source })?,
        None => print!("{text}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) { 0 } else { 1 });
        }
    };
    let Command::Scan(args) = cli.command;
    match scan(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("secrisk: {e}");
            ExitCode::from(1)
        }
    }
}
