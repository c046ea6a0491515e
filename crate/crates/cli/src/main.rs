use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use prevision::engine::{self, Mode, Report, RunOptions};
use prevision::scenarios::{self, REGISTRY};
use prevision::specfile::SpecFile;
use prevision::{Exec, Num};

/// Exact checks of forecasts, scoring rules and finitely additive charges.
#[derive(Parser)]
#[command(name = "prevision", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Run a built-in scenario.
    Run {
        id: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run the checks of a spec file.
    Check {
        path: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Write a built-in scenario as a spec file.
    Export {
        id: String,
        /// Scenario parameter, e.g. `c=1/4`.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Args)]
struct Flags {
    /// Indices per column in tables and case analyses.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    depth: u64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-state table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Spacing of the rival grid.
    #[arg(long, default_value = "1/16")]
    grid: String,
    /// Margin factor of the dominating-rival construction, in (0, 1).
    #[arg(long, default_value = "9/10")]
    safety: String,
    /// Cap on rival candidates per probe.
    #[arg(long, default_value_t = 1024)]
    max_candidates: usize,
    /// Scenario parameter, e.g. `c=1/4`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Evaluate everything on one thread.
    #[arg(long)]
    sequential: bool,
}

fn parse_num(what: &str, s: &str) -> Result<Num> {
    s.parse::<Num>().map_err(|e| anyhow!("--{what} {s}: {e}"))
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, Num>> {
    raw.iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| anyhow!("--param {p}: expected KEY=VALUE"))?;
            Ok((k.trim().to_string(), parse_num("param", v.trim())?))
        })
        .collect()
}

impl Flags {
    fn options(&self) -> Result<RunOptions> {
        let grid = parse_num("grid", &self.grid)?;
        if !grid.is_positive() {
            bail!("--grid must be positive");
        }
        let safety = parse_num("safety", &self.safety)?;
        if !(safety.is_positive() && safety < Num::one()) {
            bail!("--safety must lie strictly between 0 and 1");
        }
        Ok(RunOptions {
            depth: self.depth,
            mode: match self.mode {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Float => Mode::Float,
            },
            grid,
            safety,
            max_candidates: self.max_candidates.max(1),
            exec: if self.sequential {
                Exec::Sequential
            } else {
                Exec::Parallel
            },
        })
    }
}

/// Write through a sibling temp file and rename over the target.
fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("{} is not a file path", path.display()))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, body).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))
}

fn summarize(report: &Report) {
    println!(
        "{} ({}, depth {})",
        report.scenario, report.mode, report.depth
    );
    for c in &report.checks {
        println!("  {} {}", if c.pass { "PASS" } else { "FAIL" }, c.id);
        if let Some(e) = c.outputs.get("message").filter(|_| !c.pass) {
            println!("       error: {}", e.as_str().unwrap_or_default());
        }
        for e in c.expectations.iter().filter(|e| !e.pass) {
            println!(
                "       {}: expected {}, got {}",
                e.key, e.expected, e.actual
            );
        }
    }
    println!(
        "{}: {} passed, {} failed",
        report.result, report.passed, report.failed
    );
}

fn execute(spec: &SpecFile, flags: &Flags) -> Result<bool> {
    let opts = flags.options()?;
    let run = engine::run(spec, &opts).map_err(|e| anyhow!("{e}"))?;
    if let Some(p) = &flags.out {
        write_atomic(p, &run.report.to_json())?;
    }
    if let Some(p) = &flags.csv {
        write_atomic(p, &run.csv())?;
    }
    summarize(&run.report);
    Ok(run.report.pass())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::List => {
            for s in REGISTRY {
                let params: Vec<String> =
                    s.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                if params.is_empty() {
                    println!("{} \u{2014} {}", s.id, s.title);
                } else {
                    println!("{} \u{2014} {} [{}]", s.id, s.title, params.join(", "));
                }
            }
            Ok(true)
        }
        Command::Run { id, flags } => {
            let spec = scenarios::build_scenario(&id, &parse_params(&flags.params)?)?;
            execute(&spec, &flags)
        }
        Command::Check { path, flags } => {
            if !flags.params.is_empty() {
                bail!("--param applies to built-in scenarios only");
            }
            let text =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let spec =
                SpecFile::from_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            execute(&spec, &flags)
        }
        Command::Export { id, params, out } => {
            let spec = scenarios::build_scenario(&id, &parse_params(&params)?)?;
            let mut body = spec.to_json();
            body.push('\n');
            match out {
                Some(p) => write_atomic(&p, &body)?,
                None => print!("{body}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
