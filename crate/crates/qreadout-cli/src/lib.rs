//! Command-line front end: argument parsing, configuration layering,
//! output files and run manifests.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use serde_json::json;

use args::{Burgers, Cfd, Cli, Command};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QREADOUT_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit status 2.
    Usage(String),
    /// Failure while running; exit status 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::Runtime(e)
    }
}

impl From<qreadout::Error> for CliError {
    fn from(e: qreadout::Error) -> Self {
        Self::Runtime(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.into())
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Bench(args::Bench::Example1(_)) => "bench example1",
        Command::Bench(args::Bench::Example2(_)) => "bench example2",
        Command::Bench(args::Bench::Postproc(_)) => "bench postproc",
        Command::Bench(args::Bench::CfdScaling(_)) => "bench cfd-scaling",
        Command::Readout(_) => "readout",
        Command::Cfd(Cfd::Visualize(_)) => "cfd visualize",
        Command::Burgers(Burgers::Run(_)) => "burgers run",
        Command::EstimateShots(_) => "estimate-shots",
    }
}

/// Error variant name of the library error behind `e`, if any.
fn error_kind(e: &anyhow::Error) -> String {
    e.chain()
        .find_map(|c| c.downcast_ref::<qreadout::Error>())
        .map(|q| {
            let dbg = format!("{q:?}");
            dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_owned()
        })
        .unwrap_or_else(|| "Other".into())
}

/// One-line JSON record for a runtime failure.
pub fn error_record(command: &str, e: &anyhow::Error) -> String {
    json!({
        "status": "error",
        "command": command,
        "kind": error_kind(e),
        "message": e.to_string(),
        "causes": e.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
    })
    .to_string()
}

fn execute(cli: &Cli, name: &str) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        // A pool that already exists (repeated in-process calls) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(usize::from(j)).build_global();
    }
    let file = cli.config.as_deref().map(config::load_file).transpose()?;
    let root = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qreadout-out"));
    let mut out = output::OutDir::create(root)?;
    let f = file.as_ref();
    let report = match &cli.command {
        Command::Bench(b) => commands::bench(b, f, &mut out)?,
        Command::Readout(a) => commands::readout_cmd(a, f, &mut out)?,
        Command::Cfd(Cfd::Visualize(a)) => commands::visualize(a, f, &mut out)?,
        Command::Burgers(Burgers::Run(a)) => commands::burgers(a, f, &mut out)?,
        Command::EstimateShots(a) => commands::estimate(a, f, &mut out)?,
    };
    out.write_manifest(name, &report.config, report.seed, &report.summary)?;
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status: 0 on success, 1 on runtime failure, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let name = command_name(&cli.command);
    match execute(&cli, name) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("{}", error_record(name, &e));
            1
        }
    }
}
