#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod error;
mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use args::{flag_overrides, Cli, Command, OutputArgs, ReplayArgs};
use error::CliError;
use manifest::{OutputDigest, RunManifest};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: cannot start the worker pool: {e}");
        return ExitCode::from(2);
    }
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Replay(a) => replay(a),
        _ => {
            let output = command.output().expect("non-replay commands have output flags");
            let mut user = match &output.config {
                Some(path) => read_json(path)?,
                None => json!({}),
            };
            config::merge(&mut user, flag_overrides(command).map_err(CliError::Invalid)?);
            run_resolved(command.name(), user, output)
        }
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{} is not valid JSON: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn run_resolved(name: &str, user: Value, output: &OutputArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let resolved = config::resolve(name, user)?;
    let outcome = commands::execute(name, &resolved)?;
    let target = match &output.out {
        Some(path) => {
            write_file(path, &outcome.bytes)?;
            path.display().to_string()
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&outcome.bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("writing stdout: {e}")))?;
            "-".to_string()
        }
    };
    let manifest = RunManifest {
        command: name.to_string(),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config: resolved,
        threads: rayon::current_num_threads(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: vec![OutputDigest::of(&target, &outcome.bytes)],
    };
    let manifest_path = output.manifest.clone().or_else(|| {
        output.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match manifest_path {
        Some(path) => write_file(&path, manifest.to_json().as_bytes())?,
        None => eprint!("{}", manifest.to_json()),
    }
    match outcome.expectation {
        Some(msg) => Err(CliError::Expectation(msg)),
        None => Ok(()),
    }
}

fn replay(a: &ReplayArgs) -> Result<(), CliError> {
    let manifest = RunManifest::read(&a.manifest)?;
    let expected = manifest
        .outputs
        .first()
        .ok_or_else(|| CliError::Invalid("the manifest records no output".into()))?;
    let outcome = commands::execute(&manifest.command, &manifest.config)?;
    if let Some(path) = &a.out {
        write_file(path, &outcome.bytes)?;
    }
    let got = OutputDigest::of("-", &outcome.bytes);
    if got.sha256 != expected.sha256 {
        return Err(CliError::Expectation(format!(
            "{} output differs from the manifest: sha256 {} instead of {}",
            manifest.command, got.sha256, expected.sha256
        )));
    }
    eprintln!("{}: output reproduced, sha256 {}", manifest.command, got.sha256);
    Ok(())
}
