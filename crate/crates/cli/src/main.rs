//! `bosonic-lab`: parameter sweeps over the pure-loss channel bounds.
//!
//! Exit codes: 0 when every check passes, 2 when a proven inequality came out
//! violated, 3 on a configuration error.

mod commands;
mod config;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use crate::config::{Cli, Format, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

const EXIT_VIOLATION: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run(cli);
    match &result {
        Ok(true) => eprintln!("theorem violation detected; see rows with status \"fail\""),
        Err(e) => eprintln!("{e}"),
        Ok(false) => {}
    }
    ExitCode::from(exit_code(&result))
}

fn exit_code(result: &Result<bool, CliError>) -> u8 {
    match result {
        Ok(false) => 0,
        Ok(true) => EXIT_VIOLATION,
        Err(_) => EXIT_CONFIG,
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| CliError::Config(format!("LAB_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

/// Returns whether a theorem violation was found.
fn run(cli: Cli) -> Result<bool, CliError> {
    let (command, flags) = cli.command.split();
    if flags.schema {
        print!("{}", table::schema_dump(&commands::schema(command)));
        return Ok(false);
    }
    configure_threads()?;
    let cfg = RunConfig::resolve(command, &flags)?;
    let outcome = commands::run(&cfg)?;
    match cfg.format {
        Format::Json => emit(cfg.out.as_deref(), &table::to_json(&outcome.tables, &cfg))?,
        Format::Csv => {
            for (i, t) in outcome.tables.iter().enumerate() {
                let text = t.to_csv(&cfg);
                match (&cfg.out, i) {
                    (Some(path), 0) => write_file(path, &text)?,
                    (Some(path), _) => write_file(&sibling(path, t.name), &text)?,
                    (None, 0) => emit(None, &text)?,
                    (None, _) => emit(None, &format!("\n{text}"))?,
                }
            }
        }
    }
    for (path, text) in &outcome.side_files {
        write_file(path, text)?;
    }
    Ok(outcome.violation)
}

/// `out.csv` → `out.summary.csv`.
fn sibling(path: &Path, table: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{table}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{table}"),
    };
    path.with_file_name(name)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_contract() {
        assert_eq!(exit_code(&Ok(false)), 0);
        assert_eq!(exit_code(&Ok(true)), 2);
        assert_eq!(exit_code(&Err(CliError::Config("x".into()))), 3);
        let io = CliError::Io {
            path: PathBuf::from("/nonexistent/out.csv"),
            source: std::io::Error::from(std::io::ErrorKind::NotFound),
        };
        assert_eq!(exit_code(&Err(io)), 3);
    }

    #[test]
    fn summary_tables_go_to_sibling_files() {
        assert_eq!(sibling(Path::new("/tmp/run.csv"), "summary"), PathBuf::from("/tmp/run.summary.csv"));
        assert_eq!(sibling(Path::new("run"), "summary"), PathBuf::from("run.summary"));
    }

    #[test]
    fn config_errors_surface_before_any_output() {
        let cli = Cli::try_parse_from(["bosonic-lab", "bounds", "--eta", "1.5,abc"]).unwrap();
        assert!(matches!(run(cli), Err(CliError::Config(_))));
    }
}
