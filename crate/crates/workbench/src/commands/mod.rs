//! Subcommand implementations and shared plumbing.

pub mod lemma;
pub mod parity;
pub mod score;
pub mod search;

use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;

use var_core::lemma::RecoveryMode;

/// Exit codes: 0 success, 1 hard I/O or parse failure, 2 check failure,
/// 3 bad arguments.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CHECK: i32 = 2;
pub const EXIT_ARGS: i32 = 3;

/// Argument-level problem: maps to exit code 3.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct BadArgs(pub String);

pub fn bad_args(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(BadArgs(msg.into()))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: bad record", path.display(), i + 1))?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// CSV cell for floats: `{}` is the shortest round-trip form, which keeps
/// outputs byte-stable across runs.
pub fn csv_float(v: f64) -> String {
    format!("{v}")
}

pub fn join_csv<T: Display>(cells: impl IntoIterator<Item = T>) -> String {
    cells
        .into_iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Parse `exact`, `undershoot:K`, or `overshoot:P:D`.
pub fn parse_recovery(spec: &str) -> anyhow::Result<RecoveryMode> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["exact"] => Ok(RecoveryMode::Exact),
        ["undershoot", k] => {
            let max_extra = k
                .parse()
                .map_err(|_| bad_args(format!("bad undershoot distance `{k}`")))?;
            Ok(RecoveryMode::Undershoot { max_extra })
        }
        ["overshoot", p, d] => {
            let prob: f64 = p
                .parse()
                .map_err(|_| bad_args(format!("bad overshoot probability `{p}`")))?;
            let depth = d
                .parse()
                .map_err(|_| bad_args(format!("bad overshoot depth `{d}`")))?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(bad_args(format!(
                    "overshoot probability {prob} not in [0, 1]"
                )));
            }
            Ok(RecoveryMode::Overshoot { prob, depth })
        }
        _ => Err(bad_args(format!(
            "unknown recovery mode `{spec}` (expected exact, undershoot:K, or overshoot:P:D)"
        ))),
    }
}
