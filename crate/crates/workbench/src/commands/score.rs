//! Batch reward scoring: trajectories paired line-by-line with
//! ground-truth annotations.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use var_core::reward::{total_reward, AnnotationRecord, RewardVector};

use super::{csv_float, read_jsonl, write_jsonl, write_text, EXIT_IO, EXIT_OK};
use crate::config::WorkbenchConfig;

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Trajectory records, one JSON object per line: {"id"?, "text"}.
    #[arg(long)]
    pub trajectories: PathBuf,
    /// Ground-truth annotations, one per line: {"question", "answer", "boxes"}.
    #[arg(long)]
    pub annotations: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    #[serde(default)]
    pub id: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardRow {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub acc: f64,
    pub fmt: f64,
    pub sem: f64,
    pub geo: f64,
    pub total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn run(args: &ScoreArgs, config: &WorkbenchConfig, out_dir: &Path) -> anyhow::Result<i32> {
    let records: Vec<TrajectoryRecord> = read_jsonl(&args.trajectories)?;
    let annotations: Vec<AnnotationRecord> = read_jsonl(&args.annotations)?;
    if records.len() != annotations.len() {
        anyhow::bail!(
            "{} trajectories but {} annotations; records pair by line",
            records.len(),
            annotations.len()
        );
    }
    let oracle = config.build_oracle()?;

    let mut rows = Vec::with_capacity(records.len());
    let mut hard_failures = 0usize;
    for (index, (record, annotation)) in records.iter().zip(&annotations).enumerate() {
        let mut row = RewardRow {
            index,
            id: record.id.clone(),
            acc: 0.0,
            fmt: 0.0,
            sem: 0.0,
            geo: 0.0,
            total: 0.0,
            error: None,
        };
        let scored: Result<RewardVector, String> = annotation
            .ground_truth()
            .map_err(|e| format!("annotation: {e}"))
            .and_then(|gt| {
                total_reward(
                    &record.text,
                    &annotation.question,
                    &gt,
                    &config.weights,
                    &*oracle,
                )
                .map_err(|e| e.to_string())
            });
        match scored {
            Ok(v) => {
                row.acc = v.acc;
                row.fmt = v.fmt;
                row.sem = v.sem;
                row.geo = v.geo;
                row.total = v.total;
            }
            Err(message) => {
                eprintln!("record {index}: {message}");
                row.error = Some(message);
                hard_failures += 1;
            }
        }
        rows.push(row);
    }

    std::fs::create_dir_all(out_dir)?;
    write_jsonl(&out_dir.join("rewards.jsonl"), &rows)?;

    let n = rows.len().max(1) as f64;
    let mean = |f: fn(&RewardRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let summary = format!(
        "component,mean\nacc,{}\nfmt,{}\nsem,{}\ngeo,{}\ntotal,{}\n",
        csv_float(mean(|r| r.acc)),
        csv_float(mean(|r| r.fmt)),
        csv_float(mean(|r| r.sem)),
        csv_float(mean(|r| r.geo)),
        csv_float(mean(|r| r.total)),
    );
    write_text(&out_dir.join("summary.csv"), &summary)?;

    println!(
        "scored {} records -> {} ({} hard failure(s))",
        rows.len(),
        out_dir.display(),
        hard_failures
    );
    Ok(if hard_failures > 0 { EXIT_IO } else { EXIT_OK })
}
