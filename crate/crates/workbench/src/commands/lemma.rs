//! Validation-grid driver: one CSV row per `(gamma, delta, t_max)` cell.

use std::path::Path;

use clap::Args;

use var_core::lemma::{run_grid, GridCell, LemmaConfig};

use super::{csv_float, join_csv, parse_recovery, write_text, EXIT_CHECK, EXIT_OK};
use crate::config::WorkbenchConfig;

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[arg(long = "gamma", value_delimiter = ',', default_values_t = vec![0.3, 0.5, 0.7])]
    pub gammas: Vec<f64>,
    #[arg(long = "delta", value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2])]
    pub deltas: Vec<f64>,
    #[arg(long = "t-max", value_delimiter = ',', default_values_t = vec![5, 10, 20])]
    pub t_maxes: Vec<u32>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u32,
    /// `exact`, `undershoot:K`, or `overshoot:P:D`.
    #[arg(long, default_value = "exact")]
    pub recovery: String,
    /// Force the policy's failure probability to zero (closed-form
    /// consistency runs).
    #[arg(long)]
    pub epsilon_zero: bool,
    /// Also sweep overshoot probabilities at the first grid cell and
    /// write `overshoot_sweep.csv` (for plotting).
    #[arg(long = "overshoot-sweep", value_delimiter = ',')]
    pub overshoot_probs: Option<Vec<f64>>,
    #[arg(long, default_value_t = 3)]
    pub overshoot_depth: u32,
}

pub const GRID_CSV_HEADER: &str = "gamma,delta,t_max,epsilon,budget_b,trials,successes,rate,\
ci_low,ci_high,bound,bound_tight,max_bt_leaves,leaf_bound,pass";

pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = String::from(GRID_CSV_HEADER);
    out.push('\n');
    for c in cells {
        out.push_str(&join_csv([
            csv_float(c.gamma),
            csv_float(c.delta),
            c.t_max.to_string(),
            csv_float(c.epsilon),
            c.budget_b.to_string(),
            c.estimate.trials.to_string(),
            c.estimate.successes.to_string(),
            csv_float(c.estimate.rate),
            csv_float(c.estimate.ci_low),
            csv_float(c.estimate.ci_high),
            csv_float(c.bound),
            csv_float(c.bound_tight),
            c.estimate.max_bt_leaves_observed.to_string(),
            c.leaf_bound.to_string(),
            c.passes().to_string(),
        ]));
        out.push('\n');
    }
    out
}

pub fn run(args: &LemmaArgs, config: &WorkbenchConfig, out_dir: &Path) -> anyhow::Result<i32> {
    let recovery = parse_recovery(&args.recovery)?;
    // validate the whole grid before any work; out-of-range values are
    // argument errors
    for &gamma in &args.gammas {
        for &delta in &args.deltas {
            for &t_max in &args.t_maxes {
                LemmaConfig {
                    gamma,
                    delta,
                    t_max,
                    t_corr: t_max.saturating_sub(1).max(1),
                    n_trials: args.trials,
                    master_seed: config.master_seed,
                    epsilon_override: None,
                }
                .validate()?;
            }
        }
    }

    let cells = run_grid(
        &args.gammas,
        &args.deltas,
        &args.t_maxes,
        args.trials,
        config.master_seed,
        recovery,
        args.epsilon_zero.then_some(0.0),
    )?;

    std::fs::create_dir_all(out_dir)?;
    write_text(&out_dir.join("lemma_grid.csv"), &grid_csv(&cells))?;

    if let Some(probs) = &args.overshoot_probs {
        let sweep_config = LemmaConfig {
            gamma: args.gammas[0],
            delta: args.deltas[0],
            t_max: args.t_maxes[0],
            t_corr: args.t_maxes[0].saturating_sub(1).max(1),
            n_trials: args.trials,
            master_seed: config.master_seed,
            epsilon_override: args.epsilon_zero.then_some(0.0),
        };
        let table = var_core::lemma::overshoot_sweep(&sweep_config, probs, args.overshoot_depth);
        let mut csv =
            String::from("overshoot_prob,trials,successes,rate,ci_low,ci_high,max_bt_leaves\n");
        for (prob, e) in &table {
            csv.push_str(&join_csv([
                csv_float(*prob),
                e.trials.to_string(),
                e.successes.to_string(),
                csv_float(e.rate),
                csv_float(e.ci_low),
                csv_float(e.ci_high),
                e.max_bt_leaves_observed.to_string(),
            ]));
            csv.push('\n');
        }
        write_text(&out_dir.join("overshoot_sweep.csv"), &csv)?;
    }

    let failures = cells.iter().filter(|c| !c.passes()).count();
    for cell in &cells {
        println!(
            "gamma={} delta={} t_max={}: rate {:.4} (ci [{:.4}, {:.4}]) vs bound {:.2} -> {}",
            cell.gamma,
            cell.delta,
            cell.t_max,
            cell.estimate.rate,
            cell.estimate.ci_low,
            cell.estimate.ci_high,
            cell.bound,
            if cell.passes() { "pass" } else { "FAIL" }
        );
    }
    println!(
        "{} cell(s), {} failure(s) -> {}",
        cells.len(),
        failures,
        out_dir.display()
    );
    Ok(if failures == 0 { EXIT_OK } else { EXIT_CHECK })
}
