//! Single-search driver with a built-in synthetic policy or a scripted
//! proposal file, writing the outcome and the replayable event log.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use var_core::lemma::{
    chain_propositions, make_synthetic_policy, ChainValidator, RecoveryMode, SyntheticPolicyParams,
};
use var_core::reward::StepValidator;
use var_core::search::{
    trace_search, AcceptAll, ExhaustionPolicy, Policy, ScriptedPolicy, SearchConfig, SearchStats,
    SearchStatus, StepProposal,
};
use var_core::tree::TreeSnapshot;

use super::{bad_args, parse_recovery, write_jsonl, write_text, EXIT_CHECK, EXIT_OK};
use crate::config::WorkbenchConfig;

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// `synthetic:gamma=0.5,epsilon=0.0025,t_corr=9[,recovery=exact]`
    /// or `scripted:proposals.json` (a JSON array of proposals).
    #[arg(long)]
    pub policy: String,
    /// Root proposition (the problem statement).
    #[arg(long, default_value = "problem")]
    pub root: String,
    #[arg(long)]
    pub t_max: Option<u32>,
    #[arg(long)]
    pub budget_b: Option<u32>,
    /// End the search at the first exhausted node instead of forcing a
    /// parent backtrack (the trial-style semantics).
    #[arg(long)]
    pub end_on_exhaustion: bool,
}

#[derive(Debug)]
enum PolicySpec {
    Synthetic(SyntheticPolicyParams),
    Scripted(PathBuf),
}

fn parse_policy_spec(spec: &str) -> anyhow::Result<PolicySpec> {
    if let Some(path) = spec.strip_prefix("scripted:") {
        return Ok(PolicySpec::Scripted(PathBuf::from(path)));
    }
    let Some(body) = spec.strip_prefix("synthetic:") else {
        return Err(bad_args(format!(
            "unknown policy `{spec}` (expected synthetic:... or scripted:FILE)"
        )));
    };
    let mut gamma = None;
    let mut epsilon = 0.0f64;
    let mut t_corr = None;
    let mut recovery = RecoveryMode::Exact;
    for part in body.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad_args(format!("expected key=value, got `{part}`")))?;
        match key {
            "gamma" => gamma = Some(value.parse::<f64>().map_err(|e| bad_args(e.to_string()))?),
            "epsilon" => {
                epsilon = value
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| bad_args(e.to_string()))?
            }
            "t_corr" => t_corr = Some(value.parse::<u32>().map_err(|e| bad_args(e.to_string()))?),
            "recovery" => recovery = parse_recovery(value)?,
            _ => return Err(bad_args(format!("unknown synthetic-policy key `{key}`"))),
        }
    }
    let gamma = gamma.ok_or_else(|| bad_args("synthetic policy requires gamma="))?;
    let t_corr = t_corr.ok_or_else(|| bad_args("synthetic policy requires t_corr="))?;
    if !(0.0..1.0).contains(&gamma) || gamma == 0.0 {
        return Err(bad_args(format!("gamma {gamma} not in (0, 1)")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(bad_args(format!("epsilon {epsilon} not in [0, 1]")));
    }
    Ok(PolicySpec::Synthetic(SyntheticPolicyParams {
        gamma,
        epsilon,
        t_corr,
        recovery,
    }))
}

#[derive(Serialize)]
struct OutcomeDoc {
    #[serde(flatten)]
    status: SearchStatus,
    stats: SearchStats,
    tree: TreeSnapshot,
}

pub fn run(args: &SearchArgs, config: &WorkbenchConfig, out_dir: &Path) -> anyhow::Result<i32> {
    let t_max = args.t_max.unwrap_or(config.search.t_max);
    let budget_b = args.budget_b.unwrap_or(config.search.budget_b);
    let mut search_config = SearchConfig {
        t_max,
        budget_b,
        thresholds: config.thresholds,
        max_total_expansions: config
            .search
            .max_total_expansions
            .unwrap_or(10 * budget_b * t_max),
        seed: config.master_seed,
        exhaustion: ExhaustionPolicy::ForceParentBacktrack,
    };
    if args.end_on_exhaustion {
        search_config.exhaustion = ExhaustionPolicy::EndSearch;
    }
    if !search_config.is_valid() {
        return Err(bad_args("search requires t_max >= 2 and budget_b >= 1"));
    }

    let (mut policy, validator): (Box<dyn Policy>, Box<dyn StepValidator>) =
        match parse_policy_spec(&args.policy)? {
            PolicySpec::Synthetic(params) => {
                if params.t_corr + 1 > t_max {
                    return Err(bad_args(format!(
                        "t_corr {} needs t_max of at least {}",
                        params.t_corr,
                        params.t_corr + 1
                    )));
                }
                let chain = chain_propositions(params.t_corr);
                (
                    Box::new(make_synthetic_policy(params)),
                    Box::new(ChainValidator::permissive(chain)),
                )
            }
            PolicySpec::Scripted(path) => {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
                let proposals: Vec<StepProposal> = serde_json::from_str(&text)
                    .map_err(|e| anyhow::anyhow!("parsing {}: {e}", path.display()))?;
                (
                    Box::new(ScriptedPolicy::new(proposals)),
                    Box::new(AcceptAll),
                )
            }
        };

    let (outcome, events) = trace_search(&mut *policy, &*validator, &search_config, &args.root);

    std::fs::create_dir_all(out_dir)?;
    let doc = OutcomeDoc {
        status: outcome.status.clone(),
        stats: outcome.stats,
        tree: outcome.tree.snapshot(),
    };
    write_text(
        &out_dir.join("outcome.json"),
        &serde_json::to_string_pretty(&doc)?,
    )?;
    write_jsonl(&out_dir.join("events.jsonl"), &events)?;

    let solved = outcome.is_solved();
    println!(
        "search: {} ({} events, {} backtracks, {} forced) -> {}",
        match &outcome.status {
            SearchStatus::Solved { .. } => "solved",
            SearchStatus::BudgetExhausted => "budget exhausted",
            SearchStatus::GlobalCapReached => "global cap reached",
        },
        events.len(),
        outcome.stats.backtracks,
        outcome.stats.forced_backtracks,
        out_dir.display()
    );
    Ok(if solved { EXIT_OK } else { EXIT_CHECK })
}
