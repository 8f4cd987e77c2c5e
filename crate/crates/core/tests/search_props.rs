//! Engine-level properties: determinism, progress bounds, depth bounds,
//! and the leaf bound under recovery-reliable synthetic policies.

use rand::{Rng, RngCore};

use var_core::lemma::{
    derive_params, make_synthetic_policy, ChainValidator, RecoveryMode, SyntheticPolicyParams,
};
use var_core::search::{
    run_search, trace_search, AcceptAll, EventVerdict, ExhaustionPolicy, Policy, SearchConfig,
    SearchStatus, StepProposal,
};
use var_core::tree::NodeId;

fn lemma_setup(
    gamma: f64,
    delta: f64,
    t_max: u32,
    seed: u64,
) -> (SearchConfig, SyntheticPolicyParams) {
    let derived = derive_params(gamma, delta, t_max).unwrap();
    let mut config = SearchConfig::new(t_max, derived.budget_b, seed);
    config.exhaustion = ExhaustionPolicy::EndSearch;
    let params = SyntheticPolicyParams {
        gamma,
        epsilon: derived.epsilon,
        t_corr: t_max - 1,
        recovery: RecoveryMode::Exact,
    };
    (config, params)
}

#[test]
fn identical_seeds_replay_identically() {
    for seed in 0..100u64 {
        let (config, params) = lemma_setup(0.5, 0.1, 8, seed);
        let chain = var_core::lemma::chain_propositions(params.t_corr);
        let validator = ChainValidator::permissive(chain);
        let mut p1 = make_synthetic_policy(params);
        let mut p2 = make_synthetic_policy(params);
        let (o1, e1) = trace_search(&mut p1, &validator, &config, "problem");
        let (o2, e2) = trace_search(&mut p2, &validator, &config, "problem");
        assert_eq!(o1, o2, "outcome differs at seed {seed}");
        assert_eq!(e1, e2, "event log differs at seed {seed}");
    }
}

#[test]
fn solved_runs_end_with_the_accepting_finish() {
    let mut solved_seen = 0;
    for seed in 0..50u64 {
        let (config, params) = lemma_setup(0.6, 0.1, 6, seed);
        let chain = var_core::lemma::chain_propositions(params.t_corr);
        let validator = ChainValidator::permissive(chain);
        let mut policy = make_synthetic_policy(params);
        let (outcome, events) = trace_search(&mut policy, &validator, &config, "problem");
        if outcome.is_solved() {
            solved_seen += 1;
            let last = events.last().unwrap();
            assert_eq!(last.verdict, EventVerdict::Accepted);
            assert_eq!(last.proposal_kind, var_core::search::EventKind::Finish);
        }
    }
    assert!(solved_seen > 30);
}

#[test]
fn leaf_bound_holds_for_recovery_reliable_policies() {
    for seed in 200..400u64 {
        let (config, params) = lemma_setup(0.5, 0.1, 10, seed);
        let chain = var_core::lemma::chain_propositions(params.t_corr);
        let validator = ChainValidator::permissive(chain);
        let mut policy = make_synthetic_policy(params);
        let outcome = run_search(&mut policy, &validator, &config, "problem");
        let bound = ((config.budget_b - 1) * (config.t_max - 1)) as usize;
        assert!(
            outcome.tree.count_backtrack_leaves() <= bound,
            "seed {seed} exceeded the leaf bound"
        );
        assert!(outcome.stats.max_depth_reached <= config.t_max);
    }
}

/// Policy that emits arbitrary garbage: random extends, random backtrack
/// targets (often invalid), and premature finishes.
struct FuzzPolicy;

impl Policy for FuzzPolicy {
    fn propose(
        &mut self,
        path: &[(NodeId, &str)],
        _attempt: u32,
        rng: &mut dyn RngCore,
    ) -> StepProposal {
        match rng.random_range(0..10) {
            0..=4 => StepProposal::Extend {
                proposition: format!("g{}", rng.random_range(0..1000)),
            },
            5..=7 => StepProposal::BacktrackTo {
                target: NodeId(rng.random_range(0..30)),
            },
            8 => StepProposal::BacktrackTo {
                target: path.first().map(|(id, _)| *id).unwrap_or(NodeId(0)),
            },
            _ => StepProposal::Finish,
        }
    }
}

#[test]
fn no_livelock_under_fuzz_policies() {
    for seed in 0..200u64 {
        let mut config = SearchConfig::new(6, 3, seed);
        config.max_total_expansions = 40;
        let (outcome, events) = trace_search(&mut FuzzPolicy, &AcceptAll, &config, "Q");
        // every event either creates a node or charges one of at most
        // cap + 1 nodes, each at most budget_b times
        let cap = config.max_total_expansions as usize;
        let step_bound = cap + (cap + 1) * config.budget_b as usize + 1;
        assert!(
            events.len() <= step_bound,
            "seed {seed}: {} events",
            events.len()
        );
        assert!(outcome.stats.max_depth_reached <= config.t_max);
        assert!(outcome.tree.len() - 1 <= cap);
        if outcome.is_solved() {
            assert!(outcome.tree.is_finalized());
        }
    }
}

#[test]
fn statuses_partition_outcomes() {
    let mut budget_exhausted = 0;
    let mut cap_reached = 0;
    let mut solved = 0;
    for seed in 0..120u64 {
        let mut config = SearchConfig::new(5, 2, seed);
        config.max_total_expansions = 12;
        let outcome = run_search(&mut FuzzPolicy, &AcceptAll, &config, "Q");
        match outcome.status {
            SearchStatus::Solved { .. } => solved += 1,
            SearchStatus::BudgetExhausted => budget_exhausted += 1,
            SearchStatus::GlobalCapReached => cap_reached += 1,
        }
        assert_eq!(outcome.is_solved(), outcome.tree.is_finalized());
    }
    assert!(solved > 0 && budget_exhausted > 0 && cap_reached > 0);
}
