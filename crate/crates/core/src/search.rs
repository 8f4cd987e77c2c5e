//! Budgeted depth-first construction of a reasoning tree, driven by a
//! pluggable stochastic policy and step validator.
//!
//! Attempt accounting mirrors the per-node generative budget: a node is
//! charged for rejected extends, protocol violations, rejected or
//! too-shallow finishes, and for every backtrack that resets the frontier
//! onto it (each such arrival is one failed attempt to advance past it).
//! Accepted extends are free — advancing is the success case. When a
//! node's charges reach the budget it is exhausted: depending on
//! configuration the engine either forces a backtrack to its parent or
//! ends the search, and exhaustion at the root always ends the search.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::reward::{apply_thresholds, FailReason, StepValidator, StepVerdict, Thresholds};
use crate::tree::{NodeId, ReasoningTree, TreeError, ROOT};

/// One proposal from the policy at the current frontier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepProposal {
    Extend { proposition: String },
    BacktrackTo { target: NodeId },
    Finish,
}

/// Proposal source. Implementations see only the active path (root to
/// frontier), the attempt index at the frontier, and the engine's
/// randomness stream, so runs are reproducible from the seed.
pub trait Policy {
    fn propose(
        &mut self,
        path: &[(NodeId, &str)],
        attempt: u32,
        rng: &mut dyn RngCore,
    ) -> StepProposal;
}

/// What to do when a non-root node exhausts its attempt budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustionPolicy {
    /// Force a backtrack to the parent and keep searching.
    #[default]
    ForceParentBacktrack,
    /// End the search with `BudgetExhausted`. Used by the synthetic-policy
    /// trials, where a per-node failure count reaching the budget is the
    /// event whose probability is being measured.
    EndSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Maximum path length in nodes, root included.
    pub t_max: u32,
    /// Generative attempts allowed per node expansion.
    pub budget_b: u32,
    pub thresholds: Thresholds,
    /// Hard cap on node creations beyond the root.
    pub max_total_expansions: u32,
    pub seed: u64,
    #[serde(default)]
    pub exhaustion: ExhaustionPolicy,
}

impl SearchConfig {
    /// Defaults for a given depth and budget; the global cap is a safety
    /// net an order of magnitude above the expected tree size.
    pub fn new(t_max: u32, budget_b: u32, seed: u64) -> Self {
        SearchConfig {
            t_max,
            budget_b,
            thresholds: Thresholds::default(),
            max_total_expansions: 10 * budget_b * t_max,
            seed,
            exhaustion: ExhaustionPolicy::default(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.t_max >= 2 && self.budget_b >= 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SearchStatus {
    Solved { cot: Vec<String> },
    BudgetExhausted,
    GlobalCapReached,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Accepted extends (new internal nodes).
    pub expansions: u32,
    /// Accepted policy backtracks.
    pub backtracks: u32,
    /// Engine-forced backtracks (budget or depth exhaustion).
    pub forced_backtracks: u32,
    /// Non-ancestor backtrack proposals.
    pub protocol_violations: u32,
    pub max_depth_reached: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub tree: ReasoningTree,
    pub status: SearchStatus,
    pub stats: SearchStats,
}

impl SearchOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self.status, SearchStatus::Solved { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Extend,
    Backtrack,
    Finish,
    ForcedBacktrack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventVerdict {
    Accepted,
    RejectedLogical,
    RejectedSemantic,
    RejectedGeometric,
    RejectedDepth,
    RejectedNonAncestor,
    RejectedShallowFinish,
    Forced,
}

/// One line of the search event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchEvent {
    pub step: u64,
    pub depth: u32,
    pub node: u32,
    pub proposal_kind: EventKind,
    pub verdict: EventVerdict,
    pub attempt: u32,
}

fn rejection_verdict(reason: FailReason) -> EventVerdict {
    match reason {
        FailReason::Logical => EventVerdict::RejectedLogical,
        FailReason::Semantic => EventVerdict::RejectedSemantic,
        FailReason::Geometric => EventVerdict::RejectedGeometric,
    }
}

struct Engine<'a> {
    config: &'a SearchConfig,
    tree: ReasoningTree,
    attempts: Vec<u32>,
    stats: SearchStats,
    events: Vec<SearchEvent>,
    trace: bool,
    step: u64,
}

enum Flow {
    Continue,
    Stop(SearchStatus),
}

impl<'a> Engine<'a> {
    fn new(config: &'a SearchConfig, root: &str, trace: bool) -> Self {
        Engine {
            config,
            tree: ReasoningTree::new(root),
            attempts: vec![0],
            stats: SearchStats::default(),
            events: Vec::new(),
            trace,
            step: 0,
        }
    }

    fn log(
        &mut self,
        depth: u32,
        node: NodeId,
        kind: EventKind,
        verdict: EventVerdict,
        attempt: u32,
    ) {
        if self.trace {
            self.events.push(SearchEvent {
                step: self.step,
                depth,
                node: node.0,
                proposal_kind: kind,
                verdict,
                attempt,
            });
        }
        self.step += 1;
    }

    fn creations(&self) -> u32 {
        (self.tree.len() - 1) as u32
    }

    fn sync_attempts(&mut self) {
        self.attempts.resize(self.tree.len(), 0);
    }

    /// Charge one failed attempt against the current frontier; handle
    /// exhaustion when the budget is reached.
    fn charge_frontier(&mut self) -> Flow {
        let f = self.tree.frontier();
        self.attempts[f.0 as usize] += 1;
        if self.attempts[f.0 as usize] < self.config.budget_b {
            return Flow::Continue;
        }
        // exhausted
        if f == ROOT || self.config.exhaustion == ExhaustionPolicy::EndSearch {
            return Flow::Stop(SearchStatus::BudgetExhausted);
        }
        self.force_backtrack_to_parent()
    }

    /// Leave the current frontier for its parent, recording a backtrack
    /// leaf. The arrival charges the parent, so exhaustion can cascade
    /// toward the root.
    fn force_backtrack_to_parent(&mut self) -> Flow {
        if self.creations() >= self.config.max_total_expansions {
            return Flow::Stop(SearchStatus::GlobalCapReached);
        }
        let f = self.tree.frontier();
        let depth = self.tree.frontier_depth() as u32;
        let parent = self
            .tree
            .node(f)
            .expect("frontier exists")
            .parent
            .expect("non-root frontier has a parent");
        self.tree
            .mark_backtrack(parent)
            .expect("parent is a strict ancestor");
        self.sync_attempts();
        self.stats.forced_backtracks += 1;
        let attempt = self.attempts[f.0 as usize];
        self.log(
            depth,
            f,
            EventKind::ForcedBacktrack,
            EventVerdict::Forced,
            attempt,
        );
        self.charge_frontier()
    }

    fn run(
        &mut self,
        policy: &mut dyn Policy,
        validator: &dyn StepValidator,
        rng: &mut dyn RngCore,
    ) -> SearchStatus {
        loop {
            if self.creations() >= self.config.max_total_expansions {
                return SearchStatus::GlobalCapReached;
            }
            let path = self.tree.active_path();
            let depth = path.len() as u32;
            self.stats.max_depth_reached = self.stats.max_depth_reached.max(depth);
            let frontier = self.tree.frontier();
            let attempt = self.attempts[frontier.0 as usize];
            let proposal = policy.propose(&path, attempt, rng);
            let flow = match proposal {
                StepProposal::Extend { proposition } => {
                    if depth >= self.config.t_max {
                        // depth cap: the path cannot grow, reset instead
                        self.log(
                            depth,
                            frontier,
                            EventKind::Extend,
                            EventVerdict::RejectedDepth,
                            attempt,
                        );
                        self.force_backtrack_to_parent()
                    } else {
                        let assessment = validator.assess_step(&path, &proposition);
                        match apply_thresholds(&assessment, &self.config.thresholds) {
                            StepVerdict::Pass => {
                                self.tree.extend(proposition).expect("frontier is internal");
                                self.sync_attempts();
                                self.stats.expansions += 1;
                                self.log(
                                    depth,
                                    frontier,
                                    EventKind::Extend,
                                    EventVerdict::Accepted,
                                    attempt,
                                );
                                Flow::Continue
                            }
                            StepVerdict::Fail(reason) => {
                                self.log(
                                    depth,
                                    frontier,
                                    EventKind::Extend,
                                    rejection_verdict(reason),
                                    attempt,
                                );
                                self.charge_frontier()
                            }
                        }
                    }
                }
                StepProposal::BacktrackTo { target } => match self.tree.mark_backtrack(target) {
                    Ok(()) => {
                        self.sync_attempts();
                        self.stats.backtracks += 1;
                        self.log(
                            depth,
                            frontier,
                            EventKind::Backtrack,
                            EventVerdict::Accepted,
                            attempt,
                        );
                        self.charge_frontier()
                    }
                    Err(TreeError::NotAnAncestor) => {
                        self.stats.protocol_violations += 1;
                        self.log(
                            depth,
                            frontier,
                            EventKind::Backtrack,
                            EventVerdict::RejectedNonAncestor,
                            attempt,
                        );
                        self.charge_frontier()
                    }
                    Err(e) => unreachable!("backtrack on live tree: {e}"),
                },
                StepProposal::Finish => {
                    if depth < 2 {
                        self.log(
                            depth,
                            frontier,
                            EventKind::Finish,
                            EventVerdict::RejectedShallowFinish,
                            attempt,
                        );
                        self.charge_frontier()
                    } else {
                        let assessment = validator.assess_finish(&path);
                        match apply_thresholds(&assessment, &self.config.thresholds) {
                            StepVerdict::Pass => {
                                self.tree
                                    .mark_done()
                                    .expect("frontier is non-root internal");
                                self.sync_attempts();
                                self.log(
                                    depth,
                                    frontier,
                                    EventKind::Finish,
                                    EventVerdict::Accepted,
                                    attempt,
                                );
                                let cot = self.tree.extract_cot().expect("finalized");
                                return SearchStatus::Solved { cot };
                            }
                            StepVerdict::Fail(reason) => {
                                self.log(
                                    depth,
                                    frontier,
                                    EventKind::Finish,
                                    rejection_verdict(reason),
                                    attempt,
                                );
                                self.charge_frontier()
                            }
                        }
                    }
                }
            };
            if let Flow::Stop(status) = flow {
                return status;
            }
        }
    }
}

/// Run one search to completion.
pub fn run_search(
    policy: &mut dyn Policy,
    validator: &dyn StepValidator,
    config: &SearchConfig,
    root: &str,
) -> SearchOutcome {
    let (outcome, _) = search_with_trace(policy, validator, config, root, false);
    outcome
}

/// As [`run_search`], plus the ordered event log, sufficient to replay
/// the run bit-exactly under the same seed.
pub fn trace_search(
    policy: &mut dyn Policy,
    validator: &dyn StepValidator,
    config: &SearchConfig,
    root: &str,
) -> (SearchOutcome, Vec<SearchEvent>) {
    search_with_trace(policy, validator, config, root, true)
}

fn search_with_trace(
    policy: &mut dyn Policy,
    validator: &dyn StepValidator,
    config: &SearchConfig,
    root: &str,
    trace: bool,
) -> (SearchOutcome, Vec<SearchEvent>) {
    assert!(
        config.is_valid(),
        "search config requires t_max >= 2 and budget_b >= 1"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut engine = Engine::new(config, root, trace);
    let status = engine.run(policy, validator, &mut rng);
    let Engine {
        tree,
        stats,
        events,
        ..
    } = engine;
    (
        SearchOutcome {
            tree,
            status,
            stats,
        },
        events,
    )
}

/// Validator that accepts every step and finish.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl StepValidator for AcceptAll {
    fn assess_step(
        &self,
        _path: &[(NodeId, &str)],
        _proposal: &str,
    ) -> crate::reward::StepAssessment {
        crate::reward::StepAssessment::pass()
    }

    fn assess_finish(&self, _path: &[(NodeId, &str)]) -> crate::reward::StepAssessment {
        crate::reward::StepAssessment::pass()
    }
}

/// Replays a fixed proposal list; once the script runs out it proposes
/// `Finish`, which either terminates or burns the remaining budget.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    proposals: Vec<StepProposal>,
    cursor: usize,
}

impl ScriptedPolicy {
    pub fn new(proposals: Vec<StepProposal>) -> Self {
        ScriptedPolicy {
            proposals,
            cursor: 0,
        }
    }
}

impl Policy for ScriptedPolicy {
    fn propose(
        &mut self,
        _path: &[(NodeId, &str)],
        _attempt: u32,
        _rng: &mut dyn RngCore,
    ) -> StepProposal {
        let p = self
            .proposals
            .get(self.cursor)
            .cloned()
            .unwrap_or(StepProposal::Finish);
        self.cursor += 1;
        p
    }
}
