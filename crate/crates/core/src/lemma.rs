//! Synthetic policies with planted correct chains, closed-form parameter
//! derivation, and Monte-Carlo validation of the search guarantees.
//!
//! A planted chain `s1..sT` defines "correct". The synthetic policy is
//! progress-reliable on correct prefixes (correct continuation with
//! probability `gamma`, degraded by the per-event failure probability
//! `epsilon`) and recovery-reliable on deviated paths (backtrack to the
//! deviation node with probability `1 - epsilon`). Wrong propositions
//! live in a disjoint namespace so the planted-chain validator is exact.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::geo_reward;
use crate::grammar::extract_boxes;
use crate::reward::{StepAssessment, StepValidator, Thresholds};
use crate::scalar::Real;
use crate::search::{
    run_search, ExhaustionPolicy, Policy, SearchConfig, SearchStatus, StepProposal,
};
use crate::tree::NodeId;
use crate::BBox;

/// Two-sided 99% normal quantile (`Phi^-1(0.995)`).
pub const Z_99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parameter out of domain: {0}")]
pub struct DomainError(pub String);

/// Monte-Carlo trial configuration.
///
/// `master_seed` drives the per-trial streams (trial `i` derives its seed
/// from `(master_seed, i)`), and `epsilon_override` substitutes the
/// policy's failure probability (the closed-form consistency checks run
/// with it forced to zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaConfig {
    pub gamma: f64,
    pub delta: f64,
    pub t_max: u32,
    /// Length of the planted correct chain; at most `t_max - 1`.
    pub t_corr: u32,
    pub n_trials: u32,
    pub master_seed: u64,
    #[serde(default)]
    pub epsilon_override: Option<f64>,
}

impl LemmaConfig {
    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(DomainError(format!("gamma {} not in (0, 1)", self.gamma)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(DomainError(format!("delta {} not in (0, 0.5)", self.delta)));
        }
        if self.t_max < 2 {
            return Err(DomainError(format!("t_max {} < 2", self.t_max)));
        }
        if self.t_corr < 1 || self.t_corr > self.t_max - 1 {
            return Err(DomainError(format!(
                "t_corr {} not in [1, t_max - 1 = {}]",
                self.t_corr,
                self.t_max - 1
            )));
        }
        if self.n_trials == 0 {
            return Err(DomainError("n_trials must be positive".into()));
        }
        Ok(())
    }
}

/// Derived error tolerance and exploration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParamsT<T> {
    pub epsilon: T,
    pub budget_b: u32,
}

/// `epsilon = gamma * delta / (2 * t_max)` and
/// `budget_b = ceil(ln(t_max / delta) / gamma)`.
pub fn derive_params<T: Real>(
    gamma: T,
    delta: T,
    t_max: u32,
) -> Result<DerivedParamsT<T>, DomainError> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(DomainError(format!("gamma {gamma} not in (0, 1)")));
    }
    if !(delta > T::zero() && delta < T::of(0.5)) {
        return Err(DomainError(format!("delta {delta} not in (0, 0.5)")));
    }
    if t_max < 2 {
        return Err(DomainError(format!("t_max {t_max} < 2")));
    }
    let t = T::from_u32(t_max).expect("t_max fits scalar");
    let epsilon = gamma * delta / (T::of(2.0) * t);
    let b = ((t / delta).ln() / gamma).ceil();
    let budget_b = num_traits::NumCast::from(b)
        .ok_or_else(|| DomainError(format!("budget {b} does not fit u32")))?;
    Ok(DerivedParamsT { epsilon, budget_b })
}

/// Per-node advance probability within `budget_b` attempts, using the
/// lower-bound forms `p_s = gamma (1 - eps)` and `p_f = (1 - gamma)(1 - eps)`:
/// the geometric series sums to `p_s (1 - p_f^B) / (1 - p_f)`.
pub fn closed_form_p_adv<T: Real>(gamma: T, epsilon: T, budget_b: u32) -> T {
    let p_s = gamma * (T::one() - epsilon);
    let p_f = (T::one() - gamma) * (T::one() - epsilon);
    p_s * (T::one() - p_f.powi(budget_b as i32)) / (T::one() - p_f)
}

/// The stated success lower bound, `1 - 4 delta`.
pub fn p_succ_lower_bound<T: Real>(delta: T) -> Result<T, DomainError> {
    if !(delta > T::zero() && delta < T::of(0.5)) {
        return Err(DomainError(format!("delta {delta} not in (0, 0.5)")));
    }
    Ok(T::one() - T::of(4.0) * delta)
}

/// How the synthetic policy picks its backtrack target on a deviated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RecoveryMode {
    /// Land exactly on the deviation node (the deepest correct node).
    Exact,
    /// Land up to `max_extra` hops short of the deviation node, on the
    /// wrong branch itself; recovery then takes a few extra cheap hops.
    Undershoot { max_extra: u32 },
    /// With probability `prob`, land `depth` nodes above the deviation
    /// node, discarding correct progress that must be re-derived.
    Overshoot { prob: f64, depth: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPolicyParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub t_corr: u32,
    pub recovery: RecoveryMode,
}

/// The planted correct chain `s1..sT`.
pub fn chain_propositions(t_corr: u32) -> Vec<String> {
    (1..=t_corr).map(|i| format!("s{i}")).collect()
}

/// Policy that knows the planted chain. See the module docs for its
/// behavior on correct and deviated paths; at the end of the chain it
/// proposes `Finish` outright.
#[derive(Debug, Clone)]
pub struct ChainPolicy {
    params: SyntheticPolicyParams,
    chain: Vec<String>,
    wrong_counter: u64,
}

pub fn make_synthetic_policy(params: SyntheticPolicyParams) -> ChainPolicy {
    ChainPolicy {
        chain: chain_propositions(params.t_corr),
        params,
        wrong_counter: 0,
    }
}

enum PathState {
    /// Entire path lies on the chain; holds the number of correct steps.
    Correct(usize),
    /// Path left the chain; holds the path index of the deviation node
    /// (the deepest correct node).
    Deviated(usize),
}

impl ChainPolicy {
    fn classify(&self, path: &[(NodeId, &str)]) -> PathState {
        for (i, (_, prop)) in path.iter().enumerate().skip(1) {
            match self.chain.get(i - 1) {
                Some(expected) if expected == prop => {}
                _ => return PathState::Deviated(i - 1),
            }
        }
        PathState::Correct(path.len() - 1)
    }

    fn wrong_proposition(&mut self) -> String {
        self.wrong_counter += 1;
        format!("w{}", self.wrong_counter)
    }

    fn recovery_target(
        &self,
        path: &[(NodeId, &str)],
        dev_idx: usize,
        rng: &mut dyn RngCore,
    ) -> NodeId {
        let frontier_idx = path.len() - 1;
        let idx = match self.params.recovery {
            RecoveryMode::Exact => dev_idx,
            RecoveryMode::Undershoot { max_extra } => {
                let jump = 1 + rng.random_range(0..=max_extra) as usize;
                dev_idx.max(frontier_idx.saturating_sub(jump))
            }
            RecoveryMode::Overshoot { prob, depth } => {
                if rng.random::<f64>() < prob {
                    dev_idx.saturating_sub(depth as usize)
                } else {
                    dev_idx
                }
            }
        };
        path[idx].0
    }
}

impl Policy for ChainPolicy {
    fn propose(
        &mut self,
        path: &[(NodeId, &str)],
        _attempt: u32,
        rng: &mut dyn RngCore,
    ) -> StepProposal {
        match self.classify(path) {
            PathState::Correct(len) => {
                if len as u32 == self.params.t_corr {
                    return StepProposal::Finish;
                }
                let condition_holds = rng.random::<f64>() >= self.params.epsilon;
                let progressive = condition_holds && rng.random::<f64>() < self.params.gamma;
                let proposition = if progressive {
                    self.chain[len].clone()
                } else {
                    self.wrong_proposition()
                };
                StepProposal::Extend { proposition }
            }
            PathState::Deviated(dev_idx) => {
                if rng.random::<f64>() < self.params.epsilon {
                    StepProposal::Extend {
                        proposition: self.wrong_proposition(),
                    }
                } else {
                    StepProposal::BacktrackTo {
                        target: self.recovery_target(path, dev_idx, rng),
                    }
                }
            }
        }
    }
}

/// Planted-chain validator.
///
/// In permissive mode (the trial setting) every step passes — deviations
/// must enter the tree so that recovery behavior is actually exercised —
/// while `Finish` still requires the full correct chain. In strict mode
/// each step must be the correct next proposition, and any attached
/// geometry is scored against the per-step reference boxes.
#[derive(Debug, Clone)]
pub struct ChainValidator {
    chain: Vec<String>,
    strict_steps: bool,
    reference_boxes: Vec<Vec<BBox>>,
}

impl ChainValidator {
    pub fn permissive(chain: Vec<String>) -> Self {
        ChainValidator {
            chain,
            strict_steps: false,
            reference_boxes: Vec::new(),
        }
    }

    pub fn strict(chain: Vec<String>) -> Self {
        ChainValidator {
            chain,
            strict_steps: true,
            reference_boxes: Vec::new(),
        }
    }

    /// Attach per-step reference boxes (strict mode geometry checks).
    pub fn with_reference_boxes(mut self, boxes: Vec<Vec<BBox>>) -> Self {
        self.reference_boxes = boxes;
        self
    }

    fn path_is_full_chain(&self, path: &[(NodeId, &str)]) -> bool {
        path.len() == self.chain.len() + 1
            && path
                .iter()
                .skip(1)
                .zip(&self.chain)
                .all(|((_, prop), expected)| prop == expected)
    }
}

impl StepValidator for ChainValidator {
    fn assess_step(&self, path: &[(NodeId, &str)], proposal: &str) -> StepAssessment {
        if !self.strict_steps {
            return StepAssessment::pass();
        }
        let depth = path.len() - 1;
        let (proposal_boxes, _) = extract_boxes(proposal);
        let text_only = strip_box_spans(proposal);
        let on_chain = self.chain.get(depth).is_some_and(|expected| {
            *expected == text_only
                && path
                    .iter()
                    .skip(1)
                    .zip(&self.chain)
                    .all(|((_, prop), exp)| prop == exp)
        });
        let geo_score = match (self.reference_boxes.get(depth), proposal_boxes.is_empty()) {
            (Some(refs), false) if !refs.is_empty() => Some(geo_reward(&proposal_boxes, refs)),
            _ => None,
        };
        StepAssessment {
            coherent: true,
            semantic_score: if on_chain { 1.0 } else { 0.0 },
            geo_score,
        }
    }

    fn assess_finish(&self, path: &[(NodeId, &str)]) -> StepAssessment {
        StepAssessment {
            coherent: true,
            semantic_score: if self.path_is_full_chain(path) {
                1.0
            } else {
                0.0
            },
            geo_score: None,
        }
    }
}

/// Remove `<box>…</box>` spans and collapse whitespace, leaving the
/// textual claim of a proposition.
fn strip_box_spans(text: &str) -> String {
    let mut out = String::new();
    let mut rest = text;
    while let Some(open) = rest.find("<box>") {
        out.push_str(&rest[..open]);
        match rest[open..].find("</box>") {
            Some(close) => rest = &rest[open + close + "</box>".len()..],
            None => {
                rest = "";
                break;
            }
        }
    }
    out.push_str(rest);
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Monte-Carlo estimate with a two-sided 99% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub trials: u32,
    pub successes: u32,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub max_bt_leaves_observed: u32,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u32, trials: u32, z: f64) -> (f64, f64) {
    assert!(trials > 0, "interval requires at least one trial");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Score-test acceptance region around a hypothesized proportion `p0`.
pub fn score_interval_around(p0: f64, trials: u32, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let half = z * (p0 * (1.0 - p0) / n).sqrt();
    ((p0 - half).max(0.0), (p0 + half).min(1.0))
}

/// Pooled two-proportion z statistic.
pub fn two_proportion_z(s1: u32, n1: u32, s2: u32, n2: u32) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let (p1, p2) = (s1 as f64 / n1f, s2 as f64 / n2f);
    let pooled = (s1 + s2) as f64 / (n1f + n2f);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    if se == 0.0 {
        0.0
    } else {
        (p1 - p2) / se
    }
}

/// Derive a per-trial seed from the master seed and trial index.
pub fn trial_seed(master_seed: u64, trial: u32) -> u64 {
    master_seed.wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const ROOT_PROPOSITION: &str = "problem";

/// Run `n_trials` independent seeded searches with the synthetic policy
/// against the planted-chain validator.
///
/// Success means the search solved with exactly the planted chain as its
/// extracted chain of thought. Under `Exact` or `Undershoot` recovery any
/// trial whose backtrack-leaf count exceeds `(B - 1)(t_max - 1)` is a
/// broken engine/policy contract and panics.
pub fn run_trials(config: &LemmaConfig, recovery: RecoveryMode) -> MCEstimate {
    config
        .validate()
        .expect("caller validates the trial configuration");
    let derived =
        derive_params(config.gamma, config.delta, config.t_max).expect("config is in-domain");
    let epsilon = config.epsilon_override.unwrap_or(derived.epsilon);
    let chain = chain_propositions(config.t_corr);
    let validator = ChainValidator::permissive(chain.clone());
    let leaf_bound = (derived.budget_b - 1) * (config.t_max - 1);
    let assert_bound = !matches!(recovery, RecoveryMode::Overshoot { .. });

    let (successes, max_leaves) = (0..config.n_trials)
        .into_par_iter()
        .map(|trial| {
            let search_config = SearchConfig {
                t_max: config.t_max,
                budget_b: derived.budget_b,
                thresholds: Thresholds::default(),
                max_total_expansions: 10 * derived.budget_b * config.t_max,
                seed: trial_seed(config.master_seed, trial),
                exhaustion: ExhaustionPolicy::EndSearch,
            };
            let mut policy = make_synthetic_policy(SyntheticPolicyParams {
                gamma: config.gamma,
                epsilon,
                t_corr: config.t_corr,
                recovery,
            });
            let outcome = run_search(&mut policy, &validator, &search_config, ROOT_PROPOSITION);
            let solved = matches!(&outcome.status, SearchStatus::Solved { cot } if *cot == chain);
            let leaves = outcome.tree.count_backtrack_leaves() as u32;
            if assert_bound {
                assert!(
                    leaves <= leaf_bound,
                    "trial {trial}: {leaves} backtrack leaves exceed bound {leaf_bound}"
                );
            }
            (u32::from(solved), leaves)
        })
        .reduce(|| (0, 0), |(s1, m1), (s2, m2)| (s1 + s2, m1.max(m2)));

    let (ci_low, ci_high) = wilson_interval(successes, config.n_trials, Z_99);
    MCEstimate {
        trials: config.n_trials,
        successes,
        rate: successes as f64 / config.n_trials as f64,
        ci_low,
        ci_high,
        max_bt_leaves_observed: max_leaves,
    }
}

/// One estimate per overshoot probability, at a fixed overshoot depth.
pub fn overshoot_sweep(
    config: &LemmaConfig,
    overshoot_probs: &[f64],
    overshoot_depth: u32,
) -> Vec<(f64, MCEstimate)> {
    overshoot_probs
        .iter()
        .map(|&prob| {
            let estimate = run_trials(
                config,
                RecoveryMode::Overshoot {
                    prob,
                    depth: overshoot_depth,
                },
            );
            (prob, estimate)
        })
        .collect()
}

/// One cell of a validation grid, with both the stated bound (`1 - 4d`)
/// and the proof's tighter intermediate (`1 - 2d`) recorded; acceptance
/// is judged against the stated bound only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub gamma: f64,
    pub delta: f64,
    pub t_max: u32,
    pub epsilon: f64,
    pub budget_b: u32,
    pub estimate: MCEstimate,
    pub bound: f64,
    pub bound_tight: f64,
    pub leaf_bound: u32,
}

impl GridCell {
    /// The grid's acceptance predicate: the interval's upper limit covers
    /// the stated lower bound.
    pub fn passes(&self) -> bool {
        self.estimate.ci_high >= self.bound
    }
}

/// Run the full cross-product grid with `t_corr = t_max - 1`.
pub fn run_grid(
    gammas: &[f64],
    deltas: &[f64],
    t_maxes: &[u32],
    n_trials: u32,
    master_seed: u64,
    recovery: RecoveryMode,
    epsilon_override: Option<f64>,
) -> Result<Vec<GridCell>, DomainError> {
    let mut cells = Vec::new();
    for &gamma in gammas {
        for &delta in deltas {
            for &t_max in t_maxes {
                let config = LemmaConfig {
                    gamma,
                    delta,
                    t_max,
                    t_corr: t_max.saturating_sub(1).max(1),
                    n_trials,
                    master_seed,
                    epsilon_override,
                };
                config.validate()?;
                let derived = derive_params(gamma, delta, t_max)?;
                let estimate = run_trials(&config, recovery);
                cells.push(GridCell {
                    gamma,
                    delta,
                    t_max,
                    epsilon: epsilon_override.unwrap_or(derived.epsilon),
                    budget_b: derived.budget_b,
                    estimate,
                    bound: p_succ_lower_bound(delta)?,
                    bound_tight: 1.0 - 2.0 * delta,
                    leaf_bound: (derived.budget_b - 1) * (t_max - 1),
                });
            }
        }
    }
    Ok(cells)
}
