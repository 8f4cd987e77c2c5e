//! Two-row layered graph whose optimal first move encodes a parity.
//!
//! For a permutation `pi` and signs `x`, row switches are free only where
//! they should happen: at odd layer `j` the zero-cost action keeps the
//! row iff `x[pi(j)] = +1` and switches iff `x[pi(j)] = -1`, the other
//! action costing `penalty_w`. Even layers carry keep-row edges only (a
//! free even-layer switch would destroy the parity argument), and only
//! the top row exits to the sink for free. The shortest path therefore
//! costs zero, starts at the row given by the product of `x[pi(j)]` over
//! odd `j`, and switches rows exactly once per odd `-1`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// `(n, pi, x)` with `pi` a permutation of `1..=n` and `x` signs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityInstance {
    pub n: usize,
    pub pi: Vec<usize>,
    pub x: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("n must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("pi is not a permutation of 1..={0}")]
    NotAPermutation(usize),
    #[error("x must contain exactly n values from {{+1, -1}}")]
    BadSigns,
    #[error("penalty weight must be positive")]
    BadPenalty,
}

impl ParityInstance {
    pub fn new(pi: Vec<usize>, x: Vec<i8>) -> Result<Self, InstanceError> {
        let inst = ParityInstance { n: pi.len(), pi, x };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.n < 2 {
            return Err(InstanceError::TooSmall(self.n));
        }
        if self.pi.len() != self.n {
            return Err(InstanceError::NotAPermutation(self.n));
        }
        let mut seen = vec![false; self.n + 1];
        for &p in &self.pi {
            if p == 0 || p > self.n || seen[p] {
                return Err(InstanceError::NotAPermutation(self.n));
            }
            seen[p] = true;
        }
        if self.x.len() != self.n || self.x.iter().any(|&v| v != 1 && v != -1) {
            return Err(InstanceError::BadSigns);
        }
        Ok(())
    }

    /// Sign at the permuted position for layer `j` (1-based).
    fn sign_at_layer(&self, j: usize) -> i8 {
        self.x[self.pi[j - 1] - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Row {
    A,
    B,
}

impl Row {
    fn index(self) -> usize {
        match self {
            Row::A => 0,
            Row::B => 1,
        }
    }

    const BOTH: [Row; 2] = [Row::A, Row::B];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vertex {
    Source,
    Node { layer: usize, row: Row },
    Sink,
}

/// Layers `0..=n` with rows `a`/`b`, a source fanning into layer 0 and a
/// sink after layer `n`. Edge presence and costs follow the construction
/// in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredGraphT<T> {
    n: usize,
    penalty_w: T,
    /// `transitions[j-1][from][to]` is the cost of the layer `j-1 -> j`
    /// edge, `None` when the edge does not exist.
    transitions: Vec<[[Option<T>; 2]; 2]>,
    source_costs: [T; 2],
    sink_costs: [T; 2],
}

impl<T: Real> LayeredGraphT<T> {
    pub fn layers(&self) -> usize {
        self.n
    }

    pub fn penalty(&self) -> T {
        self.penalty_w
    }

    pub fn source_cost(&self, row: Row) -> T {
        self.source_costs[row.index()]
    }

    pub fn sink_cost(&self, row: Row) -> T {
        self.sink_costs[row.index()]
    }

    /// Cost of the edge from `(layer_to - 1, from)` to `(layer_to, to)`.
    pub fn transition_cost(&self, layer_to: usize, from: Row, to: Row) -> Option<T> {
        self.transitions[layer_to - 1][from.index()][to.index()]
    }

    pub fn edge_count(&self) -> usize {
        let inner: usize = self
            .transitions
            .iter()
            .map(|layer| layer.iter().flatten().filter(|e| e.is_some()).count())
            .sum();
        2 + inner + 2
    }

    /// Negative-control mutation: swap the keep/switch cost assignment at
    /// the first odd layer, which inverts that layer's zero-cost action.
    pub fn perturb_first_odd_layer(&mut self) {
        let layer = &mut self.transitions[0];
        layer[0].swap(0, 1);
        layer[1].swap(0, 1);
    }
}

/// Build the layered graph for an instance.
pub fn build_graph<T: Real>(
    inst: &ParityInstance,
    penalty_w: T,
) -> Result<LayeredGraphT<T>, InstanceError> {
    inst.validate()?;
    if penalty_w <= T::zero() {
        return Err(InstanceError::BadPenalty);
    }
    let zero = T::zero();
    let mut transitions = Vec::with_capacity(inst.n);
    for j in 1..=inst.n {
        let layer = if j % 2 == 1 {
            let keep = if inst.sign_at_layer(j) == 1 {
                zero
            } else {
                penalty_w
            };
            let switch = if inst.sign_at_layer(j) == -1 {
                zero
            } else {
                penalty_w
            };
            [[Some(keep), Some(switch)], [Some(switch), Some(keep)]]
        } else {
            [[Some(zero), None], [None, Some(zero)]]
        };
        transitions.push(layer);
    }
    Ok(LayeredGraphT {
        n: inst.n,
        penalty_w,
        transitions,
        source_costs: [zero, zero],
        sink_costs: [zero, penalty_w],
    })
}

/// Minimal-cost source-to-sink path by layer-by-layer dynamic
/// programming. Ties prefer row `a`, so the result is deterministic.
pub fn shortest_path<T: Real>(graph: &LayeredGraphT<T>) -> (T, Vec<Vertex>) {
    let n = graph.n;
    let mut dist = vec![[T::infinity(); 2]];
    dist[0] = graph.source_costs;
    let mut pred: Vec<[Row; 2]> = Vec::with_capacity(n);
    for j in 1..=n {
        let mut layer_dist = [T::infinity(); 2];
        let mut layer_pred = [Row::A; 2];
        for to in Row::BOTH {
            for from in Row::BOTH {
                if let Some(w) = graph.transition_cost(j, from, to) {
                    let candidate = dist[j - 1][from.index()] + w;
                    // strict improvement; row A is scanned first, so ties keep it
                    if candidate < layer_dist[to.index()] {
                        layer_dist[to.index()] = candidate;
                        layer_pred[to.index()] = from;
                    }
                }
            }
        }
        dist.push(layer_dist);
        pred.push(layer_pred);
    }
    let total_via = |row: Row| dist[n][row.index()] + graph.sink_cost(row);
    let last = if total_via(Row::A) <= total_via(Row::B) {
        Row::A
    } else {
        Row::B
    };
    let cost = total_via(last);

    let mut rows = vec![last];
    let mut row = last;
    for j in (1..=n).rev() {
        row = pred[j - 1][row.index()];
        rows.push(row);
    }
    rows.reverse();
    let mut path = Vec::with_capacity(n + 3);
    path.push(Vertex::Source);
    for (layer, row) in rows.iter().enumerate() {
        path.push(Vertex::Node { layer, row: *row });
    }
    path.push(Vertex::Sink);
    (cost, path)
}

/// Count of row switches along a path (consecutive layer vertices with
/// differing rows).
pub fn row_switch_count(path: &[Vertex]) -> usize {
    path.windows(2)
        .filter(|w| match (w[0], w[1]) {
            (Vertex::Node { row: r1, .. }, Vertex::Node { row: r2, .. }) => r1 != r2,
            _ => false,
        })
        .count()
}

/// The parity characterization: product of `x[pi(j)]` over odd `j`.
pub fn parity_formula(inst: &ParityInstance) -> i8 {
    let mut product = 1i8;
    for j in (1..=inst.n).step_by(2) {
        product *= inst.sign_at_layer(j);
    }
    product
}

/// Number of odd layers whose permuted sign is `-1`; the optimal path
/// switches rows exactly this many times.
pub fn minus_count(inst: &ParityInstance) -> usize {
    (1..=inst.n)
        .step_by(2)
        .filter(|&j| inst.sign_at_layer(j) == -1)
        .count()
}

/// Outcome of checking one instance against the analytic answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: usize,
    pub pi: Vec<usize>,
    pub x: Vec<i8>,
    pub cost: f64,
    pub first_row: Row,
    pub predicted_sign: i8,
    pub switch_count: usize,
    pub expected_switches: usize,
    pub cost_is_zero: bool,
    pub first_move_matches: bool,
    pub switches_match: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.cost_is_zero && self.first_move_matches && self.switches_match
    }
}

fn first_row(path: &[Vertex]) -> Row {
    match path.get(1) {
        Some(Vertex::Node { layer: 0, row }) => *row,
        _ => unreachable!("path always enters layer 0 first"),
    }
}

/// Check the three analytic claims for one instance: zero optimal cost,
/// parity-encoding first vertex, and switch count equal to the number of
/// odd `-1`s. `perturb` flips one odd-layer weight assignment as a
/// negative control.
pub fn verify_instance(
    inst: &ParityInstance,
    penalty_w: f64,
    perturb: bool,
) -> Result<VerificationReport, InstanceError> {
    let mut graph = build_graph(inst, penalty_w)?;
    if perturb {
        graph.perturb_first_odd_layer();
    }
    let (cost, path) = shortest_path(&graph);
    let first = first_row(&path);
    let predicted = parity_formula(inst);
    let expected_switches = minus_count(inst);
    let switch_count = row_switch_count(&path);
    Ok(VerificationReport {
        n: inst.n,
        pi: inst.pi.clone(),
        x: inst.x.clone(),
        cost,
        first_row: first,
        predicted_sign: predicted,
        switch_count,
        expected_switches,
        cost_is_zero: cost == 0.0,
        first_move_matches: (first == Row::A) == (predicted == 1),
        switches_match: switch_count == expected_switches,
    })
}

/// Uniform random permutation of `1..=n`.
pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut pi: Vec<usize> = (1..=n).collect();
    pi.shuffle(rng);
    pi
}

/// All sign vectors of length `n`, in lexicographic order (`+1` first).
pub fn all_sign_vectors(n: usize) -> impl Iterator<Item = Vec<i8>> {
    (0..1usize << n).map(move |bits| {
        (0..n)
            .map(|i| if bits >> i & 1 == 0 { 1 } else { -1 })
            .collect()
    })
}
