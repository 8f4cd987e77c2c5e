//! Exhaustive parity-environment checks against independent oracles:
//! full path enumeration, the row-switch counting argument, structural
//! edge counts, and the perturbation negative control.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use var_core::parity::{
    all_sign_vectors, build_graph, minus_count, parity_formula, random_permutation,
    row_switch_count, shortest_path, verify_instance, ParityInstance, Row, Vertex,
};
use var_core::LayeredGraph;

/// Every source-to-sink path with its cost, found by exhaustive recursion
/// over the graph's own edge table.
fn enumerate_paths(graph: &LayeredGraph) -> Vec<(f64, Vec<Vertex>)> {
    fn recurse(
        graph: &LayeredGraph,
        layer: usize,
        row: Row,
        cost: f64,
        path: &mut Vec<Vertex>,
        out: &mut Vec<(f64, Vec<Vertex>)>,
    ) {
        if layer == graph.layers() {
            let mut full = path.clone();
            full.push(Vertex::Sink);
            out.push((cost + graph.sink_cost(row), full));
            return;
        }
        for to in [Row::A, Row::B] {
            if let Some(w) = graph.transition_cost(layer + 1, row, to) {
                path.push(Vertex::Node {
                    layer: layer + 1,
                    row: to,
                });
                recurse(graph, layer + 1, to, cost + w, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for first in [Row::A, Row::B] {
        let mut path = vec![
            Vertex::Source,
            Vertex::Node {
                layer: 0,
                row: first,
            },
        ];
        recurse(
            graph,
            0,
            first,
            graph.source_cost(first),
            &mut path,
            &mut out,
        );
    }
    out
}

fn instances(n: usize, permutations: usize, seed: u64) -> Vec<ParityInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..permutations {
        let pi = random_permutation(n, &mut rng);
        for x in all_sign_vectors(n) {
            out.push(ParityInstance::new(pi.clone(), x).unwrap());
        }
    }
    out
}

#[test]
fn dp_matches_exhaustive_enumeration() {
    for n in [2usize, 4, 6] {
        for inst in instances(n, 5, 51) {
            let graph = build_graph(&inst, 1.0).unwrap();
            let (dp_cost, dp_path) = shortest_path(&graph);
            let all = enumerate_paths(&graph);
            let min_cost = all.iter().map(|(c, _)| *c).fold(f64::INFINITY, f64::min);
            assert_eq!(dp_cost, min_cost);
            assert_eq!(dp_cost, 0.0);
            // the zero-cost path is unique and the DP reproduces it
            let optimal: Vec<&Vec<Vertex>> = all
                .iter()
                .filter(|(c, _)| *c == min_cost)
                .map(|(_, p)| p)
                .collect();
            assert_eq!(optimal.len(), 1, "zero-cost path is unique");
            assert_eq!(&dp_path, optimal[0]);
        }
    }
}

#[test]
fn exhaustive_verification_passes_for_all_instance_sizes() {
    let mut total = 0usize;
    for n in [2usize, 4, 6] {
        for inst in instances(n, 20, 52) {
            let report = verify_instance(&inst, 1.0, false).unwrap();
            assert!(report.passed(), "failed: {report:?}");
            total += 1;
        }
    }
    // 20 permutations each over 4 + 16 + 64 sign vectors
    assert_eq!(total, 20 * (4 + 16 + 64));
}

#[test]
fn first_move_matches_counting_oracle() {
    for n in [2usize, 4, 6] {
        for inst in instances(n, 10, 53) {
            // the proof's argument: parity of -1s at odd permuted positions
            let t = minus_count(&inst);
            let expected = if t.is_multiple_of(2) { 1 } else { -1 };
            assert_eq!(parity_formula(&inst), expected);

            let graph = build_graph(&inst, 1.0).unwrap();
            let (_, path) = shortest_path(&graph);
            assert_eq!(row_switch_count(&path), t);
        }
    }
}

#[test]
fn edge_count_matches_structural_oracle() {
    for n in [2usize, 3, 4, 5, 6] {
        let pi: Vec<usize> = (1..=n).collect();
        let x = vec![1i8; n];
        let inst = ParityInstance::new(pi, x).unwrap();
        let graph = build_graph(&inst, 1.0).unwrap();
        // 2 source + (odd layers: 4 edges, even layers: 2) + 2 sink
        let inner: usize = (1..=n).map(|j| if j % 2 == 1 { 4 } else { 2 }).sum();
        assert_eq!(graph.edge_count(), 2 + inner + 2);
        // and against a direct walk over the edge table
        let mut walked = 4; // source + sink pairs
        for layer in 1..=n {
            for from in [Row::A, Row::B] {
                for to in [Row::A, Row::B] {
                    if graph.transition_cost(layer, from, to).is_some() {
                        walked += 1;
                    }
                }
            }
        }
        assert_eq!(graph.edge_count(), walked);
    }
}

#[test]
fn penalty_scaling_leaves_optimal_path_unchanged() {
    for inst in instances(4, 10, 54) {
        let (c1, p1) = shortest_path(&build_graph(&inst, 1.0).unwrap());
        let (c2, p2) = shortest_path(&build_graph(&inst, 7.5).unwrap());
        assert_eq!(p1, p2);
        assert_eq!(c1, 0.0);
        assert_eq!(c2, 0.0);
    }
}

#[test]
fn perturbation_is_detected_on_some_instance() {
    for n in [2usize, 4, 6] {
        let mut failures = 0usize;
        let insts = instances(n, 5, 55);
        let total = insts.len();
        for inst in insts {
            if !verify_instance(&inst, 1.0, true).unwrap().passed() {
                failures += 1;
            }
        }
        assert!(
            failures > 0,
            "perturbed graphs must fail verification for some x (n = {n})"
        );
        assert_eq!(
            failures, total,
            "flipping one odd layer inverts every instance's parity"
        );
    }
}
